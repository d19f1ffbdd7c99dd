// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "stickflow/rng.hpp"

namespace stickflow {

// ---------------------------------------------------------------------------
// Laws for residual fractions.
//
// GemLaw(theta):          iid Beta(1, theta) fractions.
// DisorderedLaw(thetas):  independent Beta(1, theta_j); the last parameter
//                         repeats for indices beyond the list.  theta_j == 0
//                         (point mass at 1) must be opted into via allow_unit.
// TwoParamLaw(alpha, theta): Beta(1 - alpha, theta + j*alpha) at index j.
// CustomLaw:              fractions supplied by the caller, no sampler.
// ---------------------------------------------------------------------------

struct CustomLaw {};

struct GemLaw {
  double theta;
};

struct DisorderedLaw {
  std::vector<double> thetas;
  bool allow_unit = false;
};

struct TwoParamLaw {
  double alpha;
  double theta;
};

using LawTag = std::variant<CustomLaw, GemLaw, DisorderedLaw, TwoParamLaw>;

inline void validate_law(const LawTag& law) {
  if (const auto* g = std::get_if<GemLaw>(&law)) {
    if (!(g->theta > 0.0)) throw std::invalid_argument("gem law requires theta > 0");
  } else if (const auto* d = std::get_if<DisorderedLaw>(&law)) {
    if (d->thetas.empty()) throw std::invalid_argument("disordered law requires at least one theta");
    for (double t : d->thetas) {
      if (t < 0.0) throw std::invalid_argument("disordered law: theta_j < 0");
      if (t == 0.0 && !d->allow_unit)
        throw std::invalid_argument("disordered law: theta_j = 0 needs allow_unit");
    }
  } else if (const auto* tp = std::get_if<TwoParamLaw>(&law)) {
    if (!(tp->alpha >= 0.0 && tp->alpha < 1.0))
      throw std::invalid_argument("two-parameter law requires 0 <= alpha < 1");
    if (!(tp->theta > -tp->alpha))
      throw std::invalid_argument("two-parameter law requires theta > -alpha");
  }
}

/// Draw fraction number j (1-based) of the given law.
inline double draw_fraction(const LawTag& law, std::size_t j, Rng& rng) {
  if (const auto* g = std::get_if<GemLaw>(&law)) return rng.beta_one(g->theta);
  if (const auto* d = std::get_if<DisorderedLaw>(&law)) {
    const std::size_t i = j <= d->thetas.size() ? j - 1 : d->thetas.size() - 1;
    return rng.beta_one(d->thetas[i]);
  }
  if (const auto* tp = std::get_if<TwoParamLaw>(&law)) {
    return rng.beta(1.0 - tp->alpha, tp->theta + static_cast<double>(j) * tp->alpha);
  }
  throw std::invalid_argument("custom law has no sampler");
}

// ---------------------------------------------------------------------------

/// Finite list of residual fractions in [0,1] plus the law that produced it.
class FractionSequence {
 public:
  explicit FractionSequence(std::vector<double> values, LawTag law = CustomLaw{})
      : values_(std::move(values)), law_(std::move(law)) {
    validate_law(law_);
    for (double x : values_) {
      if (!(x >= 0.0 && x <= 1.0))
        throw std::invalid_argument("fraction outside [0,1]: " + std::to_string(x));
    }
  }

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  const LawTag& law() const { return law_; }

 private:
  std::vector<double> values_;
  LawTag law_;
};

/// Finite prefix of stick weights plus the unassigned remainder.  The weights
/// and tail always account for the whole unit of mass.
class StickSequence {
 public:
  StickSequence(std::vector<double> weights, double tail_mass)
      : weights_(std::move(weights)), tail_mass_(tail_mass) {
    double sum = tail_mass_;
    for (double w : weights_) {
      if (w < 0.0) throw std::invalid_argument("negative stick weight");
      sum += w;
    }
    if (tail_mass_ < 0.0) throw std::invalid_argument("negative tail mass");
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("stick weights + tail must sum to 1, got " + std::to_string(sum));
  }

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }
  double tail_mass() const { return tail_mass_; }

  double total_weight() const {
    double s = 0.0;
    for (double w : weights_) s += w;
    return s;
  }

 private:
  std::vector<double> weights_;
  double tail_mass_;
};

/// Clump boundaries: strictly increasing, first entry 1, infinity-padded.
class ClumpIndex {
 public:
  static constexpr std::uint64_t kInfinity = std::numeric_limits<std::uint64_t>::max();

  explicit ClumpIndex(std::vector<std::uint64_t> boundaries) : boundaries_(std::move(boundaries)) {
    if (boundaries_.empty() || boundaries_.front() != 1)
      throw std::invalid_argument("clump boundaries must start at 1");
    for (std::size_t i = 1; i < boundaries_.size(); ++i) {
      const bool prev_inf = boundaries_[i - 1] == kInfinity;
      if (prev_inf) {
        if (boundaries_[i] != kInfinity)
          throw std::invalid_argument("finite boundary after infinity");
      } else if (boundaries_[i] <= boundaries_[i - 1]) {
        throw std::invalid_argument("clump boundaries must be strictly increasing");
      }
    }
  }

  /// Identity clumping 1,2,...,count.
  static ClumpIndex identity(std::size_t count) {
    std::vector<std::uint64_t> b(count);
    for (std::size_t i = 0; i < count; ++i) b[i] = i + 1;
    return ClumpIndex(std::move(b));
  }

  /// Boundaries of clumping first by `u`, then by `v`: w_j = u[v_j].
  static ClumpIndex compose(const ClumpIndex& u, const ClumpIndex& v) {
    std::vector<std::uint64_t> w(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
      const std::uint64_t vj = v[j];
      if (vj == kInfinity || vj > u.size()) {
        w[j] = kInfinity;
      } else {
        w[j] = u[static_cast<std::size_t>(vj - 1)];
      }
    }
    return ClumpIndex(std::move(w));
  }

  std::size_t size() const { return boundaries_.size(); }
  std::uint64_t operator[](std::size_t i) const { return boundaries_[i]; }

 private:
  std::vector<std::uint64_t> boundaries_;
};

// ---------------------------------------------------------------------------

namespace detail {

// Running product of (1 - x_i).  Switches to log accumulation once a factor
// drops below 1e-8 so long prefixes cannot underflow.
class TailProduct {
 public:
  void multiply(double one_minus_x) {
    if (one_minus_x == 0.0) {
      zero_ = true;
      return;
    }
    if (!log_mode_ && one_minus_x < 1e-8) {
      log_mode_ = true;
      log_value_ = std::log(linear_);
      linear_ = 1.0;
    }
    if (log_mode_) {
      log_value_ += std::log(one_minus_x);
    } else {
      linear_ *= one_minus_x;
    }
  }

  double value() const {
    if (zero_) return 0.0;
    return log_mode_ ? std::exp(log_value_) : linear_;
  }

 private:
  double linear_ = 1.0;
  double log_value_ = 0.0;
  bool log_mode_ = false;
  bool zero_ = false;
};

}  // namespace detail

/// Build the stick weights w_j = x_j * prod_{i<j}(1 - x_i).  Construction
/// stops once the unassigned remainder drops below `eps` or the fractions run
/// out; the remainder is reported as tail mass, never renormalized.
inline StickSequence ram_from_fractions(const FractionSequence& x, double eps) {
  if (!(eps >= 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in [0,1)");
  std::vector<double> weights;
  weights.reserve(x.size());
  detail::TailProduct rem;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double r = rem.value();
    if (r < eps) break;
    weights.push_back(x[j] * r);
    rem.multiply(1.0 - x[j]);
  }
  return StickSequence(std::move(weights), rem.value());
}

/// Invert a stick: x_j = w_j / remaining mass, with x_j = 1 once the prior
/// weights already exhaust the stick.
inline FractionSequence fractions_from_weights(const StickSequence& p) {
  std::vector<double> x(p.size());
  double remaining = 1.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (remaining > 0.0) {
      x[j] = std::min(1.0, p[j] / remaining);
    } else {
      x[j] = 1.0;
    }
    remaining -= p[j];
  }
  return FractionSequence(std::move(x));
}

struct ClumpResult {
  StickSequence weights;
  FractionSequence fractions;
};

/// Clump the stick built from `x` over the index blocks [u_j, u_{j+1}).  A
/// block whose right boundary is infinite absorbs everything left, including
/// the truncated tail; blocks at or past an infinite left boundary carry
/// fraction 1 and weight 0.
inline ClumpResult clump(const FractionSequence& x, const ClumpIndex& u) {
  const StickSequence p = ram_from_fractions(x, 0.0);
  const std::uint64_t len = p.size();

  std::vector<double> clumped_w(u.size(), 0.0);
  std::vector<double> clumped_x(u.size(), 0.0);
  double tail = p.tail_mass();

  for (std::size_t j = 0; j < u.size(); ++j) {
    const std::uint64_t lo = u[j];
    if (lo == ClumpIndex::kInfinity) {
      clumped_x[j] = 1.0;
      continue;
    }
    const std::uint64_t hi =
        j + 1 < u.size() ? u[j + 1] : std::min<std::uint64_t>(len + 1, ClumpIndex::kInfinity);
    if (hi == ClumpIndex::kInfinity) {
      // absorb all remaining mass, truncation tail included
      double sum = 0.0;
      for (std::uint64_t i = lo; i <= len; ++i) sum += p[static_cast<std::size_t>(i - 1)];
      clumped_w[j] = sum + tail;
      tail = 0.0;
      clumped_x[j] = 1.0;
      continue;
    }
    double sum = 0.0;
    detail::TailProduct block;
    for (std::uint64_t i = lo; i < hi && i <= len; ++i) {
      sum += p[static_cast<std::size_t>(i - 1)];
      block.multiply(1.0 - x[static_cast<std::size_t>(i - 1)]);
    }
    clumped_w[j] = sum;
    clumped_x[j] = 1.0 - block.value();
  }

  return ClumpResult{StickSequence(std::move(clumped_w), tail),
                     FractionSequence(std::move(clumped_x))};
}

/// Sample a stick from a fraction law, truncating once the tail drops below
/// `eps`.  Identical (law, seed, eps) yields bit-identical output.
inline StickSequence sample_stick_with(const LawTag& law, Rng& rng, double eps) {
  validate_law(law);
  if (std::holds_alternative<CustomLaw>(law))
    throw std::invalid_argument("custom law has no sampler");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0,1)");

  std::vector<double> weights;
  detail::TailProduct rem;
  std::size_t j = 1;
  // A disordered law stops producing fresh parameters only through the
  // repeats convention; cap iterations defensively against theta == 0 lists.
  while (true) {
    const double r = rem.value();
    if (r < eps) break;
    const double xj = draw_fraction(law, j, rng);
    weights.push_back(xj * r);
    rem.multiply(1.0 - xj);
    ++j;
    if (j > 100'000'000) throw std::runtime_error("sample_stick: truncation never reached");
  }
  return StickSequence(std::move(weights), rem.value());
}

inline StickSequence sample_stick(const LawTag& law, std::uint64_t seed, double eps) {
  Rng rng(seed);
  return sample_stick_with(law, rng, eps);
}

}  // namespace stickflow

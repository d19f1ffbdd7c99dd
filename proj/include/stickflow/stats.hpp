// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "stickflow/chains.hpp"
#include "stickflow/mccgem.hpp"
#include "stickflow/stickcore.hpp"

namespace stickflow {

// ---------------------------------------------------------------------------
// Replicated Monte Carlo.
// ---------------------------------------------------------------------------

/// Evaluate draw(seed_r) for replicates r = 0..R-1 with well-separated seeds.
/// Results are positioned by index, so the output is identical for any job
/// count.
template <class F>
std::vector<double> replicate_map(F&& draw, std::int64_t replicates, std::uint64_t seed_base,
                                  int jobs = 1) {
  if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  std::vector<double> values(static_cast<std::size_t>(replicates));
  if (jobs <= 1) {
    for (std::int64_t r = 0; r < replicates; ++r)
      values[static_cast<std::size_t>(r)] = draw(mix_seed(seed_base, static_cast<std::uint64_t>(r)));
    return values;
  }
  std::vector<std::thread> pool;
  const int workers = std::min<std::int64_t>(jobs, replicates);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::int64_t r = w; r < replicates; r += workers)
        values[static_cast<std::size_t>(r)] =
            draw(mix_seed(seed_base, static_cast<std::uint64_t>(r)));
    });
  }
  for (auto& t : pool) t.join();
  return values;
}

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t replicates = 0;
  std::uint64_t seed_base = 0;
};

inline McEstimate summarize(std::span<const double> values, std::uint64_t seed_base) {
  const std::int64_t r = static_cast<std::int64_t>(values.size());
  if (r < 2) throw std::invalid_argument("need at least 2 replicates");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(r);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(r - 1));
  return McEstimate{mean, sd / std::sqrt(static_cast<double>(r)), r, seed_base};
}

template <class F>
McEstimate mc_estimate(F&& draw, std::int64_t replicates, std::uint64_t seed_base, int jobs = 1) {
  const auto values = replicate_map(draw, replicates, seed_base, jobs);
  return summarize(values, seed_base);
}

// ---------------------------------------------------------------------------
// Goodness-of-fit machinery.
// ---------------------------------------------------------------------------

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

namespace detail {

/// Kolmogorov tail sum Q(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 lambda^2).
inline double kolmogorov_tail(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0, sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

inline double ks_p_value(double d, double n_eff) {
  const double s = std::sqrt(n_eff);
  return kolmogorov_tail((s + 0.12 + 0.11 / s) * d);
}

}  // namespace detail

inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] <= x) ++i;
    while (j < sb.size() && sb[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return KsResult{d, detail::ks_p_value(d, na * nb / (na + nb))};
}

inline KsResult ks_one_sample(std::span<const double> a,
                              const std::function<double(double)>& cdf) {
  if (a.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
  std::vector<double> s(a.begin(), a.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
  }
  return KsResult{d, detail::ks_p_value(d, n)};
}

namespace detail {

/// Regularized upper incomplete gamma Q(a, x) (series / continued fraction).
inline double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q domain");
  if (x == 0.0) return 1.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - gln);
  }
  double b = x + 1.0 - a, c = 1e308, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - gln) * h;
}

}  // namespace detail

struct ChiSquareResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::int64_t dof = 0;
};

/// Two-sample homogeneity test on matching count tables.
inline ChiSquareResult chi_square_homogeneity(std::span<const std::int64_t> a,
                                              std::span<const std::int64_t> b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("count tables must match and be nonempty");
  double na = 0.0, nb = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    na += static_cast<double>(a[c]);
    nb += static_cast<double>(b[c]);
  }
  double stat = 0.0;
  std::int64_t cells = 0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double pooled = static_cast<double>(a[c] + b[c]) / (na + nb);
    if (pooled <= 0.0) continue;
    ++cells;
    const double ea = na * pooled, eb = nb * pooled;
    stat += (a[c] - ea) * (a[c] - ea) / ea + (b[c] - eb) * (b[c] - eb) / eb;
  }
  const std::int64_t dof = std::max<std::int64_t>(1, cells - 1);
  return ChiSquareResult{stat, detail::gamma_q(static_cast<double>(dof) / 2.0, stat / 2.0), dof};
}

// ---------------------------------------------------------------------------
// Named verification checks.
// ---------------------------------------------------------------------------

struct CheckReport {
  std::string check;
  std::map<std::string, double> params;
  double statistic = 0.0;
  double p_value = 1.0;
  bool pass = false;
  std::uint64_t seed = 0;
};

/// Sample the first clumped fraction of a GEM stick clumped by a chain started
/// at `target_state`, and test it against Beta(1, theta (1 - Q_yy)).
inline CheckReport clumped_fraction_beta_check(double theta, const StochasticKernel& q,
                                               int target_state, std::int64_t replicates,
                                               std::uint64_t seed, double alpha = 1e-3) {
  if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
  if (target_state < 0 || target_state >= q.dim())
    throw std::invalid_argument("target state out of range");
  const double stay = q(target_state, target_state);
  if (stay >= 1.0 - 1e-12) throw std::invalid_argument("target state is absorbing");
  if (replicates < 100) throw std::invalid_argument("need at least 100 conditional samples");

  // long enough that a switch is seen except with negligible probability
  const std::int64_t path_len =
      std::clamp<std::int64_t>(
          stay > 0.0 ? static_cast<std::int64_t>(std::ceil(std::log(1e-12) / std::log(stay))) : 2,
          8, 1'000'000);
  Eigen::VectorXd init = Eigen::VectorXd::Zero(q.dim());
  init(target_state) = 1.0;

  // The target law puts (eps)^b of its mass within eps of 1, so the stick
  // truncation must be far below any KS-visible scale even for small b.
  const double eps = 1e-200;
  const auto values = replicate_map(
      [&](std::uint64_t s) {
        Rng rng(s);
        const StickSequence stick = sample_stick_with(GemLaw{theta}, rng, eps);
        const ChainPath path = sample_homogeneous_with(q, init, path_len, rng);
        const ClumpedPath clumped = clump_by_switches(stick, path);
        return clumped.weights[0];
      },
      replicates, seed);

  const double b = theta * (1.0 - stay);
  const KsResult ks =
      ks_one_sample(values, [b](double x) { return -std::expm1(b * std::log1p(-std::min(x, 1.0 - 1e-300))); });

  CheckReport report;
  report.check = "clumped-fraction-beta";
  report.params = {{"theta", theta},
                   {"target_state", static_cast<double>(target_state)},
                   {"beta_parameter", b},
                   {"replicates", static_cast<double>(replicates)},
                   {"alpha", alpha}};
  report.statistic = ks.statistic;
  report.p_value = ks.p_value;
  report.pass = ks.p_value > alpha;
  report.seed = seed;
  return report;
}

// ---------------------------------------------------------------------------
// Self-similarity of stick-breaking measures over a Markov sample.
// ---------------------------------------------------------------------------

struct SelfSimSpec {
  LawTag fraction_law;      // iid fractions only
  StochasticKernel kernel;  // Q
  int start_state;          // recurrent under Q
  double eps = 1e-12;
  std::int64_t replicates = 10'000;
};

struct SelfSimCoordinate {
  double mean_direct = 0.0, mean_composite = 0.0, mean_gap_sigmas = 0.0;
  double m2_direct = 0.0, m2_composite = 0.0, m2_gap_sigmas = 0.0;
  double ks_statistic = 0.0, ks_p_value = 1.0;
};

struct SelfSimReport {
  bool pass = false;
  bool moments_pass = false;
  bool ks_pass = false;
  std::vector<SelfSimCoordinate> coordinates;
  std::uint64_t seed = 0;

  CheckReport to_check_report(double alpha) const {
    CheckReport r;
    r.check = "self-similarity";
    double max_d = 0.0, min_p = 1.0, max_gap = 0.0;
    for (const auto& c : coordinates) {
      max_d = std::max(max_d, c.ks_statistic);
      min_p = std::min(min_p, c.ks_p_value);
      max_gap = std::max({max_gap, c.mean_gap_sigmas, c.m2_gap_sigmas});
    }
    r.params = {{"alpha", alpha}, {"max_moment_gap_sigmas", max_gap}};
    r.statistic = max_d;
    r.p_value = min_p;
    r.pass = pass;
    r.seed = seed;
    return r;
  }
};

namespace detail {

inline void require_iid_law(const LawTag& law) {
  if (std::holds_alternative<GemLaw>(law)) return;
  if (const auto* d = std::get_if<DisorderedLaw>(&law)) {
    if (d->thetas.size() == 1) return;
  }
  throw std::invalid_argument("self-similarity requires an iid fraction law");
}

/// nu | T_1 = start: stick-break over a chain path started at `start`.
inline Eigen::VectorXd direct_measure_draw(const LawTag& law, const StochasticKernel& q, int start,
                                           double eps, Rng& rng) {
  Eigen::VectorXd masses = Eigen::VectorXd::Zero(q.dim());
  stickflow::detail::TailProduct rem;
  int state = start;
  std::size_t j = 1;
  while (true) {
    const double r = rem.value();
    if (r < eps) break;
    const double x = draw_fraction(law, j, rng);
    masses(state) += x * r;
    rem.multiply(1.0 - x);
    state = draw_from_row(rng, q.matrix(), state);
    ++j;
    if (j > 100'000'000) throw std::runtime_error("measure draw: truncation never reached");
  }
  return masses;
}

}  // namespace detail

namespace detail {

/// One composite draw: a single return cycle gives (X, eta), then an
/// independent fresh direct draw fills the remainder.
inline Eigen::VectorXd composite_measure_draw(const SelfSimSpec& spec, Rng& rng) {
  const int k = spec.kernel.dim();
  Eigen::VectorXd eta_mass = Eigen::VectorXd::Zero(k);
  stickflow::detail::TailProduct prefix;
  int state = spec.start_state;
  std::size_t j = 1;
  double cycle_fraction = 0.0;
  while (true) {
    const double x = draw_fraction(spec.fraction_law, j, rng);
    eta_mass(state) += x * prefix.value();
    prefix.multiply(1.0 - x);
    state = draw_from_row(rng, spec.kernel.matrix(), state);
    ++j;
    if (state == spec.start_state) {
      cycle_fraction = 1.0 - prefix.value();
      break;
    }
    if (j > 1'000'000)
      throw std::runtime_error("self-similarity cycle exceeded 1e6 steps without returning");
  }
  const Eigen::VectorXd fresh =
      direct_measure_draw(spec.fraction_law, spec.kernel, spec.start_state, spec.eps, rng);
  // eta_mass already carries the factor X, so add the rescaled fresh copy
  return eta_mass + (1.0 - cycle_fraction) * fresh;
}

}  // namespace detail

/// Compare direct draws of nu | T_1 = i against the one-cycle composition
/// X eta + (1 - X) (fresh copy).
inline SelfSimReport self_similarity_check(const SelfSimSpec& spec, std::uint64_t seed,
                                           double alpha = 0.01) {
  detail::require_iid_law(spec.fraction_law);
  validate_law(spec.fraction_law);
  if (spec.start_state < 0 || spec.start_state >= spec.kernel.dim())
    throw std::invalid_argument("start state out of range");
  if (spec.replicates < 2) throw std::invalid_argument("need at least 2 replicates");
  bool recurrent = false;
  for (const auto& cls : recurrent_classes(spec.kernel.matrix())) {
    if (std::find(cls.begin(), cls.end(), spec.start_state) != cls.end()) recurrent = true;
  }
  if (!recurrent) throw std::invalid_argument("start state is not recurrent under the kernel");

  const int k = spec.kernel.dim();
  const std::int64_t r = spec.replicates;
  std::vector<std::vector<double>> direct(static_cast<std::size_t>(k)),
      composite(static_cast<std::size_t>(k));
  for (auto& v : direct) v.resize(static_cast<std::size_t>(r));
  for (auto& v : composite) v.resize(static_cast<std::size_t>(r));

  for (std::int64_t rep = 0; rep < r; ++rep) {
    {
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(rep)));
      const Eigen::VectorXd m = detail::direct_measure_draw(spec.fraction_law, spec.kernel,
                                                            spec.start_state, spec.eps, rng);
      for (int l = 0; l < k; ++l)
        direct[static_cast<std::size_t>(l)][static_cast<std::size_t>(rep)] = m(l);
    }
    {
      Rng rng(mix_seed(seed ^ 0xA5A5A5A5A5A5A5A5ULL, static_cast<std::uint64_t>(rep)));
      const Eigen::VectorXd m = detail::composite_measure_draw(spec, rng);
      for (int l = 0; l < k; ++l)
        composite[static_cast<std::size_t>(l)][static_cast<std::size_t>(rep)] = m(l);
    }
  }

  SelfSimReport report;
  report.seed = seed;
  report.moments_pass = true;
  report.ks_pass = true;
  for (int l = 0; l < k; ++l) {
    const auto& a = direct[static_cast<std::size_t>(l)];
    const auto& b = composite[static_cast<std::size_t>(l)];
    SelfSimCoordinate coord;
    const McEstimate ma = summarize(a, seed), mb = summarize(b, seed);
    coord.mean_direct = ma.value;
    coord.mean_composite = mb.value;
    const double se_mean = std::hypot(ma.std_error, mb.std_error);
    coord.mean_gap_sigmas = se_mean > 0.0 ? std::abs(ma.value - mb.value) / se_mean
                                          : (ma.value == mb.value ? 0.0 : 1e300);

    std::vector<double> a2(a.size()), b2(b.size());
    for (std::size_t i = 0; i < a.size(); ++i) a2[i] = a[i] * a[i];
    for (std::size_t i = 0; i < b.size(); ++i) b2[i] = b[i] * b[i];
    const McEstimate m2a = summarize(a2, seed), m2b = summarize(b2, seed);
    coord.m2_direct = m2a.value;
    coord.m2_composite = m2b.value;
    const double se2 = std::hypot(m2a.std_error, m2b.std_error);
    coord.m2_gap_sigmas = se2 > 0.0 ? std::abs(m2a.value - m2b.value) / se2
                                    : (m2a.value == m2b.value ? 0.0 : 1e300);

    const KsResult ks = ks_two_sample(a, b);
    coord.ks_statistic = ks.statistic;
    coord.ks_p_value = ks.p_value;

    if (coord.mean_gap_sigmas > 4.0 || coord.m2_gap_sigmas > 4.0) report.moments_pass = false;
    if (!(ks.p_value > alpha)) report.ks_pass = false;
    report.coordinates.push_back(coord);
  }
  report.pass = report.moments_pass && report.ks_pass;
  return report;
}

// ---------------------------------------------------------------------------
// Worked covariance series for clumped two-parameter sticks over a symmetric
// two-state coin chain.
// ---------------------------------------------------------------------------

struct CovarianceSeries {
  double e1 = 0.0;   // E[1 - X^V_1]
  double e2 = 0.0;   // E[1 - X^V_2]
  double e12 = 0.0;  // E[(1 - X^V_1)(1 - X^V_2)]
  double cov = 0.0;
  double truncation_bound = 0.0;
};

/// Geometric-weight series for the clumped residuals; sojourn length m has
/// probability p^{m-1} (1-p).  All series coefficients lie in (0,1], which
/// gives the reported geometric tail bound.
inline CovarianceSeries gem2_clump_covariance(double p_stay, int terms) {
  if (!(p_stay > 0.0 && p_stay < 1.0)) throw std::invalid_argument("p_stay must lie in (0,1)");
  if (terms < 1) throw std::invalid_argument("terms must be >= 1");

  std::vector<double> w(static_cast<std::size_t>(terms) + 1, 0.0);
  double pm = 1.0;
  for (int m = 1; m <= terms; ++m) {
    w[static_cast<std::size_t>(m)] = pm * (1.0 - p_stay);
    pm *= p_stay;
  }

  CovarianceSeries out;
  for (int m = 1; m <= terms; ++m) out.e1 += 3.0 / (3.0 + m) * w[static_cast<std::size_t>(m)];
  for (int m = 1; m <= terms; ++m) {
    for (int n = 1; n <= terms; ++n) {
      const double ww = w[static_cast<std::size_t>(m)] * w[static_cast<std::size_t>(n)];
      out.e2 += (3.0 + m) / (3.0 + m + n) * ww;
      out.e12 += 3.0 / (3.0 + m + n) * ww;
    }
  }
  out.cov = out.e12 - out.e1 * out.e2;

  const double tail1 = pm;                       // mass of {m > terms}
  const double tail2 = 2.0 * pm - pm * pm;       // mass outside the truncated square
  out.truncation_bound = tail2 + (out.e1 + tail1) * tail2 + tail1 * (out.e2 + tail2);
  return out;
}

}  // namespace stickflow

// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stickflow/chains.hpp"
#include "stickflow/mccgem.hpp"

namespace stickflow {

/// Run specification for the chain with kernels K_t = I + G/t for t > cutoff
/// and K_t = I otherwise.
struct InhomSpec {
  GeneratorMatrix g;
  std::int64_t cutoff;     // M
  Eigen::VectorXd init;    // pi
  std::int64_t horizon;    // n

  InhomSpec(GeneratorMatrix g_, std::int64_t cutoff_, Eigen::VectorXd init_, std::int64_t horizon_)
      : g(std::move(g_)), cutoff(cutoff_), init(std::move(init_)), horizon(horizon_) {
    check_stochastic_vector(init);
    if (init.size() != g.dim()) throw std::invalid_argument("init dimension mismatch");
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    if (cutoff < 1) throw std::invalid_argument("cutoff must be >= 1");
    const double theta = g.theta_norm();
    if (static_cast<double>(cutoff) < theta)
      throw std::invalid_argument("cutoff too small: I + G/M has negative entries");
  }

  /// Smallest safe integer cutoff, ceil(theta^G) + 1.
  static std::int64_t default_cutoff(const GeneratorMatrix& g) {
    return static_cast<std::int64_t>(std::ceil(g.theta_norm())) + 1;
  }
};

/// Simulate the inhomogeneous chain; the step leaving time t uses K_t.
inline ChainPath simulate_inhom_with(const InhomSpec& spec, Rng& rng) {
  const int k = spec.g.dim();
  const StochasticKernel jumps = jump_kernel(spec.g);
  Eigen::VectorXd leave_rate(k);
  for (int s = 0; s < k; ++s) leave_rate(s) = -spec.g(s, s);

  std::vector<int> states(static_cast<std::size_t>(spec.horizon));
  states[0] = rng.categorical({spec.init.data(), static_cast<std::size_t>(spec.init.size())});
  for (std::int64_t t = 1; t < spec.horizon; ++t) {
    const int s = states[static_cast<std::size_t>(t - 1)];
    int next = s;
    if (t > spec.cutoff && leave_rate(s) > 0.0) {
      const double u = rng.uniform();
      if (u * static_cast<double>(t) < leave_rate(s)) next = draw_from_row(rng, jumps.matrix(), s);
    }
    states[static_cast<std::size_t>(t)] = next;
  }
  return ChainPath(std::move(states), k);
}

inline ChainPath simulate_inhom(const InhomSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  return simulate_inhom_with(spec, rng);
}

/// Sojourns of a path enumerated last-visit-first.  Weight j is the exact
/// rational tau_j / n; entries past the recorded clumps follow the padding
/// convention (length 0, label = first state of the path).
class ClumpExtract {
 public:
  ClumpExtract(std::vector<std::int64_t> taus, std::vector<int> labels, std::int64_t n,
               int first_state, int num_states)
      : taus_(std::move(taus)),
        labels_(std::move(labels)),
        n_(n),
        first_state_(first_state),
        num_states_(num_states) {
    std::int64_t total = 0;
    for (std::int64_t t : taus_) total += t;
    if (total != n_ || taus_.size() != labels_.size())
      throw std::invalid_argument("clump extract does not decompose the horizon");
  }

  std::size_t clump_count() const { return taus_.size(); }
  /// N_n: index of the first switch after the horizon.
  std::int64_t switch_count() const { return static_cast<std::int64_t>(taus_.size()) + 1; }
  std::int64_t horizon() const { return n_; }
  int num_states() const { return num_states_; }

  std::int64_t tau(std::size_t j) const { return j < taus_.size() ? taus_[j] : 0; }
  int label(std::size_t j) const { return j < labels_.size() ? labels_[j] : first_state_; }
  double weight(std::size_t j) const {
    return static_cast<double>(tau(j)) / static_cast<double>(n_);
  }

  /// Reverse switch boundaries: S_0 = n, then the times just before each
  /// earlier switch, ending in zeros.
  std::vector<std::int64_t> boundaries() const {
    std::vector<std::int64_t> s(taus_.size() + 1);
    s[0] = n_;
    for (std::size_t j = 0; j < taus_.size(); ++j) s[j + 1] = s[j] - taus_[j];
    return s;
  }

  StickSequence weights() const {
    std::vector<double> w(taus_.size());
    for (std::size_t j = 0; j < taus_.size(); ++j) w[j] = weight(j);
    return StickSequence(std::move(w), 0.0);
  }

  /// Occupation masses via the integer sojourn lengths.
  DiscreteMeasure assemble() const {
    std::vector<std::int64_t> counts(static_cast<std::size_t>(num_states_), 0);
    for (std::size_t j = 0; j < taus_.size(); ++j) counts[static_cast<std::size_t>(labels_[j])] += taus_[j];
    Eigen::VectorXd masses(num_states_);
    for (int l = 0; l < num_states_; ++l)
      masses(l) = static_cast<double>(counts[static_cast<std::size_t>(l)]) / static_cast<double>(n_);
    return DiscreteMeasure{std::move(masses), 0.0};
  }

 private:
  std::vector<std::int64_t> taus_;
  std::vector<int> labels_;
  std::int64_t n_;
  int first_state_;
  int num_states_;
};

/// Extract sojourn clumps of the whole path in reverse chronological order.
inline ClumpExtract reverse_clumps(const ChainPath& path) {
  const std::int64_t n = path.length();
  const SwitchReturnTimes sr = switch_and_return_times(path);
  const auto& v = sr.switch_times;
  const std::size_t m = v.size();

  std::vector<std::int64_t> taus(m);
  std::vector<int> labels(m);
  taus[0] = n + 1 - v[m - 1];
  labels[0] = path.at_time(n);
  for (std::size_t j = 1; j < m; ++j) {
    taus[j] = v[m - j] - v[m - j - 1];
    labels[j] = path.at_time(v[m - j - 1]);
  }
  return ClumpExtract(std::move(taus), std::move(labels), n, path.at_time(1), path.num_states());
}

/// Empirical occupation of the first n steps, masses count/n.
inline DiscreteMeasure occupation_measure(const ChainPath& path, std::int64_t n) {
  if (n < 1 || n > path.length()) throw std::invalid_argument("horizon out of range");
  std::vector<std::int64_t> counts(static_cast<std::size_t>(path.num_states()), 0);
  for (std::int64_t t = 1; t <= n; ++t) counts[static_cast<std::size_t>(path.at_time(t))]++;
  Eigen::VectorXd masses(path.num_states());
  for (int l = 0; l < path.num_states(); ++l)
    masses(l) = static_cast<double>(counts[static_cast<std::size_t>(l)]) / static_cast<double>(n);
  return DiscreteMeasure{std::move(masses), 0.0};
}

struct ErgodicIterate {
  Eigen::VectorXd mu_n;    // pi^t K_1 ... K_n
  Eigen::VectorXd mu_n_q;  // the same vector pushed once more through Q = I + G/theta^G
};

/// Iterated one-step distributions of the inhomogeneous chain.
inline ErgodicIterate weak_ergodic_iterate(const InhomSpec& spec, std::int64_t n) {
  if (n < 0) throw std::invalid_argument("n must be >= 0");
  Eigen::RowVectorXd mu = spec.init.transpose();
  const Eigen::MatrixXd& g = spec.g.matrix();
  for (std::int64_t t = spec.cutoff + 1; t <= n; ++t) {
    mu = mu + (mu * g) / static_cast<double>(t);
  }
  const double theta = std::max(spec.g.theta_norm(), 1.0);
  Eigen::RowVectorXd mu_q = mu + (mu * g) / theta;
  return ErgodicIterate{mu.transpose(), mu_q.transpose()};
}

}  // namespace stickflow

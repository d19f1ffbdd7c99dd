// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stickflow/rng.hpp"

namespace stickflow {

/// Square matrix with nonnegative off-diagonal entries and zero row sums.
class GeneratorMatrix {
 public:
  explicit GeneratorMatrix(Eigen::MatrixXd g) : g_(std::move(g)) {
    if (g_.rows() != g_.cols() || g_.rows() < 2)
      throw std::invalid_argument("generator must be square with dim >= 2");
    for (Eigen::Index i = 0; i < g_.rows(); ++i) {
      double row_sum = 0.0;
      for (Eigen::Index j = 0; j < g_.cols(); ++j) {
        if (i != j && g_(i, j) < 0.0)
          throw std::invalid_argument("generator has negative off-diagonal entry at (" +
                                      std::to_string(i) + "," + std::to_string(j) + ")");
        row_sum += g_(i, j);
      }
      if (std::abs(row_sum) > 1e-9)
        throw std::invalid_argument("generator row " + std::to_string(i) +
                                    " sums to " + std::to_string(row_sum));
    }
  }

  int dim() const { return static_cast<int>(g_.rows()); }
  const Eigen::MatrixXd& matrix() const { return g_; }
  double operator()(int i, int j) const { return g_(i, j); }

  /// Smallest theta with I + G/theta entrywise nonnegative: max_i |G_ii|.
  double theta_norm() const {
    double m = 0.0;
    for (Eigen::Index i = 0; i < g_.rows(); ++i) m = std::max(m, std::abs(g_(i, i)));
    return m;
  }

  /// States whose row vanishes (absorbing for any matched kernel).
  std::vector<int> zero_rows() const {
    std::vector<int> out;
    for (Eigen::Index i = 0; i < g_.rows(); ++i) {
      if (g_.row(i).cwiseAbs().maxCoeff() <= 1e-12) out.push_back(static_cast<int>(i));
    }
    return out;
  }

  /// theta * (Q - I).
  static GeneratorMatrix from_kernel(const Eigen::MatrixXd& q, double theta) {
    if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
    return GeneratorMatrix(theta * (q - Eigen::MatrixXd::Identity(q.rows(), q.cols())));
  }

 private:
  Eigen::MatrixXd g_;
};

inline GeneratorMatrix validate_generator(const Eigen::MatrixXd& g) { return GeneratorMatrix(g); }

/// Row-stochastic matrix.
class StochasticKernel {
 public:
  explicit StochasticKernel(Eigen::MatrixXd q) : q_(std::move(q)) {
    if (q_.rows() != q_.cols() || q_.rows() < 1)
      throw std::invalid_argument("kernel must be square");
    for (Eigen::Index i = 0; i < q_.rows(); ++i) {
      double row_sum = 0.0;
      for (Eigen::Index j = 0; j < q_.cols(); ++j) {
        if (q_(i, j) < -1e-15)
          throw std::invalid_argument("kernel has negative entry");
        row_sum += q_(i, j);
      }
      if (std::abs(row_sum - 1.0) > 1e-12)
        throw std::invalid_argument("kernel row " + std::to_string(i) + " sums to " +
                                    std::to_string(row_sum));
    }
  }

  int dim() const { return static_cast<int>(q_.rows()); }
  const Eigen::MatrixXd& matrix() const { return q_; }
  double operator()(int i, int j) const { return q_(i, j); }

 private:
  Eigen::MatrixXd q_;
};

/// Finite trajectory over states {0..k-1}; positions are 1-based times.
class ChainPath {
 public:
  ChainPath(std::vector<int> states, int num_states)
      : states_(std::move(states)), num_states_(num_states) {
    if (states_.empty()) throw std::invalid_argument("path must be nonempty");
    if (num_states_ < 1) throw std::invalid_argument("path needs a positive state count");
    for (int s : states_) {
      if (s < 0 || s >= num_states_) throw std::invalid_argument("path state out of range");
    }
  }

  std::int64_t length() const { return static_cast<std::int64_t>(states_.size()); }
  int num_states() const { return num_states_; }
  /// State at 1-based time t.
  int at_time(std::int64_t t) const { return states_[static_cast<std::size_t>(t - 1)]; }
  std::span<const int> states() const { return states_; }

  ChainPath prefix(std::int64_t n) const {
    if (n < 1 || n > length()) throw std::invalid_argument("prefix length out of range");
    return ChainPath(std::vector<int>(states_.begin(), states_.begin() + n), num_states_);
  }

 private:
  std::vector<int> states_;
  int num_states_;
};

struct SwitchReturnTimes {
  std::vector<std::int64_t> switch_times;   // V: 1-based times the state changes, V_1 = 1
  std::vector<std::int64_t> return_times;   // W: 1-based times the state equals the start
  std::vector<int> switch_states;           // Y_j = state at V_j
};

inline SwitchReturnTimes switch_and_return_times(const ChainPath& path) {
  SwitchReturnTimes out;
  out.switch_times.push_back(1);
  out.return_times.push_back(1);
  out.switch_states.push_back(path.at_time(1));
  for (std::int64_t t = 2; t <= path.length(); ++t) {
    if (path.at_time(t) != path.at_time(t - 1)) {
      out.switch_times.push_back(t);
      out.switch_states.push_back(path.at_time(t));
    }
    if (path.at_time(t) == path.at_time(1)) out.return_times.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Communication structure and stationary laws.
// ---------------------------------------------------------------------------

namespace detail {

/// Strongly connected components of the directed graph on {0..k-1} given by
/// adj; returned in reverse topological order (Tarjan).
inline std::vector<std::vector<int>> strongly_connected_components(
    const std::vector<std::vector<int>>& adj) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> index(n, -1), low(n, 0), stack;
  std::vector<bool> on_stack(n, false);
  std::vector<std::vector<int>> comps;
  int counter = 0;

  // explicit stack to be safe on long chains
  struct Frame {
    int v;
    std::size_t edge;
  };
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    std::vector<Frame> call;
    call.push_back({root, 0});
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      Frame& f = call.back();
      if (f.edge < adj[f.v].size()) {
        const int w = adj[f.v][f.edge++];
        if (index[w] == -1) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
      } else {
        if (low[f.v] == index[f.v]) {
          std::vector<int> comp;
          while (true) {
            const int w = stack.back();
            stack.pop_back();
            on_stack[w] = false;
            comp.push_back(w);
            if (w == f.v) break;
          }
          std::sort(comp.begin(), comp.end());
          comps.push_back(std::move(comp));
        }
        const int v = f.v;
        call.pop_back();
        if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
      }
    }
  }
  return comps;
}

inline std::vector<std::vector<int>> positive_adjacency(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && m(i, j) > 0.0) adj[i].push_back(j);
    }
  }
  return adj;
}

}  // namespace detail

/// Recurrent classes of the chain whose off-diagonal moves follow the positive
/// entries of `m` (a kernel or a generator): SCCs with no outgoing edges.
inline std::vector<std::vector<int>> recurrent_classes(const Eigen::MatrixXd& m) {
  const auto adj = detail::positive_adjacency(m);
  const auto comps = detail::strongly_connected_components(adj);
  const int n = static_cast<int>(adj.size());
  std::vector<int> comp_of(n, -1);
  for (std::size_t c = 0; c < comps.size(); ++c) {
    for (int v : comps[c]) comp_of[v] = static_cast<int>(c);
  }
  std::vector<std::vector<int>> out;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    bool closed = true;
    for (int v : comps[c]) {
      for (int w : adj[v]) {
        if (comp_of[w] != static_cast<int>(c)) {
          closed = false;
          break;
        }
      }
      if (!closed) break;
    }
    if (closed) out.push_back(comps[c]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

/// Solve mu^t A = 0, sum(mu) = 1 restricted to `cls`, embedded in dimension k.
/// `A` is Q - I for kernels or G itself for generators.
inline Eigen::VectorXd stationary_on_class(const Eigen::MatrixXd& a, const std::vector<int>& cls) {
  const int m = static_cast<int>(cls.size());
  Eigen::MatrixXd sys(m + 1, m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) sys(r, c) = a(cls[c], cls[r]);  // transpose of restriction
  }
  sys.row(m).setOnes();
  rhs(m) = 1.0;
  Eigen::VectorXd x = sys.colPivHouseholderQr().solve(rhs);
  if ((sys * x - rhs).norm() > 1e-8)
    throw std::runtime_error("stationary distribution solve failed (degenerate system)");
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(a.rows());
  for (int c = 0; c < m; ++c) mu(cls[c]) = std::max(0.0, x(c));
  mu /= mu.sum();
  return mu;
}

}  // namespace detail

/// All extreme stationary distributions, one per recurrent class.
inline std::vector<Eigen::VectorXd> stationary_distributions(const StochasticKernel& q) {
  const Eigen::MatrixXd a =
      q.matrix() - Eigen::MatrixXd::Identity(q.dim(), q.dim());
  std::vector<Eigen::VectorXd> out;
  for (const auto& cls : recurrent_classes(q.matrix())) {
    out.push_back(detail::stationary_on_class(a, cls));
  }
  return out;
}

inline std::vector<Eigen::VectorXd> stationary_distributions(const GeneratorMatrix& g) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& cls : recurrent_classes(g.matrix())) {
    out.push_back(detail::stationary_on_class(g.matrix(), cls));
  }
  return out;
}

/// The unique stationary distribution; throws when several classes exist.
template <class M>
Eigen::VectorXd stationary_distribution(const M& m) {
  auto all = stationary_distributions(m);
  if (all.size() != 1)
    throw std::invalid_argument("stationary distribution is not unique (" +
                                std::to_string(all.size()) + " recurrent classes)");
  return all.front();
}

inline void check_stochastic_vector(const Eigen::VectorXd& v) {
  if (v.minCoeff() < -1e-12 || std::abs(v.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("not a probability vector");
}

/// Inverse-CDF draw from row `r` of a (column-major) matrix.
inline int draw_from_row(Rng& rng, const Eigen::MatrixXd& m, int r) {
  const double u = rng.uniform();
  double acc = 0.0;
  const int k = static_cast<int>(m.cols());
  for (int j = 0; j + 1 < k; ++j) {
    acc += m(r, j);
    if (u < acc) return j;
  }
  return k - 1;
}

/// Sample a homogeneous chain of length n; step t -> t+1 uses row states[t].
inline ChainPath sample_homogeneous_with(const StochasticKernel& q, const Eigen::VectorXd& init,
                                         std::int64_t n, Rng& rng) {
  check_stochastic_vector(init);
  if (init.size() != q.dim()) throw std::invalid_argument("init dimension mismatch");
  if (n < 1) throw std::invalid_argument("path length must be >= 1");
  std::vector<int> states(static_cast<std::size_t>(n));
  states[0] = rng.categorical({init.data(), static_cast<std::size_t>(init.size())});
  for (std::int64_t t = 1; t < n; ++t) {
    const int s = states[static_cast<std::size_t>(t - 1)];
    states[static_cast<std::size_t>(t)] = draw_from_row(rng, q.matrix(), s);
  }
  return ChainPath(std::move(states), q.dim());
}

inline ChainPath sample_homogeneous(const StochasticKernel& q, const Eigen::VectorXd& init,
                                    std::int64_t n, std::uint64_t seed) {
  Rng rng(seed);
  return sample_homogeneous_with(q, init, n, rng);
}

namespace detail {

/// Normalize off-diagonal row mass; rows with none are absorbing.
inline StochasticKernel induced_jump_kernel(const Eigen::MatrixXd& m) {
  const int k = static_cast<int>(m.rows());
  Eigen::MatrixXd kmat = Eigen::MatrixXd::Zero(k, k);
  for (int z = 0; z < k; ++z) {
    double off = 0.0;
    for (int w = 0; w < k; ++w) {
      if (w != z) off += m(z, w);
    }
    if (off <= 1e-12) {
      kmat(z, z) = 1.0;
    } else {
      for (int w = 0; w < k; ++w) {
        if (w != z) kmat(z, w) = m(z, w) / off;
      }
    }
  }
  return StochasticKernel(std::move(kmat));
}

}  // namespace detail

/// Kernel of the switch-time state sequence Y of a chain run with Q.
inline StochasticKernel jump_kernel(const StochasticKernel& q) {
  return detail::induced_jump_kernel(q.matrix());
}

/// Label kernel K_G: off-diagonal rows of G normalized by -G_ww; zero rows
/// are absorbing.
inline StochasticKernel jump_kernel(const GeneratorMatrix& g) {
  return detail::induced_jump_kernel(g.matrix());
}

/// Reversal with respect to a stationary mu: G'_ij = (mu_j/mu_i) G_ji on the
/// support of mu; rows off the support vanish.
inline GeneratorMatrix reverse_generator(const GeneratorMatrix& g, const Eigen::VectorXd& mu) {
  if (mu.size() != g.dim()) throw std::invalid_argument("mu dimension mismatch");
  check_stochastic_vector(mu);
  if ((mu.transpose() * g.matrix()).cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument("mu is not stationary for the generator");
  const int k = g.dim();
  Eigen::MatrixXd gp = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    if (mu(i) <= 0.0) continue;
    for (int j = 0; j < k; ++j) {
      gp(i, j) = mu(j) / mu(i) * g(j, i);
    }
  }
  return GeneratorMatrix(std::move(gp));
}

}  // namespace stickflow

// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stickflow/chains.hpp"
#include "stickflow/stickcore.hpp"

namespace stickflow {

/// Joint draw of stick weights and the label chain they are conditioned on.
struct MccgemSample {
  StickSequence weights;
  std::vector<int> labels;  // one label per weight
  int num_states;
};

/// Point masses on {0..k-1} plus whatever mass truncation left unassigned.
struct DiscreteMeasure {
  Eigen::VectorXd masses;
  double deficit = 0.0;
};

/// Labels walk the jump kernel K_G from `init`; given the labels, fraction j
/// is Beta(1, -G_{y_j,y_j}), with a zero diagonal giving the constant 1.
inline MccgemSample sample_mccgem_with(const GeneratorMatrix& g, const Eigen::VectorXd& init,
                                       double eps, Rng& rng) {
  check_stochastic_vector(init);
  if (init.size() != g.dim()) throw std::invalid_argument("init dimension mismatch");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0,1)");
  const StochasticKernel kernel = jump_kernel(g);

  std::vector<double> weights;
  std::vector<int> labels;
  detail::TailProduct rem;
  int state = rng.categorical({init.data(), static_cast<std::size_t>(init.size())});
  while (true) {
    const double r = rem.value();
    if (r < eps) break;
    const double theta = -g(state, state);
    const double x = rng.beta_one(theta < 0.0 ? 0.0 : theta);
    weights.push_back(x * r);
    labels.push_back(state);
    rem.multiply(1.0 - x);
    state = draw_from_row(rng, kernel.matrix(), state);
  }
  return MccgemSample{StickSequence(std::move(weights), rem.value()), std::move(labels), g.dim()};
}

inline MccgemSample sample_mccgem(const GeneratorMatrix& g, const Eigen::VectorXd& init, double eps,
                                  std::uint64_t seed) {
  Rng rng(seed);
  return sample_mccgem_with(g, init, eps, rng);
}

struct ClumpedPath {
  StickSequence weights;   // blockwise sums of the input stick
  std::vector<int> labels; // state at each switch time
};

/// Clump a stick over the switch times of an independent path.  Weights the
/// path cannot reach stay unassigned in the result's tail mass.
inline ClumpedPath clump_by_switches(const StickSequence& p, const ChainPath& path) {
  const SwitchReturnTimes sr = switch_and_return_times(path);
  const std::int64_t covered = std::min<std::int64_t>(path.length(), p.size());

  std::vector<double> clumped;
  std::vector<int> labels;
  double assigned = 0.0;
  for (std::size_t j = 0; j < sr.switch_times.size(); ++j) {
    const std::int64_t lo = sr.switch_times[j];
    if (lo > covered) break;
    const std::int64_t hi =
        j + 1 < sr.switch_times.size() ? sr.switch_times[j + 1] : covered + 1;
    double sum = 0.0;
    for (std::int64_t i = lo; i < hi && i <= covered; ++i) sum += p[static_cast<std::size_t>(i - 1)];
    clumped.push_back(sum);
    labels.push_back(sr.switch_states[j]);
    assigned += sum;
  }
  double leftover = p.tail_mass();
  for (std::size_t i = static_cast<std::size_t>(covered); i < p.size(); ++i) leftover += p[i];
  return ClumpedPath{StickSequence(std::move(clumped), leftover), std::move(labels)};
}

/// masses[l] = sum of weights with label l; the stick's tail becomes deficit.
inline DiscreteMeasure assemble_measure(const StickSequence& weights, std::span<const int> labels,
                                        int k) {
  if (labels.size() < weights.size())
    throw std::invalid_argument("need at least as many labels as weights");
  Eigen::VectorXd masses = Eigen::VectorXd::Zero(k);
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const int l = labels[j];
    if (l < 0 || l >= k) throw std::invalid_argument("label out of range");
    masses(l) += weights[j];
  }
  return DiscreteMeasure{std::move(masses), weights.tail_mass()};
}

}  // namespace stickflow

// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "stickflow/inhom.hpp"
#include "stickflow/moments.hpp"
#include "stickflow/stats.hpp"

namespace stickflow {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::uint64_t seed = 20260810;
  int jobs = 1;
  std::vector<int> criteria;  // empty runs all of 1..13
};

namespace acceptance_detail {

inline GeneratorMatrix two_state() {
  Eigen::MatrixXd m(2, 2);
  m << -1, 1, 2, -2;
  return GeneratorMatrix(m);
}

inline GeneratorMatrix three_cycle() {
  Eigen::MatrixXd m(3, 3);
  m << -1, 1, 0, 0, -1, 1, 1, 0, -1;
  return GeneratorMatrix(m);
}

inline GeneratorMatrix dirichlet_generator(const Eigen::VectorXd& mu, double theta) {
  Eigen::MatrixXd q(mu.size(), mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) q.row(i) = mu.transpose();
  return GeneratorMatrix::from_kernel(q, theta);
}

inline GeneratorMatrix random_positive_generator(int k, Rng& rng) {
  Eigen::MatrixXd g(k, k);
  for (int i = 0; i < k; ++i) {
    double row = 0.0;
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      g(i, j) = 0.1 + 0.9 * rng.uniform();
      row += g(i, j);
    }
    g(i, i) = -row;
  }
  return GeneratorMatrix(g);
}

/// All multi-indices over `k` coordinates with total order exactly n.
inline void for_each_multi_index(int k, int n, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> m(static_cast<std::size_t>(k), 0);
  std::function<void(int, int)> rec = [&](int coord, int remaining) {
    if (coord == k - 1) {
      m[static_cast<std::size_t>(coord)] = remaining;
      fn(m);
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      m[static_cast<std::size_t>(coord)] = c;
      rec(coord + 1, remaining - c);
    }
  };
  rec(0, n);
}

/// Mass at `state` of one stick-breaking draw over a chain with kernel q
/// started from `init`.
inline double stick_breaking_mass(const LawTag& law, const StochasticKernel& q,
                                  const Eigen::VectorXd& init, int state, double eps, Rng& rng) {
  const int start = rng.categorical({init.data(), static_cast<std::size_t>(init.size())});
  const Eigen::VectorXd masses = detail::direct_measure_draw(law, q, start, eps, rng);
  return masses(state);
}

inline std::string fmt(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

using Clock = std::chrono::steady_clock;

inline CriterionResult finish(int id, const std::string& name, bool pass,
                              const std::string& detail, Clock::time_point start) {
  CriterionResult r;
  r.id = id;
  r.name = name;
  r.pass = pass;
  r.detail = detail;
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

// --- criterion bodies -------------------------------------------------------

inline CriterionResult criterion_covariance(const AcceptanceOptions&) {
  const auto t0 = Clock::now();
  const auto series = gem2_clump_covariance(0.5, 200);
  const double gap = std::abs(series.cov - (-0.005391));
  return finish(1, "worked covariance series", gap < 1e-4,
                "cov=" + fmt(series.cov) + " gap=" + fmt(gap) +
                    " bound=" + fmt(series.truncation_bound),
                t0);
}

inline CriterionResult criterion_dirichlet_collapse(const AcceptanceOptions&) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  const auto run = [&](const Eigen::VectorXd& mu, double theta) {
    const auto g = dirichlet_generator(mu, theta);
    const auto poly = minimal_and_q(g);
    for (int n = 1; n <= 6; ++n) {
      for_each_multi_index(static_cast<int>(mu.size()), n, [&](const std::vector<int>& m) {
        double expected = 1.0 / pochhammer(theta, n);
        for (std::size_t i = 0; i < m.size(); ++i)
          expected *= pochhammer(theta * mu(static_cast<Eigen::Index>(i)), m[i]);
        worst = std::max(worst, std::abs(joint_moment(g, poly, m) - expected));
      });
    }
  };
  Eigen::VectorXd mu2(2), mu3(3);
  mu2 << 2.0 / 3, 1.0 / 3;
  mu3 << 0.5, 1.0 / 3, 1.0 / 6;
  run(mu2, 3.0);
  run(mu3, 6.0);
  return finish(2, "dirichlet moment collapse", worst < 1e-10, "max|dp-closed|=" + fmt(worst), t0);
}

inline CriterionResult criterion_resolvent(const AcceptanceOptions& opt) {
  const auto t0 = Clock::now();
  Rng rng(mix_seed(opt.seed, 3));
  double worst_inverse = 0.0, worst_mu = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 2 + static_cast<int>(rng.uniform() * 5);
    const auto g = random_positive_generator(k, rng);
    const auto poly = minimal_and_q(g);
    for (std::int64_t j = 1; j <= 50; ++j) {
      const Eigen::MatrixXd direct =
          (Eigen::MatrixXd::Identity(k, k) - g.matrix() / static_cast<double>(j))
              .partialPivLu()
              .solve(Eigen::MatrixXd::Identity(k, k));
      worst_inverse =
          std::max(worst_inverse, (moment_kernel(g, poly, j) - direct).cwiseAbs().maxCoeff());
    }
    const auto mu = stationary_distribution(g);
    const auto k0 = moment_kernel(g, poly, 0);
    for (int i = 0; i < k; ++i)
      worst_mu = std::max(worst_mu, (k0.row(i).transpose() - mu).cwiseAbs().maxCoeff());
  }
  return finish(3, "resolvent identity", worst_inverse < 1e-10 && worst_mu < 1e-10,
                "max|kernel-inverse|=" + fmt(worst_inverse) + " max|rows-mu|=" + fmt(worst_mu), t0);
}

inline CriterionResult criterion_duality(const AcceptanceOptions& opt) {
  const auto t0 = Clock::now();
  Rng rng(mix_seed(opt.seed, 4));
  Eigen::VectorXd mu3(3);
  mu3 << 0.5, 1.0 / 3, 1.0 / 6;
  std::vector<GeneratorMatrix> generators{two_state(), three_cycle(), dirichlet_generator(mu3, 6.0),
                                          random_positive_generator(3, rng)};
  double worst_diag = 0.0;
  for (const auto& g : generators) {
    const auto poly = minimal_and_q(g);
    const auto mu = stationary_distribution(g);
    for (int i = 0; i < g.dim(); ++i) {
      for (int n = 1; n <= 8; ++n) {
        double expected = mu(i);
        for (int j = 1; j < n; ++j) expected *= moment_kernel(g, poly, j)(i, i);
        std::vector<int> m(static_cast<std::size_t>(g.dim()), 0);
        m[static_cast<std::size_t>(i)] = n;
        worst_diag = std::max(worst_diag, std::abs(joint_moment(g, poly, m) - expected));
      }
    }
  }

  // occupation-count law of the auxiliary chain, brute forced over all paths
  double worst_paths = 0.0;
  for (const auto& g : generators) {
    if (g.dim() > 3) continue;
    const auto poly = minimal_and_q(g);
    const auto mu = stationary_distribution(g);
    const int k = g.dim();
    for (int n = 1; n <= 5; ++n) {
      std::vector<Eigen::MatrixXd> kernels;
      for (int j = 1; j < n; ++j) kernels.push_back(moment_kernel(g, poly, j));
      std::vector<double> prob_by_counts;
      for_each_multi_index(k, n, [&](const std::vector<int>&) { prob_by_counts.push_back(0.0); });

      std::vector<int> path(static_cast<std::size_t>(n), 0);
      const std::int64_t total_paths = static_cast<std::int64_t>(std::pow(k, n));
      for (std::int64_t code = 0; code < total_paths; ++code) {
        std::int64_t rest = code;
        for (int pos = 0; pos < n; ++pos) {
          path[static_cast<std::size_t>(pos)] = static_cast<int>(rest % k);
          rest /= k;
        }
        double prob = mu(path[0]);
        for (int pos = 1; pos < n; ++pos)
          prob *= kernels[static_cast<std::size_t>(pos - 1)](path[static_cast<std::size_t>(pos - 1)],
                                                             path[static_cast<std::size_t>(pos)]);
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (int s : path) counts[static_cast<std::size_t>(s)]++;
        std::size_t idx = 0, hit = 0;
        for_each_multi_index(k, n, [&](const std::vector<int>& m) {
          if (m == counts) hit = idx;
          ++idx;
        });
        prob_by_counts[hit] += prob;
      }

      std::size_t idx = 0;
      for_each_multi_index(k, n, [&](const std::vector<int>& m) {
        const double lhs = joint_moment(g, poly, m);
        const double rhs = prob_by_counts[idx] / multinomial_coefficient(m);
        worst_paths = std::max(worst_paths, std::abs(lhs - rhs));
        ++idx;
      });
    }
  }
  return finish(4, "moment duality with the auxiliary chain",
                worst_diag < 1e-10 && worst_paths < 1e-10,
                "max diag gap=" + fmt(worst_diag) + " max path-law gap=" + fmt(worst_paths), t0);
}

inline CriterionResult criterion_marginals(const AcceptanceOptions& opt) {
  const auto t0 = Clock::now();
  Rng rng(mix_seed(opt.seed, 5));
  std::vector<GeneratorMatrix> generators{two_state(), three_cycle(),
                                          random_positive_generator(4, rng)};
  double worst = 0.0;
  for (const auto& g : generators) {
    const auto poly = minimal_and_q(g);
    for (int i = 0; i < g.dim(); ++i) {
      for (int n = 1; n <= 8; ++n) {
        std::vector<int> m(static_cast<std::size_t>(g.dim()), 0);
        m[static_cast<std::size_t>(i)] = n;
        worst = std::max(worst,
                         std::abs(marginal_moment(g, poly, i, n) - joint_moment(g, poly, m)));
      }
    }
  }
  const auto cycle = three_cycle();
  const auto poly = minimal_and_q(cycle);
  const double second = marginal_moment(cycle, poly, 0, 2);
  const double dp_second = joint_moment(cycle, poly, std::vector<int>{2, 0, 0});
  const bool cycle_ok = std::abs(second - 4.0 / 21) < 1e-8 && std::abs(dp_second - 4.0 / 21) < 1e-8;
  return finish(5, "pochhammer marginals", worst < 1e-8 && cycle_ok,
                "max|marginal-joint|=" + fmt(worst) + " cycle second moment=" + fmt(second), t0);
}

inline CriterionResult criterion_normalization(const AcceptanceOptions& opt) {
  const auto t0 = Clock::now();
  Rng rng(mix_seed(opt.seed, 6));
  Eigen::VectorXd mu3(3);
  mu3 << 0.5, 1.0 / 3, 1.0 / 6;
  std::vector<GeneratorMatrix> generators{two_state(), three_cycle(), dirichlet_generator(mu3, 6.0),
                                          random_positive_generator(4, rng)};
  double worst = 0.0;
  for (const auto& g : generators) {
    const auto poly = minimal_and_q(g);
    for (int n = 1; n <= 6; ++n) {
      double total = 0.0;
      for_each_multi_index(g.dim(), n, [&](const std::vector<int>& m) {
        total += multinomial_coefficient(m) * joint_moment(g, poly, m);
      });
      worst = std::max(worst, std::abs(total - 1.0));
    }
  }
  return finish(6, "moment normalization", worst < 1e-9, "max|sum-1|=" + fmt(worst), t0);
}

inline CriterionResult criterion_exact_decomposition(const AcceptanceOptions& opt) {
  const auto t0 = Clock::now();
  bool exact = true;
  for (int which = 0; which < 2; ++which) {
    const GeneratorMatrix g = which == 0 ? two_state() : three_cycle();
    Eigen::VectorXd pi = Eigen::VectorXd::Zero(g.dim());
    pi(0) = 1.0;
    const InhomSpec spec(g, 2, pi, 10'000);
    for (int r = 0; r < 50; ++r) {
      const auto path = simulate_inhom(spec, mix_seed(opt.seed, 700 + 50 * which + r));
      const auto lhs = reverse_clumps(path).assemble();
      const auto rhs = occupation_measure(path, spec.horizon);
      if ((lhs.masses - rhs.masses).cwiseAbs().maxCoeff() > 1e-15) exact = false;
    }
  }

  // worked trajectory fixtures
  const ChainPath t({1, 1, 1, 6, 6, 1, 3, 3, 3, 5}, 7);
  const auto p4 = reverse_clumps(t.prefix(4));
  const auto p7 = reverse_clumps(t.prefix(7));
  const bool fixtures =
      p4.weight(0) == 0.25 && p4.weight(1) == 0.75 && p4.weight(2) == 0.0 && p4.label(0) == 6 &&
      p4.label(1) == 1 && p4.label(2) == 1 && p7.weight(0) == 1.0 / 7 && p7.weight(1) == 1.0 / 7 &&
      p7.weight(2) == 2.0 / 7 && p7.weight(3) == 3.0 / 7 && p7.weight(4) == 0.0 &&
      p7.label(0) == 3 && p7.label(1) == 1 && p7.label(2) == 6 && p7.label(3) == 1 &&
      p7.label(4) == 1;
  return finish(7, "exact reverse-clump decomposition", exact && fixtures,
                std::string("paths exact=") + (exact ? "yes" : "no") + " fixtures=" +
                    (fixtures ? "yes" : "no"),
                t0);
}

struct OccupationComparison {
  double mean_gap_sigmas = 0.0;
  double second_gap_sigmas = 0.0;
  double ks_p = 1.0;
  bool pass(double alpha) const {
    return mean_gap_sigmas <= 4.0 && second_gap_sigmas <= 4.0 && ks_p > alpha;
  }
};

/// Shared pipeline for criteria 8 and 9: empirical occupation of coordinate
/// `state` for the inhomogeneous chain versus a stick-breaking ensemble.
inline OccupationComparison compare_occupation_to_stick_breaking(
    const GeneratorMatrix& g_inhom, const Eigen::VectorXd& pi, double theta_stick,
    const StochasticKernel& stick_kernel, const Eigen::VectorXd& stick_init, int state,
    std::int64_t horizon, std::int64_t replicates, std::uint64_t seed, int jobs,
    const double* exact_mean, const double* exact_second) {
  const InhomSpec spec(g_inhom, 2, pi, horizon);
  const auto occupation = replicate_map(
      [&](std::uint64_t s) {
        return occupation_measure(simulate_inhom(spec, s), horizon).masses(state);
      },
      replicates, mix_seed(seed, 81), jobs);
  const auto sticks = replicate_map(
      [&](std::uint64_t s) {
        Rng rng(s);
        return stick_breaking_mass(GemLaw{theta_stick}, stick_kernel, stick_init, state, 1e-12,
                                   rng);
      },
      replicates, mix_seed(seed, 82), jobs);

  OccupationComparison cmp;
  const auto occ_mean = summarize(occupation, seed);
  std::vector<double> occ_sq(occupation.size());
  for (std::size_t i = 0; i < occupation.size(); ++i) occ_sq[i] = occupation[i] * occupation[i];
  const auto occ_second = summarize(occ_sq, seed);

  if (exact_mean != nullptr) {
    cmp.mean_gap_sigmas = std::abs(occ_mean.value - *exact_mean) / occ_mean.std_error;
    cmp.second_gap_sigmas = std::abs(occ_second.value - *exact_second) / occ_second.std_error;
  } else {
    const auto stick_mean = summarize(sticks, seed);
    std::vector<double> stick_sq(sticks.size());
    for (std::size_t i = 0; i < sticks.size(); ++i) stick_sq[i] = sticks[i] * sticks[i];
    const auto stick_second = summarize(stick_sq, seed);
    cmp.mean_gap_sigmas = std::abs(occ_mean.value - stick_mean.value) /
                          std::hypot(occ_mean.std_error, stick_mean.std_error);
    cmp.second_gap_sigmas = std::abs(occ_second.value - stick_second.value) /
                            std::hypot(occ_second.std_error, stick_second.std_error);
  }
  cmp.ks_p = ks_two_sample(occupation, sticks).p_value;
  return cmp;
}

inline CriterionResult criterion_occupation_convergence(const AcceptanceOptions& opt) {
  const auto t0 = Clock::now();
  const std::int64_t horizon = 100'000, replicates = 2000;
  bool pass = true;
  std::string detail;
  int idx = 0;
  for (const auto& g : {two_state(), three_cycle()}) {
    const auto poly = minimal_and_q(g);
    const auto mu = stationary_distribution(g);
    std::vector<int> e0(static_cast<std::size_t>(g.dim()), 0), e0e0 = e0;
    e0[0] = 1;
    e0e0[0] = 2;
    const double mean = joint_moment(g, poly, e0);
    const double second = joint_moment(g, poly, e0e0);

    Eigen::VectorXd pi = Eigen::VectorXd::Zero(g.dim());
    pi(0) = 1.0;
    const auto gp = reverse_generator(g, mu);
    const StochasticKernel qp(Eigen::MatrixXd::Identity(g.dim(), g.dim()) + gp.matrix() / 3.0);
    const auto cmp = compare_occupation_to_stick_breaking(
        g, pi, 3.0, qp, mu, 0, horizon, replicates, mix_seed(opt.seed, 800 + idx), opt.jobs,
        &mean, &second);
    pass = pass && cmp.pass(0.01);
    detail += (idx ? " | " : "") + std::string(idx ? "cycle" : "two-state") +
              ": mean gap=" + fmt(cmp.mean_gap_sigmas) + "s second gap=" +
              fmt(cmp.second_gap_sigmas) + "s ks p=" + fmt(cmp.ks_p);
    ++idx;
  }
  return finish(8, "occupation law converges to the stick-breaking law", pass, detail, t0);
}

inline CriterionResult criterion_reverse_direction(const AcceptanceOptions& opt) {
  const auto t0 = Clock::now();
  // start from a (theta, kernel) pair, reverse it, and match moments
  const double theta = 2.0;
  Eigen::MatrixXd qt(3, 3);
  qt << 0.5, 0.5, 0, 0, 0.5, 0.5, 0.5, 0, 0.5;
  const StochasticKernel q_tilde(qt);
  const auto g_tilde = GeneratorMatrix::from_kernel(qt, theta);
  const auto mu = stationary_distribution(g_tilde);
  const auto g_prime = reverse_generator(g_tilde, mu);

  Eigen::VectorXd pi = Eigen::VectorXd::Zero(3);
  pi(0) = 1.0;
  const auto cmp = compare_occupation_to_stick_breaking(
      g_prime, pi, theta, q_tilde, mu, 0, 100'000, 2000, mix_seed(opt.seed, 9), opt.jobs, nullptr,
      nullptr);
  const bool pass = cmp.mean_gap_sigmas <= 4.0 && cmp.second_gap_sigmas <= 4.0;
  return finish(9, "stick-breaking law reproduced through the reversed generator", pass,
                "mean gap=" + fmt(cmp.mean_gap_sigmas) + "s second gap=" +
                    fmt(cmp.second_gap_sigmas) + "s (ks p=" + fmt(cmp.ks_p) + ")",
                t0);
}

inline CriterionResult criterion_conditional_beta(const AcceptanceOptions& opt) {
  const auto t0 = Clock::now();
  Eigen::MatrixXd coin(2, 2), sticky(2, 2), const_diag(3, 3);
  coin << 0.5, 0.5, 0.5, 0.5;
  sticky << 0.9, 0.1, 0.1, 0.9;
  const_diag << 0.4, 0.3, 0.3, 0.2, 0.4, 0.4, 0.5, 0.1, 0.4;

  bool pass = true;
  std::string detail;
  int idx = 0;
  const std::vector<std::tuple<double, Eigen::MatrixXd, int>> configs{
      {2.0, coin, 0}, {1.0, sticky, 0}, {2.0, const_diag, 1}};
  for (const auto& [theta, q, y] : configs) {
    const auto report = clumped_fraction_beta_check(theta, StochasticKernel(q), y, 10'000,
                                                    mix_seed(opt.seed, 1000 + idx));
    pass = pass && report.pass;
    detail += (idx ? " | " : "") + std::string("b=") + fmt(report.params.at("beta_parameter")) +
              " p=" + fmt(report.p_value);
    ++idx;
  }
  return finish(10, "clumped fractions follow the conditional beta law", pass, detail, t0);
}

inline CriterionResult criterion_self_similarity(const AcceptanceOptions& opt) {
  const auto t0 = Clock::now();
  Eigen::MatrixXd coin(2, 2), skew(2, 2);
  coin << 0.5, 0.5, 0.5, 0.5;
  skew << 0.5, 0.5, 0.25, 0.75;

  const auto dirichlet = self_similarity_check(
      SelfSimSpec{GemLaw{1.0}, StochasticKernel(coin), 0, 1e-12, 10'000},
      mix_seed(opt.seed, 1100));
  const auto markov = self_similarity_check(
      SelfSimSpec{GemLaw{2.0}, StochasticKernel(skew), 0, 1e-12, 10'000},
      mix_seed(opt.seed, 1101));
  const auto a = dirichlet.to_check_report(0.01);
  const auto b = markov.to_check_report(0.01);
  return finish(11, "self-similarity of the occupation law", dirichlet.pass && markov.pass,
                "dirichlet ks p=" + fmt(a.p_value) + " markov ks p=" + fmt(b.p_value), t0);
}

inline CriterionResult criterion_weak_ergodicity(const AcceptanceOptions&) {
  const auto t0 = Clock::now();
  const auto g = two_state();
  Eigen::VectorXd pi(2), mu(2);
  pi << 0.0, 1.0;
  mu << 2.0 / 3, 1.0 / 3;
  const InhomSpec spec(g, 2, pi, 10);

  auto l1_distance = [&](std::int64_t n) {
    const auto it = weak_ergodic_iterate(spec, n);
    return (it.mu_n - mu).cwiseAbs().sum();
  };
  const double at_end = l1_distance(10'000);

  bool monotone = true;
  double prev = l1_distance(100);
  Eigen::RowVectorXd iter = pi.transpose();
  for (std::int64_t t = 3; t <= 10'000; ++t) {
    iter = iter + (iter * g.matrix()) / static_cast<double>(t);
    if (t >= 100) {
      const double dist = std::abs(iter(0) - mu(0)) + std::abs(iter(1) - mu(1));
      if (dist > prev + 1e-15) monotone = false;
      prev = dist;
    }
  }
  return finish(12, "weak ergodicity of the one-step laws", at_end < 1e-2 && monotone,
                "l1 at n=1e4: " + fmt(at_end) + std::string(monotone ? " (monotone)" : " (not monotone)"),
                t0);
}

inline CriterionResult criterion_reversal_algebra(const AcceptanceOptions& opt) {
  const auto t0 = Clock::now();
  Rng rng(mix_seed(opt.seed, 13));
  double worst_double_reversal = 0.0, worst_stationary = 0.0;

  auto check = [&](const GeneratorMatrix& g, const Eigen::VectorXd& mu) {
    const auto gp = reverse_generator(g, mu);
    worst_stationary =
        std::max(worst_stationary, (mu.transpose() * gp.matrix()).cwiseAbs().maxCoeff());
    const auto gpp = reverse_generator(gp, mu);
    for (int i = 0; i < g.dim(); ++i) {
      for (int j = 0; j < g.dim(); ++j) {
        if (mu(i) > 0.0 && mu(j) > 0.0)
          worst_double_reversal = std::max(worst_double_reversal, std::abs(gpp(i, j) - g(i, j)));
      }
    }
  };

  for (int trial = 0; trial < 18; ++trial) {
    const int k = 2 + static_cast<int>(rng.uniform() * 5);
    const auto g = random_positive_generator(k, rng);
    check(g, stationary_distribution(g));
  }
  {
    Eigen::MatrixXd absorbing(2, 2);
    absorbing << 0, 0, 1, -1;
    Eigen::VectorXd mu(2);
    mu << 1.0, 0.0;
    check(GeneratorMatrix(absorbing), mu);
  }
  {
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(4, 4);
    block(0, 1) = 1.0;
    block(0, 0) = -1.0;
    block(1, 0) = 2.0;
    block(1, 1) = -2.0;
    block(2, 3) = 0.5;
    block(2, 2) = -0.5;
    block(3, 2) = 1.5;
    block(3, 3) = -1.5;
    const GeneratorMatrix g(block);
    const auto all = stationary_distributions(g);
    for (const auto& mu : all) check(g, mu);
  }
  return finish(13, "reversal algebra", worst_double_reversal < 1e-12 && worst_stationary < 1e-10,
                "max|(G')'-G|=" + fmt(worst_double_reversal) +
                    " max|mu G'|=" + fmt(worst_stationary),
                t0);
}

}  // namespace acceptance_detail

/// Run the acceptance suite (all criteria, or the selected subset), invoking
/// `on_done` as each criterion finishes.
inline std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& options,
    const std::function<void(const CriterionResult&)>& on_done = {}) {
  using namespace acceptance_detail;
  using Body = CriterionResult (*)(const AcceptanceOptions&);
  const std::vector<Body> bodies{
      criterion_covariance,        criterion_dirichlet_collapse, criterion_resolvent,
      criterion_duality,           criterion_marginals,          criterion_normalization,
      criterion_exact_decomposition, criterion_occupation_convergence,
      criterion_reverse_direction, criterion_conditional_beta,   criterion_self_similarity,
      criterion_weak_ergodicity,   criterion_reversal_algebra};

  std::vector<CriterionResult> results;
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!options.criteria.empty() &&
        std::find(options.criteria.begin(), options.criteria.end(), id) == options.criteria.end())
      continue;
    results.push_back(bodies[i](options));
    if (on_done) on_done(results.back());
  }
  return results;
}

inline void print_result_line(const CriterionResult& r, std::ostream& out) {
  out << (r.pass ? "PASS" : "FAIL") << " criterion " << r.id << ": " << r.name << " [" << r.detail
      << "] (" << static_cast<int>(r.seconds * 1000) << " ms)\n";
}

}  // namespace stickflow

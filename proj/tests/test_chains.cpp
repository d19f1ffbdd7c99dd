// Apache License, Version 2.0, refer to LICENSE.txt
#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <vector>

#include "stickflow/chains.hpp"
#include "stickflow/stats.hpp"

using namespace stickflow;

namespace {

Eigen::MatrixXd mat2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

GeneratorMatrix two_state() { return GeneratorMatrix(mat2(-1, 1, 2, -2)); }

GeneratorMatrix three_cycle() {
  Eigen::MatrixXd m(3, 3);
  m << -1, 1, 0, 0, -1, 1, 1, 0, -1;
  return GeneratorMatrix(m);
}

GeneratorMatrix random_positive_generator(int k, Rng& rng) {
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

}  // namespace

TEST_CASE("generator validation") {
  const auto g = two_state();
  CHECK(g.theta_norm() == Catch::Approx(2.0));
  CHECK(g.zero_rows().empty());

  const GeneratorMatrix absorbing(mat2(0, 0, 1, -1));
  CHECK(absorbing.zero_rows() == std::vector<int>{0});

  CHECK_THROWS_AS(GeneratorMatrix(mat2(-1, 2, -1, 1)), std::invalid_argument);
  CHECK_THROWS_AS(GeneratorMatrix(mat2(-1, 1.5, 2, -2)), std::invalid_argument);
}

TEST_CASE("stationary distribution of constant-row kernel is the row") {
  Eigen::MatrixXd q(2, 2);
  q << 0.7, 0.3, 0.7, 0.3;
  const auto mu = stationary_distribution(StochasticKernel(q));
  CHECK(mu(0) == Catch::Approx(0.7).epsilon(1e-12));
  CHECK(mu(1) == Catch::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("stationary distribution of the two-state generator") {
  const auto mu = stationary_distribution(two_state());
  CHECK(mu(0) == Catch::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(mu(1) == Catch::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("stationary distribution of the cycle is uniform") {
  const auto mu = stationary_distribution(three_cycle());
  for (int i = 0; i < 3; ++i) CHECK(mu(i) == Catch::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("reducible kernels expose one stationary law per recurrent class") {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(5, 5);
  // a transient state feeding two closed classes
  q(0, 1) = 0.5;
  q(0, 3) = 0.5;
  q(1, 2) = 1.0;
  q(2, 1) = 1.0;
  q(3, 3) = 0.25;
  q(3, 4) = 0.75;
  q(4, 3) = 0.5;
  q(4, 4) = 0.5;
  const auto all = stationary_distributions(StochasticKernel(q));
  REQUIRE(all.size() == 2);
  CHECK(all[0](1) == Catch::Approx(0.5).epsilon(1e-12));
  CHECK(all[0](2) == Catch::Approx(0.5).epsilon(1e-12));
  CHECK(all[1](3) == Catch::Approx(0.4).epsilon(1e-12));
  CHECK(all[1](4) == Catch::Approx(0.6).epsilon(1e-12));
  CHECK_THROWS_AS(stationary_distribution(StochasticKernel(q)), std::invalid_argument);
}

TEST_CASE("sample_homogeneous deterministic kernels") {
  Eigen::VectorXd d1(2);
  d1 << 1.0, 0.0;
  const auto constant =
      sample_homogeneous(StochasticKernel(Eigen::MatrixXd::Identity(2, 2)), d1, 5, 1);
  for (std::int64_t t = 1; t <= 5; ++t) CHECK(constant.at_time(t) == 0);

  const auto alternating = sample_homogeneous(StochasticKernel(mat2(0, 1, 1, 0)), d1, 6, 1);
  for (std::int64_t t = 1; t <= 6; ++t) CHECK(alternating.at_time(t) == (t + 1) % 2);
}

TEST_CASE("empirical occupation matches the stationary law") {
  const StochasticKernel q(mat2(0.5, 0.5, 0.25, 0.75));
  const auto mu = stationary_distribution(q);
  CHECK(mu(0) == Catch::Approx(1.0 / 3).epsilon(1e-12));

  Eigen::VectorXd init(2);
  init << 0.5, 0.5;
  const auto est = mc_estimate(
      [&](std::uint64_t s) {
        const auto path = sample_homogeneous(q, init, 10'000, s);
        std::int64_t hits = 0;
        for (std::int64_t t = 1; t <= path.length(); ++t) hits += path.at_time(t) == 0;
        return static_cast<double>(hits) / static_cast<double>(path.length());
      },
      64, 2024);
  CHECK(std::abs(est.value - 1.0 / 3) <= 4.0 * est.std_error);
}

TEST_CASE("switch and return times of the worked trajectory") {
  // states relabelled onto {0..6}; labels carry over verbatim
  const ChainPath path({1, 1, 2, 2, 2, 2, 4, 1, 1, 5}, 7);
  const auto sr = switch_and_return_times(path);
  CHECK(sr.switch_times == std::vector<std::int64_t>{1, 3, 7, 8, 10});
  CHECK(sr.return_times == std::vector<std::int64_t>{1, 2, 8, 9});
  CHECK(sr.switch_states == std::vector<int>{1, 2, 4, 1, 5});
}

TEST_CASE("switch and return times of constant and alternating paths") {
  const auto constant = switch_and_return_times(ChainPath({3, 3, 3, 3}, 4));
  CHECK(constant.switch_times == std::vector<std::int64_t>{1});
  CHECK(constant.return_times == std::vector<std::int64_t>{1, 2, 3, 4});

  const auto alternating = switch_and_return_times(ChainPath({0, 1, 0, 1}, 2));
  CHECK(alternating.switch_times == std::vector<std::int64_t>{1, 2, 3, 4});
  CHECK(alternating.return_times == std::vector<std::int64_t>{1, 3});
}

TEST_CASE("jump kernel from a stochastic kernel") {
  const auto k = jump_kernel(StochasticKernel(mat2(0.5, 0.5, 0.25, 0.75)));
  CHECK(k(0, 0) == 0.0);
  CHECK(k(0, 1) == Catch::Approx(1.0));
  CHECK(k(1, 0) == Catch::Approx(1.0));
  CHECK(k(1, 1) == 0.0);

  const auto absorbing = jump_kernel(StochasticKernel(mat2(1.0, 0.0, 0.5, 0.5)));
  CHECK(absorbing(0, 0) == 1.0);
  CHECK(absorbing(0, 1) == 0.0);
  CHECK(absorbing(1, 0) == Catch::Approx(1.0));
  CHECK(absorbing(1, 1) == 0.0);
}

TEST_CASE("jump kernel from a generator and theta invariance") {
  const auto kg = jump_kernel(two_state());
  CHECK(kg(0, 1) == Catch::Approx(1.0));
  CHECK(kg(1, 0) == Catch::Approx(1.0));

  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = random_positive_generator(4, rng);
    const double theta = g.theta_norm() * (1.0 + rng.uniform());
    Eigen::MatrixXd q =
        Eigen::MatrixXd::Identity(4, 4) + g.matrix() / theta;
    const auto from_q = jump_kernel(StochasticKernel(q));
    const auto from_g = jump_kernel(g);
    CHECK((from_q.matrix() - from_g.matrix()).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("two-state reversal is the identity map") {
  const auto g = two_state();
  const auto mu = stationary_distribution(g);
  const auto gp = reverse_generator(g, mu);
  CHECK((gp.matrix() - g.matrix()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("cycle reversal transposes the cycle") {
  const auto g = three_cycle();
  const auto mu = stationary_distribution(g);
  const auto gp = reverse_generator(g, mu);
  CHECK((gp.matrix() - g.matrix().transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("reversal zeroes rows off the support") {
  const GeneratorMatrix g(mat2(0, 0, 1, -1));
  Eigen::VectorXd mu(2);
  mu << 1.0, 0.0;
  const auto gp = reverse_generator(g, mu);
  CHECK(gp.matrix().cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(reverse_generator(two_state(), mu), std::invalid_argument);
}

TEST_CASE("double reversal restores the generator on the support") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 2 + static_cast<int>(rng.uniform() * 4);
    const auto g = random_positive_generator(k, rng);
    const auto mu = stationary_distribution(g);
    const auto gp = reverse_generator(g, mu);
    CHECK((mu.transpose() * gp.matrix()).cwiseAbs().maxCoeff() < 1e-10);
    const auto gpp = reverse_generator(gp, mu);
    CHECK((gpp.matrix() - g.matrix()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("switch states follow the induced jump chain") {
  const StochasticKernel q(mat2(0.5, 0.5, 0.25, 0.75));
  const auto k = jump_kernel(q);
  Eigen::VectorXd init(2);
  init << 0.5, 0.5;

  // 2-step pattern counts from extracted Y versus a chain run with K directly
  std::vector<std::int64_t> from_y(4, 0), from_k(4, 0);
  Rng rng(808);
  const auto path = sample_homogeneous_with(q, init, 60'000, rng);
  const auto sr = switch_and_return_times(path);
  for (std::size_t j = 0; j + 1 < sr.switch_states.size(); ++j)
    from_y[static_cast<std::size_t>(2 * sr.switch_states[j] + sr.switch_states[j + 1])]++;
  const auto direct = sample_homogeneous_with(k, init, 30'000, rng);
  for (std::int64_t t = 1; t < direct.length(); ++t)
    from_k[static_cast<std::size_t>(2 * direct.at_time(t) + direct.at_time(t + 1))]++;

  const auto chi = chi_square_homogeneity(from_y, from_k);
  CHECK(chi.p_value > 1e-3);
}

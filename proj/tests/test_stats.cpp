// Apache License, Version 2.0, refer to LICENSE.txt
#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "stickflow/stats.hpp"

using namespace stickflow;

namespace {

Eigen::MatrixXd mat2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

// Closed forms for the three covariance series at stay probability 1/2,
// resummed through logarithms rather than term by term.
struct CovarianceOracle {
  double e1, e2, e12, cov;
};

CovarianceOracle covariance_closed_form_half() {
  const double x = 0.5;
  auto tail = [&](int kmax) {
    double s = -std::log1p(-x);
    double xr = 1.0;
    for (int r = 1; r < kmax; ++r) {
      xr *= x;
      s -= xr / r;
    }
    return s;
  };
  const double x3 = x * x * x;
  CovarianceOracle o{};
  o.e1 = 3.0 / x3 * tail(4);
  o.e12 = 3.0 * (x * x / (1.0 - x) - 4.0 / x3 * tail(5));
  o.e2 = 0.5 * ((x / ((1.0 - x) * (1.0 - x)) - x) + 2.0 * x * x / (1.0 - x)) - 6.0 / x3 * tail(5);
  o.cov = o.e12 - o.e1 * o.e2;
  return o;
}

}  // namespace

TEST_CASE("mc_estimate on a degenerate sampler") {
  const auto est = mc_estimate([](std::uint64_t) { return 1.0; }, 100, 5);
  CHECK(est.value == 1.0);
  CHECK(est.std_error == 0.0);
  CHECK(est.replicates == 100);
}

TEST_CASE("mc_estimate is deterministic in the seed base") {
  auto draw = [](std::uint64_t s) {
    Rng rng(s);
    return rng.uniform();
  };
  const auto a = mc_estimate(draw, 500, 42);
  const auto b = mc_estimate(draw, 500, 42);
  CHECK(a.value == b.value);
  CHECK(a.std_error == b.std_error);
  const auto c = mc_estimate(draw, 500, 43);
  CHECK(a.value != c.value);
}

TEST_CASE("replicate_map is identical under any job count") {
  auto draw = [](std::uint64_t s) {
    Rng rng(s);
    return rng.uniform();
  };
  const auto serial = replicate_map(draw, 1000, 9, 1);
  const auto threaded = replicate_map(draw, 1000, 9, 4);
  CHECK(serial == threaded);
}

TEST_CASE("stderr scales like one over root replicates") {
  auto draw = [](std::uint64_t s) {
    Rng rng(s);
    return rng.uniform();
  };
  const auto small = mc_estimate(draw, 2000, 11);
  const auto large = mc_estimate(draw, 8000, 12);
  const double ratio = small.std_error / large.std_error;
  CHECK(ratio > 2.0 * 0.8);
  CHECK(ratio < 2.0 * 1.2);
}

TEST_CASE("mc_estimate of the dirichlet-case first mass") {
  Eigen::MatrixXd q(2, 2);
  q << 2.0 / 3, 1.0 / 3, 2.0 / 3, 1.0 / 3;
  const auto g = GeneratorMatrix::from_kernel(q, 3.0);
  Eigen::VectorXd mu(2);
  mu << 2.0 / 3, 1.0 / 3;
  const auto est = mc_estimate(
      [&](std::uint64_t s) {
        const auto sample = sample_mccgem(g, mu, 1e-10, s);
        return assemble_measure(sample.weights, sample.labels, 2).masses(0);
      },
      10'000, 777);
  CHECK(std::abs(est.value - 2.0 / 3) <= 4.0 * est.std_error);
}

TEST_CASE("ks statistic extremes") {
  const std::vector<double> a{0.1, 0.2, 0.3};
  CHECK(ks_two_sample(a, a).statistic == 0.0);

  const std::vector<double> b{2.1, 2.5, 2.9};
  CHECK(ks_two_sample(a, b).statistic == 1.0);
  CHECK(ks_two_sample(a, b).p_value < 0.1);
  CHECK_THROWS_AS(ks_two_sample(a, {}), std::invalid_argument);
}

TEST_CASE("ks two-sample rejection rate is calibrated") {
  int rejections = 0;
  const int reps = 1000;
  for (int r = 0; r < reps; ++r) {
    Rng rng(mix_seed(1001, static_cast<std::uint64_t>(r)));
    std::vector<double> a(400), b(400);
    for (auto& v : a) v = rng.uniform();
    for (auto& v : b) v = rng.uniform();
    if (ks_two_sample(a, b).p_value < 0.05) ++rejections;
  }
  const double rate = static_cast<double>(rejections) / reps;
  CHECK(rate > 0.02);
  CHECK(rate < 0.08);
}

TEST_CASE("one-sample ks against the exact cdf") {
  Rng rng(606);
  std::vector<double> u(20'000);
  for (auto& v : u) v = rng.uniform();
  const auto ks = ks_one_sample(u, [](double x) { return x; });
  CHECK(ks.p_value > 1e-3);

  const auto shifted = ks_one_sample(u, [](double x) { return x * x; });
  CHECK(shifted.p_value < 1e-6);
}

TEST_CASE("chi-square tail matches erfc at half dof") {
  // Q(1/2, x/2) for one degree of freedom equals erfc(sqrt(x/2))
  for (double x : {0.5, 1.0, 2.5, 6.0}) {
    CHECK(stickflow::detail::gamma_q(0.5, x / 2) ==
          Catch::Approx(std::erfc(std::sqrt(x / 2))).epsilon(1e-12));
  }
  const std::vector<std::int64_t> a{50, 60, 40}, b{55, 52, 43};
  const auto res = chi_square_homogeneity(a, b);
  CHECK(res.dof == 2);
  CHECK(res.p_value > 0.05);
}

TEST_CASE("clumped fraction check passes on a fair coin kernel") {
  const auto report = clumped_fraction_beta_check(
      2.0, StochasticKernel(mat2(0.5, 0.5, 0.5, 0.5)), 0, 10'000, 271828);
  CHECK(report.pass);
  CHECK(report.params.at("beta_parameter") == Catch::Approx(1.0));
}

TEST_CASE("clumped fraction check passes on a sticky kernel") {
  const auto report = clumped_fraction_beta_check(
      1.0, StochasticKernel(mat2(0.9, 0.1, 0.1, 0.9)), 0, 10'000, 314159);
  CHECK(report.pass);
  CHECK(report.params.at("beta_parameter") == Catch::Approx(0.1));
}

TEST_CASE("clumped fraction check rejects bad setups") {
  const StochasticKernel absorbing(mat2(1.0, 0.0, 0.5, 0.5));
  CHECK_THROWS_AS(clumped_fraction_beta_check(1.0, absorbing, 0, 10'000, 1),
                  std::invalid_argument);
  const StochasticKernel coin(mat2(0.5, 0.5, 0.5, 0.5));
  CHECK_THROWS_AS(clumped_fraction_beta_check(1.0, coin, 0, 50, 1), std::invalid_argument);
}

TEST_CASE("self-similarity holds in the dirichlet case") {
  const SelfSimSpec spec{GemLaw{1.0}, StochasticKernel(mat2(0.5, 0.5, 0.5, 0.5)), 0, 1e-12, 4000};
  const auto report = self_similarity_check(spec, 1234);
  CHECK(report.moments_pass);
  CHECK(report.ks_pass);
  CHECK(report.pass);
}

TEST_CASE("self-similarity holds for a non-iid kernel") {
  const SelfSimSpec spec{GemLaw{2.0}, StochasticKernel(mat2(0.5, 0.5, 0.25, 0.75)), 0, 1e-12,
                         4000};
  const auto report = self_similarity_check(spec, 56789);
  CHECK(report.pass);
}

TEST_CASE("self-similarity is exact for unit fractions") {
  const SelfSimSpec spec{DisorderedLaw{{0.0}, true}, StochasticKernel(mat2(0.5, 0.5, 0.25, 0.75)),
                         0, 1e-12, 500};
  const auto report = self_similarity_check(spec, 5);
  CHECK(report.pass);
  for (const auto& coord : report.coordinates) {
    CHECK(coord.ks_statistic == 0.0);
    CHECK(coord.mean_direct == coord.mean_composite);
  }
}

TEST_CASE("self-similarity rejects invalid specs") {
  const StochasticKernel coin(mat2(0.5, 0.5, 0.5, 0.5));
  CHECK_THROWS_AS(
      self_similarity_check(SelfSimSpec{TwoParamLaw{0.5, 1.0}, coin, 0, 1e-9, 100}, 1),
      std::invalid_argument);
  const StochasticKernel absorbing(mat2(1.0, 0.0, 0.5, 0.5));
  CHECK_THROWS_AS(
      self_similarity_check(SelfSimSpec{GemLaw{1.0}, absorbing, 1, 1e-9, 100}, 1),
      std::invalid_argument);
}

TEST_CASE("return-time fractions are exchangeable") {
  const StochasticKernel q(mat2(0.5, 0.5, 0.25, 0.75));
  Eigen::VectorXd start = Eigen::VectorXd::Zero(2);
  start(0) = 1.0;

  std::vector<double> first, second;
  for (std::uint64_t s = 0; s < 10'000; ++s) {
    Rng rng(mix_seed(2025, s));
    std::vector<double> xs(256);
    for (auto& x : xs) x = rng.beta_one(2.0);
    const auto path = sample_homogeneous_with(q, start, 256, rng);
    const auto sr = switch_and_return_times(path);
    if (sr.return_times.size() < 3) continue;
    const ClumpIndex w({static_cast<std::uint64_t>(sr.return_times[0]),
                        static_cast<std::uint64_t>(sr.return_times[1]),
                        static_cast<std::uint64_t>(sr.return_times[2])});
    const auto res = clump(FractionSequence(xs), w);
    first.push_back(res.fractions[0]);
    second.push_back(res.fractions[1]);
  }
  REQUIRE(first.size() > 9000);
  CHECK(ks_two_sample(first, second).p_value > 1e-3);
}

TEST_CASE("covariance series against the closed-form oracle") {
  const auto oracle = covariance_closed_form_half();
  const auto series = gem2_clump_covariance(0.5, 200);

  CHECK(series.e1 == Catch::Approx(oracle.e1).epsilon(1e-12));
  CHECK(series.e2 == Catch::Approx(oracle.e2).epsilon(1e-12));
  CHECK(series.e12 == Catch::Approx(oracle.e12).epsilon(1e-12));
  CHECK(series.cov == Catch::Approx(oracle.cov).epsilon(1e-12));

  // frozen high-precision values
  CHECK(series.e1 == Catch::Approx(0.63553233343868742601).epsilon(1e-13));
  CHECK(series.e2 == Catch::Approx(0.72893533312262514797).epsilon(1e-13));
  CHECK(series.e12 == Catch::Approx(0.45787066624525029595).epsilon(1e-13));
  CHECK(std::abs(series.cov - (-0.0053913069400786044)) < 1e-12);
}

TEST_CASE("covariance matches the reported value and sign") {
  const auto series = gem2_clump_covariance(0.5, 200);
  CHECK(std::abs(series.cov - (-0.005391)) < 1e-4);
  CHECK(series.cov < 0.0);
}

TEST_CASE("truncation bound shrinks monotonically") {
  double prev = gem2_clump_covariance(0.5, 1).truncation_bound;
  for (int terms : {2, 5, 10, 50, 200}) {
    const double bound = gem2_clump_covariance(0.5, terms).truncation_bound;
    CHECK(bound < prev);
    prev = bound;
  }
  CHECK(std::abs(gem2_clump_covariance(0.5, 200).cov - gem2_clump_covariance(0.5, 400).cov) <
        1e-15);
}

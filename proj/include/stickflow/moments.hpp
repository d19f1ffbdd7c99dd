// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stickflow/chains.hpp"

namespace stickflow {

/// Rising factorial a (a+1) ... (a+n-1), evaluated as the plain product.
inline std::complex<double> pochhammer(std::complex<double> a, int n) {
  if (n < 0) throw std::invalid_argument("pochhammer order must be >= 0");
  std::complex<double> r(1.0, 0.0);
  for (int j = 0; j < n; ++j) r *= a + static_cast<double>(j);
  return r;
}

inline double pochhammer(double a, int n) {
  return pochhammer(std::complex<double>(a, 0.0), n).real();
}

/// Roots of a polynomial with ascending real coefficients, via the companion
/// matrix eigensolve.  Leading zero coefficients are trimmed first.
inline std::vector<std::complex<double>> polynomial_roots(std::span<const double> coeffs) {
  std::size_t deg = coeffs.size();
  while (deg > 0 && coeffs[deg - 1] == 0.0) --deg;
  if (deg <= 1) return {};
  const std::size_t n = deg - 1;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(n));
  for (std::size_t i = 1; i < n; ++i) c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
  for (std::size_t i = 0; i < n; ++i)
    c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n - 1)) = -coeffs[i] / coeffs[n];
  Eigen::EigenSolver<Eigen::MatrixXd> es(c, /*computeEigenvectors=*/false);
  std::vector<std::complex<double>> roots(n);
  for (std::size_t i = 0; i < n; ++i) roots[i] = es.eigenvalues()(static_cast<Eigen::Index>(i));
  std::sort(roots.begin(), roots.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return roots;
}

/// Minimal polynomial of the generator factored through the simple zero
/// eigenvalue: pmin(x) = x q(x).  Coefficients ascend and pmin is monic.
struct PolySpec {
  std::vector<double> pmin_coeffs;
  std::vector<double> q_coeffs;
  std::vector<std::complex<double>> nonzero_roots;  // roots of q
  bool char_fallback = false;                       // characteristic polynomial used instead
};

namespace detail {

inline std::vector<Eigen::MatrixXd> matrix_powers(const Eigen::MatrixXd& g, int up_to) {
  std::vector<Eigen::MatrixXd> p;
  p.reserve(static_cast<std::size_t>(up_to) + 1);
  p.push_back(Eigen::MatrixXd::Identity(g.rows(), g.cols()));
  for (int i = 1; i <= up_to; ++i) p.push_back(p.back() * g);
  return p;
}

}  // namespace detail

/// Compute pmin and q for an irreducible generator.  Krylov least squares on
/// vectorized powers finds the smallest annihilating degree; a characteristic
/// polynomial fallback covers numerically degenerate inputs.
inline PolySpec minimal_and_q(const GeneratorMatrix& g) {
  const auto comps = detail::strongly_connected_components(detail::positive_adjacency(g.matrix()));
  if (comps.size() != 1)
    throw std::invalid_argument(
        "moment engine requires an irreducible generator (single communicating class)");

  const int k = g.dim();
  const auto powers = detail::matrix_powers(g.matrix(), k);

  PolySpec spec;
  for (int d = 1; d <= k && spec.pmin_coeffs.empty(); ++d) {
    Eigen::MatrixXd a(static_cast<Eigen::Index>(k) * k, d);
    for (int c = 0; c < d; ++c) {
      a.col(c) = Eigen::Map<const Eigen::VectorXd>(powers[static_cast<std::size_t>(c)].data(),
                                                   static_cast<Eigen::Index>(k) * k);
    }
    Eigen::VectorXd b = -Eigen::Map<const Eigen::VectorXd>(powers[static_cast<std::size_t>(d)].data(),
                                                           static_cast<Eigen::Index>(k) * k);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-9);
    const Eigen::VectorXd c = svd.solve(b);
    if ((a * c - b).norm() <= 1e-9 * std::max(1.0, b.norm())) {
      spec.pmin_coeffs.assign(c.data(), c.data() + d);
      spec.pmin_coeffs.push_back(1.0);
    }
  }

  if (spec.pmin_coeffs.empty()) {
    // fall back to the characteristic polynomial, which also annihilates G
    Eigen::EigenSolver<Eigen::MatrixXd> es(g.matrix(), false);
    std::vector<std::complex<double>> cf = {1.0};
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      const std::complex<double> lambda = es.eigenvalues()(i);
      cf.push_back(0.0);
      for (std::size_t j = cf.size() - 1; j > 0; --j) cf[j] = cf[j - 1] - lambda * cf[j];
      cf[0] *= -lambda;
    }
    spec.pmin_coeffs.resize(cf.size());
    for (std::size_t i = 0; i < cf.size(); ++i) spec.pmin_coeffs[i] = cf[i].real();
    spec.char_fallback = true;
  }

  const double scale = std::max(1.0, g.theta_norm());
  if (std::abs(spec.pmin_coeffs.front()) > 1e-7 * std::pow(scale, static_cast<int>(spec.pmin_coeffs.size()) - 1))
    throw std::runtime_error("annihilating polynomial has no zero root; generator is corrupt");
  spec.q_coeffs.assign(spec.pmin_coeffs.begin() + 1, spec.pmin_coeffs.end());
  spec.pmin_coeffs.front() = 0.0;
  if (std::abs(spec.q_coeffs.front()) <= 1e-9 * scale)
    throw std::runtime_error("eigenvalue 0 has multiplicity > 1 in the minimal polynomial");

  spec.nonzero_roots = polynomial_roots(spec.q_coeffs);
  for (const auto& r : spec.nonzero_roots) {
    if (r.real() >= 1e-9)
      throw std::runtime_error("nonzero root with nonnegative real part; generator is corrupt");
  }
  return spec;
}

inline double evaluate_poly(std::span<const double> coeffs, double x) {
  double v = 0.0;
  for (std::size_t i = coeffs.size(); i-- > 0;) v = v * x + coeffs[i];
  return v;
}

/// Moment kernel p_j(G)/q(j).  For j >= 1 this equals the resolvent
/// (I - G/j)^{-1} and the two routes are cross-checked; j = 0 yields the
/// constant-row matrix of the stationary law.
inline Eigen::MatrixXd moment_kernel(const GeneratorMatrix& g, const PolySpec& poly,
                                     std::int64_t j) {
  if (j < 0) throw std::invalid_argument("moment kernel order must be >= 0");
  const auto& a = poly.q_coeffs;
  const int n = static_cast<int>(a.size()) - 1;
  const double qj = evaluate_poly(a, static_cast<double>(j));
  if (std::abs(qj) < 1e-12)
    throw std::runtime_error("q(j) vanished; generator spectrum is corrupt");

  const auto powers = detail::matrix_powers(g.matrix(), n);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(g.dim(), g.dim());
  for (int kk = 0; kk <= n; ++kk) {
    double c = 0.0;
    for (int l = n; l >= kk; --l) c = c * static_cast<double>(j) + a[static_cast<std::size_t>(l)];
    p += c * powers[static_cast<std::size_t>(kk)];
  }
  p /= qj;

  if (j >= 1) {
    const Eigen::MatrixXd direct =
        (Eigen::MatrixXd::Identity(g.dim(), g.dim()) - g.matrix() / static_cast<double>(j))
            .partialPivLu()
            .solve(Eigen::MatrixXd::Identity(g.dim(), g.dim()));
    if ((p - direct).cwiseAbs().maxCoeff() > 1e-9)
      throw std::runtime_error("moment kernel disagrees with the direct resolvent");
  }
  return p;
}

inline double multinomial_coefficient(std::span<const int> m) {
  double total = 1.0;
  int seen = 0;
  for (int mi : m) {
    for (int r = 1; r <= mi; ++r) {
      ++seen;
      total = total * static_cast<double>(seen) / static_cast<double>(r);
    }
  }
  return total;
}

/// Joint moment of the limiting occupation law for multi-index m, evaluated
/// by dynamic programming over (remaining counts, current state).
inline double joint_moment(const GeneratorMatrix& g, const PolySpec& poly, std::span<const int> m,
                           int sigma0 = 0) {
  if (static_cast<int>(m.size()) != g.dim())
    throw std::invalid_argument("multi-index dimension mismatch");
  if (sigma0 < 0 || sigma0 >= g.dim()) throw std::invalid_argument("sigma0 out of range");
  std::int64_t total = 0;
  for (int mi : m) {
    if (mi < 0) throw std::invalid_argument("multi-index entries must be >= 0");
    total += mi;
  }
  if (total == 0) throw std::invalid_argument("multi-index must have positive total order");
  const int n_steps = static_cast<int>(total);
  const int k = g.dim();

  std::vector<Eigen::MatrixXd> kernels;
  kernels.reserve(static_cast<std::size_t>(n_steps));
  for (int j = 0; j < n_steps; ++j) kernels.push_back(moment_kernel(g, poly, j));

  // mixed-radix encoding of the remaining-count vector
  std::vector<std::int64_t> radix(m.size());
  std::int64_t span_sz = 1;
  for (std::size_t i = 0; i < m.size(); ++i) {
    radix[i] = span_sz;
    span_sz *= m[i] + 1;
  }
  auto encode = [&](std::span<const int> counts) {
    std::int64_t code = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) code += radix[i] * counts[i];
    return code;
  };

  std::unordered_map<std::int64_t, double> cur;
  std::vector<int> full(m.begin(), m.end());
  cur[encode(full) * k + sigma0] = 1.0;

  std::vector<int> counts(m.size());
  for (int j = 0; j < n_steps; ++j) {
    std::unordered_map<std::int64_t, double> next;
    next.reserve(cur.size() * static_cast<std::size_t>(k));
    for (const auto& [key, value] : cur) {
      const int state = static_cast<int>(key % k);
      std::int64_t code = key / k;
      std::int64_t rest = code;
      for (std::size_t i = m.size(); i-- > 0;) {
        counts[i] = static_cast<int>(rest / radix[i]);
        rest %= radix[i];
      }
      for (int s = 0; s < k; ++s) {
        if (counts[static_cast<std::size_t>(s)] == 0) continue;
        const double w = value * kernels[static_cast<std::size_t>(j)](state, s);
        if (w == 0.0) continue;
        next[(code - radix[static_cast<std::size_t>(s)]) * k + s] += w;
      }
    }
    cur = std::move(next);
  }

  double sum = 0.0;
  for (const auto& [key, value] : cur) sum += value;
  return sum / multinomial_coefficient(m);
}

inline double joint_moment(const GeneratorMatrix& g, std::span<const int> m, int sigma0 = 0) {
  return joint_moment(g, minimal_and_q(g), m, sigma0);
}

/// Order-N moment of coordinate i as a product of complex Pochhammer ratios
/// over the roots of [p_j(G)]_{ii} and q.
inline double marginal_moment(const GeneratorMatrix& g, const PolySpec& poly, int state,
                              int order) {
  if (order < 1) throw std::invalid_argument("moment order must be >= 1");
  if (state < 0 || state >= g.dim()) throw std::invalid_argument("state out of range");
  const auto& a = poly.q_coeffs;
  const int n = static_cast<int>(a.size()) - 1;
  const auto powers = detail::matrix_powers(g.matrix(), n);

  std::vector<double> diag_poly(static_cast<std::size_t>(n) + 1, 0.0);
  for (int t = 0; t <= n; ++t) {
    double c = 0.0;
    for (int kk = 0; kk <= n - t; ++kk)
      c += a[static_cast<std::size_t>(t + kk)] * powers[static_cast<std::size_t>(kk)](state, state);
    diag_poly[static_cast<std::size_t>(t)] = c;
  }
  const auto gammas = polynomial_roots(diag_poly);
  if (gammas.size() != poly.nonzero_roots.size())
    throw std::runtime_error("marginal polynomial degree mismatch");

  std::complex<double> value(1.0, 0.0);
  for (const auto& gamma : gammas) value *= pochhammer(-gamma, order);
  for (const auto& lambda : poly.nonzero_roots) value /= pochhammer(-lambda, order);
  if (std::abs(value.imag()) >= 1e-9)
    throw std::runtime_error("marginal moment has non-negligible imaginary part");
  return value.real();
}

inline double marginal_moment(const GeneratorMatrix& g, int state, int order) {
  return marginal_moment(g, minimal_and_q(g), state, order);
}

}  // namespace stickflow

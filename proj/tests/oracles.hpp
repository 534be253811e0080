#pragma once

// Independent reference implementations used to check the library. These stay
// deliberately naive and share no code with the implementation paths they
// verify.

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracles {

// Direct double-loop evaluation of the multi-view contrastive objective:
// -sum_i 1/|P(i)| sum_{p in P(i)} log( exp(z_i.z_p/tau) / sum_{a!=i} exp(z_i.z_a/tau) )
inline double mvcont_double_loop(const Eigen::MatrixXd& z,
                                 const std::vector<std::int64_t>& ids, double tau) {
  const auto n = z.rows();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double denom = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
      if (a == i) continue;
      denom += std::exp(z.row(i).dot(z.row(a)) / tau);
    }
    std::size_t p_count = 0;
    double inner = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      if (p == i || ids[static_cast<std::size_t>(p)] != ids[static_cast<std::size_t>(i)]) continue;
      ++p_count;
      inner += std::log(std::exp(z.row(i).dot(z.row(p)) / tau) / denom);
    }
    loss -= inner / static_cast<double>(p_count);
  }
  return loss;
}

// Pairwise contrastive objective (one positive per anchor), summed over all
// anchors. With exactly two views per source this is the specialization of
// the multi-view objective.
inline double nt_xent_pairs(const Eigen::MatrixXd& z, const std::vector<std::int64_t>& ids,
                            double tau) {
  const auto n = z.rows();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index partner = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i && ids[static_cast<std::size_t>(j)] == ids[static_cast<std::size_t>(i)]) {
        partner = j;
        break;
      }
    }
    double denom = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
      if (a == i) continue;
      denom += std::exp(z.row(i).dot(z.row(a)) / tau);
    }
    loss -= std::log(std::exp(z.row(i).dot(z.row(partner)) / tau) / denom);
  }
  return loss;
}

// Central finite differences of a scalar function of a matrix.
template <typename F>
Eigen::MatrixXd finite_difference(const Eigen::MatrixXd& x, F f, double step) {
  Eigen::MatrixXd grad(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      Eigen::MatrixXd hi = x;
      Eigen::MatrixXd lo = x;
      hi(r, c) += step;
      lo(r, c) -= step;
      grad(r, c) = (f(hi) - f(lo)) / (2.0 * step);
    }
  }
  return grad;
}

// Upper-tail probability of the chi-square distribution (regularized
// incomplete gamma Q(k/2, x/2)), via series / continued-fraction evaluation.
inline double chi_square_sf(double x, double dof) {
  if (x <= 0.0) return 1.0;
  const double a = 0.5 * dof;
  const double half_x = 0.5 * x;
  const double log_gamma_a = std::lgamma(a);
  if (half_x < a + 1.0) {
    // Lower series: P(a, x), return 1 - P.
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      term *= half_x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-15) break;
    }
    const double p = sum * std::exp(-half_x + a * std::log(half_x) - log_gamma_a);
    return 1.0 - p;
  }
  // Upper continued fraction (Lentz).
  constexpr double kTiny = 1e-300;
  double b = half_x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return std::exp(-half_x + a * std::log(half_x) - log_gamma_a) * h;
}

// Random unit-norm embedding rows grouped into sources with v views each.
inline void random_unit_batch(int sources, int views, int dim, std::uint64_t seed,
                              Eigen::MatrixXd& z, std::vector<std::int64_t>& ids) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = sources * views;
  z.resize(n, dim);
  ids.clear();
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < dim; ++d) z(i, d) = normal(gen);
    z.row(i) /= z.row(i).norm();
    ids.push_back(i / views);
  }
}

}  // namespace oracles

#pragma once

// Log-domain arithmetic plus the samplers and densities used by the models:
// bivariate normal, Wishart / inverse-Wishart (2x2) and gamma.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>

#include "eot/types.hpp"

namespace eot {

using Rng = std::mt19937_64;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Seed for an independent generator stream, derived with splitmix64 steps.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  auto step = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return step(step(seed) ^ (stream * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

inline double log_sum_exp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  if (m == std::numeric_limits<double>::infinity()) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

// ---------------------------------------------------------------------------
// Bivariate normal

inline double log_normal2(const Vec2& x, const Vec2& mean, const Mat2& cov) {
  const double det = cov.determinant();
  if (!(det > 0.0)) throw InvalidArgument("log_normal2: covariance is not positive definite");
  const Vec2 d = x - mean;
  const double q = d.dot(cov.inverse() * d);
  return -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det) - 0.5 * q;
}

inline Vec2 sample_normal2(const Vec2& mean, const Mat2& cov, Rng& rng) {
  std::normal_distribution<double> n01;
  const Eigen::LLT<Mat2> llt(cov);
  if (llt.info() != Eigen::Success) throw InvalidArgument("sample_normal2: covariance is not positive definite");
  const Vec2 u(n01(rng), n01(rng));
  return mean + llt.matrixL() * u;
}

// ---------------------------------------------------------------------------
// Gamma (shape / rate)

inline double log_gamma_density(double x, double shape, double rate) {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

inline double sample_gamma(double shape, double rate, Rng& rng) {
  std::gamma_distribution<double> g(shape, 1.0 / rate);
  return g(rng);
}

// ---------------------------------------------------------------------------
// Wishart / inverse-Wishart on 2x2 SPD matrices

/// Bartlett decomposition: W = L A A^T L^T with scale = L L^T.
inline Mat2 sample_wishart2(double dof, const Mat2& scale, Rng& rng) {
  const Eigen::LLT<Mat2> llt(scale);
  if (llt.info() != Eigen::Success) throw InvalidArgument("sample_wishart2: scale is not positive definite");
  std::chi_squared_distribution<double> c1(dof), c2(dof - 1.0);
  std::normal_distribution<double> n01;
  Mat2 a = Mat2::Zero();
  a(0, 0) = std::sqrt(c1(rng));
  a(1, 1) = std::sqrt(c2(rng));
  a(1, 0) = n01(rng);
  const Mat2 la = llt.matrixL() * a;
  return symmetrize(la * la.transpose());
}

inline Mat2 sample_inverse_wishart2(double dof, const Mat2& scale, Rng& rng) {
  return symmetrize(sample_wishart2(dof, scale.inverse(), rng).inverse());
}

inline double log_multigamma2(double a) {
  return 0.5 * std::log(std::numbers::pi) + std::lgamma(a) + std::lgamma(a - 0.5);
}

inline double log_inverse_wishart2(const Mat2& x, double dof, const Mat2& scale) {
  const double det_x = x.determinant();
  if (!(det_x > 0.0)) return kNegInf;
  const double det_s = scale.determinant();
  return 0.5 * dof * std::log(det_s) - dof * std::numbers::ln2 - log_multigamma2(0.5 * dof) -
         0.5 * (dof + 3.0) * std::log(det_x) - 0.5 * (scale * x.inverse()).trace();
}

}  // namespace eot

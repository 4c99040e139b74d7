#pragma once

// Gaussian-Wasserstein distance between elliptical objects and the GOSPA
// metric (alpha = 2) with its localization / missed / false decomposition.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "eot/error.hpp"
#include "eot/types.hpp"

namespace eot {

struct Ellipse {
  Vec2 position = Vec2::Zero();
  Mat2 extent = Mat2::Identity();
};

inline Ellipse to_ellipse(const ObjectState& x) { return {x.kinematics.position, x.extent}; }

inline std::vector<Ellipse> to_ellipses(const std::vector<ObjectState>& xs) {
  std::vector<Ellipse> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(to_ellipse(x));
  return out;
}

/// Square root of a symmetric positive semidefinite 2x2 matrix.
inline Mat2 sqrtm_spd(const Mat2& m) {
  const Eigen::SelfAdjointEigenSolver<Mat2> es(symmetrize(m));
  const Vec2 ev = es.eigenvalues().cwiseMax(1e-12).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline double gw_distance(const Ellipse& a, const Ellipse& b) {
  if (!validate_spd(a.extent) || !validate_spd(b.extent)) throw InvalidArgument("gw_distance: extent is not SPD");
  const double d2 = (a.position - b.position).squaredNorm();
  if (a.extent == b.extent) return std::sqrt(d2);
  const Mat2 sa = sqrtm_spd(a.extent);
  const Mat2 cross = sqrtm_spd(sa * b.extent * sa);
  const double tr = a.extent.trace() + b.extent.trace() - 2.0 * cross.trace();
  return std::sqrt(d2 + std::max(tr, 0.0));
}

// ---------------------------------------------------------------------------
// Assignment

struct Assignment {
  std::vector<int> row_to_col;  // -1 when unassigned
  double cost = 0.0;
};

/// Minimum-cost assignment of every row to a distinct column (rows <= cols),
/// Hungarian algorithm with potentials.
inline Assignment hungarian(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  Assignment out;
  out.row_to_col.assign(n, -1);
  if (n == 0) return out;
  const std::size_t m = cost[0].size();
  if (m < n) throw InvalidArgument("hungarian: more rows than columns");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) out.row_to_col[p[j] - 1] = static_cast<int>(j - 1);
  for (std::size_t i = 0; i < n; ++i) out.cost += cost[i][static_cast<std::size_t>(out.row_to_col[i])];
  return out;
}

/// Exact assignment by dynamic programming over subsets of the rows; feasible
/// for up to about 16 rows and any number of columns.
inline Assignment exhaustive_assignment(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  Assignment out;
  out.row_to_col.assign(n, -1);
  if (n == 0) return out;
  const std::size_t m = cost[0].size();
  if (m < n) throw InvalidArgument("exhaustive_assignment: more rows than columns");
  if (n > 16) throw GuardExceeded("exhaustive_assignment: too many rows");
  const std::size_t full = (std::size_t{1} << n) - 1;
  const double inf = std::numeric_limits<double>::infinity();
  // best[k][mask]: cheapest way to place the rows in mask using columns < k.
  std::vector<std::vector<double>> best(m + 1, std::vector<double>(full + 1, inf));
  std::vector<std::vector<int>> choice(m + 1, std::vector<int>(full + 1, -1));
  best[0][0] = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t mask = 0; mask <= full; ++mask) {
      const double b = best[k][mask];
      if (b == inf) continue;
      if (b < best[k + 1][mask]) {
        best[k + 1][mask] = b;
        choice[k + 1][mask] = -1;
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (std::size_t{1} << i)) continue;
        const std::size_t next = mask | (std::size_t{1} << i);
        const double c = b + cost[i][k];
        if (c < best[k + 1][next]) {
          best[k + 1][next] = c;
          choice[k + 1][next] = static_cast<int>(i);
        }
      }
    }
  }
  out.cost = best[m][full];
  std::size_t mask = full;
  for (std::size_t k = m; k > 0; --k) {
    const int i = choice[k][mask];
    if (i >= 0) {
      out.row_to_col[static_cast<std::size_t>(i)] = static_cast<int>(k - 1);
      mask &= ~(std::size_t{1} << i);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// GOSPA

struct GospaResult {
  double total = 0.0;
  double localization = 0.0;
  double missed = 0.0;
  double false_ = 0.0;
};

/// GOSPA with alpha = 2 and exponent p. Pairs at distance >= c are never
/// matched; each unmatched element costs c^p / 2.
inline GospaResult gospa(const std::vector<Ellipse>& truth, const std::vector<Ellipse>& est, double c = 20.0,
                         double p = 1.0, double alpha = 2.0) {
  if (!(c > 0.0)) throw InvalidArgument("gospa: cut-off must be positive");
  if (!(p >= 1.0)) throw InvalidArgument("gospa: exponent must be >= 1");
  if (alpha != 2.0) throw InvalidArgument("gospa: only alpha = 2 is supported");
  const double cp = std::pow(c, p);
  const bool truth_rows = truth.size() <= est.size();
  const auto& rows = truth_rows ? truth : est;
  const auto& cols = truth_rows ? est : truth;
  std::vector<std::vector<double>> cost(rows.size(), std::vector<double>(cols.size()));
  std::vector<std::vector<double>> dist(rows.size(), std::vector<double>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) {
      dist[i][j] = gw_distance(rows[i], cols[j]);
      cost[i][j] = dist[i][j] < c ? std::pow(dist[i][j], p) : cp;
    }
  const Assignment a = rows.size() <= 6 ? exhaustive_assignment(cost) : hungarian(cost);

  std::size_t matched = 0;
  GospaResult r;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int j = a.row_to_col[i];
    if (j >= 0 && dist[i][static_cast<std::size_t>(j)] < c) {
      r.localization += cost[i][static_cast<std::size_t>(j)];
      ++matched;
    }
  }
  r.missed = 0.5 * cp * static_cast<double>(truth.size() - matched);
  r.false_ = 0.5 * cp * static_cast<double>(est.size() - matched);
  r.total = r.localization + r.missed + r.false_;
  if (p != 1.0) {
    r.total = std::pow(r.total, 1.0 / p);
  }
  return r;
}

inline GospaResult gospa(const std::vector<ObjectState>& truth, const std::vector<ObjectState>& est, double c = 20.0,
                         double p = 1.0, double alpha = 2.0) {
  return gospa(to_ellipses(truth), to_ellipses(est), c, p, alpha);
}

}  // namespace eot

#pragma once

// Active-set (Lawson-Hanson) non-negative least squares, optionally with the
// simplex constraint sum(x) = 1.
//
// With the equality constraint, each passive-set subproblem is solved by
// eliminating one passive variable (x_k = 1 - sum of the others), and the
// dual vector is shifted by the equality multiplier before choosing the next
// variable to free.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cavlab/error.hpp"

namespace cavlab {

struct NnlsResult {
  Eigen::VectorXd x;
  double residual = 0.0;  ///< ||A x - b||^2
  std::size_t iterations = 0;
};

/// Numerical column rank with a relative pivot threshold.
inline Eigen::Index column_rank(const Eigen::MatrixXd& a, double rel_threshold = 1e-10) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(rel_threshold);
  return qr.rank();
}

namespace detail {

inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  return a.colPivHouseholderQr().solve(b);
}

// argmin ||A_P z - b|| over the passive columns, with sum(z) = 1 when requested.
inline Eigen::VectorXd passive_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                     const std::vector<Eigen::Index>& passive, bool sum_to_one) {
  const auto np = static_cast<Eigen::Index>(passive.size());
  Eigen::VectorXd z = Eigen::VectorXd::Zero(a.cols());
  if (np == 0) return z;
  if (!sum_to_one) {
    Eigen::MatrixXd ap(a.rows(), np);
    for (Eigen::Index j = 0; j < np; ++j) ap.col(j) = a.col(passive[j]);
    const Eigen::VectorXd zp = least_squares(ap, b);
    for (Eigen::Index j = 0; j < np; ++j) z(passive[j]) = zp(j);
    return z;
  }
  const Eigen::Index pivot = passive.front();
  if (np == 1) {
    z(pivot) = 1.0;
    return z;
  }
  Eigen::MatrixXd reduced(a.rows(), np - 1);
  for (Eigen::Index j = 1; j < np; ++j) reduced.col(j - 1) = a.col(passive[j]) - a.col(pivot);
  const Eigen::VectorXd y = least_squares(reduced, b - a.col(pivot));
  for (Eigen::Index j = 1; j < np; ++j) z(passive[j]) = y(j - 1);
  z(pivot) = 1.0 - y.sum();
  return z;
}

}  // namespace detail

/// min ||A x - b||^2 subject to x >= 0 (and sum(x) = 1 if sum_to_one).
/// A must have full column rank.
inline NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, bool sum_to_one = false,
                       std::size_t max_iter = 0, double tol = 1e-12) {
  const Eigen::Index n = a.cols();
  if (a.rows() != b.size()) throw ValidationError("nnls: row count mismatch");
  if (n == 0) throw ValidationError("nnls: no unknowns");
  if (max_iter == 0) max_iter = static_cast<std::size_t>(30 * n);

  std::vector<bool> in_passive(static_cast<std::size_t>(n), false);
  std::vector<Eigen::Index> passive;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);

  if (sum_to_one) {
    // Feasible start: the best single vertex of the simplex.
    Eigen::Index best = 0;
    double best_res = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      const double r = (a.col(j) - b).squaredNorm();
      if (r < best_res) {
        best_res = r;
        best = j;
      }
    }
    x(best) = 1.0;
    passive.push_back(best);
    in_passive[static_cast<std::size_t>(best)] = true;
  }

  const double scale = std::max(a.norm() * (b.norm() + a.norm()), std::numeric_limits<double>::min());
  std::vector<bool> blocked(static_cast<std::size_t>(n), false);
  std::size_t iter = 0;

  // Sum-to-one solutions pass through the initial vertex, so refine it first.
  bool refine_only = sum_to_one;

  while (iter < max_iter) {
    if (!refine_only) {
      const Eigen::VectorXd w_raw = a.transpose() * (b - a * x);
      double shift = 0.0;
      if (sum_to_one) {
        for (auto j : passive) shift += w_raw(j);
        shift /= static_cast<double>(passive.size());
      }
      Eigen::Index enter = -1;
      double best_w = tol * scale;
      for (Eigen::Index j = 0; j < n; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (in_passive[uj] || blocked[uj]) continue;
        const double w = w_raw(j) - shift;
        if (w > best_w) {
          best_w = w;
          enter = j;
        }
      }
      if (enter < 0) break;
      passive.push_back(enter);
      in_passive[static_cast<std::size_t>(enter)] = true;
      ++iter;

      // An entering variable that does not move off its bound would cycle.
      const Eigen::VectorXd trial = detail::passive_solve(a, b, passive, sum_to_one);
      if (!(trial(enter) > 0.0)) {
        passive.pop_back();
        in_passive[static_cast<std::size_t>(enter)] = false;
        blocked[static_cast<std::size_t>(enter)] = true;
        continue;
      }
    }
    refine_only = false;

    // Inner loop: move toward the passive-set optimum, dropping variables that hit zero.
    for (;;) {
      const Eigen::VectorXd z = detail::passive_solve(a, b, passive, sum_to_one);
      bool feasible = true;
      for (auto j : passive)
        if (!(z(j) > 0.0)) feasible = false;
      if (feasible) {
        x = z;
        break;
      }
      double step = 1.0;
      for (auto j : passive)
        if (!(z(j) > 0.0)) step = std::min(step, x(j) / (x(j) - z(j)));
      x += step * (z - x);
      std::vector<Eigen::Index> kept;
      for (auto j : passive) {
        if (x(j) <= 0.0 || (!(z(j) > 0.0) && x(j) <= 1e-15)) {
          x(j) = 0.0;
          in_passive[static_cast<std::size_t>(j)] = false;
        } else {
          kept.push_back(j);
        }
      }
      if (kept.size() == passive.size()) {
        // Ties in the ratio test: drop the variable that blocked the step.
        auto worst = std::min_element(kept.begin(), kept.end(), [&](auto i, auto j) { return z(i) < z(j); });
        x(*worst) = 0.0;
        in_passive[static_cast<std::size_t>(*worst)] = false;
        kept.erase(worst);
      }
      passive = std::move(kept);
      if (sum_to_one && !passive.empty()) {
        const double s = x.sum();
        if (s > 0.0) x /= s;
      }
      if (passive.empty()) break;
    }
    std::fill(blocked.begin(), blocked.end(), false);
  }

  if (iter >= max_iter)
    throw ConvergenceError("nnls did not converge in " + std::to_string(max_iter) + " iterations");
  NnlsResult r;
  r.x = std::move(x);
  r.residual = (a * r.x - b).squaredNorm();
  r.iterations = iter;
  return r;
}

}  // namespace cavlab

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace impa::fit {

struct LmOptions {
  int max_iterations = 500;
  /// Bound on max_j |J_j . r| / (|J_j| |r|), the cosine between the residual and each column.
  double gradient_tolerance = 1e-10;
  /// Residual norm below this fraction of the data norm counts as an exact fit.
  double exact_fit_tolerance = 1e-10;
  double initial_damping = 1e-3;
  double relative_step = 1e-6;
};

struct LmResult {
  Eigen::VectorXd params;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;
  double residual_norm = 0.0;
  double gradient_norm = 0.0;
  bool converged = false;
  int iterations = 0;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Box constraints; empty vectors mean unbounded.
struct Bounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  double lo(Eigen::Index k) const {
    return lower.size() ? lower[k] : -std::numeric_limits<double>::infinity();
  }
  double hi(Eigen::Index k) const {
    return upper.size() ? upper[k] : std::numeric_limits<double>::infinity();
  }
  void project(Eigen::VectorXd& p) const {
    for (Eigen::Index k = 0; k < p.size(); ++k) p[k] = std::clamp(p[k], lo(k), hi(k));
  }
  /// Parameters pinned at a bound by a gradient that points out of the box.
  std::vector<bool> active(const Eigen::VectorXd& p, const Eigen::VectorXd& gradient) const {
    std::vector<bool> out(static_cast<std::size_t>(p.size()), false);
    for (Eigen::Index k = 0; k < p.size(); ++k)
      out[static_cast<std::size_t>(k)] =
          (p[k] <= lo(k) && gradient[k] > 0.0) || (p[k] >= hi(k) && gradient[k] < 0.0);
    return out;
  }
};

/// Central-difference Jacobian; step j is relative_step * max(|p_j|, typical_j).
inline Eigen::MatrixXd numeric_jacobian(const ResidualFn& residual, const Eigen::VectorXd& p,
                                        const Eigen::VectorXd& typical, double relative_step,
                                        Eigen::Index rows) {
  Eigen::MatrixXd jac(rows, p.size());
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const double h = relative_step * std::max(std::abs(p[k]), typical[k]);
    Eigen::VectorXd up = p;
    Eigen::VectorXd down = p;
    up[k] += h;
    down[k] -= h;
    jac.col(k) = (residual(up) - residual(down)) / (2.0 * h);
  }
  return jac;
}

inline double scaled_gradient(const Eigen::MatrixXd& jac, const Eigen::VectorXd& r,
                              const std::vector<bool>& active = {}) {
  const double rn = r.norm();
  if (rn == 0.0) return 0.0;
  double worst = 0.0;
  for (Eigen::Index k = 0; k < jac.cols(); ++k) {
    if (!active.empty() && active[static_cast<std::size_t>(k)]) continue;
    const double cn = jac.col(k).norm();
    if (cn > 0.0) worst = std::max(worst, std::abs(jac.col(k).dot(r)) / (cn * rn));
  }
  return worst;
}

/// Damped Gauss-Newton with Marquardt's diagonal scaling, so the iteration is
/// invariant under rescaling of individual parameters. Parameters held at a
/// bound by the gradient are frozen for the step and excluded from the
/// convergence test.
inline LmResult levenberg_marquardt(const ResidualFn& residual, Eigen::VectorXd p,
                                    const Eigen::VectorXd& typical, double data_norm,
                                    const LmOptions& options = {}, const Bounds& bounds = {}) {
  bounds.project(p);
  LmResult out;
  Eigen::VectorXd r = residual(p);
  double cost = r.squaredNorm();
  double damping = options.initial_damping;
  const double exact = options.exact_fit_tolerance * std::max(data_norm, 1e-300);

  int iter = 0;
  Eigen::MatrixXd jac;
  for (; iter < options.max_iterations; ++iter) {
    jac = numeric_jacobian(residual, p, typical, options.relative_step, r.size());
    if (!std::isfinite(cost)) break;
    Eigen::MatrixXd normal = jac.transpose() * jac;
    Eigen::VectorXd gradient = jac.transpose() * r;
    const auto active = bounds.active(p, gradient);
    const double cosine = scaled_gradient(jac, r, active);
    if (std::sqrt(cost) <= exact || cosine <= options.gradient_tolerance) break;

    Eigen::VectorXd diag = normal.diagonal();
    const double floor = 1e-12 * std::max(diag.maxCoeff(), 1e-300);
    diag = diag.cwiseMax(floor);
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      if (!active[static_cast<std::size_t>(k)]) continue;
      normal.row(k).setZero();
      normal.col(k).setZero();
      normal(k, k) = diag[k];
      gradient[k] = 0.0;
    }

    bool improved = false;
    while (damping < 1e16) {
      Eigen::MatrixXd system = normal;
      system.diagonal() += damping * diag;
      const Eigen::VectorXd step = system.ldlt().solve(-gradient);
      Eigen::VectorXd trial = p + step;
      bounds.project(trial);
      const Eigen::VectorXd r_trial = residual(trial);
      const double trial_cost = r_trial.squaredNorm();
      if (std::isfinite(trial_cost) && trial_cost < cost) {
        const bool negligible =
            ((trial - p).array().abs() <= 1e-15 * p.array().abs().max(typical.array())).all();
        p = trial;
        r = r_trial;
        cost = trial_cost;
        damping = std::max(damping * 0.3, 1e-15);
        improved = !negligible;
        break;
      }
      // Near the minimum the cost no longer resolves progress; accept a step
      // that leaves the cost flat to rounding but measurably reduces the gradient.
      if (std::isfinite(trial_cost) && trial_cost <= cost * (1.0 + 1e-13)) {
        const Eigen::MatrixXd trial_jac =
            numeric_jacobian(residual, trial, typical, options.relative_step, r.size());
        const double trial_cosine =
            scaled_gradient(trial_jac, r_trial, bounds.active(trial, trial_jac.transpose() * r_trial));
        if (trial_cosine < 0.5 * cosine) {
          p = trial;
          r = r_trial;
          cost = trial_cost;
          improved = true;
          break;
        }
      }
      damping *= 10.0;
    }
    if (!improved) {
      jac = numeric_jacobian(residual, p, typical, options.relative_step, r.size());
      break;
    }
  }
  if (jac.size() == 0) jac = numeric_jacobian(residual, p, typical, options.relative_step, r.size());

  out.params = p;
  out.residuals = r;
  out.jacobian = jac;
  out.residual_norm = std::sqrt(cost);
  out.gradient_norm = scaled_gradient(jac, r, bounds.active(p, jac.transpose() * r));
  out.iterations = iter;
  out.converged = std::isfinite(out.residual_norm) &&
                  (out.residual_norm <= exact || out.gradient_norm <= options.gradient_tolerance);
  return out;
}

/// Reciprocal condition number of the column-normalized normal matrix.
inline double normal_matrix_rcond(const Eigen::MatrixXd& jac) {
  Eigen::MatrixXd scaled = jac;
  for (Eigen::Index k = 0; k < scaled.cols(); ++k) {
    const double n = scaled.col(k).norm();
    if (n > 0.0) scaled.col(k) /= n;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled.transpose() * scaled);
  const auto& values = eig.eigenvalues();
  if (values.maxCoeff() <= 0.0) return 0.0;
  return std::max(values.minCoeff(), 0.0) / values.maxCoeff();
}

}  // namespace impa::fit

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "tann/detail/text.hpp"
#include "tann/errors.hpp"

namespace tann {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using MatrixRef = Eigen::Ref<const Eigen::MatrixXd>;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

/// Predictor columns (one training image each) plus the ids they came from.
struct DesignMatrix {
  Matrix columns;
  std::vector<std::string> ids;

  Eigen::Index rows() const { return columns.rows(); }
  Eigen::Index cols() const { return columns.cols(); }
};

/// Validates shape and values; optionally rescales every nonzero column to unit L2 norm.
inline DesignMatrix make_design_matrix(Matrix columns, std::vector<std::string> ids, bool normalize) {
  if (columns.rows() < 1 || columns.cols() < 1) throw ShapeError("design matrix must be at least 1x1");
  if (!ids.empty() && static_cast<Eigen::Index>(ids.size()) != columns.cols())
    throw ShapeError("design matrix: id count does not match column count");
  if (!columns.allFinite()) throw ShapeError("design matrix contains non-finite entries");
  if (normalize) {
    for (Eigen::Index j = 0; j < columns.cols(); ++j) {
      const double norm = columns.col(j).norm();
      if (norm > 0.0) columns.col(j) /= norm;
    }
  }
  return {std::move(columns), std::move(ids)};
}

struct GroupRange {
  Eigen::Index begin = 0;
  Eigen::Index end = 0;  // exclusive
  Eigen::Index size() const { return end - begin; }
};

/// Contiguous column groups with per-group penalty weights.
struct GroupStructure {
  std::vector<GroupRange> groups;
  std::vector<double> weights;

  static GroupStructure from_sizes(const std::vector<std::size_t>& sizes, double weight = 1.0) {
    GroupStructure gs;
    Eigen::Index at = 0;
    for (auto s : sizes) {
      gs.groups.push_back({at, at + static_cast<Eigen::Index>(s)});
      gs.weights.push_back(weight);
      at += static_cast<Eigen::Index>(s);
    }
    return gs;
  }

  void validate(Eigen::Index p) const {
    if (groups.size() != weights.size()) throw GroupError("group count and weight count differ");
    Eigen::Index at = 0;
    for (std::size_t k = 0; k < groups.size(); ++k) {
      if (groups[k].begin != at || groups[k].end <= groups[k].begin)
        throw GroupError("groups must be nonempty contiguous ranges covering 0..p-1 in order");
      if (!(weights[k] > 0.0) || !std::isfinite(weights[k])) throw GroupError("group weights must be positive");
      at = groups[k].end;
    }
    if (at != p) throw GroupError("groups cover " + std::to_string(at) + " columns, design has " + std::to_string(p));
  }
};

enum class StepRule { fixed, backtracking };

struct SolverConfig {
  double lambda1 = 0.01;  // elementwise l1 weight, group problem
  double lambda2 = 0.1;   // group l2 weight
  double rho = 0.01;      // l1 weight, per-word problem
  int max_iter = 2000;
  double tol = 1e-6;
  StepRule step_rule = StepRule::fixed;
  bool normalize = true;  // unit-norm design columns before solving
  bool record_trace = false;

  void validate() const {
    if (!(tol > 0.0)) throw ArgumentError("tol must be positive");
    if (max_iter < 1) throw ArgumentError("max_iter must be >= 1");
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !(rho >= 0.0))
      throw ArgumentError("regularization weights must be nonnegative");
  }
};

struct SparseSolution {
  Vector w;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double kkt_residual = 0.0;
  std::vector<double> trace;  // objective after each iteration, when requested
};

inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

inline Vector soft_threshold(const VectorRef& v, double t) {
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = soft_threshold(v[i], t);
  return out;
}

/// Block shrinkage max(1 - t/||v||, 0) v; the zero vector maps to itself.
inline Vector group_soft_threshold(const VectorRef& v, double t) {
  const double norm = v.norm();
  if (norm <= t || norm == 0.0) return Vector::Zero(v.size());
  return (1.0 - t / norm) * v;
}

namespace detail {

inline void check_shapes(const MatrixRef& A, const VectorRef& y, const VectorRef* w) {
  if (A.rows() < 1 || A.cols() < 1) throw ShapeError("design matrix must be at least 1x1");
  if (y.size() != A.rows())
    throw ShapeError("target length " + std::to_string(y.size()) + " does not match design rows " +
                     std::to_string(A.rows()));
  if (w && w->size() != A.cols())
    throw ShapeError("coefficient length " + std::to_string(w->size()) + " does not match design columns " +
                     std::to_string(A.cols()));
}

inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

inline double group_penalty(const VectorRef& w, const GroupStructure& groups) {
  double s = 0.0;
  for (std::size_t k = 0; k < groups.groups.size(); ++k)
    s += groups.weights[k] * w.segment(groups.groups[k].begin, groups.groups[k].size()).norm();
  return s;
}

}  // namespace detail

/// ||Aw - y||^2 + rho ||w||_1
inline double lasso_objective(const MatrixRef& A, const VectorRef& y, const VectorRef& w, double rho) {
  detail::check_shapes(A, y, &w);
  return (A * w - y).squaredNorm() + rho * w.lpNorm<1>();
}

/// ||Aw - y||^2 + lambda1 ||w||_1 + lambda2 sum_k phi_k ||w_k||_2
inline double sgl_objective(const MatrixRef& A, const VectorRef& y, const VectorRef& w, const GroupStructure& groups,
                            double lambda1, double lambda2) {
  detail::check_shapes(A, y, &w);
  groups.validate(A.cols());
  return (A * w - y).squaredNorm() + lambda1 * w.lpNorm<1>() + lambda2 * detail::group_penalty(w, groups);
}

/**
 * Largest stationarity violation for the lasso objective, with
 * g = 2 A^T (Aw - y): |g_j + rho sign(w_j)| on the support and
 * max(|g_j| - rho, 0) off it.
 */
inline double kkt_residual_lasso(const MatrixRef& A, const VectorRef& y, const VectorRef& w, double rho) {
  detail::check_shapes(A, y, &w);
  const Vector g = 2.0 * (A.transpose() * (A * w - y));
  double r = 0.0;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    const double v = w[j] != 0.0 ? std::abs(g[j] + rho * detail::sign(w[j])) : std::max(std::abs(g[j]) - rho, 0.0);
    r = std::max(r, v);
  }
  return r;
}

/**
 * Stationarity violation for the sparse group lasso. Zero groups must satisfy
 * ||S(g_k, lambda1)|| <= lambda2 phi_k; inside a nonzero group the group term
 * contributes lambda2 phi_k w_j / ||w_k||.
 */
inline double kkt_residual_sgl(const MatrixRef& A, const VectorRef& y, const VectorRef& w, const GroupStructure& groups,
                               double lambda1, double lambda2) {
  detail::check_shapes(A, y, &w);
  groups.validate(A.cols());
  const Vector g = 2.0 * (A.transpose() * (A * w - y));
  double r = 0.0;
  for (std::size_t k = 0; k < groups.groups.size(); ++k) {
    const auto& grp = groups.groups[k];
    const double gw = lambda2 * groups.weights[k];
    const double norm = w.segment(grp.begin, grp.size()).norm();
    if (norm == 0.0) {
      r = std::max(r, std::max(soft_threshold(Vector(g.segment(grp.begin, grp.size())), lambda1).norm() - gw, 0.0));
      continue;
    }
    for (Eigen::Index j = grp.begin; j < grp.end; ++j) {
      const double v = w[j] != 0.0 ? std::abs(g[j] + lambda1 * detail::sign(w[j]) + gw * w[j] / norm)
                                   : std::max(std::abs(g[j]) - lambda1, 0.0);
      r = std::max(r, v);
    }
  }
  return r;
}

/// Power-iteration estimate of the largest eigenvalue of A^T A.
inline double spectral_norm_squared(const MatrixRef& A, int max_iter = 500, double tol = 1e-10) {
  std::mt19937_64 rng(0x5eed);
  Vector v(A.cols());
  for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = 0.5 + static_cast<double>(rng() >> 11) * 0x1.0p-53;
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector u = A.transpose() * (A * v);
    const double next = u.norm();
    if (next == 0.0) return 0.0;
    v = u / next;
    const bool done = std::abs(next - lambda) <= tol * next;
    lambda = next;
    if (done) break;
  }
  return lambda;
}

namespace detail {

/**
 * Monotone FISTA on ||Aw - y||^2 + penalty(w), starting from w = 0.
 *
 * A candidate that does not lower the objective is rejected and the momentum
 * restarts from the current iterate, so the objective sequence never
 * increases. The step constant L starts from a power-iteration estimate
 * (fixed rule) or a column-norm lower bound (backtracking) and doubles
 * whenever the quadratic upper bound fails at the candidate. The run counts
 * as converged once the relative objective decrease drops below tol and the
 * KKT residual is at most tol * (1 + ||2 A^T y||_inf).
 */
template <typename Penalty, typename Prox, typename Kkt>
SparseSolution proximal_gradient(const MatrixRef& A, const VectorRef& y, const SolverConfig& cfg, Penalty penalty,
                                 Prox prox, Kkt kkt) {
  cfg.validate();
  const Eigen::Index p = A.cols();
  const Vector Aty = A.transpose() * y;
  const double threshold = cfg.tol * (1.0 + 2.0 * Aty.lpNorm<Eigen::Infinity>());

  SparseSolution sol;
  sol.w = Vector::Zero(p);
  double fx = y.squaredNorm();
  sol.objective = fx;
  sol.kkt_residual = kkt(sol.w);
  if (sol.kkt_residual <= threshold) {
    sol.converged = true;
    return sol;
  }

  double L = 0.0;
  if (cfg.step_rule == StepRule::fixed) {
    L = 2.0 * spectral_norm_squared(A) * (1.0 + 1e-6);
  } else {
    L = 2.0 * A.colwise().squaredNorm().maxCoeff();
  }
  if (!(L > 0.0)) L = 1.0;  // A == 0: gradient is constant, any step works

  Vector x = sol.w;
  Vector x_prev = x;
  Vector ypt = x;
  double t = 1.0;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const Vector r = A * ypt - y;
    const double f_y = r.squaredNorm();
    const Vector grad = 2.0 * (A.transpose() * r);

    Vector z;
    double f_z = 0.0;
    while (true) {
      z = prox(Vector(ypt - grad / L), 1.0 / L);
      const Vector d = z - ypt;
      f_z = (A * z - y).squaredNorm();
      const double bound = f_y + grad.dot(d) + 0.5 * L * d.squaredNorm();
      if (f_z <= bound + 1e-12 * std::max(1.0, std::abs(f_y))) break;
      L *= 2.0;
    }
    const double obj_z = f_z + penalty(z);

    const double previous = fx;
    x_prev = x;
    const bool accepted = obj_z <= fx;
    if (accepted) {
      x = z;
      fx = obj_z;
    }
    assert(fx <= previous);

    if (accepted) {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      ypt = x + ((t - 1.0) / t_next) * (x - x_prev);
      t = t_next;
    } else {
      t = 1.0;
      ypt = x;
    }

    sol.iterations = it;
    if (cfg.record_trace) sol.trace.push_back(fx);

    const double decrease = (previous - fx) / std::max(std::abs(previous), std::numeric_limits<double>::min());
    if (decrease < cfg.tol) {
      const double res = kkt(x);
      if (res <= threshold) {
        sol.converged = true;
        sol.kkt_residual = res;
        break;
      }
    }
  }
  sol.w = x;
  sol.objective = fx;
  if (!sol.converged) sol.kkt_residual = kkt(x);
  return sol;
}

}  // namespace detail

/// Minimizes ||Aw - y||^2 + rho ||w||_1.
inline SparseSolution solve_lasso(const MatrixRef& A, const VectorRef& y, double rho, const SolverConfig& cfg) {
  detail::check_shapes(A, y, nullptr);
  if (!(rho >= 0.0)) throw ArgumentError("rho must be nonnegative");
  return detail::proximal_gradient(
      A, y, cfg, [rho](const Vector& w) { return rho * w.lpNorm<1>(); },
      [rho](const Vector& v, double step) { return soft_threshold(v, step * rho); },
      [&](const Vector& w) { return kkt_residual_lasso(A, y, w, rho); });
}

/// Minimizes ||Aw - y||^2 + lambda1 ||w||_1 + lambda2 sum_k phi_k ||w_k||_2.
inline SparseSolution solve_sgl(const MatrixRef& A, const VectorRef& y, const GroupStructure& groups, double lambda1,
                                double lambda2, const SolverConfig& cfg) {
  detail::check_shapes(A, y, nullptr);
  groups.validate(A.cols());
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw ArgumentError("lambda1 and lambda2 must be nonnegative");
  auto prox = [&](const Vector& v, double step) {
    Vector u = soft_threshold(v, step * lambda1);
    for (std::size_t k = 0; k < groups.groups.size(); ++k) {
      const auto& grp = groups.groups[k];
      u.segment(grp.begin, grp.size()) =
          group_soft_threshold(u.segment(grp.begin, grp.size()), step * lambda2 * groups.weights[k]);
    }
    return u;
  };
  return detail::proximal_gradient(
      A, y, cfg,
      [&](const Vector& w) { return lambda1 * w.lpNorm<1>() + lambda2 * detail::group_penalty(w, groups); }, prox,
      [&](const Vector& w) { return kkt_residual_sgl(A, y, w, groups, lambda1, lambda2); });
}

/// Objective trace as CSV (`iteration,objective`).
inline std::string format_trace_csv(const SparseSolution& sol) {
  std::string out = "iteration,objective\n";
  for (std::size_t i = 0; i < sol.trace.size(); ++i)
    out += std::to_string(i + 1) + "," + detail::format_roundtrip(sol.trace[i]) + "\n";
  return out;
}

}  // namespace tann

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "stclear/error.hpp"
#include "stclear/linear_program.hpp"

namespace stclear {

struct SolverConfig {
  double pivot_tolerance = 1e-9;
  double feasibility_tolerance = 1e-8;
  double optimality_tolerance = 1e-8;
  /// 0 selects 50 * (rows + cols).
  std::size_t max_iterations = 0;
  /// Consecutive degenerate pivots before switching to Bland's rule.
  std::size_t stall_threshold = 50;
  std::size_t refactor_interval = 64;
};

enum class SolverStatus { Optimal, Infeasible, Unbounded, IterationLimit };

constexpr std::string_view to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::Optimal: return "optimal";
    case SolverStatus::Infeasible: return "infeasible";
    case SolverStatus::Unbounded: return "unbounded";
    case SolverStatus::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

enum class VariableStatus { Basic, AtLower, AtUpper, Free };

/// Solver output in the program's own objective orientation.
///
/// Row duals `y` solve B'y = c_B for the minimization form of the program
/// (objective negated when maximizing). For a clearing program these are
/// the nodal prices. `reduced_costs` are c_j + a_j'y when maximizing and
/// c_j - a_j'y when minimizing, so at an optimum a column at its upper bound
/// has a reduced cost whose improving sign measures its capacity dual.
struct SolverResult {
  SolverStatus status = SolverStatus::Optimal;
  ObjectiveSense sense = ObjectiveSense::Maximize;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> reduced_costs;
  std::vector<VariableStatus> column_status;
  double objective = 0.0;
  std::size_t iterations = 0;
  std::size_t refactorizations = 0;
};

namespace detail {

/// Dense LU of the basis plus a product-form eta file.
class BasisFactor {
 public:
  /// Returns false when the matrix is numerically singular.
  bool factor(const Eigen::MatrixXd& basis) {
    etas_.clear();
    size_ = static_cast<std::size_t>(basis.rows());
    if (size_ == 0) return true;
    lu_.compute(basis);
    const auto diag = lu_.matrixLU().diagonal().cwiseAbs();
    return diag.minCoeff() > 1e-11 * std::max(1.0, diag.maxCoeff());
  }

  void ftran(Eigen::VectorXd& v) const {
    if (size_ == 0) return;
    v = lu_.solve(v);
    for (const Eta& eta : etas_) {
      const double pivot_value = v[eta.row] / eta.pivot;
      v[eta.row] = pivot_value;
      if (pivot_value == 0.0) continue;
      for (const auto& [i, a] : eta.entries) v[i] -= a * pivot_value;
    }
  }

  void btran(Eigen::VectorXd& v) const {
    if (size_ == 0) return;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = v[it->row];
      for (const auto& [i, a] : it->entries) s -= a * v[i];
      v[it->row] = s / it->pivot;
    }
    v = lu_.transpose().solve(v);
  }

  void push_eta(std::size_t row, const Eigen::VectorXd& alpha) {
    Eta eta{row, alpha[static_cast<Eigen::Index>(row)], {}};
    for (Eigen::Index i = 0; i < alpha.size(); ++i) {
      if (static_cast<std::size_t>(i) != row && alpha[i] != 0.0) eta.entries.emplace_back(i, alpha[i]);
    }
    etas_.push_back(std::move(eta));
  }

  std::size_t eta_count() const noexcept { return etas_.size(); }

 private:
  struct Eta {
    std::size_t row;
    double pivot;
    std::vector<std::pair<Eigen::Index, double>> entries;
  };

  std::size_t size_ = 0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  std::vector<Eta> etas_;
};

struct SingularBasis {};

/// Bounded-variable primal revised simplex on min c'x, Ax = b, lo <= x <= hi.
/// One artificial per row forms the starting basis; when the start point
/// already satisfies Ax = b the artificials are fixed at zero and phase 1 is
/// skipped.
class RevisedSimplex {
 public:
  RevisedSimplex(const LinearProgram& lp, const SolverConfig& cfg)
      : lp_(lp), cfg_(cfg), m_(lp.rows()), n_(lp.cols()), total_(lp.rows() + lp.cols()) {
    max_iterations_ = cfg.max_iterations != 0 ? cfg.max_iterations : 50 * (m_ + n_);
    lo_.resize(total_);
    hi_.resize(total_);
    x_.assign(total_, 0.0);
    cost_.assign(total_, 0.0);
    d_.assign(total_, 0.0);
    art_sign_.assign(m_, 1.0);
    for (std::size_t j = 0; j < n_; ++j) {
      lo_[j] = lp.lower(j);
      hi_[j] = lp.upper(j);
    }
  }

  SolverResult run() {
    std::vector<double> start(n_);
    for (std::size_t j = 0; j < n_; ++j) {
      start[j] = std::isfinite(lo_[j]) ? lo_[j] : (std::isfinite(hi_[j]) ? hi_[j] : 0.0);
    }

    SolverStatus status = SolverStatus::Optimal;
    for (int attempt = 0; attempt < 4; ++attempt) {
      try {
        status = solve_from(start);
      } catch (const SingularBasis&) {
        for (std::size_t j = 0; j < n_; ++j) start[j] = std::clamp(x_[j], lo_[j], hi_[j]);
        continue;
      }
      if (status != SolverStatus::Optimal || primal_feasible()) break;
      // Drift after many updates: restart from the current point.
      for (std::size_t j = 0; j < n_; ++j) start[j] = std::clamp(x_[j], lo_[j], hi_[j]);
    }
    return make_result(status);
  }

 private:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  SolverStatus solve_from(const std::vector<double>& start) {
    const bool needs_phase1 = install_artificial_basis(start);
    if (needs_phase1) {
      for (std::size_t j = 0; j < total_; ++j) cost_[j] = j >= n_ ? 1.0 : 0.0;
      const SolverStatus s = iterate();
      if (s == SolverStatus::IterationLimit) return s;
      double infeasibility = 0.0;
      for (std::size_t j = n_; j < total_; ++j) infeasibility += x_[j];
      double scale = 1.0;
      for (double b : lp_.rhs()) scale = std::max(scale, std::abs(b));
      if (infeasibility > cfg_.feasibility_tolerance * scale) return SolverStatus::Infeasible;
    }
    for (std::size_t j = n_; j < total_; ++j) {
      hi_[j] = 0.0;
      if (pos_[j] == npos) x_[j] = 0.0;
    }
    const double orientation = lp_.sense() == ObjectiveSense::Maximize ? -1.0 : 1.0;
    for (std::size_t j = 0; j < total_; ++j) cost_[j] = j < n_ ? orientation * lp_.objective(j) : 0.0;
    return iterate();
  }

  /// Returns true when phase 1 is required.
  bool install_artificial_basis(const std::vector<double>& start) {
    std::copy(start.begin(), start.end(), x_.begin());
    std::vector<double> residual(lp_.rhs());
    for (std::size_t j = 0; j < n_; ++j) {
      if (x_[j] == 0.0) continue;
      for (const auto& e : lp_.column(j)) residual[e.row] -= e.value * x_[j];
    }
    basis_.assign(m_, 0);
    pos_.assign(total_, npos);
    bool infeasible = false;
    for (std::size_t r = 0; r < m_; ++r) {
      const std::size_t j = n_ + r;
      art_sign_[r] = residual[r] >= 0.0 ? 1.0 : -1.0;
      x_[j] = std::abs(residual[r]);
      lo_[j] = 0.0;
      const bool active = x_[j] > cfg_.feasibility_tolerance;
      hi_[j] = active ? kInfinity : 0.0;
      infeasible = infeasible || active;
      basis_[r] = j;
      pos_[j] = r;
    }
    degenerate_run_ = 0;
    bland_ = cfg_.stall_threshold == 0;
    return infeasible;
  }

  template <typename F>
  void for_each_entry(std::size_t j, F&& f) const {
    if (j < n_) {
      for (const auto& e : lp_.column(j)) f(e.row, e.value);
    } else {
      f(j - n_, art_sign_[j - n_]);
    }
  }

  Eigen::VectorXd dense_column(std::size_t j) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_));
    for_each_entry(j, [&](std::size_t r, double a) { v[static_cast<Eigen::Index>(r)] = a; });
    return v;
  }

  void refactor() {
    ++refactorizations_;
    Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(m_));
    for (std::size_t k = 0; k < m_; ++k) {
      for_each_entry(basis_[k], [&](std::size_t r, double a) {
        basis(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = a;
      });
    }
    if (!factor_.factor(basis)) throw SingularBasis{};

    Eigen::VectorXd rhs(static_cast<Eigen::Index>(m_));
    for (std::size_t r = 0; r < m_; ++r) rhs[static_cast<Eigen::Index>(r)] = lp_.rhs()[r];
    for (std::size_t j = 0; j < total_; ++j) {
      if (pos_[j] != npos || x_[j] == 0.0) continue;
      for_each_entry(j, [&](std::size_t r, double a) { rhs[static_cast<Eigen::Index>(r)] -= a * x_[j]; });
    }
    factor_.ftran(rhs);
    for (std::size_t k = 0; k < m_; ++k) x_[basis_[k]] = rhs[static_cast<Eigen::Index>(k)];
  }

  void compute_duals() {
    Eigen::VectorXd y(static_cast<Eigen::Index>(m_));
    for (std::size_t k = 0; k < m_; ++k) y[static_cast<Eigen::Index>(k)] = cost_[basis_[k]];
    factor_.btran(y);
    y_.assign(y.data(), y.data() + m_);
    for (std::size_t j = 0; j < total_; ++j) {
      if (pos_[j] != npos) {
        d_[j] = 0.0;
        continue;
      }
      double s = cost_[j];
      for_each_entry(j, [&](std::size_t r, double a) { s -= a * y_[r]; });
      d_[j] = s;
    }
  }

  std::size_t choose_entering() const {
    std::size_t best = npos;
    double best_score = 0.0;
    for (std::size_t j = 0; j < total_; ++j) {
      if (pos_[j] != npos) continue;
      const bool can_increase = x_[j] < hi_[j];
      const bool can_decrease = x_[j] > lo_[j];
      const double dj = d_[j];
      // Relative to the terms that cancel in d_j, so a uniform cost scaling
      // leaves every pricing decision unchanged.
      const double tol = cfg_.optimality_tolerance * std::max({1.0, std::abs(cost_[j]), std::abs(cost_[j] - dj)});
      if (!((dj < -tol && can_increase) || (dj > tol && can_decrease))) continue;
      if (bland_) return j;
      // Near-equal scores are ties and keep the lower index.
      if (std::abs(dj) > best_score * (1.0 + 1e-9)) {
        best_score = std::abs(dj);
        best = j;
      }
    }
    return best;
  }

  SolverStatus iterate() {
    refactor();
    compute_duals();
    bool fresh = true;

    while (true) {
      std::size_t q = choose_entering();
      if (q == npos) {
        if (fresh) return SolverStatus::Optimal;
        refactor();
        compute_duals();
        fresh = true;
        continue;
      }
      if (iterations_ >= max_iterations_) return SolverStatus::IterationLimit;

      Eigen::VectorXd alpha = dense_column(q);
      factor_.ftran(alpha);
      const double dir = d_[q] < 0.0 ? 1.0 : -1.0;

      // Ratio test over basic variables; ties prefer larger pivots, then lower
      // variable index (lowest index only under Bland's rule).
      std::size_t leave = npos;
      double best_ratio = kInfinity;
      double best_pivot = 0.0;
      double alpha_max = 0.0;
      for (std::size_t i = 0; i < m_; ++i) alpha_max = std::max(alpha_max, std::abs(alpha[static_cast<Eigen::Index>(i)]));
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = alpha[static_cast<Eigen::Index>(i)];
        if (std::abs(a) <= cfg_.pivot_tolerance) continue;
        const double delta = -dir * a;
        const std::size_t j = basis_[i];
        double ratio;
        if (delta < 0.0) {
          if (!std::isfinite(lo_[j])) continue;
          ratio = (x_[j] - lo_[j]) / -delta;
        } else {
          if (!std::isfinite(hi_[j])) continue;
          ratio = (hi_[j] - x_[j]) / delta;
        }
        ratio = std::max(ratio, 0.0);
        const double tie = 1e-10 * (1.0 + std::min(ratio, best_ratio));
        bool take = false;
        if (leave == npos || ratio < best_ratio - tie) {
          take = true;
        } else if (ratio <= best_ratio + tie) {
          if (bland_) {
            take = j < basis_[leave];
          } else if (std::abs(a) > best_pivot * (1.0 + 1e-9)) {
            take = true;
          } else if (std::abs(a) >= best_pivot * (1.0 - 1e-9)) {
            take = j < basis_[leave];
          }
        }
        if (take) {
          leave = i;
          best_ratio = ratio;
          best_pivot = std::abs(a);
        }
      }

      const double span = dir > 0.0 ? hi_[q] - x_[q] : x_[q] - lo_[q];
      if (leave == npos && !std::isfinite(span)) return SolverStatus::Unbounded;
      const bool flip = leave == npos || span < best_ratio - 1e-10 * (1.0 + span);
      const double theta = flip ? span : best_ratio;

      ++iterations_;
      if (theta <= 1e-12) {
        if (++degenerate_run_ >= cfg_.stall_threshold) bland_ = true;
      } else {
        degenerate_run_ = 0;
        bland_ = cfg_.stall_threshold == 0;
      }

      if (theta != 0.0) {
        x_[q] += dir * theta;
        for (std::size_t i = 0; i < m_; ++i) x_[basis_[i]] -= dir * theta * alpha[static_cast<Eigen::Index>(i)];
      }

      if (flip) {
        x_[q] = dir > 0.0 ? hi_[q] : lo_[q];
        fresh = false;
        continue;
      }

      const std::size_t out = basis_[leave];
      const double a_out = alpha[static_cast<Eigen::Index>(leave)];
      x_[out] = (-dir * a_out) < 0.0 ? lo_[out] : hi_[out];
      pos_[out] = npos;
      basis_[leave] = q;
      pos_[q] = leave;
      // An artificial that leaves never comes back.
      if (out >= n_) hi_[out] = 0.0, x_[out] = 0.0;

      if (factor_.eta_count() + 1 >= cfg_.refactor_interval || std::abs(a_out) < 1e-7 * alpha_max) {
        refactor();
      } else {
        factor_.push_eta(leave, alpha);
      }
      compute_duals();
      fresh = false;
    }
  }

  bool primal_feasible() const {
    const auto residual = row_residuals(lp_, std::span<const double>(x_.data(), n_));
    double scale = 1.0;
    for (std::size_t j = 0; j < n_; ++j) scale = std::max(scale, std::abs(x_[j]));
    const double tol = cfg_.feasibility_tolerance * scale;
    for (double r : residual) {
      if (r > tol) return false;
    }
    for (std::size_t j = 0; j < n_; ++j) {
      if (x_[j] < lo_[j] - tol || x_[j] > hi_[j] + tol) return false;
    }
    return true;
  }

  SolverResult make_result(SolverStatus status) const {
    SolverResult result;
    result.status = status;
    result.sense = lp_.sense();
    result.iterations = iterations_;
    result.refactorizations = refactorizations_;
    result.x.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_));
    for (std::size_t j = 0; j < n_; ++j) {
      // Clean basic values that sit on a bound within tolerance.
      const double tol = cfg_.feasibility_tolerance * std::max(1.0, std::abs(result.x[j]));
      if (std::abs(result.x[j] - lo_[j]) <= tol) result.x[j] = lo_[j];
      else if (std::abs(result.x[j] - hi_[j]) <= tol) result.x[j] = hi_[j];
    }
    result.y = y_;
    result.y.resize(m_, 0.0);
    const double orientation = lp_.sense() == ObjectiveSense::Maximize ? -1.0 : 1.0;
    result.reduced_costs.resize(n_);
    result.column_status.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) {
      result.reduced_costs[j] = orientation * d_[j];
      if (pos_[j] != npos) {
        result.column_status[j] = VariableStatus::Basic;
      } else if (lo_[j] == hi_[j]) {
        result.column_status[j] = d_[j] < 0.0 ? VariableStatus::AtUpper : VariableStatus::AtLower;
      } else if (x_[j] == hi_[j]) {
        result.column_status[j] = VariableStatus::AtUpper;
      } else if (x_[j] == lo_[j]) {
        result.column_status[j] = VariableStatus::AtLower;
      } else {
        result.column_status[j] = VariableStatus::Free;
      }
    }
    result.objective = lp_.objective_value(result.x);
    return result;
  }

  const LinearProgram& lp_;
  const SolverConfig& cfg_;
  std::size_t m_;
  std::size_t n_;
  std::size_t total_;
  std::size_t max_iterations_ = 0;

  std::vector<double> lo_, hi_, x_, cost_, d_, y_;
  std::vector<double> art_sign_;
  std::vector<std::size_t> basis_;
  std::vector<std::size_t> pos_;
  BasisFactor factor_;

  std::size_t iterations_ = 0;
  std::size_t refactorizations_ = 0;
  std::size_t degenerate_run_ = 0;
  bool bland_ = false;
};

}  // namespace detail

inline SolverResult solve(const LinearProgram& lp, const SolverConfig& cfg = {}) {
  return detail::RevisedSimplex(lp, cfg).run();
}

struct KktReport {
  double primal_residual = 0.0;
  double bound_violation = 0.0;
  double dual_infeasibility = 0.0;
  double complementarity = 0.0;
  double duality_gap = 0.0;
  bool passed = false;

  double worst() const {
    return std::max({primal_residual, bound_violation, dual_infeasibility, complementarity, duality_gap});
  }
};

/// Recomputes optimality conditions from (x, y) alone. Reduced costs d are
/// split into a lower-bound multiplier max(d,0) and an upper-bound
/// multiplier max(-d,0) of the minimization form.
inline KktReport verify_kkt(const LinearProgram& lp, const SolverResult& result, double tol) {
  if (result.x.size() != lp.cols() || result.y.size() != lp.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "solution does not match program dimensions");
  }
  KktReport report;
  for (double r : row_residuals(lp, result.x)) report.primal_residual = std::max(report.primal_residual, r);

  const double orientation = lp.sense() == ObjectiveSense::Maximize ? -1.0 : 1.0;
  const auto aty = lp.transpose_multiply(result.y);
  double primal_min = 0.0;
  double dual_min = 0.0;
  for (std::size_t r = 0; r < lp.rows(); ++r) dual_min += lp.rhs()[r] * result.y[r];

  for (std::size_t j = 0; j < lp.cols(); ++j) {
    const double x = result.x[j];
    const double lo = lp.lower(j);
    const double hi = lp.upper(j);
    report.bound_violation = std::max({report.bound_violation, lo - x, x - hi});

    const double c = orientation * lp.objective(j);
    primal_min += c * x;
    const double d = c - aty[j];
    const double mu = std::max(d, 0.0);
    const double lambda = std::max(-d, 0.0);
    if (std::isfinite(lo)) {
      report.complementarity = std::max(report.complementarity, std::abs((x - lo) * mu));
      dual_min += lo * mu;
    } else {
      report.dual_infeasibility = std::max(report.dual_infeasibility, mu);
    }
    if (std::isfinite(hi)) {
      report.complementarity = std::max(report.complementarity, std::abs((hi - x) * lambda));
      dual_min -= hi * lambda;
    } else {
      report.dual_infeasibility = std::max(report.dual_infeasibility, lambda);
    }
  }
  report.duality_gap = std::abs(primal_min - dual_min);
  report.passed = report.worst() <= tol;
  return report;
}

/// Upper-bound multiplier per column: positive only for columns held at
/// their upper bound.
inline std::vector<double> capacity_duals(const SolverResult& result) {
  if (result.status != SolverStatus::Optimal) {
    throw Error(ErrorCode::NotOptimal, std::string("solver status is ") + std::string(to_string(result.status)));
  }
  const double orientation = result.sense == ObjectiveSense::Maximize ? 1.0 : -1.0;
  std::vector<double> lambda(result.x.size(), 0.0);
  for (std::size_t j = 0; j < lambda.size(); ++j) {
    if (result.column_status[j] == VariableStatus::AtUpper) {
      lambda[j] = std::max(0.0, orientation * result.reduced_costs[j]);
    }
  }
  return lambda;
}

}  // namespace stclear

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stclear/clearing_lp.hpp"
#include "stclear/market.hpp"
#include "stclear/scenario.hpp"
#include "stclear/settlement.hpp"
#include "stclear/simplex.hpp"

namespace stclear {

enum class CheckStatus { Pass, Fail, Skipped, Inconclusive };

constexpr std::string_view to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Skipped: return "skipped";
    case CheckStatus::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

/// Worst residual over the items examined; `tolerance` belongs to the item
/// with the largest residual-to-tolerance ratio.
struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  double residual = 0.0;
  double tolerance = 0.0;
  std::string offender;
  std::string detail;

  bool ok() const noexcept { return status == CheckStatus::Pass || status == CheckStatus::Skipped; }
};

struct AuditConfig {
  /// Every comparison uses tol = relative_tolerance * (1 + magnitude).
  double relative_tolerance = 1e-6;
  SolverConfig solver;
  /// Largest stakeholder count for which the explicit dual is solved; beyond
  /// it the primal duals are certified against the dual program instead.
  std::size_t dual_solve_limit = 2000;

  static AuditConfig strict() {
    AuditConfig cfg;
    cfg.relative_tolerance *= 0.01;
    return cfg;
  }
};

struct AuditReport {
  std::vector<CheckResult> checks;
  SolverStatus solver_status = SolverStatus::Optimal;
  double surplus = 0.0;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.ok(); });
  }
  bool inconclusive() const {
    return std::any_of(checks.begin(), checks.end(),
                       [](const CheckResult& c) { return c.status == CheckStatus::Inconclusive; });
  }
  const CheckResult* find(std::string_view name) const {
    for (const auto& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
};

namespace detail {

class Tally {
 public:
  explicit Tally(std::string name) { result_.name = std::move(name); }

  void add(double residual, double tol, std::string_view subject) {
    const double ratio = residual / tol;
    if (ratio > worst_ratio_ || (!seen_)) {
      worst_ratio_ = ratio;
      result_.residual = residual;
      result_.tolerance = tol;
      if (residual > tol) result_.offender = std::string(subject);
    }
    seen_ = true;
    if (residual > tol) result_.status = CheckStatus::Fail;
  }

  CheckResult finish(std::string detail = {}) {
    result_.detail = std::move(detail);
    return std::move(result_);
  }

 private:
  CheckResult result_;
  double worst_ratio_ = 0.0;
  bool seen_ = false;
};

inline bool provider(StakeholderClass cls) { return cls != StakeholderClass::Consumer; }

}  // namespace detail

/// No stakeholder loses money.
inline CheckResult audit_profit_nonnegativity(const SettlementReport& report, double rel = 1e-6) {
  detail::Tally tally("profit_nonnegativity");
  for (const auto& s : report.stakeholders) {
    const double tol = rel * (1.0 + std::abs(s.price * s.allocation) + std::abs(s.bid * s.allocation));
    tally.add(std::max(0.0, -s.profit), tol, s.id);
  }
  return tally.finish();
}

/// Space-time surplus is at least the surplus with temporal transport shut.
inline CheckResult audit_surplus_dominance(const MarketInstance& instance, const AuditConfig& cfg = {},
                                           std::optional<double> st_surplus = std::nullopt) {
  CheckResult out;
  out.name = "surplus_dominance";
  double st = 0.0;
  if (st_surplus) {
    st = *st_surplus;
  } else {
    const auto sol = clear_market(instance, cfg.solver);
    if (!sol.optimal()) {
      out.status = CheckStatus::Inconclusive;
      out.detail = "space-time solve " + std::string(to_string(sol.status()));
      return out;
    }
    st = sol.surplus;
  }
  const auto qss = clear_market(restrict_to_qss(instance), cfg.solver);
  if (!qss.optimal()) {
    out.status = CheckStatus::Inconclusive;
    out.detail = "quasi-steady solve " + std::string(to_string(qss.status()));
    return out;
  }
  detail::Tally tally(out.name);
  tally.add(std::max(0.0, qss.surplus - st), cfg.relative_tolerance * (1.0 + std::abs(st) + std::abs(qss.surplus)),
            "surplus");
  return tally.finish("st=" + detail::format_number(st) + " qss=" + detail::format_number(qss.surplus));
}

/// KKT of the primal plus strong duality against the explicit dual program.
inline CheckResult audit_competitive_equilibrium(const MarketInstance& instance, const ClearingSolution& solution,
                                                 const AuditConfig& cfg = {}) {
  const double rel = cfg.relative_tolerance;
  const LinearProgram& lp = solution.program.lp;
  const SolverResult& result = solution.result;
  detail::Tally tally("competitive_equilibrium");

  double max_x = 0.0;
  double max_c = 0.0;
  double value = std::abs(result.objective);
  for (std::size_t j = 0; j < lp.cols(); ++j) {
    max_x = std::max({max_x, std::abs(result.x[j]), std::isfinite(lp.upper(j)) ? lp.upper(j) : 0.0});
    max_c = std::max(max_c, std::abs(lp.objective(j)));
    value += std::abs(lp.objective(j) * result.x[j]);
  }
  const double tol_primal = rel * (1.0 + max_x);
  const double tol_value = rel * (1.0 + value);

  const KktReport kkt = verify_kkt(lp, result, kInfinity);
  tally.add(kkt.primal_residual, tol_primal, "primal_residual");
  tally.add(kkt.bound_violation, tol_primal, "bound_violation");
  tally.add(kkt.dual_infeasibility, rel * (1.0 + max_c), "dual_infeasibility");
  tally.add(kkt.complementarity, tol_value, "complementarity");
  tally.add(kkt.duality_gap, tol_value, "duality_gap");

  // Certify (prices, capacity duals) as a feasible point of the explicit dual
  // whose objective equals the primal surplus.
  const DualProgram dual = assemble_dual(instance);
  std::vector<double> point(dual.lp.cols(), 0.0);
  for (std::size_t r = 0; r < dual.index.rows(); ++r) point[dual.price_column(r)] = result.y[r];
  for (std::size_t j = 0; j < dual.index.columns(); ++j) point[dual.lambda_column(j)] = solution.capacity_duals[j];
  const auto activity = dual.lp.multiply(point);
  double dual_objective = 0.0;
  for (std::size_t j = 0; j < dual.index.columns(); ++j) {
    dual_objective += dual.lp.objective(dual.lambda_column(j)) * solution.capacity_duals[j];
    // Slack sign +1: activity <= rhs; sign -1 (consumers): activity >= rhs.
    const double slack_sign = dual.lp.column(dual.slack_column(j))[0].value;
    const double violation = slack_sign > 0.0 ? activity[j] - dual.lp.rhs()[j] : dual.lp.rhs()[j] - activity[j];
    tally.add(std::max(0.0, violation), rel * (1.0 + std::abs(dual.lp.rhs()[j]) + std::abs(activity[j])),
              dual.index.id(j));
  }
  tally.add(std::abs(dual_objective - result.objective), tol_value, "certified_dual_objective");

  std::string detail = "certified";
  if (dual.index.columns() <= cfg.dual_solve_limit) {
    const SolverResult dual_result = solve(dual.lp, cfg.solver);
    if (dual_result.status != SolverStatus::Optimal) {
      CheckResult out = tally.finish("explicit dual " + std::string(to_string(dual_result.status)));
      out.status = dual_result.status == SolverStatus::IterationLimit ? CheckStatus::Inconclusive : CheckStatus::Fail;
      return out;
    }
    tally.add(std::abs(dual_result.objective - result.objective), tol_value, "strong_duality");
    detail = "dual_objective=" + detail::format_number(dual_result.objective);
  }
  return tally.finish(detail);
}

/// Payments in equal payments out, with suppliers and consumers grouped by
/// bid sign: D+ purchases and G- fees fund D- rebates, G+ sales, transport
/// and technology services.
inline CheckResult audit_revenue_adequacy(const SettlementReport& report, double rel = 1e-6) {
  double sources = 0.0;
  double sinks = 0.0;
  double magnitude = 0.0;
  for (const auto& s : report.stakeholders) {
    const double v = s.price * s.allocation;
    magnitude += std::abs(v);
    switch (s.cls) {
      case StakeholderClass::Consumer: (s.bid >= 0.0 ? sources : sinks) += s.bid >= 0.0 ? v : -v; break;
      case StakeholderClass::Supplier: (s.bid >= 0.0 ? sinks : sources) += s.bid >= 0.0 ? v : -v; break;
      default: sinks += v; break;
    }
  }
  detail::Tally tally("revenue_adequacy");
  tally.add(std::abs(sources - sinks), rel * (1.0 + magnitude), "regrouped_balance");
  tally.add(std::abs(report.streams.grand_total), rel * (1.0 + report.streams.magnitude()), "grand_total");
  return tally.finish();
}

/// Cleared stakeholders never trade against their bid.
inline CheckResult audit_cleared_price_bounds(const SettlementReport& report, double rel = 1e-6) {
  detail::Tally tally("cleared_price_bounds");
  for (const auto& s : report.stakeholders) {
    if (s.saturation == Saturation::Dry) continue;
    const double gap = detail::provider(s.cls) ? s.bid - s.price : s.price - s.bid;
    tally.add(std::max(0.0, gap), rel * (1.0 + std::abs(s.price) + std::abs(s.bid)), s.id);
  }
  return tally.finish();
}

/// Prices stay within bid plus capacity dual; stakeholders whose capacity
/// bound is slack get the sharpened bound with a zero capacity dual.
inline CheckResult audit_capacity_price_bounds(const SettlementReport& report, double rel = 1e-6) {
  detail::Tally tally("capacity_price_bounds");
  for (const auto& s : report.stakeholders) {
    const bool capacity_active = s.saturation == Saturation::AtCapacity || s.capacity <= 0.0;
    const double lambda = capacity_active ? s.capacity_dual : 0.0;
    const double excess = detail::provider(s.cls) ? s.price - s.bid - lambda : s.bid - lambda - s.price;
    const double tol = rel * (1.0 + std::abs(s.price) + std::abs(s.bid) + std::abs(s.capacity_dual));
    tally.add(std::max(0.0, excess), tol, s.id);
    if (!capacity_active) tally.add(std::abs(s.capacity_dual), tol, s.id);
  }
  return tally.finish();
}

/// Only stakeholders at capacity earn, and never more than their capacity
/// dual times capacity.
inline CheckResult audit_profit_capacity_rule(const SettlementReport& report, double rel = 1e-6) {
  detail::Tally tally("profit_capacity_rule");
  for (const auto& s : report.stakeholders) {
    const double tol = rel * (1.0 + std::abs(s.price * s.allocation) + std::abs(s.bid * s.allocation) +
                              std::abs(s.capacity_dual * s.capacity));
    if (s.saturation == Saturation::AtCapacity) {
      tally.add(std::max(0.0, s.profit - s.capacity_dual * s.capacity), tol, s.id);
    } else {
      tally.add(std::max(0.0, s.profit), tol, s.id);
    }
  }
  return tally.finish();
}

/// A market that trades at all has someone at capacity.
inline CheckResult audit_at_least_one_saturated(const SettlementReport& report) {
  CheckResult out;
  out.name = "at_least_one_saturated";
  const bool dry = std::all_of(report.stakeholders.begin(), report.stakeholders.end(),
                               [](const auto& s) { return s.saturation == Saturation::Dry; });
  if (dry) {
    out.status = CheckStatus::Skipped;
    out.detail = "dry market";
    return out;
  }
  const auto saturated = std::count_if(report.stakeholders.begin(), report.stakeholders.end(),
                                       [](const auto& s) { return s.saturation == Saturation::AtCapacity; });
  out.residual = saturated == 0 ? 1.0 : 0.0;
  out.status = saturated == 0 ? CheckStatus::Fail : CheckStatus::Pass;
  out.detail = std::to_string(saturated) + " at capacity";
  return out;
}

/// Transporters with interior flow see a price spread equal to their bid.
inline CheckResult audit_volatility_corridor(const SettlementReport& report, double rel = 1e-6) {
  detail::Tally tally("volatility_corridor");
  std::size_t interior = 0;
  for (const auto& s : report.stakeholders) {
    if (s.cls != StakeholderClass::Transporter || s.saturation != Saturation::Partial) continue;
    ++interior;
    tally.add(std::abs(s.price - s.bid), rel * (1.0 + std::abs(s.price) + std::abs(s.bid)), s.id);
  }
  return tally.finish(std::to_string(interior) + " interior transporters");
}

inline CheckResult audit_aggregation_identities(const SettlementReport& report, double rel = 1e-6) {
  static constexpr std::array<std::string_view, 4> kNames{"suppliers", "consumers", "transporters", "technologies"};
  detail::Tally tally("aggregation_identities");
  const double tol = 0.1 * rel * (1.0 + std::abs(report.surplus) + report.streams.magnitude());
  for (std::size_t c = 0; c < 4; ++c) tally.add(report.aggregation_residuals[c], tol, kNames[c]);
  return tally.finish();
}

/// All checks on a given (possibly externally supplied) solution.
inline AuditReport audit_solution(const MarketInstance& instance, const ClearingSolution& solution,
                                  const AuditConfig& cfg = {}) {
  AuditReport report;
  report.solver_status = solution.status();
  CheckResult status;
  status.name = "solver_status";
  status.detail = std::string(to_string(solution.status()));
  if (!solution.optimal()) {
    status.status = solution.status() == SolverStatus::IterationLimit ? CheckStatus::Inconclusive : CheckStatus::Fail;
    report.checks.push_back(status);
    return report;
  }
  report.checks.push_back(status);
  report.surplus = solution.surplus;

  SettlementReport settlement;
  try {
    settlement = settle(solution, instance);
  } catch (const Error& e) {
    CheckResult failed;
    failed.name = "settlement";
    failed.status = CheckStatus::Fail;
    failed.detail = e.what();
    report.checks.push_back(failed);
    return report;
  }
  const double rel = cfg.relative_tolerance;
  report.checks.push_back(audit_profit_nonnegativity(settlement, rel));
  report.checks.push_back(audit_surplus_dominance(instance, cfg, solution.surplus));
  report.checks.push_back(audit_competitive_equilibrium(instance, solution, cfg));
  report.checks.push_back(audit_revenue_adequacy(settlement, rel));
  report.checks.push_back(audit_cleared_price_bounds(settlement, rel));
  report.checks.push_back(audit_capacity_price_bounds(settlement, rel));
  report.checks.push_back(audit_profit_capacity_rule(settlement, rel));
  report.checks.push_back(audit_at_least_one_saturated(settlement));
  report.checks.push_back(audit_volatility_corridor(settlement, rel));
  report.checks.push_back(audit_aggregation_identities(settlement, rel));
  return report;
}

inline AuditReport run_full_audit(const MarketInstance& instance, const AuditConfig& cfg = {}) {
  return audit_solution(instance, clear_market(instance, cfg.solver), cfg);
}

}  // namespace stclear

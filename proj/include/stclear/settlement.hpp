#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stclear/clearing_lp.hpp"
#include "stclear/error.hpp"
#include "stclear/market.hpp"
#include "stclear/simplex.hpp"

namespace stclear {

/// Allocations and prices indexed like the clearing program: `allocation`
/// and `capacity_duals` per column, `prices` per row (max orientation).
struct ClearingSolution {
  ClearingProgram program;
  SolverResult result;
  std::vector<double> allocation;
  std::vector<std::optional<double>> prices;
  std::vector<double> capacity_duals;
  double surplus = 0.0;

  SolverStatus status() const noexcept { return result.status; }
  bool optimal() const noexcept { return result.status == SolverStatus::Optimal; }
  const VariableIndex& index() const noexcept { return program.index; }

  std::optional<double> price(const NodeProduct& key) const {
    const auto r = program.index.row_of(key);
    if (!r) return std::nullopt;
    return prices[*r];
  }

  double allocation_of(std::string_view id) const {
    const auto j = program.index.column_of(id);
    if (!j) throw Error(ErrorCode::Validation, "unknown stakeholder '" + std::string(id) + "'");
    return allocation[*j];
  }
};

inline ClearingSolution clear_market(const MarketInstance& instance, const SolverConfig& cfg = {}) {
  ClearingSolution out;
  out.program = assemble_primal(instance);
  out.result = solve(out.program.lp, cfg);
  out.allocation = out.result.x;
  if (out.optimal()) {
    out.prices.assign(out.result.y.begin(), out.result.y.end());
    out.capacity_duals = capacity_duals(out.result);
    out.surplus = out.result.objective;
  } else {
    out.prices.assign(out.program.lp.rows(), std::nullopt);
    out.capacity_duals.assign(out.program.lp.cols(), 0.0);
  }
  return out;
}

/// Capacity dual implied by a price vector: the stakeholder's per-unit margin
/// when positive.
inline double implied_capacity_dual(StakeholderClass cls, double price, double bid) {
  return std::max(0.0, cls == StakeholderClass::Consumer ? bid - price : price - bid);
}

/// Rebuilds a solution from externally supplied allocations and row prices
/// (for auditing a solution file). Capacity duals are the implied margins of
/// at-capacity stakeholders. Missing prices stay undefined.
inline ClearingSolution solution_from_values(const MarketInstance& instance, std::vector<double> allocation,
                                             std::vector<std::optional<double>> prices);

enum class Saturation { AtCapacity, Partial, Dry };

constexpr std::string_view to_string(Saturation s) {
  switch (s) {
    case Saturation::AtCapacity: return "at_capacity";
    case Saturation::Partial: return "partial";
    case Saturation::Dry: return "dry";
  }
  return "unknown";
}

inline constexpr double kSaturationTolerance = 1e-7;

inline Saturation classify(double allocation, double capacity, double tol = kSaturationTolerance) {
  if (capacity <= 0.0 || allocation <= tol) return Saturation::Dry;
  if (allocation >= capacity - tol * std::max(1.0, capacity)) return Saturation::AtCapacity;
  return Saturation::Partial;
}

namespace detail {

struct StakeholderView {
  StakeholderClass cls;
  double capacity;
  double bid;
};

inline StakeholderView view(const MarketInstance& instance, const ColumnRef& ref) {
  switch (ref.cls) {
    case StakeholderClass::Supplier: {
      const auto& s = instance.suppliers[ref.index];
      return {ref.cls, s.capacity, s.bid};
    }
    case StakeholderClass::Consumer: {
      const auto& c = instance.consumers[ref.index];
      return {ref.cls, c.capacity, c.bid};
    }
    case StakeholderClass::Transporter: {
      const auto& l = instance.transporters[ref.index];
      return {ref.cls, l.capacity, l.bid};
    }
    case StakeholderClass::Technology: {
      const auto& m = instance.technologies[ref.index];
      return {ref.cls, m.capacity, m.bid};
    }
  }
  return {ref.cls, 0.0, 0.0};
}

/// Identity price of column j, or nullopt if any required nodal price is
/// undefined.
inline std::optional<double> identity_price(const MarketInstance& instance, const ClearingSolution& solution,
                                            std::size_t j) {
  const ColumnRef& ref = solution.index().column(j);
  auto at = [&](const SpaceTimeNode& s, const std::string& p) { return solution.price({s.time, s.node, p}); };
  switch (ref.cls) {
    case StakeholderClass::Supplier: {
      const auto& i = instance.suppliers[ref.index];
      return at(i.location, i.product);
    }
    case StakeholderClass::Consumer: {
      const auto& c = instance.consumers[ref.index];
      return at(c.location, c.product);
    }
    case StakeholderClass::Transporter: {
      const auto& l = instance.transporters[ref.index];
      const auto in = at(l.arc.receiving, l.product);
      const auto out = at(l.arc.base, l.product);
      if (!in || !out) return std::nullopt;
      return *in - *out;
    }
    case StakeholderClass::Technology: {
      const auto& m = instance.technologies[ref.index];
      double total = 0.0;
      for (const auto& [p, gamma] : m.outputs) {
        const auto v = at(m.location, p);
        if (!v) return std::nullopt;
        total += gamma * *v;
      }
      for (const auto& [p, gamma] : m.inputs) {
        const auto v = at(m.location, p);
        if (!v) return std::nullopt;
        total -= gamma * *v;
      }
      return total;
    }
  }
  return std::nullopt;
}

}  // namespace detail

inline ClearingSolution solution_from_values(const MarketInstance& instance, std::vector<double> allocation,
                                             std::vector<std::optional<double>> prices) {
  ClearingSolution out;
  out.program = assemble_primal(instance);
  const LinearProgram& lp = out.program.lp;
  if (allocation.size() != lp.cols() || prices.size() != lp.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "solution does not match instance dimensions");
  }
  out.allocation = std::move(allocation);
  out.prices = std::move(prices);
  out.capacity_duals.assign(lp.cols(), 0.0);

  SolverResult& r = out.result;
  r.status = SolverStatus::Optimal;
  r.sense = lp.sense();
  r.x = out.allocation;
  r.y.resize(lp.rows());
  for (std::size_t k = 0; k < lp.rows(); ++k) r.y[k] = out.prices[k].value_or(0.0);
  const auto aty = lp.transpose_multiply(r.y);
  r.reduced_costs.resize(lp.cols());
  r.column_status.resize(lp.cols());
  for (std::size_t j = 0; j < lp.cols(); ++j) {
    r.reduced_costs[j] = lp.objective(j) + aty[j];
    const auto sv = detail::view(instance, out.index().column(j));
    const auto pj = detail::identity_price(instance, out, j);
    switch (classify(r.x[j], sv.capacity)) {
      case Saturation::AtCapacity:
        r.column_status[j] = VariableStatus::AtUpper;
        if (pj) out.capacity_duals[j] = implied_capacity_dual(sv.cls, *pj, sv.bid);
        break;
      case Saturation::Dry: r.column_status[j] = VariableStatus::AtLower; break;
      case Saturation::Partial: r.column_status[j] = VariableStatus::Basic; break;
    }
  }
  r.objective = lp.objective_value(r.x);
  out.surplus = r.objective;
  return out;
}

inline std::map<std::string, double> stakeholder_prices(const ClearingSolution& solution,
                                                        const MarketInstance& instance) {
  std::map<std::string, double> out;
  for (std::size_t j = 0; j < solution.index().columns(); ++j) {
    const auto price = detail::identity_price(instance, solution, j);
    if (!price) {
      const auto sv = detail::view(instance, solution.index().column(j));
      if (classify(solution.allocation[j], sv.capacity) != Saturation::Dry) {
        throw Error(ErrorCode::UndefinedNodalPrice, "stakeholder '" + solution.index().id(j) + "' has no price");
      }
      out.emplace(solution.index().id(j), 0.0);
      continue;
    }
    out.emplace(solution.index().id(j), *price);
  }
  return out;
}

/// (price - bid) * x for providers, (bid - price) * x for consumers.
inline std::map<std::string, double> stakeholder_profits(const ClearingSolution& solution,
                                                         const std::map<std::string, double>& prices,
                                                         const MarketInstance& instance) {
  std::map<std::string, double> out;
  for (std::size_t j = 0; j < solution.index().columns(); ++j) {
    const std::string& id = solution.index().id(j);
    const auto sv = detail::view(instance, solution.index().column(j));
    const double margin = sv.cls == StakeholderClass::Consumer ? sv.bid - prices.at(id) : prices.at(id) - sv.bid;
    out.emplace(id, margin * solution.allocation[j]);
  }
  return out;
}

inline std::map<std::string, Saturation> classify(const ClearingSolution& solution, const MarketInstance& instance,
                                                  double tol = kSaturationTolerance) {
  std::map<std::string, Saturation> out;
  for (std::size_t j = 0; j < solution.index().columns(); ++j) {
    const auto sv = detail::view(instance, solution.index().column(j));
    out.emplace(solution.index().id(j), classify(solution.allocation[j], sv.capacity, tol));
  }
  return out;
}

/// Revenue table: consumers pay (negative), providers collect (positive).
/// Spatiotemporal transport is included in `spatial_transport`;
/// `spatiotemporal_transport` is its informational subtotal.
struct RevenueStreams {
  double consumers = 0.0;
  double suppliers = 0.0;
  double temporal_transport = 0.0;
  double spatial_transport = 0.0;
  double spatiotemporal_transport = 0.0;
  bool has_spatiotemporal = false;
  double technologies = 0.0;
  double grand_total = 0.0;

  double magnitude() const {
    return std::abs(consumers) + std::abs(suppliers) + std::abs(temporal_transport) + std::abs(spatial_transport) +
           std::abs(technologies);
  }
};

inline RevenueStreams revenue_streams(const ClearingSolution& solution, const std::map<std::string, double>& prices,
                                      const MarketInstance& instance) {
  RevenueStreams s;
  for (std::size_t j = 0; j < solution.index().columns(); ++j) {
    const ColumnRef& ref = solution.index().column(j);
    const double value = prices.at(solution.index().id(j)) * solution.allocation[j];
    switch (ref.cls) {
      case StakeholderClass::Supplier: s.suppliers += value; break;
      case StakeholderClass::Consumer: s.consumers -= value; break;
      case StakeholderClass::Technology: s.technologies += value; break;
      case StakeholderClass::Transporter: {
        const ArcClass cls = classify_arc(instance.transporters[ref.index].arc);
        if (cls == ArcClass::Temporal) {
          s.temporal_transport += value;
        } else {
          s.spatial_transport += value;
          if (cls == ArcClass::SpatioTemporal) {
            s.spatiotemporal_transport += value;
            s.has_spatiotemporal = true;
          }
        }
        break;
      }
    }
  }
  s.grand_total = s.consumers + s.suppliers + s.temporal_transport + s.spatial_transport + s.technologies;
  return s;
}

/// Per class, |sum over (s,p) of price times the class's flow at (s,p) minus
/// sum over stakeholders of identity price times allocation|. Order:
/// suppliers, consumers, transporters, technologies.
inline std::array<double, 4> aggregation_identity_check(const ClearingSolution& solution,
                                                        const std::map<std::string, double>& prices,
                                                        const MarketInstance& instance) {
  const VariableIndex& index = solution.index();
  // Per-row flow totals for each class, built from the instance, not the LP.
  std::array<std::vector<double>, 4> flow;
  for (auto& f : flow) f.assign(index.rows(), 0.0);
  auto row = [&](const SpaceTimeNode& s, const std::string& p) { return *index.row_of({s.time, s.node, p}); };
  std::array<double, 4> direct{};

  for (std::size_t j = 0; j < index.columns(); ++j) {
    const ColumnRef& ref = index.column(j);
    const double x = solution.allocation[j];
    const auto c = static_cast<std::size_t>(ref.cls);
    direct[c] += prices.at(index.id(j)) * x;
    switch (ref.cls) {
      case StakeholderClass::Supplier: {
        const auto& i = instance.suppliers[ref.index];
        flow[c][row(i.location, i.product)] += x;
        break;
      }
      case StakeholderClass::Consumer: {
        const auto& d = instance.consumers[ref.index];
        flow[c][row(d.location, d.product)] += x;
        break;
      }
      case StakeholderClass::Transporter: {
        const auto& l = instance.transporters[ref.index];
        flow[c][row(l.arc.receiving, l.product)] += x;
        flow[c][row(l.arc.base, l.product)] -= x;
        break;
      }
      case StakeholderClass::Technology: {
        const auto& m = instance.technologies[ref.index];
        for (const auto& [p, gamma] : m.outputs) flow[c][row(m.location, p)] += gamma * x;
        for (const auto& [p, gamma] : m.inputs) flow[c][row(m.location, p)] -= gamma * x;
        break;
      }
    }
  }

  std::array<double, 4> residual{};
  for (std::size_t c = 0; c < 4; ++c) {
    double nodal = 0.0;
    for (std::size_t r = 0; r < index.rows(); ++r) {
      if (flow[c][r] != 0.0 && solution.prices[r]) nodal += *solution.prices[r] * flow[c][r];
    }
    residual[c] = std::abs(nodal - direct[c]);
  }
  return residual;
}

struct StakeholderSettlement {
  std::string id;
  StakeholderClass cls = StakeholderClass::Supplier;
  double allocation = 0.0;
  double capacity = 0.0;
  double bid = 0.0;
  double price = 0.0;
  double profit = 0.0;
  double capacity_dual = 0.0;
  Saturation saturation = Saturation::Dry;
};

struct SettlementReport {
  std::vector<StakeholderSettlement> stakeholders;  // column order
  RevenueStreams streams;
  std::array<double, 4> aggregation_residuals{};
  double surplus = 0.0;
};

inline SettlementReport settle(const ClearingSolution& solution, const MarketInstance& instance) {
  if (!solution.optimal()) {
    throw Error(ErrorCode::NotOptimal, "cannot settle a " + std::string(to_string(solution.status())) + " solution");
  }
  const auto prices = stakeholder_prices(solution, instance);
  const auto profits = stakeholder_profits(solution, prices, instance);

  SettlementReport report;
  report.surplus = solution.surplus;
  const VariableIndex& index = solution.index();
  for (std::size_t j = 0; j < index.columns(); ++j) {
    const auto sv = detail::view(instance, index.column(j));
    StakeholderSettlement s;
    s.id = index.id(j);
    s.cls = sv.cls;
    s.allocation = solution.allocation[j];
    s.capacity = sv.capacity;
    s.bid = sv.bid;
    s.price = prices.at(s.id);
    s.profit = profits.at(s.id);
    s.capacity_dual = solution.capacity_duals[j];
    s.saturation = classify(s.allocation, s.capacity);
    report.stakeholders.push_back(std::move(s));
  }
  report.streams = revenue_streams(solution, prices, instance);
  report.aggregation_residuals = aggregation_identity_check(solution, prices, instance);
  return report;
}

}  // namespace stclear

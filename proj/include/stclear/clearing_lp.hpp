#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "stclear/linear_program.hpp"
#include "stclear/market.hpp"

namespace stclear {

/// Key of a clearing row; ordered by (time, node, product).
struct NodeProduct {
  std::size_t time = 0;
  std::string node;
  std::string product;

  auto operator<=>(const NodeProduct&) const = default;
  bool operator==(const NodeProduct&) const = default;

  SpaceTimeNode location() const { return {node, time}; }
  std::string label() const { return node + "@" + std::to_string(time) + ":" + product; }
};

struct ColumnRef {
  StakeholderClass cls = StakeholderClass::Supplier;
  std::size_t index = 0;  // position in the instance's vector for `cls`
};

/// Bijections stakeholder <-> column and (s,p) <-> row. Columns run
/// suppliers, consumers, transporters, technologies, each block sorted by id.
class VariableIndex {
 public:
  std::size_t columns() const noexcept { return columns_.size(); }
  std::size_t rows() const noexcept { return rows_.size(); }

  const ColumnRef& column(std::size_t j) const { return columns_.at(j); }
  const std::string& id(std::size_t j) const { return ids_.at(j); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  std::optional<std::size_t> column_of(std::string_view id) const {
    const auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t column_of(StakeholderClass cls, std::size_t index) const {
    return by_class_[static_cast<std::size_t>(cls)].at(index);
  }

  const NodeProduct& row(std::size_t r) const { return rows_.at(r); }
  const std::vector<NodeProduct>& row_keys() const noexcept { return rows_; }
  std::optional<std::size_t> row_of(const NodeProduct& key) const {
    const auto it = std::lower_bound(rows_.begin(), rows_.end(), key);
    if (it == rows_.end() || *it != key) return std::nullopt;
    return static_cast<std::size_t>(it - rows_.begin());
  }

 private:
  friend VariableIndex make_variable_index(const MarketInstance& instance);

  std::vector<ColumnRef> columns_;
  std::vector<std::string> ids_;
  std::map<std::string, std::size_t> by_id_;
  std::array<std::vector<std::size_t>, 4> by_class_;
  std::vector<NodeProduct> rows_;
};

/// Rows exist only for (s,p) pairs with at least one participant.
inline VariableIndex make_variable_index(const MarketInstance& instance) {
  VariableIndex index;

  std::set<NodeProduct> keys;
  for (const auto& i : instance.suppliers) keys.insert({i.location.time, i.location.node, i.product});
  for (const auto& j : instance.consumers) keys.insert({j.location.time, j.location.node, j.product});
  for (const auto& l : instance.transporters) {
    keys.insert({l.arc.base.time, l.arc.base.node, l.product});
    keys.insert({l.arc.receiving.time, l.arc.receiving.node, l.product});
  }
  for (const auto& m : instance.technologies) {
    for (const auto* yields : {&m.inputs, &m.outputs}) {
      for (const auto& [p, gamma] : *yields) keys.insert({m.location.time, m.location.node, p});
    }
  }
  index.rows_.assign(keys.begin(), keys.end());

  auto add_block = [&](StakeholderClass cls, const auto& items) {
    auto& slots = index.by_class_[static_cast<std::size_t>(cls)];
    slots.assign(items.size(), 0);
    for (std::size_t k : order_by_id(items)) {
      slots[k] = index.columns_.size();
      index.by_id_.emplace(items[k].id, index.columns_.size());
      index.columns_.push_back({cls, k});
      index.ids_.push_back(items[k].id);
    }
  };
  add_block(StakeholderClass::Supplier, instance.suppliers);
  add_block(StakeholderClass::Consumer, instance.consumers);
  add_block(StakeholderClass::Transporter, instance.transporters);
  add_block(StakeholderClass::Technology, instance.technologies);
  return index;
}

struct ClearingProgram {
  LinearProgram lp;
  VariableIndex index;
};

/// Total-surplus maximization: one column per stakeholder bounded by
/// [0, capacity], one product-balance row per participating (s,p).
inline ClearingProgram assemble_primal(const MarketInstance& instance) {
  require_valid(instance);

  ClearingProgram out{LinearProgram(0), make_variable_index(instance)};
  const VariableIndex& index = out.index;
  LinearProgram lp(index.rows(), ObjectiveSense::Maximize);
  for (std::size_t r = 0; r < index.rows(); ++r) lp.set_row_label(r, index.row(r).label());

  auto row = [&](const SpaceTimeNode& s, const std::string& p) {
    return *index.row_of({s.time, s.node, p});
  };

  for (std::size_t j = 0; j < index.columns(); ++j) {
    const ColumnRef& ref = index.column(j);
    switch (ref.cls) {
      case StakeholderClass::Supplier: {
        const auto& i = instance.suppliers[ref.index];
        lp.add_column(i.id, -i.bid, 0.0, i.capacity, {{row(i.location, i.product), 1.0}});
        break;
      }
      case StakeholderClass::Consumer: {
        const auto& c = instance.consumers[ref.index];
        lp.add_column(c.id, c.bid, 0.0, c.capacity, {{row(c.location, c.product), -1.0}});
        break;
      }
      case StakeholderClass::Transporter: {
        const auto& l = instance.transporters[ref.index];
        lp.add_column(l.id, -l.bid, 0.0, l.capacity,
                      {{row(l.arc.base, l.product), -1.0}, {row(l.arc.receiving, l.product), 1.0}});
        break;
      }
      case StakeholderClass::Technology: {
        const auto& m = instance.technologies[ref.index];
        std::vector<MatrixEntry> entries;
        for (const auto& [p, gamma] : m.inputs) entries.push_back({row(m.location, p), -gamma});
        for (const auto& [p, gamma] : m.outputs) entries.push_back({row(m.location, p), gamma});
        lp.add_column(m.id, -m.bid, 0.0, m.capacity, std::move(entries));
        break;
      }
    }
  }
  out.lp = std::move(lp);
  return out;
}

/// Explicit dual: min sum cap*lambda over free prices and lambda >= 0, one
/// inequality per stakeholder written as an equality with a sign-constrained
/// slack. Columns: prices [0, R), lambda [R, R+S), slacks [R+S, R+2S); the
/// stakeholder order matches the primal columns.
struct DualProgram {
  LinearProgram lp;
  VariableIndex index;

  std::size_t price_column(std::size_t row) const { return row; }
  std::size_t lambda_column(std::size_t primal_column) const { return index.rows() + primal_column; }
  std::size_t slack_column(std::size_t primal_column) const {
    return index.rows() + index.columns() + primal_column;
  }
};

inline DualProgram assemble_dual(const MarketInstance& instance) {
  require_valid(instance);

  DualProgram out{LinearProgram(0), make_variable_index(instance)};
  const VariableIndex& index = out.index;
  const std::size_t stakeholders = index.columns();
  LinearProgram lp(stakeholders, ObjectiveSense::Minimize);

  auto row = [&](const SpaceTimeNode& s, const std::string& p) {
    return *index.row_of({s.time, s.node, p});
  };

  // Price coefficients of each stakeholder's constraint, filled per column.
  std::vector<std::vector<MatrixEntry>> price_entries(index.rows());
  std::vector<double> slack_sign(stakeholders, 1.0);
  for (std::size_t j = 0; j < stakeholders; ++j) {
    const ColumnRef& ref = index.column(j);
    lp.set_row_label(j, index.id(j));
    switch (ref.cls) {
      case StakeholderClass::Supplier: {
        const auto& i = instance.suppliers[ref.index];
        price_entries[row(i.location, i.product)].push_back({j, 1.0});
        lp.set_rhs(j, i.bid);
        break;
      }
      case StakeholderClass::Consumer: {
        const auto& c = instance.consumers[ref.index];
        price_entries[row(c.location, c.product)].push_back({j, 1.0});
        lp.set_rhs(j, c.bid);
        slack_sign[j] = -1.0;
        break;
      }
      case StakeholderClass::Transporter: {
        const auto& l = instance.transporters[ref.index];
        price_entries[row(l.arc.receiving, l.product)].push_back({j, 1.0});
        price_entries[row(l.arc.base, l.product)].push_back({j, -1.0});
        lp.set_rhs(j, l.bid);
        break;
      }
      case StakeholderClass::Technology: {
        const auto& m = instance.technologies[ref.index];
        for (const auto& [p, gamma] : m.outputs) price_entries[row(m.location, p)].push_back({j, gamma});
        for (const auto& [p, gamma] : m.inputs) price_entries[row(m.location, p)].push_back({j, -gamma});
        lp.set_rhs(j, m.bid);
        break;
      }
    }
  }

  for (std::size_t r = 0; r < index.rows(); ++r) {
    lp.add_column("pi[" + index.row(r).label() + "]", 0.0, -kInfinity, kInfinity, std::move(price_entries[r]));
  }
  for (std::size_t j = 0; j < stakeholders; ++j) {
    const ColumnRef& ref = index.column(j);
    const double capacity = [&] {
      switch (ref.cls) {
        case StakeholderClass::Supplier: return instance.suppliers[ref.index].capacity;
        case StakeholderClass::Consumer: return instance.consumers[ref.index].capacity;
        case StakeholderClass::Transporter: return instance.transporters[ref.index].capacity;
        case StakeholderClass::Technology: return instance.technologies[ref.index].capacity;
      }
      return 0.0;
    }();
    // Consumers: pi + lambda >= bid; everyone else: (price identity) - lambda <= bid.
    const double lambda_sign = ref.cls == StakeholderClass::Consumer ? 1.0 : -1.0;
    lp.add_column("lambda[" + index.id(j) + "]", capacity, 0.0, kInfinity, {{j, lambda_sign}});
  }
  for (std::size_t j = 0; j < stakeholders; ++j) {
    lp.add_column("slack[" + index.id(j) + "]", 0.0, 0.0, kInfinity, {{j, slack_sign[j]}});
  }
  out.lp = std::move(lp);
  return out;
}

}  // namespace stclear

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "stclear/error.hpp"
#include "stclear/graph.hpp"

namespace stclear {

enum class StakeholderClass { Supplier, Consumer, Transporter, Technology };

constexpr std::string_view to_string(StakeholderClass cls) {
  switch (cls) {
    case StakeholderClass::Supplier: return "supplier";
    case StakeholderClass::Consumer: return "consumer";
    case StakeholderClass::Transporter: return "transporter";
    case StakeholderClass::Technology: return "technology";
  }
  return "unknown";
}

/// Offers product at a space-time node. A negative bid is a tipping fee.
struct Supplier {
  std::string id;
  SpaceTimeNode location;
  std::string product;
  double capacity = 0.0;
  double bid = 0.0;

  bool operator==(const Supplier&) const = default;
};

struct Consumer {
  std::string id;
  SpaceTimeNode location;
  std::string product;
  double capacity = 0.0;
  double bid = 0.0;

  bool operator==(const Consumer&) const = default;
};

/// Moves one product along an arc; temporal arcs model storage.
struct TransportProvider {
  std::string id;
  Arc arc;
  std::string product;
  double capacity = 0.0;
  double bid = 0.0;

  bool operator==(const TransportProvider&) const = default;
};

/// Converts inputs into outputs. Yields are per unit of the reference input,
/// whose own yield is exactly one; capacity is measured in reference units.
struct TechnologyProvider {
  std::string id;
  SpaceTimeNode location;
  std::map<std::string, double> inputs;
  std::map<std::string, double> outputs;
  std::string reference;
  double capacity = 0.0;
  double bid = 0.0;

  bool operator==(const TechnologyProvider&) const = default;
};

struct MarketInstance {
  std::vector<std::string> products;
  TimeGrid grid;
  std::vector<std::string> nodes;
  std::vector<Arc> arcs;
  std::vector<Supplier> suppliers;
  std::vector<Consumer> consumers;
  std::vector<TransportProvider> transporters;
  std::vector<TechnologyProvider> technologies;
  /// Free-form provenance of generated instances; ignored by clearing.
  std::map<std::string, std::string> metadata;

  bool operator==(const MarketInstance&) const = default;

  std::size_t stakeholder_count() const noexcept {
    return suppliers.size() + consumers.size() + transporters.size() + technologies.size();
  }
};

inline Graph graph_of(const MarketInstance& instance) {
  return build_graph(instance.nodes, instance.grid, instance.arcs);
}

struct Violation {
  std::string code;
  std::string subject;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }

  std::size_t count(std::string_view code) const {
    return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                  [code](const Violation& v) { return v.code == code; }));
  }

  std::string summary() const {
    std::string out;
    for (const auto& v : violations) {
      if (!out.empty()) out += "; ";
      out += v.code + " (" + v.subject + "): " + v.message;
    }
    return out;
  }
};

namespace detail {

class Validator {
 public:
  explicit Validator(const MarketInstance& instance) : instance_(instance) {
    products_.insert(instance.products.begin(), instance.products.end());
    nodes_.insert(instance.nodes.begin(), instance.nodes.end());
    arcs_.insert(instance.arcs.begin(), instance.arcs.end());
  }

  ValidationReport run() {
    if (!instance_.grid.valid()) add("InvalidTimeGrid", "grid", "times must be non-empty, increasing and uniform");
    if (products_.size() != instance_.products.size()) add("DuplicateProduct", "products", "repeated product id");
    if (nodes_.size() != instance_.nodes.size()) add("DuplicateNode", "nodes", "repeated node id");

    for (const Arc& a : instance_.arcs) check_arc(a, "arc");

    std::set<std::string> ids;
    auto check_id = [&](const std::string& id) {
      if (id.empty()) add("EmptyId", "stakeholder", "stakeholder id must be non-empty");
      else if (!ids.insert(id).second) add("DuplicateId", id, "stakeholder id used more than once");
    };

    for (const auto& s : instance_.suppliers) {
      check_id(s.id);
      check_location(s.location, s.id);
      check_product(s.product, s.id);
      check_amounts(s.id, s.capacity, s.bid);
    }
    for (const auto& c : instance_.consumers) {
      check_id(c.id);
      check_location(c.location, c.id);
      check_product(c.product, c.id);
      check_amounts(c.id, c.capacity, c.bid);
    }
    for (const auto& l : instance_.transporters) {
      check_id(l.id);
      check_product(l.product, l.id);
      check_amounts(l.id, l.capacity, l.bid);
      if (std::isfinite(l.bid) && l.bid < 0.0) add("NegativeTransportBid", l.id, "transport bids must be >= 0");
      if (check_arc(l.arc, l.id) && !arcs_.contains(l.arc)) {
        add("UnregisteredArc", l.id, "transporter arc is not in the instance arc list");
      }
    }
    for (const auto& m : instance_.technologies) {
      check_id(m.id);
      check_location(m.location, m.id);
      check_amounts(m.id, m.capacity, m.bid);
      if (std::isfinite(m.bid) && m.bid < 0.0) add("NegativeTechnologyBid", m.id, "technology bids must be >= 0");
      check_technology(m);
    }
    return std::move(report_);
  }

 private:
  void add(std::string code, std::string subject, std::string message) {
    report_.violations.push_back({std::move(code), std::move(subject), std::move(message)});
  }

  bool check_location(const SpaceTimeNode& s, const std::string& subject) {
    bool ok = true;
    if (!nodes_.contains(s.node)) {
      add("UnknownNode", subject, "node '" + s.node + "' is not registered");
      ok = false;
    }
    if (s.time >= instance_.grid.size()) {
      add("TimeOutOfRange", subject, "time index " + std::to_string(s.time) + " outside grid");
      ok = false;
    }
    return ok;
  }

  void check_product(const std::string& p, const std::string& subject) {
    if (!products_.contains(p)) add("UnknownProduct", subject, "product '" + p + "' is not registered");
  }

  bool check_arc(const Arc& a, const std::string& subject) {
    bool ok = check_location(a.base, subject);
    ok = check_location(a.receiving, subject) && ok;
    if (a.receiving.time < a.base.time) {
      add("BackwardTimeArc", subject, "arc moves product backwards in time");
      ok = false;
    }
    if (a.base == a.receiving) {
      add("SelfLoopArc", subject, "arc base and receiving nodes coincide");
      ok = false;
    }
    return ok;
  }

  void check_amounts(const std::string& subject, double capacity, double bid) {
    if (!std::isfinite(capacity) || !std::isfinite(bid)) {
      add("NonFiniteValue", subject, "capacity and bid must be finite");
      return;
    }
    if (capacity < 0.0) add("NegativeCapacity", subject, "capacity must be >= 0");
  }

  void check_technology(const TechnologyProvider& m) {
    if (m.inputs.empty()) add("EmptyInputs", m.id, "technology needs at least one input product");
    if (m.outputs.empty()) add("EmptyOutputs", m.id, "technology needs at least one output product");
    for (const auto* yields : {&m.inputs, &m.outputs}) {
      for (const auto& [p, gamma] : *yields) {
        check_product(p, m.id);
        if (!std::isfinite(gamma) || gamma <= 0.0) add("NonPositiveYield", m.id, "yield of '" + p + "' must be > 0");
      }
    }
    for (const auto& [p, gamma] : m.inputs) {
      if (m.outputs.contains(p)) add("OverlappingProducts", m.id, "'" + p + "' is both input and output");
    }
    const auto ref = m.inputs.find(m.reference);
    if (ref == m.inputs.end()) {
      add("ReferenceNotInput", m.id, "reference product '" + m.reference + "' is not an input");
    } else if (ref->second != 1.0) {
      add("ReferenceYieldNotUnity", m.id, "reference yield must be exactly 1");
    }
  }

  const MarketInstance& instance_;
  std::set<std::string> products_;
  std::set<std::string> nodes_;
  std::set<Arc> arcs_;
  ValidationReport report_;
};

}  // namespace detail

/// Report-style validation: never throws, lists every violation found.
inline ValidationReport validate(const MarketInstance& instance) { return detail::Validator(instance).run(); }

inline void require_valid(const MarketInstance& instance) {
  const auto report = validate(instance);
  if (!report.ok()) throw Error(ErrorCode::InvalidInstance, report.summary());
}

/// Stakeholder ids participating in the balance of product p at node s.
struct StakeholderSets {
  std::vector<std::string> suppliers;
  std::vector<std::string> consumers;
  std::vector<std::string> transport_in;
  std::vector<std::string> transport_out;
  std::vector<std::string> technology_gen;
  std::vector<std::string> technology_con;

  bool empty() const noexcept {
    return suppliers.empty() && consumers.empty() && transport_in.empty() && transport_out.empty() &&
           technology_gen.empty() && technology_con.empty();
  }
};

inline StakeholderSets stakeholders_at(const MarketInstance& instance, const SpaceTimeNode& s,
                                       const std::string& product) {
  if (std::find(instance.nodes.begin(), instance.nodes.end(), s.node) == instance.nodes.end()) {
    throw Error(ErrorCode::UnknownNode, "node '" + s.node + "'");
  }
  if (s.time >= instance.grid.size()) throw Error(ErrorCode::TimeOutOfRange, "time " + std::to_string(s.time));
  if (std::find(instance.products.begin(), instance.products.end(), product) == instance.products.end()) {
    throw Error(ErrorCode::UnknownProduct, "product '" + product + "'");
  }

  StakeholderSets out;
  for (const auto& i : instance.suppliers) {
    if (i.location == s && i.product == product) out.suppliers.push_back(i.id);
  }
  for (const auto& j : instance.consumers) {
    if (j.location == s && j.product == product) out.consumers.push_back(j.id);
  }
  for (const auto& l : instance.transporters) {
    if (l.product != product) continue;
    if (l.arc.receiving == s) out.transport_in.push_back(l.id);
    if (l.arc.base == s) out.transport_out.push_back(l.id);
  }
  for (const auto& m : instance.technologies) {
    if (m.location != s) continue;
    if (m.outputs.contains(product)) out.technology_gen.push_back(m.id);
    if (m.inputs.contains(product)) out.technology_con.push_back(m.id);
  }
  for (auto* v : {&out.suppliers, &out.consumers, &out.transport_in, &out.transport_out, &out.technology_gen,
                  &out.technology_con}) {
    std::sort(v->begin(), v->end());
  }
  return out;
}

/// Suppliers and consumers split by bid sign; a zero bid belongs to the
/// non-negative side.
struct SignPartition {
  std::vector<std::string> suppliers_nonnegative;
  std::vector<std::string> suppliers_negative;
  std::vector<std::string> consumers_nonnegative;
  std::vector<std::string> consumers_negative;
};

inline SignPartition sign_partition(const MarketInstance& instance) {
  SignPartition out;
  for (const auto& i : instance.suppliers) {
    (i.bid >= 0.0 ? out.suppliers_nonnegative : out.suppliers_negative).push_back(i.id);
  }
  for (const auto& j : instance.consumers) {
    (j.bid >= 0.0 ? out.consumers_nonnegative : out.consumers_negative).push_back(j.id);
  }
  for (auto* v : {&out.suppliers_nonnegative, &out.suppliers_negative, &out.consumers_nonnegative,
                  &out.consumers_negative}) {
    std::sort(v->begin(), v->end());
  }
  return out;
}

/// Indices into `items` ordered lexicographically by id.
template <typename T>
std::vector<std::size_t> order_by_id(const std::vector<T>& items) {
  std::vector<std::size_t> order(items.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return items[a].id < items[b].id; });
  return order;
}

}  // namespace stclear

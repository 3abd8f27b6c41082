#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "stclear/error.hpp"
#include "stclear/market.hpp"

namespace stclear {

/// Zeroes every transporter whose arc crosses time, leaving the purely
/// spatial market of each period.
inline MarketInstance restrict_to_qss(const MarketInstance& instance) {
  MarketInstance out = instance;
  for (auto& l : out.transporters) {
    if (classify_arc(l.arc) != ArcClass::Spatial) l.capacity = 0.0;
  }
  return out;
}

/// Single-period market of the stakeholders and spatial arcs at time t,
/// re-indexed to time 0.
inline MarketInstance restrict_to_snapshot(const MarketInstance& instance, std::size_t t) {
  if (t >= instance.grid.size()) {
    throw Error(ErrorCode::TimeOutOfRange, "snapshot time " + std::to_string(t) + " outside grid");
  }
  MarketInstance out;
  out.products = instance.products;
  out.nodes = instance.nodes;
  out.grid.times = {instance.grid.times[t]};
  out.grid.step = instance.grid.step;
  out.metadata = instance.metadata;

  auto at_t = [t](const SpaceTimeNode& s) { return s.time == t; };
  auto moved = [](SpaceTimeNode s) {
    s.time = 0;
    return s;
  };
  for (const Arc& a : instance.arcs) {
    if (at_t(a.base) && at_t(a.receiving)) out.arcs.push_back({moved(a.base), moved(a.receiving)});
  }
  for (auto i : instance.suppliers) {
    if (!at_t(i.location)) continue;
    i.location = moved(i.location);
    out.suppliers.push_back(std::move(i));
  }
  for (auto j : instance.consumers) {
    if (!at_t(j.location)) continue;
    j.location = moved(j.location);
    out.consumers.push_back(std::move(j));
  }
  for (auto l : instance.transporters) {
    if (!at_t(l.arc.base) || !at_t(l.arc.receiving)) continue;
    l.arc = {moved(l.arc.base), moved(l.arc.receiving)};
    out.transporters.push_back(std::move(l));
  }
  for (auto m : instance.technologies) {
    if (!at_t(m.location)) continue;
    m.location = moved(m.location);
    out.technologies.push_back(std::move(m));
  }
  return out;
}

namespace detail {

/// Portable draws on top of mt19937_64, whose output sequence is fixed by
/// the standard (the std distributions are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + index(hi - lo + 1); }
  bool chance(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

inline std::string padded(std::size_t value, std::size_t width) {
  std::string s = std::to_string(value);
  if (s.size() < width) s.insert(0, width - s.size(), '0');
  return s;
}

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

enum class Variant { Base, NoStorage, UnlimitedStorage, TripleWaste };

constexpr std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Base: return "base";
    case Variant::NoStorage: return "nostorage";
    case Variant::UnlimitedStorage: return "unlimited";
    case Variant::TripleWaste: return "triple";
  }
  return "unknown";
}

inline std::optional<Variant> parse_variant(std::string_view name) {
  for (Variant v : {Variant::Base, Variant::NoStorage, Variant::UnlimitedStorage, Variant::TripleWaste}) {
    if (to_string(v) == name) return v;
  }
  return std::nullopt;
}

/// Waste-to-electricity case. Units: MW / MWh for electricity, tonnes for
/// waste, USD for money, km for distance, one period = one hour.
struct CaseParams {
  std::size_t farms = 8;
  std::size_t processors = 4;
  std::size_t hours = 24;
  std::uint64_t seed = 7;
  Variant variant = Variant::Base;

  double annual_demand = 68.8e6;  // MWh per year
  double peak_to_offpeak = 1.9;
  std::size_t trough_hour = 5;
  double demand_bid = 1800.0;  // 10x the on-peak price anchor

  std::array<double, 3> generator_betas{1.66e-5, 8.31e-6, 4.15e-5};
  double block_size = 100.0;      // MW
  double max_block_bid = 360.0;   // blocks are generated while their bid stays below this

  double waste_rate = 125.0;      // t/h per farm before heterogeneity
  double waste_spread = 0.25;     // farm rates drawn from rate * U(1-s, 1+s)
  double max_tipping_fee = 0.5;   // supply bids drawn from -U(0, fee)
  double digester_yield = 0.1;    // MWh per tonne
  double technology_bid = 2.0;    // USD per tonne processed
  double processing_factor = 3.0; // digester capacity / expected hourly inflow
  double storage_hours = 10.0;    // storage capacity in hours of expected inflow
  double storage_bid = 0.01;      // USD per tonne-hour
  double waste_transport_bid = 0.002;          // USD per tonne-km
  double electricity_transport_bid = 7.5e-6;   // USD per MWh-km
  double region_km = 300.0;
};

/// Hourly electricity demand: a 24h sinusoid with the requested peak/trough
/// ratio whose mean matches the annual energy total.
struct DemandCurve {
  std::vector<double> load;  // MWh per hour
  std::vector<double> bid;   // USD per MWh

  static DemandCurve make(const CaseParams& params) {
    DemandCurve curve;
    const double mean = params.annual_demand / 8760.0;
    const double a = (params.peak_to_offpeak - 1.0) / (params.peak_to_offpeak + 1.0);
    for (std::size_t h = 0; h < params.hours; ++h) {
      const double phase = 2.0 * std::numbers::pi * (static_cast<double>(h % 24) - static_cast<double>(params.trough_hour)) / 24.0;
      curve.load.push_back(mean * (1.0 - a * std::cos(phase)));
      curve.bid.push_back(params.demand_bid);
    }
    return curve;
  }

  std::size_t peak_hour_of_day(std::size_t trough_hour) const { return (trough_hour + 12) % 24; }
};

inline void validate_params(const CaseParams& p) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidParams, what); };
  if (p.farms < 1) fail("farms must be >= 1");
  if (p.processors < 1 || p.processors > p.farms) fail("processors must be in [1, farms]");
  if (p.hours < 1) fail("hours must be >= 1");
  if (!(p.annual_demand > 0.0) || !(p.peak_to_offpeak >= 1.0)) fail("demand must be positive with ratio >= 1");
  if (p.trough_hour >= 24) fail("trough_hour must be < 24");
  for (double b : p.generator_betas) {
    if (!(b > 0.0)) fail("generator betas must be positive");
  }
  if (!(p.block_size > 0.0) || !(p.max_block_bid > 0.0)) fail("block size and bid cap must be positive");
  if (!(p.waste_rate > 0.0) || p.waste_spread < 0.0 || p.waste_spread >= 1.0) fail("invalid waste rate");
  if (!(p.digester_yield > 0.0)) fail("digester_yield must be positive");
  if (p.technology_bid < 0.0 || p.storage_bid < 0.0 || p.waste_transport_bid < 0.0 ||
      p.electricity_transport_bid < 0.0 || p.max_tipping_fee < 0.0) {
    fail("bids must be non-negative");
  }
  if (!(p.processing_factor > 0.0) || p.storage_hours < 0.0 || !(p.region_km > 0.0)) fail("invalid capacities");
}

inline constexpr double kUnlimitedStorage = 1e9;

/// Hub plus farms; the first `processors` farms own a digester, a link to the
/// hub and hourly waste storage. Other farms haul waste to any processor.
inline MarketInstance generate_waste_case(const CaseParams& params) {
  validate_params(params);
  detail::Rng rng(params.seed);

  const std::size_t width = std::max<std::size_t>(2, std::to_string(params.farms - 1).size());
  const std::size_t hour_width = std::max<std::size_t>(2, std::to_string(params.hours - 1).size());
  auto farm = [&](std::size_t k) { return "farm" + detail::padded(k, width); };
  auto hour = [&](std::size_t h) { return "t" + detail::padded(h, hour_width); };

  struct Farm {
    double x, y, rate, tipping_fee;
  };
  std::vector<Farm> farms(params.farms);
  for (auto& f : farms) {
    f.x = rng.uniform(0.0, params.region_km);
    f.y = rng.uniform(0.0, params.region_km);
    f.rate = params.waste_rate * rng.uniform(1.0 - params.waste_spread, 1.0 + params.waste_spread);
    f.tipping_fee = rng.uniform(0.0, params.max_tipping_fee);
  }
  const double hub_xy = params.region_km / 2.0;
  auto distance = [](double x0, double y0, double x1, double y1) {
    return std::max(1.0, std::hypot(x1 - x0, y1 - y0));
  };

  // Capacities follow the base waste supply; only the supply itself triples.
  double hauled = 0.0;
  for (std::size_t k = params.processors; k < params.farms; ++k) hauled += farms[k].rate;
  std::vector<double> inflow(params.processors);
  for (std::size_t p = 0; p < params.processors; ++p) {
    inflow[p] = farms[p].rate + hauled / static_cast<double>(params.processors);
  }
  const double supply_factor = params.variant == Variant::TripleWaste ? 3.0 : 1.0;

  MarketInstance inst;
  inst.products = {"electricity", "waste"};
  inst.grid = TimeGrid::uniform(params.hours, 1.0);
  inst.nodes.push_back("hub");
  for (std::size_t k = 0; k < params.farms; ++k) inst.nodes.push_back(farm(k));

  const DemandCurve demand = DemandCurve::make(params);
  std::array<std::size_t, 3> blocks{};
  for (std::size_t f = 0; f < 3; ++f) {
    while (true) {
      const double q = static_cast<double>(blocks[f] + 1) * params.block_size;
      if (params.generator_betas[f] * q * q > params.max_block_bid) break;
      ++blocks[f];
    }
  }

  for (std::size_t h = 0; h < params.hours; ++h) {
    const std::string th = hour(h);
    inst.consumers.push_back({"demand_" + th, {"hub", h}, "electricity", demand.load[h], demand.bid[h]});
    for (std::size_t f = 0; f < 3; ++f) {
      for (std::size_t k = 1; k <= blocks[f]; ++k) {
        const double q = static_cast<double>(k) * params.block_size;
        inst.suppliers.push_back({"gen" + std::to_string(f) + "_b" + detail::padded(k, 3) + "_" + th,
                                  {"hub", h}, "electricity", params.block_size,
                                  params.generator_betas[f] * q * q});
      }
    }
    for (std::size_t k = 0; k < params.farms; ++k) {
      inst.suppliers.push_back({"waste_" + farm(k) + "_" + th, {farm(k), h}, "waste",
                                farms[k].rate * supply_factor, -farms[k].tipping_fee});
    }
    for (std::size_t p = 0; p < params.processors; ++p) {
      const std::string name = farm(p);
      const double capacity = params.processing_factor * inflow[p];
      inst.technologies.push_back({"digester_" + name + "_" + th, {name, h}, {{"waste", 1.0}},
                                   {{"electricity", params.digester_yield}}, "waste", capacity,
                                   params.technology_bid});

      const Arc grid_arc{{name, h}, {"hub", h}};
      inst.arcs.push_back(grid_arc);
      const double km = distance(farms[p].x, farms[p].y, hub_xy, hub_xy);
      inst.transporters.push_back({"grid_" + name + "_" + th, grid_arc, "electricity",
                                   1.5 * capacity * params.digester_yield,
                                   params.electricity_transport_bid * km});

      if (h + 1 < params.hours) {
        const Arc store{{name, h}, {name, h + 1}};
        inst.arcs.push_back(store);
        double cap = params.storage_hours * inflow[p];
        double bid = params.storage_bid;
        if (params.variant == Variant::NoStorage) cap = 0.0;
        if (params.variant == Variant::UnlimitedStorage) cap = kUnlimitedStorage, bid = 0.0;
        inst.transporters.push_back({"store_" + name + "_" + th, store, "waste", cap, bid});
      }
    }
    for (std::size_t k = params.processors; k < params.farms; ++k) {
      for (std::size_t p = 0; p < params.processors; ++p) {
        const Arc haul{{farm(k), h}, {farm(p), h}};
        inst.arcs.push_back(haul);
        const double km = distance(farms[k].x, farms[k].y, farms[p].x, farms[p].y);
        inst.transporters.push_back({"haul_" + farm(k) + "_" + farm(p) + "_" + th, haul, "waste",
                                     farms[k].rate * supply_factor, params.waste_transport_bid * km});
      }
    }
  }

  auto& md = inst.metadata;
  md["generator"] = "waste_case";
  md["variant"] = std::string(to_string(params.variant));
  md["seed"] = std::to_string(params.seed);
  md["farms"] = std::to_string(params.farms);
  md["processors"] = std::to_string(params.processors);
  md["hours"] = std::to_string(params.hours);
  md["annual_demand_mwh"] = detail::format_number(params.annual_demand);
  md["peak_to_offpeak"] = detail::format_number(params.peak_to_offpeak);
  md["demand_bid_usd_per_mwh"] = detail::format_number(params.demand_bid);
  md["block_size_mw"] = detail::format_number(params.block_size);
  md["max_block_bid_usd_per_mwh"] = detail::format_number(params.max_block_bid);
  md["waste_rate_t_per_h"] = detail::format_number(params.waste_rate);
  md["digester_yield_mwh_per_t"] = detail::format_number(params.digester_yield);
  md["technology_bid_usd_per_t"] = detail::format_number(params.technology_bid);
  md["processing_factor"] = detail::format_number(params.processing_factor);
  md["storage_hours"] = detail::format_number(params.storage_hours);
  md["storage_bid_usd_per_t_h"] = detail::format_number(params.storage_bid);
  md["waste_transport_bid_usd_per_t_km"] = detail::format_number(params.waste_transport_bid);
  md["electricity_transport_bid_usd_per_mwh_km"] = detail::format_number(params.electricity_transport_bid);
  md["note"] = "waste rates, yields, storage and digester sizes are illustrative desk-scale choices";
  return inst;
}

struct RandomInstanceParams {
  std::size_t max_nodes = 10;
  std::size_t max_times = 12;
  std::size_t max_products = 3;
  std::size_t max_stakeholders = 40;
};

/// Small valid market with mixed-sign bids, zero capacities, integer-valued
/// data (to provoke degenerate ties) and all three arc classes.
inline MarketInstance random_instance(std::uint64_t seed, const RandomInstanceParams& params = {}) {
  detail::Rng rng(seed);
  MarketInstance inst;
  const std::size_t n_nodes = rng.between(1, params.max_nodes);
  const std::size_t n_times = rng.between(1, params.max_times);
  const std::size_t n_products = rng.between(1, params.max_products);
  for (std::size_t k = 0; k < n_nodes; ++k) inst.nodes.push_back("n" + std::to_string(k));
  for (std::size_t k = 0; k < n_products; ++k) inst.products.push_back("p" + std::to_string(k));
  inst.grid = TimeGrid::uniform(n_times, 1.0);
  const bool integral = rng.chance(0.4);

  auto value = [&](double lo, double hi) {
    const double v = rng.uniform(lo, hi);
    return integral ? std::round(v) : v;
  };
  auto capacity = [&] { return rng.chance(0.1) ? 0.0 : value(1.0, 20.0); };
  auto node = [&] { return SpaceTimeNode{inst.nodes[rng.index(n_nodes)], rng.index(n_times)}; };
  auto product = [&] { return inst.products[rng.index(n_products)]; };

  const std::size_t total = rng.between(2, params.max_stakeholders);
  for (std::size_t k = 0; k < total; ++k) {
    const std::string id = "u" + detail::padded(k, 2);
    const double roll = rng.uniform();
    if (roll < 0.3) {
      inst.suppliers.push_back({id, node(), product(), capacity(), value(-5.0, 10.0)});
    } else if (roll < 0.6) {
      inst.consumers.push_back({id, node(), product(), capacity(), value(-2.0, 20.0)});
    } else if (roll < 0.85 || n_products < 2) {
      SpaceTimeNode base = node();
      SpaceTimeNode receiving = base;
      const double kind = rng.uniform();
      if ((kind < 0.4 || n_times == 1) && n_nodes > 1) {
        while (receiving.node == base.node) receiving.node = inst.nodes[rng.index(n_nodes)];
      } else if (n_times > 1 && (kind < 0.75 || n_nodes == 1)) {
        if (base.time + 1 >= n_times) base.time = n_times - 2;
        receiving = base;
        receiving.time = base.time + rng.between(1, std::min<std::size_t>(2, n_times - 1 - base.time));
      } else if (n_times > 1 && n_nodes > 1) {
        if (base.time + 1 >= n_times) base.time = n_times - 2;
        receiving.time = base.time + 1;
        while (receiving.node == base.node) receiving.node = inst.nodes[rng.index(n_nodes)];
      } else {
        inst.suppliers.push_back({id, node(), product(), capacity(), value(-5.0, 10.0)});
        continue;
      }
      const Arc arc{base, receiving};
      if (std::find(inst.arcs.begin(), inst.arcs.end(), arc) == inst.arcs.end()) inst.arcs.push_back(arc);
      const double bid = rng.chance(0.2) ? 0.0 : value(0.0, 3.0);
      inst.transporters.push_back({id, arc, product(), capacity(), bid});
    } else {
      TechnologyProvider m;
      m.id = id;
      m.location = node();
      std::vector<std::string> pool = inst.products;
      for (std::size_t a = pool.size(); a > 1; --a) std::swap(pool[a - 1], pool[rng.index(a)]);
      const std::size_t n_in = rng.between(1, pool.size() - 1);
      const std::size_t n_out = rng.between(1, pool.size() - n_in);
      m.reference = pool[0];
      m.inputs[pool[0]] = 1.0;
      for (std::size_t a = 1; a < n_in; ++a) m.inputs[pool[a]] = value(1.0, 3.0);
      for (std::size_t a = n_in; a < n_in + n_out; ++a) m.outputs[pool[a]] = integral ? value(1.0, 3.0) : rng.uniform(0.3, 2.5);
      m.capacity = capacity();
      m.bid = rng.chance(0.2) ? 0.0 : value(0.0, 3.0);
      inst.technologies.push_back(std::move(m));
    }
  }
  return inst;
}

}  // namespace stclear

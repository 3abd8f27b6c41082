#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stclear/error.hpp"

namespace stclear {

/// Ordered, uniformly spaced time labels t_0 < t_1 < ... with step delta.
/// The step is carried for completeness; clearing treats flows as per-period
/// quantities and never scales by it.
struct TimeGrid {
  std::vector<double> times{0.0};
  double step = 1.0;

  static TimeGrid uniform(std::size_t count, double step = 1.0, double start = 0.0) {
    TimeGrid grid;
    grid.step = step;
    grid.times.resize(count);
    for (std::size_t t = 0; t < count; ++t) grid.times[t] = start + step * static_cast<double>(t);
    return grid;
  }

  std::size_t size() const noexcept { return times.size(); }

  bool valid() const {
    if (times.empty() || !std::isfinite(step) || step <= 0.0) return false;
    for (std::size_t t = 0; t < times.size(); ++t) {
      if (!std::isfinite(times[t])) return false;
      if (t == 0) continue;
      const double gap = times[t] - times[t - 1];
      if (gap <= 0.0 || std::abs(gap - step) > 1e-9 * std::max(1.0, std::abs(step))) return false;
    }
    return true;
  }

  bool operator==(const TimeGrid&) const = default;
};

struct SpaceTimeNode {
  std::string node;
  std::size_t time = 0;

  auto operator<=>(const SpaceTimeNode&) const = default;
  bool operator==(const SpaceTimeNode&) const = default;
};

/// Oriented arc base -> receiving. Bidirectional transport needs two arcs.
struct Arc {
  SpaceTimeNode base;
  SpaceTimeNode receiving;

  auto operator<=>(const Arc&) const = default;
  bool operator==(const Arc&) const = default;
};

enum class ArcClass { Spatial, Temporal, SpatioTemporal };

constexpr std::string_view to_string(ArcClass cls) {
  switch (cls) {
    case ArcClass::Spatial: return "spatial";
    case ArcClass::Temporal: return "temporal";
    case ArcClass::SpatioTemporal: return "spatiotemporal";
  }
  return "unknown";
}

inline ArcClass classify_arc(const Arc& arc) {
  if (arc.base.time == arc.receiving.time) return ArcClass::Spatial;
  if (arc.base.node == arc.receiving.node) return ArcClass::Temporal;
  return ArcClass::SpatioTemporal;
}

/// Time-expanded graph over |N| x |T| space-time nodes. Immutable once built.
class Graph {
 public:
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t time_count() const noexcept { return grid_.size(); }
  std::size_t space_time_node_count() const noexcept { return nodes_.size() * grid_.size(); }

  const std::vector<std::string>& nodes() const noexcept { return nodes_; }
  const TimeGrid& grid() const noexcept { return grid_; }
  const std::vector<Arc>& arcs() const noexcept { return arcs_; }

  std::optional<std::size_t> node_index(std::string_view node) const {
    const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), node);
    if (it == nodes_.end() || *it != node) return std::nullopt;
    return static_cast<std::size_t>(it - nodes_.begin());
  }

  bool contains(const SpaceTimeNode& s) const {
    return s.time < grid_.size() && node_index(s.node).has_value();
  }

  /// Dense index n * |T| + t.
  std::size_t flat_index(const SpaceTimeNode& s) const {
    const auto n = node_index(s.node);
    if (!n) throw Error(ErrorCode::UnknownNode, "node '" + s.node + "' is not registered");
    if (s.time >= grid_.size()) {
      throw Error(ErrorCode::TimeOutOfRange,
                  "time index " + std::to_string(s.time) + " outside grid of " +
                      std::to_string(grid_.size()));
    }
    return *n * grid_.size() + s.time;
  }

  SpaceTimeNode space_time_node(std::size_t flat) const {
    return {nodes_.at(flat / grid_.size()), flat % grid_.size()};
  }

  /// Arc indices leaving / entering a space-time node.
  std::span<const std::size_t> outgoing(const SpaceTimeNode& s) const { return outgoing_[flat_index(s)]; }
  std::span<const std::size_t> incoming(const SpaceTimeNode& s) const { return incoming_[flat_index(s)]; }

  std::optional<std::size_t> arc_index(const Arc& arc) const {
    const auto it = std::lower_bound(arcs_.begin(), arcs_.end(), arc);
    if (it == arcs_.end() || *it != arc) return std::nullopt;
    return static_cast<std::size_t>(it - arcs_.begin());
  }

  std::size_t count(ArcClass cls) const {
    return static_cast<std::size_t>(
        std::count_if(arcs_.begin(), arcs_.end(), [cls](const Arc& a) { return classify_arc(a) == cls; }));
  }

 private:
  friend Graph build_graph(std::vector<std::string> nodes, TimeGrid grid, std::span<const Arc> arcs);

  std::vector<std::string> nodes_;
  TimeGrid grid_;
  std::vector<Arc> arcs_;
  std::vector<std::vector<std::size_t>> outgoing_;
  std::vector<std::vector<std::size_t>> incoming_;
};

/// Builds the graph; node ids are deduplicated and sorted, arcs deduplicated
/// and sorted by (base, receiving).
inline Graph build_graph(std::vector<std::string> nodes, TimeGrid grid, std::span<const Arc> arcs) {
  if (!grid.valid()) throw Error(ErrorCode::InvalidTimeGrid, "time grid must be non-empty, increasing and uniform");

  Graph g;
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  g.nodes_ = std::move(nodes);
  g.grid_ = std::move(grid);

  g.arcs_.assign(arcs.begin(), arcs.end());
  for (const Arc& a : g.arcs_) {
    for (const SpaceTimeNode* end : {&a.base, &a.receiving}) {
      if (!g.node_index(end->node)) throw Error(ErrorCode::UnknownNode, "arc endpoint '" + end->node + "'");
      if (end->time >= g.grid_.size()) {
        throw Error(ErrorCode::TimeOutOfRange, "arc endpoint time " + std::to_string(end->time));
      }
    }
    if (a.receiving.time < a.base.time) {
      throw Error(ErrorCode::BackwardTimeArc, "arc from " + a.base.node + "@" + std::to_string(a.base.time) +
                                                  " to " + a.receiving.node + "@" +
                                                  std::to_string(a.receiving.time));
    }
    if (a.base == a.receiving) throw Error(ErrorCode::SelfLoopArc, "arc at " + a.base.node);
  }
  std::sort(g.arcs_.begin(), g.arcs_.end());
  g.arcs_.erase(std::unique(g.arcs_.begin(), g.arcs_.end()), g.arcs_.end());

  g.outgoing_.assign(g.space_time_node_count(), {});
  g.incoming_.assign(g.space_time_node_count(), {});
  for (std::size_t k = 0; k < g.arcs_.size(); ++k) {
    g.outgoing_[g.flat_index(g.arcs_[k].base)].push_back(k);
    g.incoming_[g.flat_index(g.arcs_[k].receiving)].push_back(k);
  }
  return g;
}

}  // namespace stclear

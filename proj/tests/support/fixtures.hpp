#pragma once

#include "stclear/market.hpp"

namespace fixtures {

using namespace stclear;

/// One supplier (cap 10, bid 2) and one consumer (cap 5, bid 8) at one node.
inline MarketInstance two_variable() {
  MarketInstance m;
  m.products = {"good"};
  m.nodes = {"n1"};
  m.suppliers = {{"g1", {"n1", 0}, "good", 10.0, 2.0}};
  m.consumers = {{"d1", {"n1", 0}, "good", 5.0, 8.0}};
  return m;
}

/// Supplier at t0, consumer at t1, storage between them.
inline MarketInstance storage() {
  MarketInstance m;
  m.products = {"good"};
  m.nodes = {"n1"};
  m.grid = TimeGrid::uniform(2);
  const Arc hold{{"n1", 0}, {"n1", 1}};
  m.arcs = {hold};
  m.suppliers = {{"g1", {"n1", 0}, "good", 5.0, 1.0}};
  m.consumers = {{"d1", {"n1", 1}, "good", 5.0, 10.0}};
  m.transporters = {{"s1", hold, "good", 5.0, 0.5}};
  return m;
}

/// Supplier at n1, consumer at n2, one spatial link.
inline MarketInstance two_node_transport() {
  MarketInstance m;
  m.products = {"good"};
  m.nodes = {"n1", "n2"};
  const Arc link{{"n1", 0}, {"n2", 0}};
  m.arcs = {link};
  m.suppliers = {{"g1", {"n1", 0}, "good", 10.0, 1.0}};
  m.consumers = {{"d1", {"n2", 0}, "good", 4.0, 5.0}};
  m.transporters = {{"l1", link, "good", 10.0, 1.0}};
  return m;
}

/// Consumer bid below supplier bid: nothing trades.
inline MarketInstance dry() {
  MarketInstance m = two_variable();
  m.consumers[0].bid = 1.0;
  return m;
}

inline MarketInstance empty() {
  MarketInstance m;
  m.nodes = {"n1"};
  return m;
}

/// Free, uncapacitated storage between two periods with more cheap supply
/// early than the late consumer can absorb.
inline MarketInstance free_storage() {
  MarketInstance m;
  m.products = {"good"};
  m.nodes = {"n1"};
  m.grid = TimeGrid::uniform(2);
  const Arc hold{{"n1", 0}, {"n1", 1}};
  m.arcs = {hold};
  m.suppliers = {{"g1", {"n1", 0}, "good", 10.0, 1.0}, {"g2", {"n1", 1}, "good", 10.0, 3.0}};
  m.consumers = {{"d1", {"n1", 0}, "good", 2.0, 6.0}, {"d2", {"n1", 1}, "good", 4.0, 6.0}};
  m.transporters = {{"s1", hold, "good", 1e9, 0.0}};
  return m;
}

/// Farm pays a tipping fee (negative bid) to a digester turning waste into
/// electricity sold to a consumer.
inline MarketInstance tipping_fee() {
  MarketInstance m;
  m.products = {"electricity", "waste"};
  m.nodes = {"farm", "hub"};
  const Arc grid{{"farm", 0}, {"hub", 0}};
  m.arcs = {grid};
  m.suppliers = {{"w1", {"farm", 0}, "waste", 10.0, -3.0}};
  m.technologies = {{"dig", {"farm", 0}, {{"waste", 1.0}}, {{"electricity", 0.5}}, "waste", 6.0, 1.0}};
  m.transporters = {{"line", grid, "electricity", 10.0, 0.5}};
  m.consumers = {{"load", {"hub", 0}, "electricity", 2.0, 20.0}};
  return m;
}

}  // namespace fixtures

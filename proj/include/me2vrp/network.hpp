#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "me2vrp/common.hpp"

namespace me2vrp {

enum class NodeKind { origin, encounter, destination, depot };

inline std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::origin: return "origin";
    case NodeKind::encounter: return "encounter";
    case NodeKind::destination: return "destination";
    case NodeKind::depot: return "depot";
  }
  return "?";
}

/// A demand's trip on the physical network, before reduction to the
/// encounter graph. Segment k spans nodes[k] -> nodes[k+1].
struct RawRoute {
  EdId ed = 0;
  std::vector<NodeId> nodes;
  std::vector<double> segment_min;
  std::vector<double> segment_miles;
};

/// All-pairs metrics for node pairs that do not share a route. Row-major,
/// NaN marks a missing entry.
struct NodeMatrix {
  std::vector<NodeId> nodes;
  std::vector<double> travel_time_min;
  std::vector<double> energy_kwh;

  static NodeMatrix over(std::vector<NodeId> ids) {
    NodeMatrix m;
    m.nodes = std::move(ids);
    const auto n = m.nodes.size();
    m.travel_time_min.assign(n * n, std::numeric_limits<double>::quiet_NaN());
    m.energy_kwh.assign(n * n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < n; ++k) {
      m.travel_time_min[k * n + k] = 0.0;
      m.energy_kwh[k * n + k] = 0.0;
    }
    return m;
  }

  std::optional<std::size_t> index(NodeId id) const {
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (nodes[k] == id) return k;
    }
    return std::nullopt;
  }

  void set(std::size_t from, std::size_t to, double minutes, double kwh) {
    travel_time_min[from * nodes.size() + to] = minutes;
    energy_kwh[from * nodes.size() + to] = kwh;
  }
};

struct RateParams {
  double ed_kwh_per_mile = 0.4;
  double ep_kwh_per_mile = 0.4;
};

/// A demand's route reduced to its origin, encounter nodes and destination.
struct Route {
  std::vector<NodeId> nodes;
  std::vector<double> arc_min;
  std::vector<double> arc_miles;
  std::vector<double> ed_loss_kwh;
  std::vector<double> ep_loss_kwh;
  /// Travel time from the origin to nodes[k].
  std::vector<double> offset_min;

  std::size_t arc_count() const { return arc_min.size(); }
  NodeId origin() const { return nodes.front(); }
  NodeId destination() const { return nodes.back(); }

  std::optional<std::size_t> position(NodeId n) const {
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (nodes[k] == n) return k;
    }
    return std::nullopt;
  }
  bool contains(NodeId n) const { return position(n).has_value(); }
};

/// Index of the arc leaving `n` on `route`; the arc entering `n` is one less.
inline std::size_t arcs_from(const Route& route, NodeId n) {
  const auto pos = route.position(n);
  if (!pos) throw OffRouteError("node " + std::to_string(n) + " is not on the route");
  if (*pos + 1 == route.nodes.size()) {
    throw NoOutgoingArcError("node " + std::to_string(n) + " is the route destination");
  }
  return *pos;
}

struct EncounterNetwork;

class EncounterGraph {
 public:
  bool contains(NodeId n) const { return kinds_.count(n) != 0; }

  NodeKind kind(NodeId n) const {
    auto it = kinds_.find(n);
    if (it == kinds_.end()) throw OffRouteError("unknown node " + std::to_string(n));
    return it->second;
  }

  std::vector<NodeId> nodes() const {
    std::vector<NodeId> out;
    out.reserve(kinds_.size());
    for (const auto& [id, kind] : kinds_) out.push_back(id);
    return out;
  }

  std::vector<NodeId> nodes_of_kind(NodeKind k) const {
    std::vector<NodeId> out;
    for (const auto& [id, kind] : kinds_) {
      if (kind == k) out.push_back(id);
    }
    return out;
  }

  const std::vector<NodeId>& depots() const { return depots_; }

  double travel_time(NodeId from, NodeId to) const {
    if (from == to) return 0.0;
    return time_[cell(from, to)];
  }

  double energy_cost(NodeId from, NodeId to) const {
    if (from == to) return 0.0;
    return energy_[cell(from, to)];
  }

  NodeId nearest_depot(NodeId n) const {
    auto it = nearest_.find(n);
    if (it == nearest_.end()) throw OffRouteError("no depot distance for node " + std::to_string(n));
    return it->second;
  }

 private:
  friend EncounterNetwork build_encounter_graph(const std::vector<RawRoute>&,
                                                const std::vector<NodeId>&,
                                                const NodeMatrix&, const RateParams&,
                                                const std::vector<NodeId>&);

  std::size_t cell(NodeId from, NodeId to) const {
    auto a = index_.find(from);
    auto b = index_.find(to);
    if (a == index_.end() || b == index_.end()) {
      throw IncompleteGraphError("no metrics for pair " + std::to_string(from) + "->" +
                                 std::to_string(to));
    }
    return a->second * ids_.size() + b->second;
  }

  std::map<NodeId, NodeKind> kinds_;
  std::vector<NodeId> depots_;
  std::vector<NodeId> ids_;
  std::unordered_map<NodeId, std::size_t> index_;
  std::vector<double> time_;
  std::vector<double> energy_;
  std::unordered_map<NodeId, NodeId> nearest_;
};

struct EncounterNetwork {
  EncounterGraph graph;
  /// Reduced routes, aligned with the input raw routes.
  std::vector<Route> routes;
};

/// Reduces raw routes to the encounter graph. `extra_nodes` are additional
/// query endpoints (EP start locations) that must be covered by the matrix.
inline EncounterNetwork build_encounter_graph(const std::vector<RawRoute>& raw,
                                              const std::vector<NodeId>& depots,
                                              const NodeMatrix& matrix,
                                              const RateParams& rates,
                                              const std::vector<NodeId>& extra_nodes = {}) {
  EncounterNetwork net;
  auto& g = net.graph;

  std::map<NodeId, int> route_count;
  for (const auto& r : raw) {
    const auto label = "route of ED " + std::to_string(r.ed);
    if (r.nodes.size() < 2) throw MalformedRouteError(label + " has fewer than two nodes");
    if (r.segment_min.size() + 1 != r.nodes.size() ||
        r.segment_miles.size() + 1 != r.nodes.size()) {
      throw MalformedRouteError(label + " has mismatched segment data");
    }
    std::set<NodeId> seen;
    for (NodeId n : r.nodes) {
      if (!seen.insert(n).second) {
        throw MalformedRouteError(label + " revisits node " + std::to_string(n));
      }
      ++route_count[n];
    }
    for (std::size_t k = 0; k < r.segment_min.size(); ++k) {
      if (!(r.segment_min[k] > 0.0) || !(r.segment_miles[k] > 0.0)) {
        throw MalformedRouteError(label + " has a non-positive segment");
      }
    }
  }

  std::set<NodeId> depot_set(depots.begin(), depots.end());
  g.depots_.assign(depot_set.begin(), depot_set.end());
  if (g.depots_.empty()) throw InvalidInstanceError("instance has no depot");
  for (NodeId p : g.depots_) g.kinds_[p] = NodeKind::depot;

  for (const auto& r : raw) {
    Route route;
    double offset = 0.0, seg_min = 0.0, seg_miles = 0.0;
    for (std::size_t k = 0; k < r.nodes.size(); ++k) {
      const NodeId n = r.nodes[k];
      const bool first = k == 0, last = k + 1 == r.nodes.size();
      const bool shared = route_count[n] >= 2;
      if (k > 0) {
        seg_min += r.segment_min[k - 1];
        seg_miles += r.segment_miles[k - 1];
      }
      if (!(first || last || shared)) continue;
      if (!first) {
        route.arc_min.push_back(seg_min);
        route.arc_miles.push_back(seg_miles);
        route.ed_loss_kwh.push_back(rates.ed_kwh_per_mile * seg_miles);
        route.ep_loss_kwh.push_back(rates.ep_kwh_per_mile * seg_miles);
        offset += seg_min;
      }
      seg_min = seg_miles = 0.0;
      route.nodes.push_back(n);
      route.offset_min.push_back(offset);
      if (!g.kinds_.count(n) || g.kinds_[n] != NodeKind::depot) {
        NodeKind kind = shared ? NodeKind::encounter
                               : (first ? NodeKind::origin : NodeKind::destination);
        auto it = g.kinds_.find(n);
        if (it == g.kinds_.end()) {
          g.kinds_[n] = kind;
        } else if (it->second != kind) {
          // Unshared nodes are on one route only, so a clash means shared.
          it->second = NodeKind::encounter;
        }
      }
    }
    net.routes.push_back(std::move(route));
  }

  // Dense metrics over retained nodes, depots and extra endpoints.
  std::set<NodeId> id_set;
  for (const auto& [id, kind] : g.kinds_) id_set.insert(id);
  for (NodeId n : extra_nodes) id_set.insert(n);
  g.ids_.assign(id_set.begin(), id_set.end());
  const std::size_t n = g.ids_.size();
  for (std::size_t k = 0; k < n; ++k) g.index_[g.ids_[k]] = k;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  g.time_.assign(n * n, nan);
  g.energy_.assign(n * n, nan);

  std::unordered_map<NodeId, std::size_t> mindex;
  for (std::size_t k = 0; k < matrix.nodes.size(); ++k) mindex[matrix.nodes[k]] = k;
  const std::size_t mn = matrix.nodes.size();
  for (std::size_t a = 0; a < n; ++a) {
    auto ma = mindex.find(g.ids_[a]);
    if (ma == mindex.end()) continue;
    for (std::size_t b = 0; b < n; ++b) {
      auto mb = mindex.find(g.ids_[b]);
      if (mb == mindex.end()) continue;
      g.time_[a * n + b] = matrix.travel_time_min[ma->second * mn + mb->second];
      g.energy_[a * n + b] = matrix.energy_kwh[ma->second * mn + mb->second];
    }
  }
  // Same-route pairs use the summed route segments (shortest over routes).
  std::vector<char> overridden(n * n, 0);
  for (const auto& route : net.routes) {
    for (std::size_t x = 0; x < route.nodes.size(); ++x) {
      for (std::size_t y = x + 1; y < route.nodes.size(); ++y) {
        const std::size_t c = g.index_[route.nodes[x]] * n + g.index_[route.nodes[y]];
        const double t = route.offset_min[y] - route.offset_min[x];
        double miles = 0.0;
        for (std::size_t k = x; k < y; ++k) miles += route.arc_miles[k];
        const double e = rates.ep_kwh_per_mile * miles;
        if (!overridden[c] || t < g.time_[c]) {
          g.time_[c] = t;
          g.energy_[c] = e;
          overridden[c] = 1;
        }
      }
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    g.time_[k * n + k] = 0.0;
    g.energy_[k * n + k] = 0.0;
  }

  auto require = [&](std::size_t a, std::size_t b) {
    const double t = g.time_[a * n + b], e = g.energy_[a * n + b];
    if (std::isnan(t) || std::isnan(e)) {
      throw IncompleteGraphError("missing matrix entry " + std::to_string(g.ids_[a]) + "->" +
                                 std::to_string(g.ids_[b]));
    }
    if (!(t > 0.0) || !(e > 0.0)) {
      throw InvalidInstanceError("non-positive metric for " + std::to_string(g.ids_[a]) +
                                 "->" + std::to_string(g.ids_[b]));
    }
  };
  std::vector<std::size_t> route_nodes;
  for (std::size_t k = 0; k < n; ++k) {
    auto it = g.kinds_.find(g.ids_[k]);
    if (it != g.kinds_.end() && it->second != NodeKind::depot) route_nodes.push_back(k);
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b : route_nodes) {
      if (a != b) require(a, b);
    }
  }
  for (std::size_t a : route_nodes) {
    for (NodeId p : g.depots_) require(a, g.index_[p]);
  }

  for (std::size_t a = 0; a < n; ++a) {
    const NodeId id = g.ids_[a];
    if (depot_set.count(id)) {
      g.nearest_[id] = id;
      continue;
    }
    std::optional<NodeId> best;
    double best_cost = 0.0;
    for (NodeId p : g.depots_) {  // ascending ids, strict < keeps the smallest on ties
      const double c = g.energy_[a * n + g.index_[p]];
      if (std::isnan(c)) continue;
      if (!best || c < best_cost) {
        best = p;
        best_cost = c;
      }
    }
    if (best) g.nearest_[id] = *best;
  }
  return net;
}

}  // namespace me2vrp

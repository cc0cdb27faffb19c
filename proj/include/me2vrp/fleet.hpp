#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "me2vrp/common.hpp"
#include "me2vrp/network.hpp"

namespace me2vrp {

struct TransferParams {
  double eta_kw = 55.0;
  double efficiency = 0.9;
};

struct InstanceMeta {
  double interval_min = 15.0;
  int batch = 0;
};

struct EnergyParams {
  TransferParams transfer;
  double ed_capacity_kwh = 90.0;
  double ed_safety_kwh = 2.0;
  double ep_safety_kwh = 2.0;
  RateParams rates;
};

/// An electricity demand: a trip plus battery state and wait tolerance.
struct Demand {
  EdId id = 0;
  Route route;
  double t0_est_min = 0.0;
  double max_wait_min = 0.0;
  double capacity_kwh = 90.0;
  double e0_kwh = 0.0;
  double safety_kwh = 2.0;
};

/// An electricity provider.
struct Supplier {
  EpId id = 0;
  NodeId start = 0;
  double e0_kwh = 180.0;
  double safety_kwh = 2.0;
};

/// Time at which demand `d` departs node `n` when it waits `wait` at its origin.
inline double node_time(const Demand& d, NodeId n, double wait) {
  const auto pos = d.route.position(n);
  if (!pos) {
    throw OffRouteError("node " + std::to_string(n) + " is not on the route of ED " +
                        std::to_string(d.id));
  }
  if (wait < -kTolerance || wait > d.max_wait_min + kTolerance) {
    throw ToleranceViolationError("wait " + std::to_string(wait) + " outside [0, " +
                                  std::to_string(d.max_wait_min) + "] for ED " +
                                  std::to_string(d.id));
  }
  return d.t0_est_min + d.route.offset_min[*pos] + wait;
}

/// Largest energy the demand can be credited while travelling `arc`.
inline double max_receivable(const Demand& d, std::size_t arc, const TransferParams& p) {
  return p.efficiency * p.eta_kw * (d.route.arc_min.at(arc) / 60.0);
}

/// Cumulative inventory floor/ceiling on delivered energy before node k (k >= 1):
/// floor = safety - e0 + losses so far, ceiling = capacity - e0 + losses so far.
struct DeliveryBounds {
  std::vector<double> floor;
  std::vector<double> ceiling;
};

inline DeliveryBounds delivery_bounds(const Demand& d) {
  DeliveryBounds b;
  double lost = 0.0;
  for (std::size_t a = 0; a < d.route.arc_count(); ++a) {
    lost += d.route.ed_loss_kwh[a];
    b.floor.push_back(d.safety_kwh - d.e0_kwh + lost);
    b.ceiling.push_back(d.capacity_kwh - d.e0_kwh + lost);
  }
  return b;
}

/// True when the demand would fall below its safety inventory unaided.
inline bool needs_service(const Demand& d) {
  const auto b = delivery_bounds(d);
  for (double f : b.floor) {
    if (f > kTolerance) return true;
  }
  return false;
}

/// Smallest total delivery that keeps the demand above its safety inventory.
inline double deficit_kwh(const Demand& d) {
  double worst = 0.0;
  for (double f : delivery_bounds(d).floor) worst = std::max(worst, f);
  return worst;
}

// File-level description of an instance, kept for lossless round trips.

struct NodeSpec {
  NodeId id = 0;
  std::string kind;
};

struct DemandSpec {
  EdId id = 0;
  std::vector<NodeId> route;
  std::vector<double> segment_min;
  std::vector<double> segment_miles;
  double t0_est_min = 0.0;
  double max_wait_min = 0.0;
  double e0_kwh = 0.0;
  std::optional<double> capacity_kwh;
};

struct SupplierSpec {
  EpId id = 0;
  NodeId start_node = 0;
  double e0_kwh = 180.0;
};

struct PhysicalLink {
  NodeId from = 0;
  NodeId to = 0;
  double time_min = 0.0;
  double miles = 0.0;
};

struct InstanceSpec {
  InstanceMeta meta;
  EnergyParams params;
  std::vector<NodeSpec> nodes;
  NodeMatrix matrix;
  std::vector<DemandSpec> demands;
  std::vector<SupplierSpec> suppliers;
  /// Optional physical network the routes were drawn from.
  std::vector<PhysicalLink> links;
};

class Instance {
 public:
  const InstanceMeta& meta() const { return spec_->meta; }
  const EnergyParams& params() const { return spec_->params; }
  const TransferParams& transfer() const { return spec_->params.transfer; }
  const EncounterGraph& graph() const { return *graph_; }
  const InstanceSpec& spec() const { return *spec_; }

  const std::vector<Demand>& demands() const { return demands_; }
  const std::vector<Supplier>& suppliers() const { return suppliers_; }

  bool has_demand(EdId id) const { return demand_index_.count(id) != 0; }
  bool has_supplier(EpId id) const { return supplier_index_.count(id) != 0; }

  const Demand& demand(EdId id) const {
    auto it = demand_index_.find(id);
    if (it == demand_index_.end()) throw MalformedSolutionError("unknown ED " + std::to_string(id));
    return demands_[it->second];
  }

  const Supplier& supplier(EpId id) const {
    auto it = supplier_index_.find(id);
    if (it == supplier_index_.end()) throw MalformedSolutionError("unknown EP " + std::to_string(id));
    return suppliers_[it->second];
  }

  /// Ids of the demands whose route passes `n`, ascending.
  const std::vector<EdId>& demands_through(NodeId n) const {
    static const std::vector<EdId> kNone;
    auto it = through_.find(n);
    return it == through_.end() ? kNone : it->second;
  }

  /// Same network and fleet, demand set cut down to `eds`.
  Instance restricted(const std::vector<EdId>& eds) const {
    std::set<EdId> keep(eds.begin(), eds.end());
    std::vector<Demand> subset;
    for (const auto& d : demands_) {
      if (keep.count(d.id)) subset.push_back(d);
    }
    return Instance(spec_, graph_, std::move(subset), suppliers_);
  }

  Instance(std::shared_ptr<const InstanceSpec> spec, std::shared_ptr<const EncounterGraph> graph,
           std::vector<Demand> demands, std::vector<Supplier> suppliers)
      : spec_(std::move(spec)),
        graph_(std::move(graph)),
        demands_(std::move(demands)),
        suppliers_(std::move(suppliers)) {
    std::sort(demands_.begin(), demands_.end(),
              [](const Demand& a, const Demand& b) { return a.id < b.id; });
    std::sort(suppliers_.begin(), suppliers_.end(),
              [](const Supplier& a, const Supplier& b) { return a.id < b.id; });
    for (std::size_t k = 0; k < demands_.size(); ++k) {
      if (!demand_index_.emplace(demands_[k].id, k).second) {
        throw InvalidInstanceError("duplicate ED id " + std::to_string(demands_[k].id));
      }
      for (NodeId n : demands_[k].route.nodes) through_[n].push_back(demands_[k].id);
    }
    for (std::size_t k = 0; k < suppliers_.size(); ++k) {
      if (!supplier_index_.emplace(suppliers_[k].id, k).second) {
        throw InvalidInstanceError("duplicate EP id " + std::to_string(suppliers_[k].id));
      }
    }
  }

 private:
  std::shared_ptr<const InstanceSpec> spec_;
  std::shared_ptr<const EncounterGraph> graph_;
  std::vector<Demand> demands_;
  std::vector<Supplier> suppliers_;
  std::map<EdId, std::size_t> demand_index_;
  std::map<EpId, std::size_t> supplier_index_;
  std::map<NodeId, std::vector<EdId>> through_;
};

/// Ids of the demands in `inst` passing node `n`.
inline std::vector<EdId> demands_through(const Instance& inst, NodeId n) {
  return inst.demands_through(n);
}

/// Validates a file-level spec and builds the encounter graph and fleet.
inline Instance make_instance(InstanceSpec spec) {
  const auto& p = spec.params;
  if (!(spec.meta.interval_min > 0.0)) throw InvalidInstanceError("interval length must be positive");
  if (!(p.transfer.eta_kw > 0.0)) throw InvalidInstanceError("transfer rate must be positive");
  if (!(p.transfer.efficiency > 0.0 && p.transfer.efficiency <= 1.0)) {
    throw InvalidInstanceError("transfer efficiency must lie in (0, 1]");
  }
  if (p.ed_safety_kwh < 0.0 || p.ep_safety_kwh < 0.0) {
    throw InvalidInstanceError("safety inventories must be non-negative");
  }

  std::set<NodeId> known;
  std::vector<NodeId> depots;
  for (const auto& n : spec.nodes) {
    if (!known.insert(n.id).second) throw InvalidInstanceError("duplicate node " + std::to_string(n.id));
    if (n.kind == "depot") depots.push_back(n.id);
  }

  std::vector<RawRoute> raw;
  for (const auto& d : spec.demands) {
    for (NodeId n : d.route) {
      if (!known.count(n)) throw InvalidInstanceError("route of ED " + std::to_string(d.id) +
                                                      " references unknown node " + std::to_string(n));
    }
    raw.push_back(RawRoute{d.id, d.route, d.segment_min, d.segment_miles});
  }
  std::vector<NodeId> starts;
  for (const auto& s : spec.suppliers) {
    if (!known.count(s.start_node)) {
      throw InvalidInstanceError("EP " + std::to_string(s.id) + " starts at unknown node " +
                                 std::to_string(s.start_node));
    }
    starts.push_back(s.start_node);
  }

  auto net = build_encounter_graph(raw, depots, spec.matrix, p.rates, starts);
  for (NodeId start : starts) {
    if (!net.graph.contains(start)) {
      throw InvalidInstanceError("EP start node " + std::to_string(start) +
                                 " is neither a depot nor a route node");
    }
  }

  std::vector<Demand> demands;
  for (std::size_t k = 0; k < spec.demands.size(); ++k) {
    const auto& ds = spec.demands[k];
    Demand d;
    d.id = ds.id;
    d.route = net.routes[k];
    d.t0_est_min = ds.t0_est_min;
    d.max_wait_min = ds.max_wait_min;
    d.capacity_kwh = ds.capacity_kwh.value_or(p.ed_capacity_kwh);
    d.e0_kwh = ds.e0_kwh;
    d.safety_kwh = p.ed_safety_kwh;
    const auto label = "ED " + std::to_string(d.id);
    if (d.max_wait_min < 0.0) throw InvalidInstanceError(label + " has negative wait tolerance");
    if (d.e0_kwh < d.safety_kwh - kTolerance || d.e0_kwh > d.capacity_kwh + kTolerance) {
      throw InvalidInstanceError(label + " violates safety <= e0 <= capacity");
    }
    demands.push_back(std::move(d));
  }

  std::vector<Supplier> suppliers;
  for (const auto& ss : spec.suppliers) {
    Supplier s{ss.id, ss.start_node, ss.e0_kwh, p.ep_safety_kwh};
    if (!(s.e0_kwh > s.safety_kwh)) {
      throw InvalidInstanceError("EP " + std::to_string(s.id) + " violates e0 > safety");
    }
    suppliers.push_back(s);
  }

  auto graph = std::make_shared<const EncounterGraph>(std::move(net.graph));
  auto shared_spec = std::make_shared<const InstanceSpec>(std::move(spec));
  return Instance(std::move(shared_spec), std::move(graph), std::move(demands), std::move(suppliers));
}

}  // namespace me2vrp

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "me2vrp/common.hpp"
#include "me2vrp/fleet.hpp"

namespace me2vrp {

// EP actions. Each mirrors one decision variable family of the routing model.

/// Leave the start location to begin serving `ed` at `node` (o).
struct DepartToServe {
  EdId ed = 0;
  NodeId node = 0;
  bool operator==(const DepartToServe&) const = default;
};
/// Travel with `ed` along route arc `arc`, crediting it `e_plus_kwh` (z, e+).
struct ServeArc {
  EdId ed = 0;
  std::size_t arc = 0;
  double e_plus_kwh = 0.0;
  bool operator==(const ServeArc&) const = default;
};
/// Keep serving `ed` past `node` (w).
struct Continue {
  EdId ed = 0;
  NodeId node = 0;
  bool operator==(const Continue&) const = default;
};
/// Hand over from `from_ed` to `to_ed` at a shared node (u).
struct LocalSwitch {
  EdId from_ed = 0;
  EdId to_ed = 0;
  NodeId node = 0;
  bool operator==(const LocalSwitch&) const = default;
};
/// Drive from `from_ed` at `at_node` to meet `to_ed` at `to_node` (v).
struct DistantSwitch {
  EdId from_ed = 0;
  NodeId at_node = 0;
  EdId to_ed = 0;
  NodeId to_node = 0;
  bool operator==(const DistantSwitch&) const = default;
};
/// Leave `ed` at `node` and drive to the nearest depot (q).
struct ReturnToDepot {
  EdId ed = 0;
  NodeId node = 0;
  bool operator==(const ReturnToDepot&) const = default;
};

using Action =
    std::variant<DepartToServe, ServeArc, Continue, LocalSwitch, DistantSwitch, ReturnToDepot>;
using Tour = std::vector<Action>;

struct Solution {
  std::map<EpId, Tour> tours;
  std::map<EdId, double> waits;

  double wait(EdId ed) const {
    auto it = waits.find(ed);
    return it == waits.end() ? 0.0 : it->second;
  }
  bool operator==(const Solution&) const = default;
};

struct Violation {
  int constraint = 0;
  std::optional<EpId> ep;
  std::optional<EdId> ed;
  std::optional<NodeId> node;
  double slack = 0.0;
  std::string context;

  auto key() const { return std::tie(constraint, ep, ed, node, slack, context); }
};

struct ValidationReport {
  bool feasible = true;
  std::vector<Violation> violations;

  bool has(int constraint) const {
    return std::any_of(violations.begin(), violations.end(),
                       [&](const Violation& v) { return v.constraint == constraint; });
  }
};

/// Fleet size: number of EPs that leave their start location.
inline int objective(const Solution& sol) {
  int count = 0;
  for (const auto& [ep, tour] : sol.tours) {
    if (std::any_of(tour.begin(), tour.end(),
                    [](const Action& a) { return std::holds_alternative<DepartToServe>(a); })) {
      ++count;
    }
  }
  return count;
}

struct InventoryProfile {
  /// Inventory on departure from each route node; entry 0 is the origin.
  std::vector<double> inventory;
  /// Route positions (>= 1) where safety <= inventory <= capacity fails.
  std::vector<std::size_t> out_of_bounds;
  bool within_bounds() const { return out_of_bounds.empty(); }
};

/// Inventory of `d` along its route given per-arc deliveries.
inline InventoryProfile ed_inventory_profile(const Demand& d, const std::vector<double>& deliveries,
                                             const std::vector<bool>& served) {
  const std::size_t arcs = d.route.arc_count();
  if (deliveries.size() != arcs || served.size() != arcs) {
    throw InconsistentDeliveryError("delivery vector does not match the route of ED " +
                                    std::to_string(d.id));
  }
  InventoryProfile p;
  double level = d.e0_kwh;
  p.inventory.push_back(level);
  for (std::size_t a = 0; a < arcs; ++a) {
    if (!served[a] && std::abs(deliveries[a]) > kTolerance) {
      throw InconsistentDeliveryError("delivery on unserved arc " + std::to_string(a) +
                                      " of ED " + std::to_string(d.id));
    }
    level += (served[a] ? deliveries[a] : 0.0) - d.route.ed_loss_kwh[a];
    p.inventory.push_back(level);
    if (level < d.safety_kwh - kTolerance || level > d.capacity_kwh + kTolerance) {
      p.out_of_bounds.push_back(a + 1);
    }
  }
  return p;
}

inline InventoryProfile ed_inventory_profile(const Instance&, const Demand& d,
                                             const std::vector<double>& deliveries,
                                             const std::vector<bool>& served) {
  return ed_inventory_profile(d, deliveries, served);
}

struct EpEnergy {
  double loss_kwh = 0.0;
  double remaining_kwh = 0.0;
  bool above_safety = true;
};

/// Total energy an EP spends on `tour`: depart leg, distant-switch legs,
/// deliveries plus self-consumption on served arcs, and the return leg.
inline EpEnergy ep_energy_loss(const Instance& inst, const Supplier& s, const Tour& tour) {
  const auto& g = inst.graph();
  double loss = 0.0;
  for (const auto& action : tour) {
    if (auto* dep = std::get_if<DepartToServe>(&action)) {
      loss += g.energy_cost(s.start, dep->node);
    } else if (auto* sw = std::get_if<DistantSwitch>(&action)) {
      loss += g.energy_cost(sw->at_node, sw->to_node);
    } else if (auto* serve = std::get_if<ServeArc>(&action)) {
      loss += serve->e_plus_kwh + inst.demand(serve->ed).route.ep_loss_kwh.at(serve->arc);
    } else if (auto* ret = std::get_if<ReturnToDepot>(&action)) {
      loss += g.energy_cost(ret->node, g.nearest_depot(ret->node));
    }
  }
  EpEnergy out;
  out.loss_kwh = loss;
  out.remaining_kwh = s.e0_kwh - loss;
  out.above_safety = out.remaining_kwh >= s.safety_kwh - kTolerance;
  return out;
}

/// Local switch i -> j at a node is timely iff j departs no earlier than i.
inline bool check_local_switch(double t_from, double t_to) {
  return t_to - t_from >= -kTolerance;
}

/// Distant switch is timely iff the EP can drive over before `to` leaves.
inline bool check_distant_switch(double t_from, double t_to, double travel) {
  return t_to - t_from - travel >= -kTolerance;
}

// Big-M forms of the two timing rows, used to cross-check the conditional
// evaluation above.
inline bool local_switch_big_m(double t_from, double t_to, int u, double big_m) {
  return t_to - t_from >= big_m * (u - 1) - kTolerance;
}
inline bool distant_switch_big_m(double t_from, double t_to, double travel, int v, double big_m) {
  return t_to - t_from - travel >= big_m * (v - 1) - kTolerance;
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Values of gamma allowed by the four rows linearizing e+ * sum_s z:
///   gamma - e+ <= 0, gamma - M sum z <= 0,
///   M (sum z - 1) - gamma + e+ <= 0, gamma >= 0.
inline std::optional<Interval> gamma_range(double e_plus, int z_sum, double big_m) {
  const double lo = std::max(0.0, big_m * (z_sum - 1) + e_plus);
  const double hi = std::min(e_plus, big_m * z_sum);
  if (lo > hi) return std::nullopt;
  return Interval{lo, hi};
}

/// Values of zeta allowed by the per-EP rows linearizing z * e+:
///   zeta - e+ <= 0, zeta - M z <= 0, M (z - 1) - zeta + e+ <= 0, zeta >= 0.
inline std::optional<Interval> zeta_range(double e_plus, int z, double big_m) {
  const double from_link = e_plus;             // zeta <= e+
  const double from_switch = big_m * z;        // zeta <= M z
  const double from_bind = big_m * (z - 1) + e_plus;  // zeta >= M (z - 1) + e+
  const double lo = std::max(0.0, from_bind);
  const double hi = std::min(from_link, from_switch);
  if (lo > hi) return std::nullopt;
  return Interval{lo, hi};
}

/// True iff the linearization pins gamma (and zeta) to exactly e+ * z.
inline bool linearization_check(double e_plus, int z_sum, double big_m, double tol = 1e-9) {
  const auto g = gamma_range(e_plus, z_sum, big_m);
  const auto z = zeta_range(e_plus, z_sum, big_m);
  const double target = e_plus * z_sum;
  auto pinned = [&](const std::optional<Interval>& r) {
    return r && std::abs(r->lo - target) <= tol && std::abs(r->hi - target) <= tol;
  };
  return pinned(g) && pinned(z);
}

namespace detail {

inline bool is_entry(const Action& a) {
  return std::holds_alternative<DepartToServe>(a) || std::holds_alternative<Continue>(a) ||
         std::holds_alternative<LocalSwitch>(a) || std::holds_alternative<DistantSwitch>(a);
}
inline bool is_exit(const Action& a) {
  return std::holds_alternative<Continue>(a) || std::holds_alternative<LocalSwitch>(a) ||
         std::holds_alternative<DistantSwitch>(a) || std::holds_alternative<ReturnToDepot>(a);
}
/// (ed, node) an entry action starts serving.
inline std::pair<EdId, NodeId> entry_target(const Action& a) {
  if (auto* x = std::get_if<DepartToServe>(&a)) return {x->ed, x->node};
  if (auto* x = std::get_if<Continue>(&a)) return {x->ed, x->node};
  if (auto* x = std::get_if<LocalSwitch>(&a)) return {x->to_ed, x->node};
  const auto& d = std::get<DistantSwitch>(a);
  return {d.to_ed, d.to_node};
}
/// (ed, node) an exit action stops serving.
inline std::pair<EdId, NodeId> exit_source(const Action& a) {
  if (auto* x = std::get_if<Continue>(&a)) return {x->ed, x->node};
  if (auto* x = std::get_if<LocalSwitch>(&a)) return {x->from_ed, x->node};
  if (auto* x = std::get_if<DistantSwitch>(&a)) return {x->from_ed, x->at_node};
  const auto& r = std::get<ReturnToDepot>(a);
  return {r.ed, r.node};
}

inline void require_on_route(const Demand& d, NodeId n, const char* what) {
  if (!d.route.contains(n)) {
    throw MalformedSolutionError(std::string(what) + ": node " + std::to_string(n) +
                                 " is not on the route of ED " + std::to_string(d.id));
  }
}

/// Throws on references that do not name a variable of the model.
inline void check_references(const Instance& inst, const Solution& sol) {
  for (const auto& [ed, wait] : sol.waits) {
    if (!inst.has_demand(ed)) throw MalformedSolutionError("wait for unknown ED " + std::to_string(ed));
  }
  for (const auto& [ep, tour] : sol.tours) {
    if (!inst.has_supplier(ep)) throw MalformedSolutionError("tour for unknown EP " + std::to_string(ep));
    for (const auto& action : tour) {
      std::visit(
          [&](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, DepartToServe>) {
              const auto& d = inst.demand(a.ed);
              require_on_route(d, a.node, "depart");
              if (a.node == d.route.destination()) {
                throw MalformedSolutionError("depart at the destination of ED " + std::to_string(a.ed));
              }
            } else if constexpr (std::is_same_v<T, ServeArc>) {
              const auto& d = inst.demand(a.ed);
              if (a.arc >= d.route.arc_count()) {
                throw MalformedSolutionError("arc " + std::to_string(a.arc) + " out of range for ED " +
                                             std::to_string(a.ed));
              }
              if (!std::isfinite(a.e_plus_kwh)) throw MalformedSolutionError("non-finite delivery");
            } else if constexpr (std::is_same_v<T, Continue>) {
              require_on_route(inst.demand(a.ed), a.node, "continue");
            } else if constexpr (std::is_same_v<T, LocalSwitch>) {
              const auto& from = inst.demand(a.from_ed);
              const auto& to = inst.demand(a.to_ed);
              require_on_route(from, a.node, "local switch");
              require_on_route(to, a.node, "local switch");
              if (a.node == from.route.origin()) {
                throw MalformedSolutionError("local switch at the origin of ED " + std::to_string(a.from_ed));
              }
            } else if constexpr (std::is_same_v<T, DistantSwitch>) {
              const auto& from = inst.demand(a.from_ed);
              const auto& to = inst.demand(a.to_ed);
              if (a.at_node == a.to_node) throw MalformedSolutionError("distant switch between equal nodes");
              require_on_route(from, a.at_node, "distant switch");
              require_on_route(to, a.to_node, "distant switch");
              if (a.at_node == from.route.origin()) {
                throw MalformedSolutionError("distant switch from the origin of ED " + std::to_string(a.from_ed));
              }
              if (a.to_node == to.route.destination()) {
                throw MalformedSolutionError("distant switch to the destination of ED " + std::to_string(a.to_ed));
              }
            } else {
              const auto& d = inst.demand(a.ed);
              require_on_route(d, a.node, "return");
              if (a.node == d.route.origin()) {
                throw MalformedSolutionError("return from the origin of ED " + std::to_string(a.ed));
              }
            }
          },
          action);
    }
  }
}

inline double raw_node_time(const Demand& d, NodeId n, double wait) {
  return d.t0_est_min + d.route.offset_min[*d.route.position(n)] + wait;
}

}  // namespace detail

/// Checks a solution against every row of the model and reports all
/// violations, sorted. Throws MalformedSolutionError on dangling references.
inline ValidationReport validate(const Instance& inst, const Solution& sol) {
  detail::check_references(inst, sol);
  std::vector<Violation> out;
  auto add = [&](int c, std::optional<EpId> ep, std::optional<EdId> ed, std::optional<NodeId> node,
                 double slack, std::string context) {
    out.push_back(Violation{c, ep, ed, node, slack, std::move(context)});
  };

  std::map<std::pair<EdId, std::size_t>, int> arc_use;
  std::map<EdId, std::vector<double>> delivered;

  for (const auto& [ep, tour] : sol.tours) {
    int departs = 0, returns = 0;
    for (std::size_t k = 0; k < tour.size(); ++k) {
      const Action& a = tour[k];
      const Action* prev = k > 0 ? &tour[k - 1] : nullptr;
      const Action* next = k + 1 < tour.size() ? &tour[k + 1] : nullptr;

      if (std::holds_alternative<DepartToServe>(a)) ++departs;
      if (std::holds_alternative<ReturnToDepot>(a)) ++returns;

      if (auto* serve = std::get_if<ServeArc>(&a)) {
        const auto& d = inst.demand(serve->ed);
        const NodeId from = d.route.nodes[serve->arc];
        const NodeId to = d.route.nodes[serve->arc + 1];
        ++arc_use[{serve->ed, serve->arc}];
        auto& dl = delivered[serve->ed];
        dl.resize(d.route.arc_count(), 0.0);
        dl[serve->arc] += serve->e_plus_kwh;

        const double cap = max_receivable(d, serve->arc, inst.transfer());
        if (serve->e_plus_kwh < -kTolerance || serve->e_plus_kwh > cap + kTolerance) {
          add(9, ep, serve->ed, from, std::min(serve->e_plus_kwh, cap - serve->e_plus_kwh),
              "delivery outside [0, max receivable]");
        }
        const bool fed = prev && detail::is_entry(*prev) &&
                         detail::entry_target(*prev) == std::pair{serve->ed, from};
        if (!fed) add(from == d.route.origin() ? 5 : 3, ep, serve->ed, from, -1.0, "served arc has no inflow");
        const bool drained = next && detail::is_exit(*next) &&
                             detail::exit_source(*next) == std::pair{serve->ed, to};
        if (!drained) {
          add(to == d.route.destination() ? 4 : 2, ep, serve->ed, to, -1.0, "served arc has no outflow");
        }
        continue;
      }

      if (auto* cont = std::get_if<Continue>(&a)) {
        const auto& d = inst.demand(cont->ed);
        if (cont->node == d.route.origin()) {
          add(5, ep, cont->ed, cont->node, 1.0, "continue at origin");
          continue;
        }
        if (cont->node == d.route.destination()) {
          add(4, ep, cont->ed, cont->node, 1.0, "continue at destination");
          continue;
        }
      }

      if (detail::is_exit(a)) {
        const auto [ed, node] = detail::exit_source(a);
        const auto& d = inst.demand(ed);
        const auto* s = prev ? std::get_if<ServeArc>(prev) : nullptr;
        const bool ok = s && s->ed == ed && d.route.nodes[s->arc + 1] == node;
        if (!ok) add(node == d.route.destination() ? 4 : 2, ep, ed, node, 1.0, "exit without served arc");
      }
      if (detail::is_entry(a)) {
        const auto [ed, node] = detail::entry_target(a);
        const auto& d = inst.demand(ed);
        const auto* s = next ? std::get_if<ServeArc>(next) : nullptr;
        const bool ok = s && s->ed == ed && d.route.nodes[s->arc] == node;
        if (!ok) add(node == d.route.origin() ? 5 : 3, ep, ed, node, 1.0, "entry without served arc");
      }

      if (auto* ls = std::get_if<LocalSwitch>(&a)) {
        const double ti = detail::raw_node_time(inst.demand(ls->from_ed), ls->node, sol.wait(ls->from_ed));
        const double tj = detail::raw_node_time(inst.demand(ls->to_ed), ls->node, sol.wait(ls->to_ed));
        if (!check_local_switch(ti, tj)) add(13, ep, ls->from_ed, ls->node, tj - ti, "local switch too late");
      } else if (auto* ds = std::get_if<DistantSwitch>(&a)) {
        const double ti = detail::raw_node_time(inst.demand(ds->from_ed), ds->at_node, sol.wait(ds->from_ed));
        const double tj = detail::raw_node_time(inst.demand(ds->to_ed), ds->to_node, sol.wait(ds->to_ed));
        const double leg = inst.graph().travel_time(ds->at_node, ds->to_node);
        if (!check_distant_switch(ti, tj, leg)) {
          add(14, ep, ds->from_ed, ds->at_node, tj - ti - leg, "distant switch too late");
        }
      }
    }
    if (departs > 1) add(6, ep, std::nullopt, std::nullopt, 1.0 - departs, "more than one dispatch");
    if (returns > 1) add(7, ep, std::nullopt, std::nullopt, 1.0 - returns, "more than one return");

    const auto energy = ep_energy_loss(inst, inst.supplier(ep), tour);
    if (!energy.above_safety) {
      add(12, ep, std::nullopt, std::nullopt, energy.remaining_kwh - inst.supplier(ep).safety_kwh,
          "EP below safety inventory");
    }
  }

  for (const auto& [key, uses] : arc_use) {
    if (uses > 1) {
      const auto& d = inst.demand(key.first);
      add(8, std::nullopt, key.first, d.route.nodes[key.second], 1.0 - uses, "arc served more than once");
    }
  }

  for (const auto& d : inst.demands()) {
    std::vector<double> dl(d.route.arc_count(), 0.0);
    if (auto it = delivered.find(d.id); it != delivered.end()) dl = it->second;
    const auto profile = ed_inventory_profile(d, dl, std::vector<bool>(dl.size(), true));
    for (std::size_t pos : profile.out_of_bounds) {
      const double level = profile.inventory[pos];
      add(10, std::nullopt, d.id, d.route.nodes[pos],
          std::min(level - d.safety_kwh, d.capacity_kwh - level), "ED inventory out of bounds");
    }
    const double w = sol.wait(d.id);
    if (w < -kTolerance || w > d.max_wait_min + kTolerance) {
      add(15, std::nullopt, d.id, d.route.origin(), std::min(w, d.max_wait_min - w), "wait outside tolerance");
    }
  }

  std::sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) { return a.key() < b.key(); });
  ValidationReport report;
  report.violations = std::move(out);
  report.feasible = report.violations.empty();
  return report;
}

}  // namespace me2vrp

#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "me2vrp/maxflow.hpp"
#include "me2vrp/model.hpp"

namespace me2vrp {

/// tau[to] - tau[from] >= gap.
struct WaitConstraint {
  EdId from = 0;
  EdId to = 0;
  double gap = 0.0;
};

/// Timing rows implied by the switches of one action.
inline std::optional<WaitConstraint> switch_constraint(const Instance& inst, const Action& a) {
  if (auto* ls = std::get_if<LocalSwitch>(&a)) {
    const auto& i = inst.demand(ls->from_ed);
    const auto& j = inst.demand(ls->to_ed);
    return WaitConstraint{ls->from_ed, ls->to_ed,
                          detail::raw_node_time(i, ls->node, 0.0) - detail::raw_node_time(j, ls->node, 0.0)};
  }
  if (auto* ds = std::get_if<DistantSwitch>(&a)) {
    const auto& i = inst.demand(ds->from_ed);
    const auto& j = inst.demand(ds->to_ed);
    const double leg = inst.graph().travel_time(ds->at_node, ds->to_node);
    return WaitConstraint{ds->from_ed, ds->to_ed,
                          detail::raw_node_time(i, ds->at_node, 0.0) + leg -
                              detail::raw_node_time(j, ds->to_node, 0.0)};
  }
  return std::nullopt;
}

/// Componentwise smallest waits satisfying the difference constraints and
/// 0 <= tau <= max wait, or nullopt when none exist.
inline std::optional<std::map<EdId, double>> minimal_waits(const Instance& inst,
                                                           const std::vector<WaitConstraint>& rows) {
  constexpr double kStep = 1e-9;
  std::map<EdId, double> tau;
  for (const auto& r : rows) {
    tau.emplace(r.from, 0.0);
    tau.emplace(r.to, 0.0);
  }
  for (std::size_t pass = 0; pass <= tau.size(); ++pass) {
    bool changed = false;
    for (const auto& r : rows) {
      const double want = tau[r.from] + r.gap;
      if (want > tau[r.to] + kStep) {
        tau[r.to] = want;
        changed = true;
        if (want > inst.demand(r.to).max_wait_min + kTolerance) return std::nullopt;
      }
    }
    if (!changed) return tau;
  }
  return std::nullopt;
}

/// Fixed energy an EP spends on a tour regardless of deliveries.
inline double fixed_tour_energy(const Instance& inst, const Supplier& s, const Tour& tour) {
  Tour dry = tour;
  for (auto& a : dry) {
    if (auto* serve = std::get_if<ServeArc>(&a)) serve->e_plus_kwh = 0.0;
  }
  return ep_energy_loss(inst, s, dry).loss_kwh;
}

namespace detail {

/// Energy part of the continuous system as a bounded flow. With
/// `open_supply`, arcs no tour serves may receive any amount up to their cap
/// from an unlimited source; this relaxes a partial routing to the best any
/// completion could do. Fills e_plus_kwh on success when `out` is set.
inline bool solve_energy(const Instance& inst, const Solution& routing, bool open_supply, Solution* out) {
  std::set<std::pair<EdId, std::size_t>> served;
  for (const auto& [ep, tour] : routing.tours) {
    for (const auto& a : tour) {
      if (auto* s = std::get_if<ServeArc>(&a)) {
        if (!served.insert({s->ed, s->arc}).second) return false;
      }
    }
  }

  // Node layout: 0 source, 1 sink, 2 open supply, then EPs, then chains.
  int next = 3;
  std::map<EpId, int> ep_node;
  for (const auto& [ep, tour] : routing.tours) ep_node[ep] = next++;
  std::map<EdId, int> chain_base;
  for (const auto& d : inst.demands()) {
    chain_base[d.id] = next;
    next += static_cast<int>(d.route.arc_count());
  }
  BoundedFlow flow(next);
  constexpr int kSource = 0, kSink = 1, kOpen = 2;

  for (const auto& [ep, tour] : routing.tours) {
    const auto& s = inst.supplier(ep);
    const double budget = s.e0_kwh - s.safety_kwh - fixed_tour_energy(inst, s, tour);
    if (budget < -kTolerance) return false;
    flow.add_edge(kSource, ep_node[ep], 0.0, std::max(0.0, budget));
  }
  if (open_supply) flow.add_edge(kSource, kOpen, 0.0, MaxFlow::kInf);

  std::map<std::pair<EpId, std::size_t>, int> delivery_edge;
  for (const auto& [ep, tour] : routing.tours) {
    for (std::size_t k = 0; k < tour.size(); ++k) {
      if (auto* s = std::get_if<ServeArc>(&tour[k])) {
        const auto& d = inst.demand(s->ed);
        const int into = chain_base[s->ed] + static_cast<int>(s->arc);
        delivery_edge[{ep, k}] =
            flow.add_edge(ep_node[ep], into, 0.0, max_receivable(d, s->arc, inst.transfer()));
      }
    }
  }

  for (const auto& d : inst.demands()) {
    const auto bounds = delivery_bounds(d);
    const std::size_t arcs = d.route.arc_count();
    for (std::size_t a = 0; a < arcs; ++a) {
      if (open_supply && !served.count({d.id, a})) {
        flow.add_edge(kOpen, chain_base[d.id] + static_cast<int>(a), 0.0,
                      max_receivable(d, a, inst.transfer()));
      }
      // Chain node a holds cumulative delivery up to route node a + 1.
      const double lo = std::max(0.0, bounds.floor[a]);
      const double hi = bounds.ceiling[a];
      if (lo > hi + kTolerance) return false;
      const int here = chain_base[d.id] + static_cast<int>(a);
      const int there = a + 1 < arcs ? here + 1 : kSink;
      flow.add_edge(here, there, std::min(lo, hi), hi);
    }
  }

  if (!flow.solve(kSource, kSink)) return false;
  if (out) {
    *out = routing;
    for (auto& [ep, tour] : out->tours) {
      for (std::size_t k = 0; k < tour.size(); ++k) {
        if (auto* s = std::get_if<ServeArc>(&tour[k])) {
          const auto& d = inst.demand(s->ed);
          const double cap = max_receivable(d, s->arc, inst.transfer());
          s->e_plus_kwh = std::clamp(flow.flow(delivery_edge.at({ep, k})), 0.0, cap);
        }
      }
    }
  }
  return true;
}

inline std::vector<WaitConstraint> wait_rows(const Instance& inst, const Solution& routing) {
  std::vector<WaitConstraint> rows;
  for (const auto& [ep, tour] : routing.tours) {
    for (const auto& a : tour) {
      if (auto row = switch_constraint(inst, a)) rows.push_back(*row);
    }
  }
  return rows;
}

}  // namespace detail

/// Decides the continuous part of the model for a fixed action skeleton and
/// returns a witness: the skeleton with deliveries and waits filled in.
/// Delivery values and waits already present in `routing` are ignored.
inline std::optional<Solution> linear_feasibility(const Instance& inst, const Solution& routing) {
  auto tau = minimal_waits(inst, detail::wait_rows(inst, routing));
  if (!tau) return std::nullopt;
  Solution witness;
  if (!detail::solve_energy(inst, routing, false, &witness)) return std::nullopt;
  witness.waits.clear();
  for (const auto& d : inst.demands()) {
    auto it = tau->find(d.id);
    witness.waits[d.id] = it == tau->end() ? 0.0 : it->second;
  }
  return witness;
}

/// Necessary condition for a partial routing: some completion that only adds
/// service on currently unserved arcs could meet every energy row.
inline bool energy_completable(const Instance& inst, const Solution& partial) {
  return detail::solve_energy(inst, partial, true, nullptr);
}

}  // namespace me2vrp

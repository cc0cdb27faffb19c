#pragma once

#include <algorithm>
#include <chrono>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "me2vrp/common.hpp"
#include "me2vrp/exact.hpp"
#include "me2vrp/model.hpp"

namespace me2vrp {

/// Local-switch candidates: for each (i, n) with n past i's origin, the
/// demands j at n that could be picked up after i given their wait tolerance.
class LscSets {
 public:
  const std::vector<EdId>& at(EdId i, NodeId n) const {
    static const std::vector<EdId> kNone;
    auto it = sets_.find({i, n});
    return it == sets_.end() ? kNone : it->second;
  }
  bool contains(EdId i, NodeId n, EdId j) const {
    const auto& s = at(i, n);
    return std::binary_search(s.begin(), s.end(), j);
  }
  const std::map<std::pair<EdId, NodeId>, std::vector<EdId>>& all() const { return sets_; }

  std::map<std::pair<EdId, NodeId>, std::vector<EdId>> sets_;
};

/// Arrival at `n` with no wait.
inline double planned_time(const Demand& d, NodeId n) {
  return d.t0_est_min + d.route.offset_min.at(*d.route.position(n));
}

inline LscSets lsc_sets(const Instance& inst) {
  LscSets out;
  for (const auto& i : inst.demands()) {
    for (std::size_t k = 1; k < i.route.nodes.size(); ++k) {
      const NodeId n = i.route.nodes[k];
      auto& set = out.sets_[{i.id, n}];
      for (EdId jid : inst.demands_through(n)) {
        if (jid == i.id) continue;
        const auto& j = inst.demand(jid);
        if (planned_time(j, n) - planned_time(i, n) >= -j.max_wait_min - kTolerance) set.push_back(jid);
      }
    }
  }
  return out;
}

struct OpportunityMatrix {
  std::vector<EdId> ids;
  std::vector<std::vector<int>> p;

  std::size_t index(EdId id) const {
    return static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
  }
  int at(EdId i, EdId j) const { return p[index(i)][index(j)]; }
};

inline OpportunityMatrix opportunity_matrix(const Instance& inst, const LscSets& lsc) {
  OpportunityMatrix m;
  for (const auto& d : inst.demands()) m.ids.push_back(d.id);
  m.p.assign(m.ids.size(), std::vector<int>(m.ids.size(), 0));
  for (const auto& [key, set] : lsc.all()) {
    const std::size_t i = m.index(key.first);
    for (EdId j : set) {
      if (j != key.first) ++m.p[i][m.index(j)];
    }
  }
  return m;
}

struct Cluster {
  int id = 0;
  std::vector<EdId> eds;
};

/// Greedy chaining on the opportunity matrix. Clustered demands leave the
/// pool for good, so clusters partition the demands; leftovers become
/// singletons in id order.
inline std::vector<Cluster> cluster(const OpportunityMatrix& m, std::size_t cap = 8) {
  const std::size_t n = m.ids.size();
  cap = std::max<std::size_t>(cap, 1);
  std::vector<char> free(n, 1);
  std::vector<Cluster> out;

  auto best_in_row = [&](std::size_t i) {
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i || !free[k]) continue;
      if (!best || m.p[i][k] > m.p[i][*best]) best = k;
    }
    return best;
  };

  while (true) {
    std::optional<std::pair<std::size_t, std::size_t>> seed;
    for (std::size_t i = 0; i < n; ++i) {
      if (!free[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || !free[j]) continue;
        if (!seed || m.p[i][j] > m.p[seed->first][seed->second]) seed = {i, j};
      }
    }
    if (!seed || m.p[seed->first][seed->second] < 1) break;

    Cluster c;
    c.id = static_cast<int>(out.size());
    auto [i, j] = *seed;
    c.eds.push_back(m.ids[i]);
    free[i] = 0;
    if (cap > 1) {
      c.eds.push_back(m.ids[j]);
      free[j] = 0;
      i = j;
      while (c.eds.size() < cap) {
        auto next = best_in_row(i);
        if (!next || m.p[i][*next] <= 1) break;
        c.eds.push_back(m.ids[*next]);
        free[*next] = 0;
        i = *next;
      }
    }
    out.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (free[i]) out.push_back(Cluster{static_cast<int>(out.size()), {m.ids[i]}});
  }
  return out;
}

/// Summary of one EP tour used for merging: where and when service starts
/// and ends, and the energy spent between those points.
struct SeedTour {
  EpId ep = 0;
  Tour actions;
  EdId first_ed = 0;
  NodeId first_node = 0;
  double t_start = 0.0;
  EdId last_ed = 0;
  NodeId last_node = 0;
  double t_end = 0.0;
  double energy_kwh = 0.0;
  std::map<EdId, double> waits;
  int cluster = 0;

  bool operator==(const SeedTour&) const = default;
};

inline SeedTour make_seed(const Instance& inst, EpId ep, const Tour& tour,
                          const std::map<EdId, double>& waits, int cluster_id) {
  if (tour.empty() || !std::holds_alternative<DepartToServe>(tour.front()) ||
      !std::holds_alternative<ReturnToDepot>(tour.back())) {
    throw PipelineError("seed tour of EP " + std::to_string(ep) + " is not depart..return");
  }
  SeedTour s;
  s.ep = ep;
  s.actions = tour;
  s.cluster = cluster_id;
  const auto& dep = std::get<DepartToServe>(tour.front());
  const auto& ret = std::get<ReturnToDepot>(tour.back());
  for (const auto& a : tour) {
    if (auto* serve = std::get_if<ServeArc>(&a)) {
      auto it = waits.find(serve->ed);
      s.waits[serve->ed] = it == waits.end() ? 0.0 : it->second;
    }
  }
  s.first_ed = dep.ed;
  s.first_node = dep.node;
  s.t_start = node_time(inst.demand(dep.ed), dep.node, s.waits.at(dep.ed));
  s.last_ed = ret.ed;
  s.last_node = ret.node;
  s.t_end = node_time(inst.demand(ret.ed), ret.node, s.waits.at(ret.ed));
  const auto& sup = inst.supplier(ep);
  const auto& g = inst.graph();
  s.energy_kwh = ep_energy_loss(inst, sup, tour).loss_kwh - g.energy_cost(sup.start, dep.node) -
                 g.energy_cost(ret.node, g.nearest_depot(ret.node));
  return s;
}

struct SubproblemOptions {
  SolveOptions solve{false, 10.0, 20000};
  unsigned threads = 0;
};

struct SubproblemOutcome {
  std::vector<SeedTour> seeds;
  std::vector<SolveStatus> statuses;
  std::vector<long long> nodes;
};

/// Solves each cluster without distant switches. Results are gathered in
/// cluster order whatever the thread count.
inline SubproblemOutcome solve_subproblems(const Instance& inst, const std::vector<Cluster>& clusters,
                                           const SubproblemOptions& opts = {}) {
  SolveOptions solve = opts.solve;
  solve.allow_distant = false;
  std::vector<SolveResult> results(clusters.size());
  parallel_for(clusters.size(), opts.threads ? opts.threads : worker_count(), [&](std::size_t c) {
    results[c] = solve_exact(inst.restricted(clusters[c].eds), solve);
  });

  SubproblemOutcome out;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const auto& r = results[c];
    out.statuses.push_back(r.status);
    out.nodes.push_back(r.nodes_explored);
    if (!r.solution) {
      throw PipelineError("cluster " + std::to_string(clusters[c].id) + " subproblem is " +
                          std::string(to_string(r.status)));
    }
    for (const auto& [ep, tour] : r.solution->tours) {
      out.seeds.push_back(make_seed(inst, ep, tour, r.solution->waits, clusters[c].id));
    }
  }
  return out;
}

/// Energy rule for letting the EP of one tour continue into another.
inline bool rule1_holds(double e0, double depart_leg, double e_first, double link_leg,
                        double e_second, double return_leg, double safety) {
  return e0 - (depart_leg + e_first) - link_leg - (e_second + return_leg) >= safety - kTolerance;
}

/// Delay rule: the extra delay imposed on the second tour fits every slack.
inline bool rule2_holds(double t_end_first, double link_time, double t_start_second, double min_slack) {
  return (t_end_first + link_time) - t_start_second <= min_slack + kTolerance;
}

struct MergedTiming {
  double t_end = 0.0;
  double delay = 0.0;
};

inline MergedTiming merged_departure(double t_end_first, double link_time, double t_start_second,
                                     double t_end_second) {
  const double arrive = t_end_first + link_time;
  return {std::max(arrive, t_start_second) + t_end_second - t_start_second,
          std::max(0.0, arrive - t_start_second)};
}

inline double min_wait_slack(const Instance& inst, const SeedTour& t) {
  double slack = std::numeric_limits<double>::infinity();
  for (const auto& [ed, wait] : t.waits) slack = std::min(slack, inst.demand(ed).max_wait_min - wait);
  return slack;
}

inline bool can_merge(const SeedTour& a, const SeedTour& b, const Instance& inst) {
  const auto& g = inst.graph();
  const auto& sup = inst.supplier(a.ep);
  const bool energy = rule1_holds(sup.e0_kwh, g.energy_cost(sup.start, a.first_node), a.energy_kwh,
                                  g.energy_cost(a.last_node, b.first_node), b.energy_kwh,
                                  g.energy_cost(b.last_node, g.nearest_depot(b.last_node)),
                                  sup.safety_kwh);
  const bool timing = rule2_holds(a.t_end, g.travel_time(a.last_node, b.first_node), b.t_start,
                                  min_wait_slack(inst, b));
  return energy && timing;
}

inline MergedTiming merged_departure(const SeedTour& a, const SeedTour& b, const Instance& inst) {
  return merged_departure(a.t_end, inst.graph().travel_time(a.last_node, b.first_node), b.t_start, b.t_end);
}

/// Joins `b` after `a`, replacing a's return and b's dispatch with a switch,
/// and delays every demand of `b` uniformly.
inline SeedTour merge_pair(const SeedTour& a, const SeedTour& b, const Instance& inst) {
  const auto timing = merged_departure(a, b, inst);
  SeedTour m = a;
  m.actions.pop_back();
  if (a.last_node == b.first_node) {
    if (a.last_ed == b.first_ed) {
      m.actions.push_back(Continue{a.last_ed, a.last_node});
    } else {
      m.actions.push_back(LocalSwitch{a.last_ed, b.first_ed, a.last_node});
    }
  } else {
    m.actions.push_back(DistantSwitch{a.last_ed, a.last_node, b.first_ed, b.first_node});
  }
  m.actions.insert(m.actions.end(), b.actions.begin() + 1, b.actions.end());
  m.last_ed = b.last_ed;
  m.last_node = b.last_node;
  m.t_end = timing.t_end;
  m.energy_kwh = a.energy_kwh + inst.graph().energy_cost(a.last_node, b.first_node) + b.energy_kwh;
  for (const auto& [ed, wait] : b.waits) m.waits[ed] = wait + timing.delay;
  return m;
}

struct MergeLog {
  int merges = 0;
};

/// Repeatedly merges the lowest-index tour with the partner that lets it
/// finish earliest, restarting the scan after every merge.
inline std::vector<SeedTour> merge_seed_tours(std::vector<SeedTour> tours, const Instance& inst,
                                              MergeLog* log = nullptr) {
  auto shared_elsewhere = [&](std::size_t other) {
    for (const auto& [ed, wait] : tours[other].waits) {
      for (std::size_t k = 0; k < tours.size(); ++k) {
        if (k != other && tours[k].waits.count(ed)) return true;
      }
    }
    return false;
  };
  auto joinable = [&](const SeedTour& a, const SeedTour& b) {
    return !(a.last_ed == b.first_ed && a.last_node != b.first_node);
  };

  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t s = 0; s < tours.size() && !merged; ++s) {
      std::optional<std::size_t> pick;
      double pick_end = 0.0;
      for (std::size_t l = 0; l < tours.size(); ++l) {
        if (l == s || !joinable(tours[s], tours[l]) || !can_merge(tours[s], tours[l], inst)) continue;
        const auto timing = merged_departure(tours[s], tours[l], inst);
        // A delay would break switches of other tours serving the same demands.
        if (timing.delay > kTolerance && shared_elsewhere(l)) continue;
        if (!pick || timing.t_end < pick_end) {
          pick = l;
          pick_end = timing.t_end;
        }
      }
      if (pick) {
        tours[s] = merge_pair(tours[s], tours[*pick], inst);
        tours.erase(tours.begin() + static_cast<std::ptrdiff_t>(*pick));
        if (log) ++log->merges;
        merged = true;
      }
    }
  }
  return tours;
}

/// Assigns concrete EPs to merged tours and assembles the solution. Each tour
/// takes the smallest free EP identical to the one it was planned with, else
/// the smallest free EP whose inventory covers it.
inline Solution bind_tours(const std::vector<SeedTour>& tours, const Instance& inst) {
  Solution sol;
  for (const auto& d : inst.demands()) sol.waits[d.id] = 0.0;
  std::set<EpId> busy;
  const auto& g = inst.graph();
  auto fits = [&](const Supplier& s, const SeedTour& t) {
    const double total = g.energy_cost(s.start, t.first_node) + t.energy_kwh +
                         g.energy_cost(t.last_node, g.nearest_depot(t.last_node));
    return s.e0_kwh - total >= s.safety_kwh - kTolerance;
  };
  for (const auto& t : tours) {
    const auto& own = inst.supplier(t.ep);
    std::optional<EpId> chosen;
    for (const auto& s : inst.suppliers()) {
      if (!busy.count(s.id) && s.start == own.start && s.e0_kwh == own.e0_kwh &&
          s.safety_kwh == own.safety_kwh) {
        chosen = s.id;
        break;
      }
    }
    if (!chosen) {
      for (const auto& s : inst.suppliers()) {
        if (!busy.count(s.id) && fits(s, t)) {
          chosen = s.id;
          break;
        }
      }
    }
    if (!chosen) throw PipelineError("no free EP can run the tour starting at node " + std::to_string(t.first_node));
    busy.insert(*chosen);
    sol.tours[*chosen] = t.actions;
    for (const auto& [ed, wait] : t.waits) sol.waits[ed] = wait;
  }
  return sol;
}

inline Solution merge_tours(const std::vector<SeedTour>& seeds, const Instance& inst) {
  return bind_tours(merge_seed_tours(seeds, inst), inst);
}

struct CcwsOptions {
  std::size_t cluster_cap = 8;
  SubproblemOptions sub;
};

struct CcwsDiagnostics {
  std::vector<Cluster> clusters;
  std::vector<SolveStatus> sub_statuses;
  std::size_t seed_tours = 0;
  int merges = 0;
  double ms_cluster = 0.0;
  double ms_subproblems = 0.0;
  double ms_merge = 0.0;
  bool all_sub_optimal = true;
};

struct CcwsResult {
  SolveResult result;
  CcwsDiagnostics diagnostics;
};

/// Cluster, solve clusters without distant switches, merge seed tours.
inline CcwsResult ccws_solve(const Instance& inst, const CcwsOptions& opts = {}) {
  using clock = std::chrono::steady_clock;
  auto ms = [](clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
  };
  CcwsResult out;
  auto& diag = out.diagnostics;

  const auto t0 = clock::now();
  const auto lsc = lsc_sets(inst);
  diag.clusters = cluster(opportunity_matrix(inst, lsc), opts.cluster_cap);
  const auto t1 = clock::now();
  const auto sub = solve_subproblems(inst, diag.clusters, opts.sub);
  const auto t2 = clock::now();
  MergeLog log;
  const auto merged = merge_seed_tours(sub.seeds, inst, &log);
  Solution sol = bind_tours(merged, inst);
  const auto t3 = clock::now();

  diag.sub_statuses = sub.statuses;
  diag.seed_tours = sub.seeds.size();
  diag.merges = log.merges;
  diag.ms_cluster = ms(t0, t1);
  diag.ms_subproblems = ms(t1, t2);
  diag.ms_merge = ms(t2, t3);
  diag.all_sub_optimal = std::all_of(sub.statuses.begin(), sub.statuses.end(),
                                     [](SolveStatus s) { return s == SolveStatus::optimal; });

  out.result.status = SolveStatus::feasible;
  out.result.objective = objective(sol);
  out.result.solution = std::move(sol);
  for (long long n : sub.nodes) out.result.nodes_explored += n;
  return out;
}

}  // namespace me2vrp

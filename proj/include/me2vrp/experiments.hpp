#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "me2vrp/ccws.hpp"
#include "me2vrp/exact.hpp"
#include "me2vrp/fleet.hpp"

namespace me2vrp {

struct GenParams {
  std::uint64_t seed = 1;
  int grid_w = 6;
  int grid_h = 6;
  double block_miles = 1.0;
  double speed_mph = 30.0;
  int n_eds = 10;
  int n_eps = 4;
  int n_depots = 2;
  /// Planned starts are drawn uniformly from [0, window).
  double window_min = 60.0;
  /// Shortest OD distance in blocks.
  int min_trip_blocks = 4;
  double max_wait_min = 15.0;
  /// Energy shortfall per trip mile (kWh/mile).
  double ed_ratio = 0.25;
  double ep_e0_kwh = 180.0;
  EnergyParams params;
  double interval_min = 15.0;
  int max_retries = 50;
};

namespace detail {

/// Shortest paths by time over physical links. Ties keep the first settled
/// predecessor; nodes are settled in (time, id) order.
class LinkGraph {
 public:
  explicit LinkGraph(const std::vector<PhysicalLink>& links) {
    for (std::size_t k = 0; k < links.size(); ++k) out_[links[k].from].push_back(k);
    for (auto& [n, v] : out_) {
      std::sort(v.begin(), v.end(), [&](std::size_t a, std::size_t b) { return links[a].to < links[b].to; });
    }
    links_ = &links;
  }

  struct Tree {
    std::map<NodeId, double> time;
    std::map<NodeId, double> miles;
    std::map<NodeId, std::size_t> via;
  };

  Tree from(NodeId src) const {
    Tree t;
    using Item = std::pair<double, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    t.time[src] = 0.0;
    t.miles[src] = 0.0;
    pq.push({0.0, src});
    std::set<NodeId> done;
    while (!pq.empty()) {
      auto [d, v] = pq.top();
      pq.pop();
      if (!done.insert(v).second) continue;
      auto it = out_.find(v);
      if (it == out_.end()) continue;
      for (std::size_t k : it->second) {
        const auto& l = (*links_)[k];
        const double nd = d + l.time_min;
        auto cur = t.time.find(l.to);
        if (cur == t.time.end() || nd < cur->second - 1e-12) {
          t.time[l.to] = nd;
          t.miles[l.to] = t.miles[v] + l.miles;
          t.via[l.to] = k;
          pq.push({nd, l.to});
        }
      }
    }
    return t;
  }

  /// Link indices on the path src -> dst, or nullopt when unreachable.
  std::optional<std::vector<std::size_t>> links_on(const Tree& t, NodeId src, NodeId dst) const {
    if (!t.time.count(dst)) return std::nullopt;
    std::vector<std::size_t> path;
    for (NodeId v = dst; v != src;) {
      const std::size_t k = t.via.at(v);
      path.push_back(k);
      v = (*links_)[k].from;
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

 private:
  std::map<NodeId, std::vector<std::size_t>> out_;
  const std::vector<PhysicalLink>* links_ = nullptr;
};

}  // namespace detail

/// Synthetic instance on a grid street network with depots hanging off the
/// grid. Deterministic per seed.
inline InstanceSpec generate_instance(const GenParams& p) {
  if (p.n_eds < 1 || p.n_eps < 1 || p.n_depots < 1 || p.grid_w < 2 || p.grid_h < 2) {
    throw GenerationError("counts and grid dimensions must be positive");
  }
  if (p.ed_ratio < 0.0) throw GenerationError("e/d ratio must be non-negative");
  std::mt19937_64 rng(p.seed);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto pick = [&](int n) { return static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(rng)); };

  InstanceSpec spec;
  spec.meta.interval_min = p.interval_min;
  spec.params = p.params;
  const int grid = p.grid_w * p.grid_h;
  const double min_per_mile = 60.0 / p.speed_mph;
  auto add_link = [&](NodeId a, NodeId b, double miles) {
    const double minutes = miles * min_per_mile * uniform(0.9, 1.1);
    spec.links.push_back({a, b, minutes, miles});
    spec.links.push_back({b, a, minutes, miles});
  };
  for (int y = 0; y < p.grid_h; ++y) {
    for (int x = 0; x < p.grid_w; ++x) {
      const NodeId v = y * p.grid_w + x;
      if (x + 1 < p.grid_w) add_link(v, v + 1, p.block_miles);
      if (y + 1 < p.grid_h) add_link(v, v + p.grid_w, p.block_miles);
    }
  }
  std::vector<NodeId> depots;
  for (int k = 0; k < p.n_depots; ++k) {
    const NodeId depot = grid + k;
    depots.push_back(depot);
    add_link(depot, pick(grid), 0.5 * p.block_miles);
  }
  std::sort(spec.links.begin(), spec.links.end(), [](const PhysicalLink& a, const PhysicalLink& b) {
    return std::tie(a.from, a.to) < std::tie(b.from, b.to);
  });
  detail::LinkGraph lg(spec.links);

  for (int id = 0; id < p.n_eds; ++id) {
    bool placed = false;
    for (int attempt = 0; attempt < p.max_retries && !placed; ++attempt) {
      const NodeId o = pick(grid), d = pick(grid);
      const int blocks = std::abs(o % p.grid_w - d % p.grid_w) + std::abs(o / p.grid_w - d / p.grid_w);
      if (blocks < p.min_trip_blocks) continue;
      const auto tree = lg.from(o);
      const auto path = lg.links_on(tree, o, d);
      if (!path) continue;
      DemandSpec ds;
      ds.id = id;
      ds.route.push_back(o);
      double miles = 0.0;
      for (std::size_t k : *path) {
        ds.route.push_back(spec.links[k].to);
        ds.segment_min.push_back(spec.links[k].time_min);
        ds.segment_miles.push_back(spec.links[k].miles);
        miles += spec.links[k].miles;
      }
      ds.t0_est_min = std::round(uniform(0.0, p.window_min) * 10.0) / 10.0;
      ds.max_wait_min = p.max_wait_min;
      const double trip_kwh = p.params.rates.ed_kwh_per_mile * miles;
      const double shortfall = p.ed_ratio * miles * uniform(0.9, 1.1);
      ds.e0_kwh = std::clamp(trip_kwh + p.params.ed_safety_kwh - shortfall, p.params.ed_safety_kwh,
                             p.params.ed_capacity_kwh);
      spec.demands.push_back(std::move(ds));
      placed = true;
    }
    if (!placed) throw GenerationError("no admissible OD pair for ED " + std::to_string(id));
  }

  for (int k = 0; k < p.n_eps; ++k) spec.suppliers.push_back({k, depots[k % depots.size()], p.ep_e0_kwh});

  std::set<NodeId> used;
  for (const auto& d : spec.demands) used.insert(d.route.begin(), d.route.end());
  for (int v = 0; v < grid; ++v) spec.nodes.push_back({v, "waypoint"});
  for (NodeId dep : depots) spec.nodes.push_back({dep, "depot"});

  std::vector<NodeId> metric(used.begin(), used.end());
  metric.insert(metric.end(), depots.begin(), depots.end());
  spec.matrix = NodeMatrix::over(metric);
  for (std::size_t a = 0; a < metric.size(); ++a) {
    const auto tree = lg.from(metric[a]);
    for (std::size_t b = 0; b < metric.size(); ++b) {
      if (a == b) continue;
      auto it = tree.time.find(metric[b]);
      if (it == tree.time.end()) throw GenerationError("grid is disconnected");
      spec.matrix.set(a, b, it->second, p.params.rates.ep_kwh_per_mile * tree.miles.at(metric[b]));
    }
  }
  return spec;
}

/// EDs served per dispatched EP; infinity when nothing is dispatched.
inline double service_rate(std::size_t n_eds, int fleet) {
  if (fleet <= 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(n_eds) / fleet;
}

inline double service_rate(const Instance& inst, const Solution& sol) {
  return service_rate(inst.demands().size(), objective(sol));
}

struct LinkLoad {
  NodeId from = 0;
  NodeId to = 0;
  double free_flow_min = 0.0;
  double capacity_vph = 1.0;
  double volume_vph = 0.0;
};

struct BprParams {
  double alpha = 0.15;
  double beta = 4.0;
};

inline double bpr_time(double free_flow, double volume, double capacity, const BprParams& b = {}) {
  return free_flow * (1.0 + b.alpha * std::pow(volume / capacity, b.beta));
}

inline double bpr_time(const LinkLoad& l, const BprParams& b = {}) {
  return bpr_time(l.free_flow_min, l.volume_vph, l.capacity_vph, b);
}

struct ImpactBreakdown {
  double stt_base = 0.0;
  double stt_with_eps = 0.0;
  double delta_pct = 0.0;
  /// Per-link (with-EP minus base) contribution to system travel time.
  std::vector<double> per_link;
};

/// System travel time of background vehicles before and after EP flow is
/// added; EP vehicles themselves are not counted.
inline ImpactBreakdown stt_impact(const std::vector<LinkLoad>& background,
                                  const std::vector<double>& ep_volume, const BprParams& b = {}) {
  ImpactBreakdown out;
  for (std::size_t k = 0; k < background.size(); ++k) {
    const auto& l = background[k];
    const double extra = k < ep_volume.size() ? ep_volume[k] : 0.0;
    const double base = l.volume_vph * bpr_time(l.free_flow_min, l.volume_vph, l.capacity_vph, b);
    const double with = l.volume_vph * bpr_time(l.free_flow_min, l.volume_vph + extra, l.capacity_vph, b);
    out.stt_base += base;
    out.stt_with_eps += with;
    out.per_link.push_back(with - base);
  }
  out.delta_pct = out.stt_base > 0.0 ? (out.stt_with_eps - out.stt_base) / out.stt_base * 100.0 : 0.0;
  return out;
}

inline double delta_stt(const std::vector<LinkLoad>& background, const std::vector<double>& ep_volume,
                        const BprParams& b = {}) {
  return stt_impact(background, ep_volume, b).delta_pct;
}

/// Background loads on every physical link with v/c drawn from [vc_lo, vc_hi].
inline std::vector<LinkLoad> generate_background(const InstanceSpec& spec, std::uint64_t seed,
                                                 double capacity_vph = 1800.0, double vc_lo = 0.3,
                                                 double vc_hi = 0.9) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> vc(vc_lo, vc_hi);
  std::vector<LinkLoad> out;
  for (const auto& l : spec.links) {
    out.push_back({l.from, l.to, l.time_min, capacity_vph, std::round(vc(rng) * capacity_vph)});
  }
  return out;
}

/// EP flow per background link: `pce` for every traversal by any tour.
/// Served arcs follow the demand's own physical route; other legs follow
/// shortest paths over the physical links.
inline std::vector<double> ep_link_volumes(const Instance& inst, const Solution& sol,
                                           const std::vector<LinkLoad>& background, double pce = 1.0) {
  const auto& spec = inst.spec();
  std::vector<double> vol(background.size(), 0.0);
  std::map<std::pair<NodeId, NodeId>, std::size_t> slot;
  for (std::size_t k = 0; k < background.size(); ++k) slot[{background[k].from, background[k].to}] = k;
  if (spec.links.empty()) return vol;
  detail::LinkGraph lg(spec.links);
  std::map<EdId, const DemandSpec*> raw;
  for (const auto& d : spec.demands) raw[d.id] = &d;

  auto hop = [&](NodeId a, NodeId b) {
    auto it = slot.find({a, b});
    if (it != slot.end()) vol[it->second] += pce;
  };
  auto drive = [&](NodeId a, NodeId b) {
    if (a == b) return;
    const auto tree = lg.from(a);
    if (auto path = lg.links_on(tree, a, b)) {
      for (std::size_t k : *path) hop(spec.links[k].from, spec.links[k].to);
    }
  };
  auto ride = [&](EdId ed, std::size_t arc) {
    const auto& route = inst.demand(ed).route;
    const auto& nodes = raw.at(ed)->route;
    const NodeId a = route.nodes[arc], b = route.nodes[arc + 1];
    auto ia = std::find(nodes.begin(), nodes.end(), a);
    auto ib = std::find(nodes.begin(), nodes.end(), b);
    for (auto it = ia; it != ib; ++it) hop(*it, *(it + 1));
  };

  for (const auto& [ep, tour] : sol.tours) {
    const auto& s = inst.supplier(ep);
    for (const auto& a : tour) {
      if (auto* x = std::get_if<DepartToServe>(&a)) drive(s.start, x->node);
      if (auto* x = std::get_if<ServeArc>(&a)) ride(x->ed, x->arc);
      if (auto* x = std::get_if<DistantSwitch>(&a)) drive(x->at_node, x->to_node);
      if (auto* x = std::get_if<ReturnToDepot>(&a)) drive(x->node, inst.graph().nearest_depot(x->node));
    }
  }
  return vol;
}

enum class Method { exact, ccws };

struct SweepCell {
  GenParams gen;
  Method method = Method::ccws;
  SolveOptions exact;
  CcwsOptions ccws;
};

struct SweepRow {
  int cell_id = 0;
  std::size_t n_eds = 0;
  int n_eps_dispatched = 0;
  double service_rate = 0.0;
  double delta_stt_pct = 0.0;
  double solve_ms = 0.0;
  std::string status;
};

inline SweepRow run_cell(int id, const SweepCell& cell) {
  SweepRow row;
  row.cell_id = id;
  try {
    const auto spec = generate_instance(cell.gen);
    const auto inst = make_instance(spec);
    row.n_eds = inst.demands().size();
    const auto t0 = std::chrono::steady_clock::now();
    SolveResult r = cell.method == Method::exact ? solve_exact(inst, cell.exact)
                                                 : ccws_solve(inst, cell.ccws).result;
    row.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    row.status = std::string(to_string(r.status));
    if (r.solution) {
      row.n_eps_dispatched = objective(*r.solution);
      row.service_rate = service_rate(inst, *r.solution);
      const auto bg = generate_background(spec, cell.gen.seed);
      row.delta_stt_pct = delta_stt(bg, ep_link_volumes(inst, *r.solution, bg));
    }
  } catch (const std::exception&) {
    row.status = "error";
  }
  return row;
}

/// Runs every cell, concurrently when allowed; rows come back in cell order.
inline std::vector<SweepRow> sweep(const std::vector<SweepCell>& cells, unsigned threads = 0) {
  std::vector<SweepRow> rows(cells.size());
  parallel_for(cells.size(), threads ? threads : worker_count(),
               [&](std::size_t k) { rows[k] = run_cell(static_cast<int>(k), cells[k]); });
  return rows;
}

}  // namespace me2vrp

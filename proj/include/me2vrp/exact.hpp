#pragma once

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string_view>
#include <tuple>
#include <vector>

#include "me2vrp/feasibility.hpp"
#include "me2vrp/model.hpp"

namespace me2vrp {

enum class SolveStatus { optimal, feasible, infeasible, timeout };

inline std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::feasible: return "feasible";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::timeout: return "timeout";
  }
  return "?";
}

struct SolveOptions {
  bool allow_distant = true;
  double time_limit_s = 60.0;
  /// Search nodes before giving up; 0 means unlimited.
  long long node_limit = 0;
};

struct SolveResult {
  SolveStatus status = SolveStatus::infeasible;
  std::optional<Solution> solution;
  std::optional<int> objective;
  long long nodes_explored = 0;
};

/// Demands that fall below their safety inventory without service.
inline std::vector<EdId> deficient_demands(const Instance& inst) {
  std::vector<EdId> out;
  for (const auto& d : inst.demands()) {
    if (needs_service(d)) out.push_back(d.id);
  }
  return out;
}

/// True when no amount of service can keep `d` above its safety inventory.
inline bool deficit_unreachable(const Demand& d, const TransferParams& p) {
  const auto b = delivery_bounds(d);
  double reach = 0.0;
  for (std::size_t a = 0; a < d.route.arc_count(); ++a) {
    reach += max_receivable(d, a, p);
    if (b.floor[a] > reach + kTolerance || b.floor[a] > b.ceiling[a] + kTolerance) return true;
  }
  return false;
}

namespace detail {

/// Depth-first search over tours built from route segments. A segment serves
/// arcs [a, b) of one demand; consecutive segments are joined by a local or
/// distant switch. Tours are opened one at a time, and while deficient
/// demands remain untouched each new tour must serve the smallest of them,
/// which fixes one canonical order of the tours of any solution.
class ExactSearch {
 public:
  ExactSearch(const Instance& inst, const SolveOptions& opts)
      : inst_(inst), opts_(opts), start_(std::chrono::steady_clock::now()) {
    for (const auto& d : inst.demands()) used_[d.id].assign(d.route.arc_count(), 0);
    deficient_ = deficient_demands(inst);
    std::map<std::tuple<NodeId, double, double>, std::size_t> seen;
    for (const auto& s : inst.suppliers()) {
      auto key = std::make_tuple(s.start, s.e0_kwh, s.safety_kwh);
      auto it = seen.find(key);
      if (it == seen.end()) {
        seen[key] = classes_.size();
        classes_.push_back({s.id});
      } else {
        classes_[it->second].push_back(s.id);
      }
    }
  }

  SolveResult run() {
    SolveResult r;
    if (deficient_.empty()) {
      Solution empty;
      for (const auto& d : inst_.demands()) empty.waits[d.id] = 0.0;
      r.status = SolveStatus::optimal;
      r.solution = empty;
      r.objective = 0;
      return r;
    }
    for (EdId id : deficient_) {
      if (deficit_unreachable(inst_.demand(id), inst_.transfer())) return r;
    }
    best_count_ = static_cast<int>(inst_.suppliers().size()) + 1;
    open_tour();
    r.nodes_explored = nodes_;
    if (best_) {
      r.solution = best_;
      r.objective = best_count_;
      r.status = stopped_ ? SolveStatus::feasible : SolveStatus::optimal;
    } else {
      r.status = stopped_ ? SolveStatus::timeout : SolveStatus::infeasible;
    }
    return r;
  }

 private:
  struct OpenTour {
    EpId ep = 0;
    const Supplier* supplier = nullptr;
    Tour actions;
    double fixed_kwh = 0.0;
    std::map<EdId, std::size_t> last_end;
    std::optional<EdId> must_touch;
  };

  bool tick() {
    if (stopped_ || done_) return false;
    ++nodes_;
    if (opts_.node_limit > 0 && nodes_ > opts_.node_limit) {
      stopped_ = true;
      return false;
    }
    if ((nodes_ & 63) == 0) {
      const std::chrono::duration<double> spent = std::chrono::steady_clock::now() - start_;
      if (spent.count() > opts_.time_limit_s) {
        stopped_ = true;
        return false;
      }
    }
    return true;
  }

  std::optional<EdId> first_untouched() const {
    for (EdId id : deficient_) {
      if (touched_.count(id) == 0 || touched_.at(id) == 0) return id;
    }
    return std::nullopt;
  }

  Solution assemble(const OpenTour* extra = nullptr) const {
    Solution s;
    for (const auto& [ep, tour] : closed_) s.tours[ep] = tour;
    if (extra) s.tours[extra->ep] = extra->actions;
    return s;
  }

  void record(const Solution& witness, int count) {
    if (count >= best_count_) return;
    best_ = witness;
    best_count_ = count;
    if (best_count_ <= 1) done_ = true;
  }

  std::vector<EdId> ed_order(std::optional<EdId> first) const {
    std::vector<EdId> out;
    if (first) out.push_back(*first);
    for (const auto& d : inst_.demands()) {
      if (!first || d.id != *first) out.push_back(d.id);
    }
    return out;
  }

  /// Largest b such that arcs [a, b) of `ed` are all unused.
  std::size_t run_end(EdId ed, std::size_t a) const {
    const auto& used = used_.at(ed);
    std::size_t b = a;
    while (b < used.size() && !used[b]) ++b;
    return b;
  }

  void open_tour() {
    if (!tick()) return;
    const auto u = first_untouched();
    if (!u) {
      if (auto w = linear_feasibility(inst_, assemble())) {
        record(*w, static_cast<int>(closed_.size()));
        return;
      }
    }
    if (static_cast<int>(closed_.size()) + 1 >= best_count_) return;

    for (const auto& cls : classes_) {
      std::optional<EpId> ep;
      for (EpId id : cls) {
        if (!busy_.count(id)) {
          ep = id;
          break;
        }
      }
      if (!ep) continue;
      busy_.insert(*ep);
      OpenTour t;
      t.ep = *ep;
      t.supplier = &inst_.supplier(*ep);
      t.must_touch = u;
      for (EdId j : ed_order(u)) {
        const auto& d = inst_.demand(j);
        for (std::size_t a = 0; a < d.route.arc_count(); ++a) {
          if (used_[j][a]) continue;
          const double leg = inst_.graph().energy_cost(t.supplier->start, d.route.nodes[a]);
          t.actions.push_back(DepartToServe{j, d.route.nodes[a]});
          t.fixed_kwh += leg;
          try_segments(t, j, a);
          t.fixed_kwh -= leg;
          t.actions.pop_back();
          if (stopped_ || done_) break;
        }
        if (stopped_ || done_) break;
      }
      busy_.erase(*ep);
      if (stopped_ || done_) return;
    }
  }

  /// Entry action is already on the tour; serve [a, b) for every feasible b.
  void try_segments(OpenTour& t, EdId ed, std::size_t a) {
    const auto& d = inst_.demand(ed);
    const std::size_t top = run_end(ed, a);
    const double room = t.supplier->e0_kwh - t.supplier->safety_kwh + kTolerance;
    for (std::size_t b = top; b > a; --b) {
      double self_use = 0.0;
      for (std::size_t k = a; k < b; ++k) self_use += d.route.ep_loss_kwh[k];
      if (t.fixed_kwh + self_use > room) continue;
      const std::size_t mark = t.actions.size();
      for (std::size_t k = a; k < b; ++k) {
        if (k > a) t.actions.push_back(Continue{ed, d.route.nodes[k]});
        t.actions.push_back(ServeArc{ed, k, 0.0});
        used_[ed][k] = 1;
      }
      touched_[ed] += static_cast<int>(b - a);
      const auto saved_end = t.last_end.count(ed) ? std::optional(t.last_end[ed]) : std::nullopt;
      t.last_end[ed] = b;
      t.fixed_kwh += self_use;

      extend(t, ed, b);

      t.fixed_kwh -= self_use;
      if (saved_end) t.last_end[ed] = *saved_end; else t.last_end.erase(ed);
      touched_[ed] -= static_cast<int>(b - a);
      for (std::size_t k = a; k < b; ++k) used_[ed][k] = 0;
      t.actions.resize(mark);
      if (stopped_ || done_) return;
    }
  }

  bool may_enter(const OpenTour& t, EdId k, std::size_t pos) const {
    const auto& d = inst_.demand(k);
    if (pos >= d.route.arc_count() || used_.at(k)[pos]) return false;
    auto it = t.last_end.find(k);
    return it == t.last_end.end() || pos > it->second;
  }

  void with_row(const WaitConstraint& row, const std::function<void()>& body) {
    rows_.push_back(row);
    if (minimal_waits(inst_, rows_)) body();
    rows_.pop_back();
  }

  /// The tour has just served `ed` up to route position `pos`.
  void extend(OpenTour& t, EdId ed, std::size_t pos) {
    if (!tick()) return;
    const auto& from = inst_.demand(ed);
    const NodeId here = from.route.nodes[pos];

    for (EdId k : ed_order(t.must_touch)) {
      if (k == ed) continue;
      const auto& d = inst_.demand(k);
      if (auto p = d.route.position(here); p && may_enter(t, k, *p)) {
        const Action sw = LocalSwitch{ed, k, here};
        with_row(*switch_constraint(inst_, sw), [&] {
          t.actions.push_back(sw);
          try_segments(t, k, *p);
          t.actions.pop_back();
        });
        if (stopped_ || done_) return;
      }
      if (!opts_.allow_distant) continue;
      for (std::size_t p = 0; p < d.route.arc_count(); ++p) {
        const NodeId there = d.route.nodes[p];
        if (there == here || !may_enter(t, k, p)) continue;
        const double leg = inst_.graph().energy_cost(here, there);
        if (t.fixed_kwh + leg > t.supplier->e0_kwh - t.supplier->safety_kwh + kTolerance) continue;
        const Action sw = DistantSwitch{ed, here, k, there};
        with_row(*switch_constraint(inst_, sw), [&] {
          t.actions.push_back(sw);
          t.fixed_kwh += leg;
          try_segments(t, k, p);
          t.fixed_kwh -= leg;
          t.actions.pop_back();
        });
        if (stopped_ || done_) return;
      }
    }
    close(t, ed, here);
  }

  bool serves_deficient(const OpenTour& t) const {
    for (const auto& [ed, end] : t.last_end) {
      if (std::binary_search(deficient_.begin(), deficient_.end(), ed)) return true;
    }
    return false;
  }

  void close(OpenTour& t, EdId ed, NodeId here) {
    if (t.must_touch ? !t.last_end.count(*t.must_touch) : !serves_deficient(t)) return;
    const double leg = inst_.graph().energy_cost(here, inst_.graph().nearest_depot(here));
    if (t.fixed_kwh + leg > t.supplier->e0_kwh - t.supplier->safety_kwh + kTolerance) return;
    t.actions.push_back(ReturnToDepot{ed, here});
    if (energy_completable(inst_, assemble(&t))) {
      closed_.emplace_back(t.ep, t.actions);
      open_tour();
      closed_.pop_back();
    }
    t.actions.pop_back();
  }

  const Instance& inst_;
  SolveOptions opts_;
  std::chrono::steady_clock::time_point start_;
  std::vector<EdId> deficient_;
  std::vector<std::vector<EpId>> classes_;
  std::map<EdId, std::vector<char>> used_;
  std::map<EdId, int> touched_;
  std::vector<std::pair<EpId, Tour>> closed_;
  std::vector<WaitConstraint> rows_;
  std::set<EpId> busy_;
  std::optional<Solution> best_;
  int best_count_ = 0;
  long long nodes_ = 0;
  bool stopped_ = false;
  bool done_ = false;
};

}  // namespace detail

/// Minimum-fleet solve by exhaustive branch-and-bound. Returns optimal on
/// exhaustion, feasible or timeout when a limit stops the search.
inline SolveResult solve_exact(const Instance& inst, const SolveOptions& opts = {}) {
  return detail::ExactSearch(inst, opts).run();
}

}  // namespace me2vrp

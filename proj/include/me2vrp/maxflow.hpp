#pragma once

#include <algorithm>
#include <limits>
#include <queue>
#include <vector>

namespace me2vrp {

/// Dinic max-flow on real capacities.
class MaxFlow {
 public:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  explicit MaxFlow(int nodes) : adj_(nodes), level_(nodes), it_(nodes) {}

  int add_node() {
    adj_.emplace_back();
    level_.push_back(0);
    it_.push_back(0);
    return static_cast<int>(adj_.size()) - 1;
  }

  /// Returns an edge handle usable with flow().
  int add_edge(int from, int to, double cap) {
    edges_.push_back({to, cap, 0.0});
    adj_[from].push_back(static_cast<int>(edges_.size()) - 1);
    edges_.push_back({from, 0.0, 0.0});
    adj_[to].push_back(static_cast<int>(edges_.size()) - 1);
    return static_cast<int>(edges_.size()) - 2;
  }

  double flow(int edge) const { return edges_[edge].flow; }

  double run(int s, int t) {
    double total = 0.0;
    while (bfs(s, t)) {
      std::fill(it_.begin(), it_.end(), 0);
      while (true) {
        const double f = dfs(s, t, kInf);
        if (f <= kEps) break;
        total += f;
      }
    }
    return total;
  }

 private:
  static constexpr double kEps = 1e-12;

  struct Edge {
    int to;
    double cap;
    double flow;
  };

  double residual(const Edge& e) const { return e.cap - e.flow; }

  bool bfs(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<int> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (int id : adj_[v]) {
        const Edge& e = edges_[id];
        if (level_[e.to] < 0 && residual(e) > kEps) {
          level_[e.to] = level_[v] + 1;
          q.push(e.to);
        }
      }
    }
    return level_[t] >= 0;
  }

  double dfs(int v, int t, double pushed) {
    if (v == t) return pushed;
    for (int& k = it_[v]; k < static_cast<int>(adj_[v].size()); ++k) {
      const int id = adj_[v][k];
      Edge& e = edges_[id];
      if (level_[e.to] != level_[v] + 1 || residual(e) <= kEps) continue;
      const double got = dfs(e.to, t, std::min(pushed, residual(e)));
      if (got > kEps) {
        e.flow += got;
        edges_[id ^ 1].flow -= got;
        return got;
      }
    }
    return 0.0;
  }

  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> level_;
  std::vector<int> it_;
};

/// Feasible flow with lower bounds, reduced to max-flow on a super source and
/// sink. Add edges, then call solve(source, sink).
class BoundedFlow {
 public:
  explicit BoundedFlow(int nodes) : net_(nodes + 2), excess_(nodes, 0.0), nodes_(nodes) {}

  int add_edge(int from, int to, double lower, double upper) {
    excess_[to] += lower;
    excess_[from] -= lower;
    lower_.push_back(lower);
    handles_.push_back(net_.add_edge(from, to, upper - lower));
    return static_cast<int>(handles_.size()) - 1;
  }

  double flow(int edge) const { return lower_[edge] + net_.flow(handles_[edge]); }

  /// True iff a flow from `source` to `sink` meets every bound.
  bool solve(int source, int sink, double tol = 1e-8) {
    net_.add_edge(sink, source, MaxFlow::kInf);
    const int ss = nodes_, tt = nodes_ + 1;
    double need = 0.0;
    for (int v = 0; v < nodes_; ++v) {
      if (excess_[v] > 0) {
        net_.add_edge(ss, v, excess_[v]);
        need += excess_[v];
      } else if (excess_[v] < 0) {
        net_.add_edge(v, tt, -excess_[v]);
      }
    }
    return net_.run(ss, tt) >= need - tol;
  }

 private:
  MaxFlow net_;
  std::vector<double> excess_;
  std::vector<double> lower_;
  std::vector<int> handles_;
  int nodes_;
};

}  // namespace me2vrp

#pragma once

// Hand-built instances on a plane: segment times and miles come from
// Euclidean distances, the matrix covers every node pair.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "me2vrp/me2vrp.hpp"

namespace fixtures {

using namespace me2vrp;

class Builder {
 public:
  explicit Builder(double min_per_mile = 2.0) : min_per_mile_(min_per_mile) {}

  Builder& node(NodeId id, double x, double y) {
    xy_[id] = {x, y};
    return *this;
  }
  Builder& depot(NodeId id, double x, double y) {
    depots_.push_back(id);
    return node(id, x, y);
  }
  Builder& ed(EdId id, std::vector<NodeId> route, double t0, double max_wait, double e0) {
    DemandSpec d;
    d.id = id;
    d.route = std::move(route);
    d.t0_est_min = t0;
    d.max_wait_min = max_wait;
    d.e0_kwh = e0;
    for (std::size_t k = 0; k + 1 < d.route.size(); ++k) {
      const double miles = dist(d.route[k], d.route[k + 1]);
      d.segment_miles.push_back(miles);
      d.segment_min.push_back(miles * min_per_mile_);
    }
    spec_.demands.push_back(std::move(d));
    return *this;
  }
  Builder& ep(EpId id, NodeId start, double e0 = 180.0) {
    spec_.suppliers.push_back({id, start, e0});
    return *this;
  }
  EnergyParams& params() { return spec_.params; }

  /// Trip energy of a listed demand without service.
  double trip_kwh(EdId id) const {
    for (const auto& d : spec_.demands) {
      if (d.id != id) continue;
      double miles = 0.0;
      for (double m : d.segment_miles) miles += m;
      return miles * spec_.params.rates.ed_kwh_per_mile;
    }
    return 0.0;
  }

  double dist(NodeId a, NodeId b) const {
    const auto& p = xy_.at(a);
    const auto& q = xy_.at(b);
    return std::hypot(p.first - q.first, p.second - q.second);
  }

  InstanceSpec spec() const {
    InstanceSpec s = spec_;
    std::vector<NodeId> ids;
    for (const auto& [id, pos] : xy_) {
      const bool is_depot = std::find(depots_.begin(), depots_.end(), id) != depots_.end();
      s.nodes.push_back({id, is_depot ? "depot" : "waypoint"});
      ids.push_back(id);
    }
    s.matrix = NodeMatrix::over(ids);
    for (std::size_t a = 0; a < ids.size(); ++a) {
      for (std::size_t b = 0; b < ids.size(); ++b) {
        if (a == b) continue;
        const double miles = dist(ids[a], ids[b]);
        s.matrix.set(a, b, miles * min_per_mile_, miles * s.params.rates.ep_kwh_per_mile);
      }
    }
    return s;
  }

  Instance build() const { return make_instance(spec()); }

 private:
  double min_per_mile_;
  std::map<NodeId, std::pair<double, double>> xy_;
  std::vector<NodeId> depots_;
  InstanceSpec spec_;
};

/// A named instance with a solution on it.
struct Case {
  std::string name;
  Instance inst;
  Solution sol;
};

// Node ids shared by the subtour fixtures.
enum : NodeId { kN1 = 1, kN2 = 2, kN3 = 3, kN4 = 4, kDepot = 90 };

/// Both demands drive n1 -> n2; the EP serves i1, jumps back to n1 for i2,
/// then jumps back again for i1.
inline Case distant_pair() {
  Builder b;
  b.node(kN1, 0, 0).node(kN2, 4, 0).node(10, -3, 0).node(11, 7, 0).node(20, -2, 1).node(21, 6, 1);
  b.depot(kDepot, 0, 3);
  b.ed(1, {10, kN1, kN2, 11}, 0, 10, 40).ed(2, {20, kN1, kN2, 21}, 1, 10, 40).ep(0, kDepot);
  Solution s;
  s.tours[0] = {DepartToServe{1, kN1},        ServeArc{1, 1, 0.0},
                DistantSwitch{1, kN2, 2, kN1}, ServeArc{2, 1, 0.0},
                DistantSwitch{2, kN2, 1, kN1}, ServeArc{1, 1, 0.0},
                ReturnToDepot{1, kN2}};
  return {"distant-only, two demands", b.build(), s};
}

/// Three single-arc demands chained by distant switches back to the first.
inline Case distant_ring() {
  Builder b;
  b.node(kN1, 0, 0).node(kN2, 3, 0).node(kN3, 5, 2).node(5, 5, 5).node(6, 2, 5).node(kN4, 0, 3);
  b.depot(kDepot, 2, 2);
  b.ed(1, {kN1, kN2}, 0, 10, 40).ed(2, {kN3, 5}, 2, 10, 40).ed(3, {6, kN4}, 4, 10, 40).ep(0, kDepot);
  Solution s;
  s.tours[0] = {DepartToServe{1, kN1},        ServeArc{1, 0, 0.0},
                DistantSwitch{1, kN2, 2, kN3}, ServeArc{2, 0, 0.0},
                DistantSwitch{2, 5, 3, 6},     ServeArc{3, 0, 0.0},
                DistantSwitch{3, kN4, 1, kN1}, ServeArc{1, 0, 0.0},
                ReturnToDepot{1, kN2}};
  return {"distant-only, three demands", b.build(), s};
}

/// i1 drives n1 -> n2 and i2 drives n2 -> n1; local switches at both ends.
inline Case local_pair() {
  Builder b;
  b.node(kN1, 0, 0).node(kN2, 4, 0).node(10, -3, 0).node(11, 7, 0).node(20, 7, 1).node(21, -3, 1);
  b.depot(kDepot, 2, 3);
  b.ed(1, {10, kN1, kN2, 11}, 0, 10, 40).ed(2, {20, kN2, kN1, 21}, 0, 10, 40).ep(0, kDepot);
  Solution s;
  s.tours[0] = {DepartToServe{1, kN1}, ServeArc{1, 1, 0.0}, LocalSwitch{1, 2, kN2}, ServeArc{2, 1, 0.0},
                LocalSwitch{2, 1, kN1}, ServeArc{1, 1, 0.0}, ReturnToDepot{1, kN2}};
  return {"local-only, two demands", b.build(), s};
}

/// Three demands around the triangle n1 -> n2 -> n3 -> n1, local switches only.
inline Case local_ring() {
  Builder b;
  b.node(kN1, 0, 0).node(kN2, 4, 0).node(kN3, 2, 3);
  b.node(10, -2, -1).node(11, 6, -1).node(20, 6, -1.5).node(21, 1, 5).node(30, 3, 5).node(31, -2, 0.5);
  b.depot(kDepot, 2, 1);
  b.ed(1, {10, kN1, kN2, 11}, 0, 10, 40)
      .ed(2, {20, kN2, kN3, 21}, 3, 10, 40)
      .ed(3, {30, kN3, kN1, 31}, 6, 10, 40)
      .ep(0, kDepot);
  Solution s;
  s.tours[0] = {DepartToServe{1, kN1},  ServeArc{1, 1, 0.0}, LocalSwitch{1, 2, kN2}, ServeArc{2, 1, 0.0},
                LocalSwitch{2, 3, kN3}, ServeArc{3, 1, 0.0}, LocalSwitch{3, 1, kN1}, ServeArc{1, 1, 0.0},
                ReturnToDepot{1, kN2}};
  return {"local-only, three demands", b.build(), s};
}

/// Both demands drive n1 -> n2: distant switch back to n1 for i2, local
/// switch back to i1 at n2.
inline Case mixed_pair() {
  Builder b;
  b.node(kN1, 0, 0).node(kN2, 4, 0).node(10, -3, 0).node(11, 7, 0).node(20, -2, 1).node(21, 6, 1);
  b.depot(kDepot, 0, 3);
  b.ed(1, {10, kN1, kN2, 11}, 0, 10, 40).ed(2, {20, kN1, kN2, 21}, 1, 10, 40).ep(0, kDepot);
  Solution s;
  s.tours[0] = {DepartToServe{1, kN1},        ServeArc{1, 1, 0.0}, DistantSwitch{1, kN2, 2, kN1},
                ServeArc{2, 1, 0.0},          LocalSwitch{2, 1, kN2}, ServeArc{1, 2, 0.0},
                ReturnToDepot{1, 11}};
  return {"mixed, two demands", b.build(), s};
}

/// Local switches n2 and n3, then a distant switch from n4 back to i1 at n1.
inline Case mixed_ring() {
  Builder b;
  b.node(kN1, 0, 0).node(kN2, 4, 0).node(kN3, 5, 3).node(kN4, 2, 5);
  b.node(11, 6, -1).node(20, 6, -1.5).node(21, 6, 5).node(30, 7, 2);
  b.depot(kDepot, 2, 2);
  b.ed(1, {kN1, kN2, 11}, 0, 10, 40)
      .ed(2, {20, kN2, kN3, 21}, 3, 10, 40)
      .ed(3, {30, kN3, kN4}, 6, 10, 40)
      .ep(0, kDepot);
  Solution s;
  s.tours[0] = {DepartToServe{1, kN1},         ServeArc{1, 0, 0.0}, LocalSwitch{1, 2, kN2}, ServeArc{2, 1, 0.0},
                LocalSwitch{2, 3, kN3},         ServeArc{3, 1, 0.0}, DistantSwitch{3, kN4, 1, kN1},
                ServeArc{1, 0, 0.0},            ReturnToDepot{1, kN2}};
  return {"mixed, three demands", b.build(), s};
}

/// The six illegal-subtour archetypes.
inline std::vector<Case> illegal_subtours() {
  return {distant_pair(), distant_ring(), local_pair(), local_ring(), mixed_pair(), mixed_ring()};
}

/// i1 takes a detour between n1 and n2 while i2 drives straight, so the EP
/// can hand i1 over to i2 at n1 and pick i1 up again at the later node n2.
inline Case later_revisit() {
  Builder b;
  b.node(10, -3, 0).node(kN1, 0, 0).node(5, 2, 3).node(kN2, 4, 0).node(11, 7, 0);
  b.node(20, -2, -2).node(21, 6, -3);
  b.depot(kDepot, -3, 2);
  // i1: 10 -> n1 (6 min), n1 -> 5 -> n2 (~14.4 min), n2 -> 11 (6 min)
  // i2: 20 -> n1, n1 -> n2 (8 min), n2 -> 21
  b.ed(1, {10, kN1, 5, kN2, 11}, 0, 5, 10.0).ed(2, {20, kN1, kN2, 21}, 1, 5, 20.0).ep(0, kDepot);
  Solution s;
  s.tours[0] = {DepartToServe{1, 10},  ServeArc{1, 0, 1.0}, LocalSwitch{1, 2, kN1}, ServeArc{2, 1, 2.0},
                LocalSwitch{2, 1, kN2}, ServeArc{1, 2, 1.5}, ReturnToDepot{1, 11}};
  s.waits = {{1, 0.0}, {2, 0.0}};
  return {"revisit at a later node", b.build(), s};
}

/// Evenly spaced wait vectors over the box [0, max wait]^|D| with at least
/// `min_points` points.
inline std::vector<std::map<EdId, double>> wait_grid(const Instance& inst, std::size_t min_points) {
  const auto& ds = inst.demands();
  std::size_t per_dim = 2;
  while (static_cast<std::size_t>(std::pow(per_dim, ds.size())) < min_points) ++per_dim;
  std::vector<std::map<EdId, double>> out;
  std::vector<std::size_t> idx(ds.size(), 0);
  while (true) {
    std::map<EdId, double> w;
    for (std::size_t k = 0; k < ds.size(); ++k) {
      w[ds[k].id] = ds[k].max_wait_min * static_cast<double>(idx[k]) / static_cast<double>(per_dim - 1);
    }
    out.push_back(std::move(w));
    std::size_t k = 0;
    while (k < idx.size() && ++idx[k] == per_dim) idx[k++] = 0;
    if (k == idx.size()) break;
  }
  return out;
}

}  // namespace fixtures

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "me2vrp/network.hpp"

namespace {

using namespace me2vrp;

RawRoute raw(EdId ed, std::vector<NodeId> nodes, double seg = 2.0) {
  RawRoute r{ed, std::move(nodes), {}, {}};
  for (std::size_t k = 0; k + 1 < r.nodes.size(); ++k) {
    r.segment_min.push_back(seg * (k + 1));
    r.segment_miles.push_back(seg * (k + 1) / 2.0);
  }
  return r;
}

// Every pair 5 minutes / 1.5 kWh unless set otherwise.
NodeMatrix flat_matrix(const std::vector<NodeId>& ids) {
  auto m = NodeMatrix::over(ids);
  for (std::size_t a = 0; a < ids.size(); ++a) {
    for (std::size_t b = 0; b < ids.size(); ++b) {
      if (a != b) m.set(a, b, 5.0, 1.5);
    }
  }
  return m;
}

std::vector<NodeId> ids_of(const std::vector<RawRoute>& routes, const std::vector<NodeId>& extra) {
  std::set<NodeId> s(extra.begin(), extra.end());
  for (const auto& r : routes) s.insert(r.nodes.begin(), r.nodes.end());
  return {s.begin(), s.end()};
}

EncounterNetwork build(const std::vector<RawRoute>& routes, std::vector<NodeId> depots = {99}) {
  return build_encounter_graph(routes, depots, flat_matrix(ids_of(routes, depots)), RateParams{});
}

TEST(EncounterGraph, SharedNodeBecomesEncounter) {
  auto net = build({raw(0, {10, 1, 11}), raw(1, {20, 1, 21})});
  EXPECT_EQ(net.graph.kind(1), NodeKind::encounter);
  EXPECT_EQ(net.routes[0].arc_count(), 2u);
  EXPECT_EQ(net.routes[1].arc_count(), 2u);
}

TEST(EncounterGraph, LoneRouteKeepsEndpointsOnly) {
  auto net = build({raw(0, {10, 5, 6, 11})});
  EXPECT_EQ(net.routes[0].nodes, (std::vector<NodeId>{10, 11}));
  EXPECT_EQ(net.routes[0].arc_count(), 1u);
  EXPECT_TRUE(net.graph.nodes_of_kind(NodeKind::encounter).empty());
  // Dropped nodes fold into the single arc.
  EXPECT_DOUBLE_EQ(net.routes[0].arc_min[0], 2.0 + 4.0 + 6.0);
}

TEST(EncounterGraph, PairwiseSharingMatchesIntersection) {
  std::vector<RawRoute> routes = {raw(0, {10, 1, 3, 11}), raw(1, {20, 2, 4, 21}), raw(2, {30, 1, 2, 31})};
  auto net = build(routes);
  auto got = net.graph.nodes_of_kind(NodeKind::encounter);
  EXPECT_EQ(got, (std::vector<NodeId>{1, 2}));
}

TEST(EncounterGraph, RandomRoutesMatchBruteForce) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<NodeId> pool(12);
    for (int k = 0; k < 12; ++k) pool[k] = k + 1;
    std::vector<RawRoute> routes;
    const int n = 2 + static_cast<int>(rng() % 4);
    for (int e = 0; e < n; ++e) {
      std::shuffle(pool.begin(), pool.end(), rng);
      const int len = 2 + static_cast<int>(rng() % 5);
      routes.push_back(raw(e, std::vector<NodeId>(pool.begin(), pool.begin() + len)));
    }
    auto net = build(routes);

    std::set<NodeId> expect;
    for (std::size_t a = 0; a < routes.size(); ++a) {
      for (std::size_t b = a + 1; b < routes.size(); ++b) {
        for (NodeId x : routes[a].nodes) {
          if (std::find(routes[b].nodes.begin(), routes[b].nodes.end(), x) != routes[b].nodes.end()) {
            expect.insert(x);
          }
        }
      }
    }
    auto got = net.graph.nodes_of_kind(NodeKind::encounter);
    EXPECT_EQ(std::set<NodeId>(got.begin(), got.end()), expect) << "trial " << trial;

    // Reduced routes keep origin, shared nodes and destination in order.
    for (std::size_t e = 0; e < routes.size(); ++e) {
      std::vector<NodeId> keep;
      const auto& rn = routes[e].nodes;
      for (std::size_t k = 0; k < rn.size(); ++k) {
        if (k == 0 || k + 1 == rn.size() || expect.count(rn[k])) keep.push_back(rn[k]);
      }
      EXPECT_EQ(net.routes[e].nodes, keep);
    }
  }
}

TEST(EncounterGraph, KindsPartitionNodes) {
  auto net = build({raw(0, {10, 1, 2, 11}), raw(1, {20, 1, 21}), raw(2, {30, 2, 31})}, {98, 99});
  for (NodeId n : net.graph.nodes()) {
    int hits = 0;
    for (auto k : {NodeKind::origin, NodeKind::encounter, NodeKind::destination, NodeKind::depot}) {
      auto v = net.graph.nodes_of_kind(k);
      hits += static_cast<int>(std::count(v.begin(), v.end(), n));
    }
    EXPECT_EQ(hits, 1) << "node " << n;
  }
}

TEST(EncounterGraph, RouteTimesAreAdditive) {
  auto net = build({raw(0, {10, 1, 2, 11}), raw(1, {20, 1, 21}), raw(2, {30, 2, 31})});
  const auto& g = net.graph;
  const auto& r = net.routes[0].nodes;
  for (std::size_t k = 0; k + 2 < r.size(); ++k) {
    EXPECT_NEAR(g.travel_time(r[k], r[k + 2]), g.travel_time(r[k], r[k + 1]) + g.travel_time(r[k + 1], r[k + 2]),
                1e-12);
  }
  for (std::size_t k = 0; k + 1 < r.size(); ++k) {
    EXPECT_DOUBLE_EQ(net.routes[0].arc_min[k], g.travel_time(r[k], r[k + 1]));
  }
}

TEST(EncounterGraph, EncounterIsSymmetric) {
  auto net = build({raw(0, {10, 1, 11}), raw(1, {20, 1, 2, 21}), raw(2, {30, 2, 31})});
  for (std::size_t i = 0; i < net.routes.size(); ++i) {
    for (std::size_t j = 0; j < net.routes.size(); ++j) {
      for (NodeId n : net.routes[i].nodes) {
        const bool ij = net.graph.kind(n) == NodeKind::encounter && net.routes[j].contains(n);
        const bool ji = net.graph.kind(n) == NodeKind::encounter && net.routes[i].contains(n) &&
                        net.routes[j].contains(n);
        EXPECT_EQ(ij, ji);
      }
    }
  }
}

TEST(EncounterGraph, NearestDepotTiesGoToSmallestId) {
  std::vector<RawRoute> routes = {raw(0, {10, 11})};
  auto ids = ids_of(routes, {97, 98});
  auto m = flat_matrix(ids);
  EncounterNetwork net = build_encounter_graph(routes, {98, 97}, m, RateParams{});
  EXPECT_EQ(net.graph.nearest_depot(10), 97);
  auto idx = [&](NodeId n) { return *m.index(n); };
  m.set(idx(10), idx(98), 5.0, 1.0);
  net = build_encounter_graph(routes, {97, 98}, m, RateParams{});
  EXPECT_EQ(net.graph.nearest_depot(10), 98);
}

TEST(EncounterGraph, EpLossFollowsRate) {
  RateParams rates;
  rates.ep_kwh_per_mile = 0.5;
  std::vector<RawRoute> routes = {raw(0, {10, 1, 11}), raw(1, {20, 1, 21})};
  auto net = build_encounter_graph(routes, {99}, flat_matrix(ids_of(routes, {99})), rates);
  EXPECT_DOUBLE_EQ(net.routes[0].ep_loss_kwh[0], 0.5 * net.routes[0].arc_miles[0]);
  EXPECT_DOUBLE_EQ(net.routes[0].ed_loss_kwh[1], 0.4 * net.routes[0].arc_miles[1]);
}

TEST(EncounterGraph, RepeatedNodeIsMalformed) {
  EXPECT_THROW(build({raw(0, {10, 1, 10})}), MalformedRouteError);
}

TEST(EncounterGraph, MissingMatrixEntryIsIncomplete) {
  std::vector<RawRoute> routes = {raw(0, {10, 11}), raw(1, {20, 21})};
  auto m = flat_matrix(ids_of(routes, {99}));
  const auto n = m.nodes.size();
  m.travel_time_min[*m.index(11) * n + *m.index(20)] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(build_encounter_graph(routes, {99}, m, RateParams{}), IncompleteGraphError);
}

TEST(ArcsFrom, IndexArithmetic) {
  auto net = build({raw(0, {10, 1, 2, 11}), raw(1, {20, 1, 21}), raw(2, {30, 2, 31})});
  const auto& r = net.routes[0];
  EXPECT_EQ(arcs_from(r, 10), 0u);
  EXPECT_EQ(arcs_from(r, 1), 1u);
  EXPECT_EQ(arcs_from(r, 2), 2u);
  EXPECT_EQ(arcs_from(r, 2) - 1, 1u);
  EXPECT_THROW(arcs_from(r, 11), NoOutgoingArcError);
  EXPECT_THROW(arcs_from(r, 30), OffRouteError);
}

}  // namespace

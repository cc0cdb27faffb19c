#include <gtest/gtest.h>

#include "me2vrp/feasibility.hpp"
#include "support/fixtures.hpp"

namespace {

using namespace me2vrp;
using fixtures::Builder;

// One demand on a straight line, 10 miles, 2 kWh short at the end.
Instance short_line(double ep_e0) {
  Builder b;
  b.node(10, 0, 0).node(1, 5, 0).node(11, 10, 0).node(20, 5, -3).node(21, 5, 3).depot(90, 0, 2);
  b.ed(0, {10, 1, 11}, 0, 5, 4.0).ed(1, {20, 1, 21}, 0, 5, 20.0).ep(0, 90, ep_e0);
  return b.build();
}

Tour line_tour() {
  return {DepartToServe{0, 10}, ServeArc{0, 0, 0.0}, Continue{0, 1}, ServeArc{0, 1, 0.0}, ReturnToDepot{0, 11}};
}

TEST(MaxFlow, SmallNetwork) {
  MaxFlow f(4);
  f.add_edge(0, 1, 3.0);
  f.add_edge(0, 2, 2.0);
  f.add_edge(1, 2, 5.0);
  f.add_edge(1, 3, 2.0);
  f.add_edge(2, 3, 3.0);
  EXPECT_NEAR(f.run(0, 3), 5.0, 1e-12);
}

TEST(MaxFlow, LowerBoundsRespected) {
  BoundedFlow ok(3);
  ok.add_edge(0, 1, 1.0, 4.0);
  const int e = ok.add_edge(1, 2, 2.0, 3.0);
  ASSERT_TRUE(ok.solve(0, 2));
  EXPECT_GE(ok.flow(e), 2.0 - 1e-9);
  EXPECT_LE(ok.flow(e), 3.0 + 1e-9);

  BoundedFlow bad(3);
  bad.add_edge(0, 1, 0.0, 1.0);
  bad.add_edge(1, 2, 2.0, 3.0);
  EXPECT_FALSE(bad.solve(0, 2));
}

TEST(SwitchConstraint, LocalGapIsTimeDifference) {
  auto c = fixtures::later_revisit();
  auto row = switch_constraint(c.inst, LocalSwitch{1, 2, fixtures::kN1});
  ASSERT_TRUE(row);
  const auto& i = c.inst.demand(1);
  const auto& j = c.inst.demand(2);
  EXPECT_NEAR(row->gap, node_time(i, fixtures::kN1, 0) - node_time(j, fixtures::kN1, 0), 1e-12);
  EXPECT_FALSE(switch_constraint(c.inst, Continue{1, fixtures::kN1}));
}

TEST(SwitchConstraint, DistantGapAddsTravel) {
  auto c = fixtures::distant_ring();
  DistantSwitch ds{1, fixtures::kN2, 2, fixtures::kN3};
  auto row = switch_constraint(c.inst, ds);
  ASSERT_TRUE(row);
  const double want = node_time(c.inst.demand(1), ds.at_node, 0) +
                      c.inst.graph().travel_time(ds.at_node, ds.to_node) -
                      node_time(c.inst.demand(2), ds.to_node, 0);
  EXPECT_NEAR(row->gap, want, 1e-12);
}

TEST(MinimalWaits, ChainsAndCycles) {
  auto inst = short_line(180);
  auto w = minimal_waits(inst, {{0, 1, 2.0}, {1, 0, -3.0}});
  ASSERT_TRUE(w);
  EXPECT_DOUBLE_EQ(w->at(0), 0.0);
  EXPECT_DOUBLE_EQ(w->at(1), 2.0);
  EXPECT_FALSE(minimal_waits(inst, {{0, 1, 6.0}}));
  EXPECT_FALSE(minimal_waits(inst, {{0, 1, 1.0}, {1, 0, 0.0}}));
}

TEST(LinearFeasibility, NothingToDo) {
  Builder b;
  b.node(10, 0, 0).node(11, 3, 0).depot(90, 0, 2);
  b.ed(0, {10, 11}, 0, 0, 40).ep(0, 90);
  auto inst = b.build();
  auto w = linear_feasibility(inst, Solution{});
  ASSERT_TRUE(w);
  EXPECT_TRUE(validate(inst, *w).feasible);
}

TEST(LinearFeasibility, EmptyRoutingLeavesDeficit) {
  EXPECT_FALSE(linear_feasibility(short_line(180), Solution{}));
}

TEST(LinearFeasibility, PacksDeliveriesIntoBudget) {
  const auto probe = short_line(180);
  const double fixed = fixed_tour_energy(probe, probe.supplier(0), line_tour());
  const double safety = probe.supplier(0).safety_kwh;
  Solution routing;
  routing.tours[0] = line_tour();

  auto rich = short_line(safety + fixed + 2.5);
  auto w = linear_feasibility(rich, routing);
  ASSERT_TRUE(w);
  EXPECT_TRUE(validate(rich, *w).feasible);
  double delivered = 0.0;
  for (const auto& a : w->tours.at(0)) {
    if (auto* s = std::get_if<ServeArc>(&a)) delivered += s->e_plus_kwh;
  }
  EXPECT_GE(delivered, 2.0 - 1e-6);

  EXPECT_FALSE(linear_feasibility(short_line(safety + fixed + 1.0), routing));
}

TEST(LinearFeasibility, IllegalSubtourHasNoWitness) {
  for (const auto& c : {fixtures::local_pair(), fixtures::distant_pair()}) {
    EXPECT_FALSE(linear_feasibility(c.inst, c.sol)) << c.name;
  }
}

TEST(LinearFeasibility, LaterRevisitWitnessValidates) {
  auto c = fixtures::later_revisit();
  auto w = linear_feasibility(c.inst, c.sol);
  ASSERT_TRUE(w);
  EXPECT_TRUE(validate(c.inst, *w).feasible);
}

TEST(EnergyCompletable, OpenSupplyCoversUnservedArcs) {
  EXPECT_TRUE(energy_completable(short_line(180), Solution{}));
  Builder b;
  b.node(10, 0, 0).node(11, 40, 0).depot(90, 0, 2);
  // 16 kWh trip, 80 minutes of service can bring at most 66 kWh; start at 2.
  b.ed(0, {10, 11}, 0, 0, 2.0).ep(0, 90);
  EXPECT_TRUE(energy_completable(b.build(), Solution{}));
  // Ten miles in one minute leaves no time to refill.
  Builder c(0.1);
  c.node(10, 0, 0).node(11, 10, 0).depot(90, 0, 2);
  c.ed(0, {10, 11}, 0, 0, 3.0).ep(0, 90);
  auto inst = c.build();
  EXPECT_FALSE(energy_completable(inst, Solution{}));
}

TEST(FixedEnergy, IgnoresDeliveries) {
  auto inst = short_line(180);
  Tour t = line_tour();
  std::get<ServeArc>(t[1]).e_plus_kwh = 7.0;
  EXPECT_DOUBLE_EQ(fixed_tour_energy(inst, inst.supplier(0), t),
                   fixed_tour_energy(inst, inst.supplier(0), line_tour()));
  EXPECT_NEAR(ep_energy_loss(inst, inst.supplier(0), t).loss_kwh,
              fixed_tour_energy(inst, inst.supplier(0), t) + 7.0, 1e-12);
}

}  // namespace

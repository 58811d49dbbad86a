#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "fogflow/trrg.hpp"

using namespace fogflow;

namespace {

const std::string kRef = std::string(FOGFLOW_SOURCE_DIR) + "/configs/reference.cfg";

VehicleSpec vehicle(std::string id, Role role, double x, double y, double mps) {
  VehicleSpec v;
  v.id = std::move(id);
  v.role = role;
  v.initial_position = {x, y};
  v.velocity_mps = mps;
  if (role == Role::kRelay) v.cache_capacity_bits = 1e6;
  if (role == Role::kFog) v.compute_capacity_bits = 2e6;
  return v;
}

Trrg build(const Scenario& s) {
  return build_trrg(s, contact_frames(s, s.comm_range_m, s.horizon_s), s.comm_range_m);
}

}  // namespace

TEST_CASE("every arc respects its kind's endpoint types") {
  const Scenario s = load_scenario(kRef);
  const Trrg g = build(s);
  const auto& V = g.vertices();
  std::set<std::tuple<int, int, int>> seen;
  for (const auto& a : g.arcs()) {
    CHECK(seen.insert({a.tail, a.head, static_cast<int>(a.kind)}).second);
    switch (a.kind) {
      case ArcKind::kCommunication: {
        REQUIRE(V[a.tail].kind == VertexKind::kOrdinary);
        REQUIRE(V[a.head].kind == VertexKind::kOrdinary);
        CHECK(V[a.tail].frame == V[a.head].frame);
        CHECK(can_transmit(g.vehicle_role(V[a.tail].vehicle)));
        CHECK(can_receive(g.vehicle_role(V[a.head].vehicle)));
        const double t = g.frame(a.frame).midpoint();
        CHECK(distance(position_at(s.vehicles[V[a.tail].vehicle], t),
                       position_at(s.vehicles[V[a.head].vehicle], t)) <= s.comm_range_m);
        break;
      }
      case ArcKind::kComputing:
        CHECK(g.vehicle_role(V[a.tail].vehicle) == Role::kFog);
        CHECK(a.head == g.omega());
        CHECK(a.capacity_bits == *s.vehicles[V[a.tail].vehicle].compute_capacity_bits);
        break;
      case ArcKind::kPerception:
        CHECK(a.tail == g.alpha());
        REQUIRE(a.task >= 0);
        CHECK(V[a.head].vehicle == g.task_source(a.task));
        CHECK(a.frame <= g.task_delay(a.task));
        CHECK(a.capacity_bits == kUnbounded);
        break;
      case ArcKind::kCarry:
        CHECK(g.vehicle_role(V[a.tail].vehicle) == Role::kRelay);
        CHECK(V[a.head].vehicle == V[a.tail].vehicle);
        CHECK(V[a.head].frame == V[a.tail].frame + 1);
        CHECK(a.capacity_bits == *s.vehicles[V[a.tail].vehicle].cache_capacity_bits);
        break;
    }
  }
}

TEST_CASE("communication arcs are exactly the in-range typed pairs") {
  const Scenario s = load_scenario(kRef);
  const Trrg g = build(s);
  for (int k = 1; k <= g.layers(); ++k) {
    const double t = g.frame(k).midpoint();
    std::set<std::pair<int, int>> want, got;
    for (int i = 0; i < g.vehicle_count(); ++i) {
      for (int j = 0; j < g.vehicle_count(); ++j) {
        if (i == j || !can_transmit(s.vehicles[i].role) || !can_receive(s.vehicles[j].role)) continue;
        if (distance(position_at(s.vehicles[i], t), position_at(s.vehicles[j], t)) <= s.comm_range_m) {
          want.emplace(i, j);
        }
      }
    }
    for (int id : g.communication_arcs(k)) {
      const Arc& a = g.arcs()[id];
      got.emplace(g.vertices()[a.tail].vehicle, g.vertices()[a.head].vehicle);
    }
    CHECK(got == want);
  }
}

TEST_CASE("per-frame arc counts") {
  const Scenario s = load_scenario(kRef);
  const Trrg g = build(s);
  const int K = g.layers();
  const auto perception = g.arcs_of_kind(ArcKind::kPerception);
  const auto computing = g.arcs_of_kind(ArcKind::kComputing);
  const auto carry = g.arcs_of_kind(ArcKind::kCarry);
  int want_perception = 0;
  for (int t = 0; t < g.task_count(); ++t) want_perception += std::min(K, g.task_delay(t));
  CHECK(static_cast<int>(perception.size()) == want_perception);
  CHECK(static_cast<int>(computing.size()) == K);      // one fog vehicle
  CHECK(static_cast<int>(carry.size()) == 2 * (K - 1));  // two relays
}

TEST_CASE("carry arcs form per-vehicle chains") {
  const Scenario s = load_scenario(kRef);
  const Trrg g = build(s);
  std::map<int, int> in, out;
  for (int id : g.arcs_of_kind(ArcKind::kCarry)) {
    ++out[g.arcs()[id].tail];
    ++in[g.arcs()[id].head];
  }
  for (const auto& [v, n] : in) CHECK(n == 1);
  for (const auto& [v, n] : out) CHECK(n == 1);
  for (int vehicle = 0; vehicle < g.vehicle_count(); ++vehicle) {
    if (g.vehicle_role(vehicle) != Role::kRelay) continue;
    for (int k = 1; k < g.layers(); ++k) {
      CHECK(out[g.vertex_of(vehicle, k)] == 1);
    }
  }
}

TEST_CASE("no relay means no carry arcs") {
  Scenario s;
  s.seed = 1;
  s.comm_range_m = 50;
  s.horizon_s = 10;
  s.vehicles = {vehicle("a", Role::kPerceptual, 0, 0, 5), vehicle("b", Role::kFog, 100, 0, -5)};
  s.tasks = {{"t", "a", 2}};
  const Trrg g = build(s);
  CHECK(g.layers() == 2);
  CHECK(g.arcs_of_kind(ArcKind::kCarry).empty());
}

TEST_CASE("perceptual-only scenario has no communication arcs") {
  Scenario s;
  s.seed = 1;
  s.vehicles = {vehicle("a", Role::kPerceptual, 0, 0, 0), vehicle("b", Role::kPerceptual, 5, 0, 0)};
  s.tasks = {{"t", "a", 1}};
  const Trrg g = build(s);
  CHECK(g.arcs_of_kind(ArcKind::kCommunication).empty());
  CHECK_FALSE(reachable_paths_exist(g, 0, 1));
}

TEST_CASE("empty frame list is rejected") {
  const Scenario s = load_scenario(kRef);
  CHECK_THROWS_AS(build_trrg(s, {}, 20.0), std::invalid_argument);
}

TEST_CASE("reference reachability starts at a four-frame budget") {
  const Scenario s = load_scenario(kRef);
  const Trrg g = build(s);
  for (int d = 1; d <= 3; ++d) CHECK_FALSE(reachable_paths_exist(g, 0, d));
  CHECK(reachable_paths_exist(g, 0, 4));
}

TEST_CASE("dropping carry arcs never adds reachability") {
  const Scenario s = load_scenario(kRef);
  const Trrg g = build(s);
  std::vector<double> all(g.arcs().size()), no_carry;
  for (const auto& a : g.arcs()) all[a.id] = a.capacity_bits;
  no_carry = all;
  for (int id : g.arcs_of_kind(ArcKind::kCarry)) no_carry[id] = 0.0;
  for (int t = 0; t < g.task_count(); ++t) {
    for (int d = 1; d <= g.layers(); ++d) {
      if (reachable_paths_exist(g, t, d, no_carry)) CHECK(reachable_paths_exist(g, t, d, all));
    }
  }
}

TEST_CASE("no fog vehicle means omega is unreachable") {
  Scenario s;
  s.seed = 1;
  s.vehicles = {vehicle("a", Role::kPerceptual, 0, 0, 0), vehicle("b", Role::kRelay, 5, 0, 0)};
  s.tasks = {{"t", "a", 1}};
  const Trrg g = build(s);
  CHECK(g.arcs_of_kind(ArcKind::kComputing).empty());
  for (int d = 1; d <= 3; ++d) CHECK_FALSE(reachable_paths_exist(g, 0, d));
}

TEST_CASE("edge list labels") {
  const Scenario s = load_scenario(kRef);
  const Trrg g = build(s);
  std::ostringstream out;
  write_edge_list(g, out);
  std::istringstream in(out.str());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream f(line);
    std::string tail, head, kind, cap;
    int frame = 0;
    REQUIRE(static_cast<bool>(f >> tail >> head >> kind >> frame >> cap));
    const Arc& a = g.arcs()[rows];
    CHECK(tail == g.label(a.tail));
    CHECK(head == g.label(a.head));
    CHECK(kind == to_string(a.kind));
    ++rows;
  }
  CHECK(rows == static_cast<int>(g.arcs().size()));
  CHECK(g.label(g.alpha()) == "alpha");
  CHECK(g.label(g.omega()) == "omega");
  CHECK(g.label(g.vertex_of(2, 3)) == "v3:v3");
}

#include <doctest.h>

#include <cmath>
#include <random>

#include "fogflow/power.hpp"
#include "oracles.hpp"

using namespace fogflow;

namespace {

const std::string kRef = std::string(FOGFLOW_SOURCE_DIR) + "/configs/reference.cfg";

}  // namespace

TEST_CASE("capacity formula") {
  CHECK(pair_capacity(1.0, 0.0, 1.0, 0.3, 1.0, 10e6) == doctest::Approx(10e6));
  CHECK(pair_capacity(3.0, 1.0, 1.0, 1.0, 1.0, 1.0) == doctest::Approx(std::log2(2.5)));
  CHECK(pair_capacity(0.0, 1.0, 1.0, 1.0, 1.0, 1.0) == 0.0);
}

TEST_CASE("zero-uncertainty example reaches both caps") {
  const UncertaintySet nom = nominal_set(Eigen::Vector2d(2.0, 1.0));
  const PairPower p = solve_pair(1.0, 0.5, nom, 1.0, 1.0, {1.0, 1.0}, 1e-3);
  CHECK(p.feasible);
  CHECK(p.p_link == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(p.p_av == doctest::Approx(1.0).epsilon(1e-3));
  const auto want = oracle::pair_closed_form(1.0, 0.5, nom.center, 1.0, 1.0, 1.0, 1.0);
  CHECK(std::abs(p.p_link - want.p_link) <= 1e-3);
  CHECK(std::abs(p.p_av - want.p_av) <= 1e-3);
  CHECK(p.iterations <= kMaxBisectionIterations);
}

TEST_CASE("zero uncertainty matches the closed form on random instances") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector2d c(0.5 + 4 * u(rng), 0.2 + 2 * u(rng));
    const double noise = 0.2 + u(rng), gl = 0.5 + 4 * u(rng), gi = 0.05 + u(rng);
    const PowerCaps caps{0.2 + u(rng), 0.2 + u(rng)};
    const PairPower p = solve_pair(gl, gi, nominal_set(c), noise, 1.0, caps, 1e-3);
    const auto want = oracle::pair_closed_form(gl, gi, c, noise, 1.0, caps.link_w, caps.av_w);
    if (want.capacity <= 0.0) {
      CHECK_FALSE(p.feasible);
      continue;
    }
    REQUIRE(p.feasible);
    CHECK(std::abs(p.p_link - want.p_link) <= 1e-3);
    CHECK(std::abs(p.p_av - want.p_av) <= 1e-3);
    CHECK(p.capacity_bps == doctest::Approx(want.capacity).epsilon(1e-3));
  }
}

TEST_CASE("AV demanding all the protection silences the link") {
  // g_av / gamma -> 0 as gamma -> infinity.
  const UncertaintySet nom = nominal_set(Eigen::Vector2d(1e-12, 1.0));
  const PairPower p = solve_pair(1.0, 1.0, nom, 1.0, 1.0, {1.0, 1.0}, 1e-3);
  CHECK_FALSE(p.feasible);
  CHECK(p.p_link == 0.0);
  CHECK(p.capacity_bps == 0.0);
  CHECK(p.p_av == min_av_power(nom, 1.0, 1.0));
}

TEST_CASE("min AV power") {
  const UncertaintySet nom = nominal_set(Eigen::Vector2d(2.0, 1.0));
  CHECK(min_av_power(nom, 1.0, 10.0) == doctest::Approx(0.5));
  CHECK(min_av_power(nom, 1.0, 0.2) == 0.2);
}

TEST_CASE("robust pairs: feasible, inside the caps and no worse than the grid") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 40; ++i) {
    // Broader than the acceptance instances: interference and AV caps vary.
    auto inst = oracle::random_pair_instance(rng, 500, 0.03 + 0.1 * u(rng));
    inst.g_interf = 0.05 + u(rng);
    const UncertaintySet set = learn_uncertainty_set(inst.samples, 1e-2);
    const PowerCaps caps{0.3 + u(rng), 0.3 + u(rng)};
    const PairPower p = solve_pair(inst.g_link, inst.g_interf, set, inst.noise, 1.0, caps, 1e-3);
    const auto grid = oracle::pair_grid_search(inst.g_link, inst.g_interf, set.center, set.shape,
                                               inst.noise, 1.0, caps.link_w, caps.av_w, 1e-2);
    if (!p.feasible) {
      CHECK(grid.capacity == 0.0);
      continue;
    }
    CHECK(soc_feasible(p.p_av, p.p_link, set, inst.noise));
    CHECK(p.p_link <= caps.link_w);
    CHECK(p.p_av <= caps.av_w);
    CHECK(p.p_link >= 0.0);
    CHECK(p.p_av >= 0.0);
    CHECK(p.capacity_bps >= grid.capacity * (1 - 1e-12));
    CHECK(p.capacity_bps ==
          doctest::Approx(pair_capacity(p.p_link, p.p_av, inst.g_link, inst.g_interf, inst.noise, 1.0)));
    CHECK(p.iterations <= kMaxBisectionIterations);
  }
}

TEST_CASE("robust pairs match the refined grid optimum") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto inst = oracle::random_pair_instance(rng, 1000, 0.05);
    const UncertaintySet set = learn_uncertainty_set(inst.samples, 1e-3);
    const PairPower p = solve_pair(inst.g_link, inst.g_interf, set, inst.noise, 1.0, {1.0, 1.0}, 1e-3);
    const Eigen::Matrix2d B = set.shape;
    auto cap = [&](const std::vector<double>& x) {
      return std::log2(1.0 + x[1] * inst.g_link / (x[0] * inst.g_interf + inst.noise));
    };
    auto ok = [&](const std::vector<double>& x) {
      return oracle::soc_margin(x[0], x[1], set.center, B, inst.noise) >= 0.0;
    };
    const auto best = oracle::refine_grid_max(cap, ok, {0, 0}, {1, 1}, 101, 8);
    CHECK(p.capacity_bps == doctest::Approx(cap(best)).epsilon(1e-6));
  }
}

TEST_CASE("capacity is non-decreasing in either cap") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 10; ++i) {
    const auto inst = oracle::random_pair_instance(rng, 500, 0.05);
    const UncertaintySet set = learn_uncertainty_set(inst.samples, 1e-2);
    double prev_l = 0.0, prev_a = 0.0;
    for (int j = 1; j <= 20; ++j) {
      const double c = 0.1 * j;
      const double l = solve_pair(inst.g_link, inst.g_interf, set, inst.noise, 1.0, {c, 1.0}, 1e-3).capacity_bps;
      const double a = solve_pair(inst.g_link, inst.g_interf, set, inst.noise, 1.0, {1.0, c}, 1e-3).capacity_bps;
      CHECK(l >= prev_l * (1 - 1e-9));
      CHECK(a >= prev_a * (1 - 1e-9));
      prev_l = l;
      prev_a = a;
    }
  }
}

TEST_CASE("arc capacities: unit SINR over a one-second frame is 1e7 bits") {
  Scenario s;
  s.seed = 1;
  s.horizon_s = 1.0;
  VehicleSpec a, b;
  a.id = "a";
  a.role = Role::kPerceptual;
  b.id = "b";
  b.role = Role::kFog;
  b.initial_position = {5, 0};
  b.compute_capacity_bits = 1e6;
  s.vehicles = {a, b};
  s.tasks = {{"t", "a", 1}};
  const Trrg g = build_trrg(s, contact_frames(s, s.comm_range_m, s.horizon_s), s.comm_range_m);
  const auto comm = g.arcs_of_kind(ArcKind::kCommunication);
  REQUIRE(comm.size() == 1);
  PairRecord r;
  r.frame = 1;
  r.arc = comm[0];
  r.power.feasible = true;
  r.power.capacity_bps = pair_capacity(1.0, 0.0, 1.0, 0.0, 1.0, 10e6);
  const auto caps = arc_capacities(g, {r});
  CHECK(caps[comm[0]] == doctest::Approx(1e7));
  for (const auto& arc : g.arcs()) {
    if (arc.kind == ArcKind::kComputing) CHECK(caps[arc.id] == 1e6);
    if (arc.kind == ArcKind::kPerception) CHECK(std::isinf(caps[arc.id]));
  }
  CHECK(arc_capacities(g, {})[comm[0]] == 0.0);
}

TEST_CASE("reference plan: capacities follow from the solved powers") {
  const Scenario s = load_scenario(kRef);
  const Trrg g = build_trrg(s, contact_frames(s, s.comm_range_m, s.horizon_s), s.comm_range_m);
  const LinkSchedule sch = schedule_links(s, g);
  const SubchannelPlan plan = assign_subchannels(s, g, sch);
  const auto pairs = plan_powers(s, g, sch, plan, PowerMode::kRobust);
  const auto caps = arc_capacities(g, pairs);
  const double noise = s.channel.noise_power();
  REQUIRE(!pairs.empty());
  for (const auto& r : pairs) {
    CHECK(r.power.p_link <= s.channel.p_max_v_w);
    CHECK(r.power.p_av <= s.channel.p_max_av_w);
    if (!r.power.feasible) {
      CHECK(caps[r.arc] == 0.0);
      continue;
    }
    CHECK(soc_feasible(r.power.p_av, r.power.p_link, r.set, noise));
    const double bps = s.channel.bandwidth_hz *
                       std::log2(1.0 + r.power.p_link * r.g_link / (r.power.p_av * r.g_interf + noise));
    CHECK(caps[r.arc] == doctest::Approx(bps * g.frame(r.frame).duration()).epsilon(1e-12));
  }
  // Unscheduled communication arcs carry nothing.
  for (int k = 1; k <= g.layers(); ++k) {
    for (int id : g.communication_arcs(k)) {
      bool active = false;
      for (const auto& r : pairs) active |= r.arc == id && r.power.feasible;
      if (!active) CHECK(caps[id] == 0.0);
    }
  }
}

TEST_CASE("training streams are reproducible per pair") {
  const Scenario s = load_scenario(kRef);
  const Trrg g = build_trrg(s, contact_frames(s, s.comm_range_m, s.horizon_s), s.comm_range_m);
  const int arc = g.communication_arcs(1).front();
  Rng a = pair_stream(s, g, "train", arc, 0);
  Rng b = pair_stream(s, g, "train", arc, 0);
  Rng c = pair_stream(s, g, "test", arc, 0);
  const auto xa = pair_training_samples(s, g, arc, 0, 5, a);
  const auto xb = pair_training_samples(s, g, arc, 0, 5, b);
  const auto xc = pair_training_samples(s, g, arc, 0, 5, c);
  for (int i = 0; i < 5; ++i) {
    CHECK(xa[i] == xb[i]);
    CHECK(xa[i] != xc[i]);
    CHECK(xa[i].minCoeff() > 0.0);
  }
}

// fogflow: experiment driver.
//
//   fogflow run --scenario configs/reference.cfg --approach Robust,V2Only
//       --sweep max_power --range 0:30:5 --out results
//   fogflow validate-config --scenario configs/reference.cfg
//   fogflow dump-graph --scenario configs/reference.cfg [--capacities]
//   fogflow oracle [--count 50]
//
// Exit codes: 0 ok, 2 config or usage error, 3 solver failure, 1 other.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>

#include "fogflow/experiment.hpp"
#include "oracles.hpp"

namespace {

using namespace fogflow;

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct Common {
  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
};

Scenario load(const Common& c) {
  Scenario s = load_scenario(c.scenario_path);
  if (c.seed) s.seed = *c.seed;
  if (c.deterministic) s.channel.deterministic = true;
  return s;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--scenario", c.scenario_path, "scenario config file")->required();
  app->add_option("--seed", c.seed, "override the scenario RNG seed");
  app->add_flag("--deterministic-channel", c.deterministic, "disable shadowing and fading");
}

std::vector<Approach> parse_approaches(const std::string& list) {
  std::vector<Approach> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_approach(item));
  }
  if (out.empty()) throw ConfigError("no approaches given", 0, "approach");
  return out;
}

void parse_range(const std::string& text, ExperimentSpec& spec) {
  double lo = 0, hi = 0, step = 0;
  char c1 = 0, c2 = 0;
  std::stringstream ss(text);
  if (!(ss >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || !ss.eof()) {
    throw ConfigError("--range expects lo:hi:step", 0, "range");
  }
  if (!(step > 0) || hi < lo) throw ConfigError("--range needs step > 0 and hi >= lo", 0, "range");
  spec.lo = lo;
  spec.hi = hi;
  spec.step = step;
}

int cmd_validate(const Common& c) {
  const Scenario s = load(c);
  const auto frames = contact_frames(s, s.comm_range_m, s.horizon_s);
  const Trrg g = build_trrg(s, frames, s.comm_range_m);
  std::printf("ok: %zu vehicles, %zu AVs, %zu tasks, %zu frames, %zu arcs\n", s.vehicles.size(),
              s.avs.size(), s.tasks.size(), frames.size(), g.arcs().size());
  for (const auto& f : frames) {
    std::printf("frame %d: [%.6f, %.6f] s\n", f.index, f.start, f.end);
  }
  for (int t = 0; t < g.task_count(); ++t) {
    int first = 0;
    for (int d = 1; d <= g.layers() && !first; ++d) {
      if (reachable_paths_exist(g, t, d)) first = d;
    }
    std::printf("task %s: first delay budget with a path = %d\n", s.tasks[t].id.c_str(), first);
  }
  return 0;
}

int cmd_dump_graph(const Common& c, bool with_capacities, const std::string& approach) {
  const Scenario s = load(c);
  if (!with_capacities) {
    const auto frames = contact_frames(s, s.comm_range_m, s.horizon_s);
    write_edge_list(build_trrg(s, frames, s.comm_range_m), std::cout);
    return 0;
  }
  const PipelineResult r = run_pipeline(s, parse_approach(approach));
  write_edge_list(*r.trrg, std::cout, &r.capacities);
  std::cout << "# schedule (frame: arcs with AV)\n";
  for (std::size_t k = 0; k < r.schedule.size(); ++k) {
    std::cout << "# " << k + 1 << ':';
    for (std::size_t i = 0; i < r.schedule[k].size(); ++i) {
      const Arc& a = r.trrg->arcs()[r.schedule[k][i]];
      const int av = r.subchannels[k][i];
      std::cout << ' ' << r.trrg->label(a.tail) << "->" << r.trrg->label(a.head) << '@'
                << (av >= 0 ? s.avs[av].id : std::string("none"));
    }
    std::cout << '\n';
  }
  return 0;
}

int cmd_oracle(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::printf("%-10s %6s %22s %22s %s\n", "check", "size", "solver", "oracle", "match");
  int mismatches = 0;
  for (int i = 0; i < count; ++i) {
    const int n = 1 + static_cast<int>(rng() % 15);
    auto adj = oracle::random_graph(n, 0.1 + 0.6 * unit(rng), rng);
    std::vector<std::pair<int, int>> edges;
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        if ((adj[a] >> b) & 1U) edges.emplace_back(a, b);
      }
    }
    std::vector<double> w(n);
    for (double& x : w) x = 0.1 + 10.0 * unit(rng);
    const double got = select_schedule(make_conflict_graph(n, edges, w)).weight;
    const double want = oracle::mwis_exhaustive(adj, w);
    const bool ok = std::abs(got - want) <= 1e-12 * std::max(1.0, want);
    mismatches += !ok;
    std::printf("%-10s %6d %22.15g %22.15g %s\n", "mwis", n, got, want, ok ? "yes" : "NO");
  }
  for (int i = 0; i < count; ++i) {
    const int r = 1 + static_cast<int>(rng() % 7);
    const int c = 1 + static_cast<int>(rng() % 7);
    Eigen::MatrixXd m(r, c);
    for (int a = 0; a < r; ++a) {
      for (int b = 0; b < c; ++b) m(a, b) = 100.0 * unit(rng);
    }
    const double got = assign(m).cost;
    const double want = oracle::assignment_exhaustive(m);
    const bool ok = std::abs(got - want) <= 1e-12 * std::max(1.0, want);
    mismatches += !ok;
    std::printf("%-10s %3dx%-2d %22.15g %22.15g %s\n", "hungarian", r, c, got, want, ok ? "yes" : "NO");
  }
  for (int i = 0; i < count; ++i) {
    const auto inst = oracle::random_pair_instance(rng, 1000, 0.05);
    const UncertaintySet set = learn_uncertainty_set(inst.samples, 1e-3);
    const double sigma2 = inst.noise;
    const double gl = inst.g_link, gi = inst.g_interf;
    const PairPower p = solve_pair(gl, gi, set, sigma2, 1.0, {1.0, 1.0}, 1e-3);
    const auto grid = oracle::pair_grid_search(gl, gi, set.center, set.shape, sigma2, 1.0, 1.0, 1.0, 1e-3);
    const double rel = grid.capacity > 0 ? std::abs(p.capacity_bps - grid.capacity) / grid.capacity
                                         : p.capacity_bps;
    const bool ok = rel <= 1e-3;
    mismatches += !ok;
    std::printf("%-10s %6d %22.15g %22.15g %s\n", "bisection", 2, p.capacity_bps, grid.capacity,
                ok ? "yes" : "NO");
  }
  std::printf("mismatches: %d\n", mismatches);
  return mismatches ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vehicular fog content dissemination: scheduling, robust power and flow control"};
  app.require_subcommand(1);

  Common common;
  ExperimentSpec spec;
  std::string approaches = "Robust";
  std::string sweep = "none";
  std::string range;
  std::string out_dir = "results";
  int threads = 0;
  bool no_solutions = false;

  auto* run = app.add_subcommand("run", "run the pipeline, optionally over a parameter sweep");
  add_common(run, common);
  run->add_option("--approach", approaches,
                  "comma list of Robust, V2Only, V5Only, WithoutCarry, NoRobust");
  run->add_option("--sweep", sweep, "none, max_power (dBm), delay (frames), cache or compute (bits/frame)");
  run->add_option("--range", range, "lo:hi:step of the swept parameter");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--threads", threads, "worker threads (0 = all cores)");
  run->add_flag("--no-solutions", no_solutions, "skip per-point solution dumps");

  auto* validate = app.add_subcommand("validate-config", "parse and check a scenario");
  add_common(validate, common);

  bool with_caps = false;
  std::string dump_approach = "Robust";
  auto* dump = app.add_subcommand("dump-graph", "print the graph as an edge list");
  add_common(dump, common);
  dump->add_flag("--capacities", with_caps, "run the pipeline and print solved capacities");
  dump->add_option("--approach", dump_approach, "approach used with --capacities");

  int oracle_count = 50;
  std::uint64_t oracle_seed = 1;
  auto* orc = app.add_subcommand("oracle", "compare solvers with brute-force oracles");
  orc->add_option("--count", oracle_count, "instances per check");
  orc->add_option("--seed", oracle_seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*validate) return cmd_validate(common);
    if (*dump) return cmd_dump_graph(common, with_caps, dump_approach);
    if (*orc) return cmd_oracle(oracle_count, oracle_seed);

    spec.scenario = load(common);
    try {
      spec.approaches = parse_approaches(approaches);
      spec.sweep = parse_sweep(sweep);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what(), 0, "argument");
    }
    if (spec.sweep != SweepAxis::kNone) {
      if (range.empty()) throw ConfigError("--range is required with --sweep", 0, "range");
      parse_range(range, spec);
      try {
        for (double v : sweep_values(spec.lo, spec.hi, spec.step)) {
          validate_scenario(apply_sweep(spec.scenario, spec.sweep, v));
        }
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what(), 0, "range");
      }
    }
    spec.out_dir = out_dir;
    spec.threads = threads;
    spec.write_solutions = !no_solutions;
    const auto rows = run_experiment(spec);
    std::fputs(results_csv(rows).c_str(), stdout);
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const StageError& e) {
    std::fprintf(stderr, "error in %s\n", e.what());
    return e.solver_failure() ? kExitSolver : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "fogflow/experiment.hpp"
#include "oracles.hpp"

using namespace fogflow;
namespace fs = std::filesystem;

namespace {

const std::string kRef = std::string(FOGFLOW_SOURCE_DIR) + "/configs/reference.cfg";
const std::vector<Approach> kAll{Approach::kRobust, Approach::kV2Only, Approach::kV5Only,
                                 Approach::kWithoutCarry};

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("criterion %2d %-28s %s  %s\n", id, name, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

PipelineOptions sweep_options() {
  PipelineOptions o;
  o.outage_trials = 1000;  // outage is not judged on the sweeps
  return o;
}

// Criterion 9 bookkeeping, filled by every pipeline run below.
struct Integrity {
  int instances = 0;
  double worst_conservation = 0.0;  // residual / (throughput + 1)
  double worst_capacity = 0.0;      // violation / max(1, |h|)
  double worst_objective = 0.0;     // relative
  int late_flow = 0;
} integrity;

void audit(const PipelineResult& r) {
  const FlowProgram& p = r.program;
  const FlowSolution& s = r.solution;
  ++integrity.instances;
  integrity.worst_conservation =
      std::max(integrity.worst_conservation, conservation_residual(p, s.x) / (s.throughput + 1.0));
  if (p.var_count() > 0) {
    const Eigen::Map<const Eigen::VectorXd> x(s.x.data(), static_cast<Eigen::Index>(s.x.size()));
    const Eigen::VectorXd over = p.G * x - p.h;
    for (Eigen::Index i = 0; i < over.size(); ++i) {
      integrity.worst_capacity = std::max(integrity.worst_capacity, over(i) / std::max(1.0, std::abs(p.h(i))));
    }
  }
  // Direct check against the arc capacities, independent of the row layout.
  std::map<int, double> per_arc;
  for (std::size_t j = 0; j < p.vars.size(); ++j) {
    const Arc& a = r.trrg->arcs()[p.vars[j].arc];
    per_arc[a.id] += s.x[j];
    if (a.frame >= r.trrg->task_delay(p.vars[j].task) && std::abs(s.x[j]) > 0.0) ++integrity.late_flow;
  }
  for (const auto& [arc, flow] : per_arc) {
    const double cap = r.capacities[arc];
    if (std::isfinite(cap)) {
      integrity.worst_capacity = std::max(integrity.worst_capacity, (flow - cap) / std::max(1.0, cap));
    }
  }

  // Dump, parse back and re-evaluate.
  std::vector<std::string> task_ids;
  for (int t = 0; t < p.tasks; ++t) task_ids.push_back("t" + std::to_string(t));
  std::ostringstream out;
  write_solution_csv(out, p, s, task_ids);
  std::map<std::pair<int, std::string>, double> dumped;
  double reported = std::nan("");
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.rfind("objective,", 0) == 0) {
      std::getline(in, line);
      reported = std::stod(line.substr(0, line.find(',')));
      break;
    }
    std::istringstream row(line);
    std::string frame, arc, task, flow;
    std::getline(row, frame, ',');
    std::getline(row, arc, ',');
    std::getline(row, task, ',');
    std::getline(row, flow, ',');
    dumped[{std::stoi(arc), task}] = std::stod(flow);
  }
  std::vector<double> x(p.vars.size(), 0.0);
  for (std::size_t j = 0; j < p.vars.size(); ++j) x[j] = dumped[{p.vars[j].arc, task_ids[p.vars[j].task]}];
  const double again = evaluate_objective(p, x);
  const double rel = std::abs(again - reported) / std::max(1.0, std::abs(reported));
  const double rel_run = std::abs(reported - r.objective) / std::max(1.0, std::abs(r.objective));
  integrity.worst_objective = std::max({integrity.worst_objective, rel, rel_run});
}

PipelineResult run(const Scenario& s, Approach a, const PipelineOptions& o = sweep_options()) {
  PipelineResult r = run_pipeline(s, a, o);
  audit(r);
  return r;
}

bool geq(double a, double b) { return a >= b - 1e-6 * std::max(1.0, std::abs(b)); }

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int bad = 0;
  for (int i = 0; i < 200; ++i) {
    const int n = 1 + static_cast<int>(rng() % 15);
    const auto adj = oracle::random_graph(n, 0.1 + 0.7 * unit(rng), rng);
    std::vector<std::pair<int, int>> edges;
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        if ((adj[a] >> b) & 1U) edges.emplace_back(a, b);
      }
    }
    std::vector<double> w(n);
    for (double& x : w) x = 0.01 + 10.0 * unit(rng);
    bad += select_schedule(make_conflict_graph(n, edges, w)).weight != oracle::mwis_exhaustive(adj, w);
  }
  const double t = seconds_since(t0);
  report(1, "mwis-oracle", bad == 0 && t < 30.0, fmt("mismatches=%d/200 time=%.2fs (<30s)", bad, t));
}

void criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> unit(0.0, 100.0);
  int bad = 0;
  for (int i = 0; i < 200; ++i) {
    const int r = 1 + static_cast<int>(rng() % 7);
    const int c = 1 + static_cast<int>(rng() % 7);
    Eigen::MatrixXd m(r, c);
    for (int a = 0; a < r; ++a) {
      for (int b = 0; b < c; ++b) m(a, b) = unit(rng);
    }
    bad += assign(m).cost != oracle::assignment_exhaustive(m);
  }
  const double t = seconds_since(t0);
  report(2, "hungarian-oracle", bad == 0 && t < 10.0, fmt("mismatches=%d/200 time=%.2fs (<10s)", bad, t));
}

void criterion3() {
  std::mt19937_64 rng(303);
  constexpr double kZeta = 1e-3;
  double worst_grid = 0.0, worst_closed = 0.0;
  int infeasible = 0;
  for (int i = 0; i < 100; ++i) {
    const auto inst = oracle::random_pair_instance(rng, 1000, 0.05);
    const UncertaintySet set = learn_uncertainty_set(inst.samples, 1e-3);
    const PairPower p = solve_pair(inst.g_link, inst.g_interf, set, inst.noise, 1.0, {1.0, 1.0}, kZeta);
    const auto grid = oracle::pair_grid_search(inst.g_link, inst.g_interf, set.center, set.shape, inst.noise,
                                               1.0, 1.0, 1.0, 1e-3);
    if (grid.capacity <= 0.0) {
      infeasible += p.capacity_bps != 0.0;
    } else {
      worst_grid = std::max(worst_grid, std::abs(p.capacity_bps - grid.capacity) / grid.capacity);
    }

    const PairPower q = solve_pair(inst.g_link, inst.g_interf, nominal_set(inst.center), inst.noise, 1.0,
                                   {1.0, 1.0}, kZeta);
    const auto cf = oracle::pair_closed_form(inst.g_link, inst.g_interf, inst.center, inst.noise, 1.0, 1.0, 1.0);
    worst_closed = std::max({worst_closed, std::abs(q.p_link - cf.p_link), std::abs(q.p_av - cf.p_av)});
  }
  report(3, "bisection-oracle", worst_grid <= 1e-3 && worst_closed <= kZeta && infeasible == 0,
         fmt("max rel gap to 1e-3 grid=%.2e (<=1e-3), B=0 max power error=%.2e W (<=%.0e)", worst_grid,
             worst_closed, kZeta));
}

void criterion4(const Scenario& ref) {
  const auto t0 = std::chrono::steady_clock::now();
  PipelineOptions o;
  o.outage_trials = 100000;
  const PipelineResult robust = run(ref, Approach::kRobust, o);
  const PipelineResult nominal = run(ref, Approach::kNoRobust, o);
  // Per AV: pool the AV's draws over all pairs that reuse its subchannel.
  std::map<int, std::pair<double, int>> per_av;
  double worst_pair = 0.0;
  for (std::size_t i = 0; i < robust.pairs.size(); ++i) {
    auto& [sum, n] = per_av[robust.pairs[i].av];
    sum += robust.pair_outage[i];
    ++n;
    worst_pair = std::max(worst_pair, robust.pair_outage[i]);
  }
  double worst_av = 0.0;
  for (const auto& [av, sn] : per_av) worst_av = std::max(worst_av, sn.first / sn.second);
  const double t = seconds_since(t0);
  const bool ok = !robust.pairs.empty() && worst_av <= 5e-3 && nominal.outage_rate >= 0.3 && t < 60.0;
  report(4, "robust-outage", ok,
         fmt("Robust worst AV=%.2e worst pair=%.2e (<=5e-3), NoRobust=%.3f (>=0.3), pairs=%zu time=%.1fs (<60s)",
             worst_av, worst_pair, nominal.outage_rate, robust.pairs.size(), t));
}

void criterion5(const Scenario& ref) {
  constexpr int kTrain = 1000000;
  constexpr int kTest = 100000;
  std::string detail;
  bool ok = true;
  auto check = [&](const char* what, double eps, const std::vector<Eigen::VectorXd>& train,
                   const std::vector<Eigen::VectorXd>& test) {
    const UncertaintySet set = learn_uncertainty_set(train, eps);
    int in = 0;
    for (const auto& x : test) in += contains(set, x);
    const double cov = static_cast<double>(in) / kTest;
    const double need = 1.0 - eps - 3.0 * std::sqrt(eps * (1.0 - eps) / kTest);
    ok &= cov >= need;
    detail += fmt("%s eps=%.0e: %.5f>=%.5f; ", what, eps, cov, need);
  };

  std::mt19937_64 rng(505);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::Matrix2d l;
  l << 1.0, 0.0, 0.6, 0.5;
  auto gauss = [&](int n) {
    std::vector<Eigen::VectorXd> v(n);
    for (auto& x : v) x = Eigen::Vector2d(3.0, 1.0) + l * Eigen::Vector2d(z(rng), z(rng));
    return v;
  };
  const auto g_train = gauss(kTrain), g_test = gauss(kTest);

  const Trrg g = build_trrg(ref, contact_frames(ref, ref.comm_range_m, ref.horizon_s), ref.comm_range_m);
  const LinkSchedule sch = schedule_links(ref, g);
  const int arc = sch[0].front();
  Rng tr = pair_stream(ref, g, "train", arc, 0);
  Rng te = pair_stream(ref, g, "test", arc, 0);
  const auto c_train = pair_training_samples(ref, g, arc, 0, kTrain, tr);
  const auto c_test = pair_training_samples(ref, g, arc, 0, kTest, te);

  for (double eps : {1e-3, 1e-2, 1e-1}) {
    check("gaussian", eps, g_train, g_test);
    check("channel", eps, c_train, c_test);
  }
  report(5, "set-coverage", ok, detail);
}

void criterion6(const Scenario& ref) {
  const Trrg g = build_trrg(ref, contact_frames(ref, ref.comm_range_m, ref.horizon_s), ref.comm_range_m);
  int first = -1;
  for (int d = 1; d <= 18 && first < 0; ++d) {
    for (int t = 0; t < static_cast<int>(ref.tasks.size()); ++t) {
      if (reachable_paths_exist(g, t, d)) first = d;
    }
  }
  bool ok = first > 1;
  std::string detail = fmt("first reachable budget=%d; ", first);
  for (int d = 1; d < first; ++d) {
    const double tp = run(apply_sweep(ref, SweepAxis::kDelay, d), Approach::kRobust).throughput_bits;
    ok &= tp == 0.0;
    detail += fmt("d=%d:%g ", d, tp);
  }
  if (first > 0) {
    const Scenario s = apply_sweep(ref, SweepAxis::kDelay, first);
    const double robust = run(s, Approach::kRobust).throughput_bits;
    const double v2 = run(s, Approach::kV2Only).throughput_bits;
    const double none = run(s, Approach::kWithoutCarry).throughput_bits;
    ok &= robust > 0.0 && v2 > 0.0 && none == 0.0;
    detail += fmt("d=%d: Robust=%.4g V2Only=%.4g WithoutCarry=%g", first, robust, v2, none);
  }
  report(6, "delay-threshold", ok, detail);
}

// Throughput of every approach along a sweep.
std::map<Approach, std::vector<double>> sweep(const Scenario& ref, SweepAxis axis, double lo, double hi,
                                              double step) {
  std::map<Approach, std::vector<double>> out;
  for (double v : sweep_values(lo, hi, step)) {
    const Scenario s = apply_sweep(ref, axis, v);
    for (Approach a : kAll) out[a].push_back(run(s, a).throughput_bits);
  }
  return out;
}

bool non_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!geq(v[i], v[i - 1])) return false;
  }
  return true;
}

double tail_change(const std::vector<double>& v) {
  const double a = v[v.size() - 2], b = v.back();
  return std::abs(b - a) / std::max(1.0, std::abs(b));
}

void criterion7(const Scenario& ref) {
  auto tp = sweep(ref, SweepAxis::kMaxPower, 0, 50, 5);
  bool order = true;
  for (std::size_t i = 0; i < tp[Approach::kRobust].size(); ++i) {
    const double best_one = std::max(tp[Approach::kV2Only][i], tp[Approach::kV5Only][i]);
    order &= geq(tp[Approach::kRobust][i], best_one) && geq(best_one, tp[Approach::kWithoutCarry][i]);
  }
  bool shape = true;
  std::string detail;
  for (Approach a : kAll) {
    const auto& v = tp[a];
    const bool grows = v.back() > v.front();
    const double tail = tail_change(v);
    shape &= non_decreasing(v) && grows && tail <= 1e-3;
    detail += fmt("%s %.4g->%.4g tail=%.1e; ", std::string(to_string(a)).c_str(), v.front(), v.back(), tail);
  }
  report(7, "baseline-ordering", order && shape, fmt("ordering=%s shape=%s; ", order ? "ok" : "violated",
                                                     shape ? "ok" : "violated") + detail);
}

void criterion8(const Scenario& ref) {
  auto cache = sweep(ref, SweepAxis::kCache, 0, 1e8, 1e7);
  auto compute = sweep(ref, SweepAxis::kCompute, 0, 2.4e8, 2e7);
  bool ok = true;
  std::string detail;
  for (Approach a : kAll) {
    const auto& c = cache[a];
    if (a == Approach::kWithoutCarry) {
      const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
      const bool flat = *hi - *lo <= 1e-6 * std::max(1.0, *hi);
      ok &= flat;
      detail += fmt("cache %s constant=%s; ", std::string(to_string(a)).c_str(), flat ? "yes" : "no");
    } else {
      const bool up = non_decreasing(c) && c.back() > c.front();
      ok &= up;
      detail += fmt("cache %s %.4g->%.4g; ", std::string(to_string(a)).c_str(), c.front(), c.back());
    }
    const auto& f = compute[a];
    const bool up = non_decreasing(f) && f.back() > f.front() && tail_change(f) <= 1e-6;
    ok &= up;
    detail += fmt("compute %s %.4g->%.4g tail=%.1e; ", std::string(to_string(a)).c_str(), f.front(), f.back(),
                  tail_change(f));
  }
  report(8, "monotone-sweeps", ok, detail);
}

void criterion9() {
  const bool ok = integrity.instances > 0 && integrity.worst_conservation <= 1e-6 && integrity.late_flow == 0 &&
                  integrity.worst_capacity <= 1e-6 && integrity.worst_objective <= 1e-6;
  report(9, "flow-integrity", ok,
         fmt("instances=%d conservation=%.1e capacity=%.1e late arcs=%d objective=%.1e (all <=1e-6)",
             integrity.instances, integrity.worst_conservation, integrity.worst_capacity, integrity.late_flow,
             integrity.worst_objective));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void criterion10(const Scenario& ref) {
  ExperimentSpec spec;
  spec.scenario = ref;
  spec.approaches = {Approach::kRobust, Approach::kV2Only, Approach::kV5Only, Approach::kWithoutCarry,
                     Approach::kNoRobust};
  spec.sweep = SweepAxis::kMaxPower;
  spec.lo = 10;
  spec.hi = 40;
  spec.step = 10;
  spec.options = sweep_options();
  const fs::path base = fs::temp_directory_path() / "fogflow_acceptance";
  fs::remove_all(base);
  spec.out_dir = base / "a";
  run_experiment(spec);
  spec.out_dir = base / "b";
  spec.threads = 1;
  run_experiment(spec);
  int files = 0, diffs = 0;
  for (const auto& e : fs::recursive_directory_iterator(base / "a")) {
    if (!e.is_regular_file()) continue;
    ++files;
    diffs += slurp(e.path()) != slurp(base / "b" / fs::relative(e.path(), base / "a"));
  }
  fs::remove_all(base);
  report(10, "determinism", files > 0 && diffs == 0, fmt("files=%d differing=%d", files, diffs));
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario ref = load_scenario(kRef);
  criterion1();
  criterion2();
  criterion3();
  criterion4(ref);
  criterion5(ref);
  criterion6(ref);
  criterion7(ref);
  criterion8(ref);
  criterion9();
  criterion10(ref);
  std::printf("%s: %d failing, %.1fs\n", failures ? "FAIL" : "PASS", failures, seconds_since(t0));
  return failures ? 1 : 0;
}

#include "fogflow/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fogflow {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const FlowError& e) {
    throw StageError(name, e.what(), true);
  } catch (const std::exception& e) {
    throw StageError(name, e.what(), false);
  }
}

}  // namespace

std::vector<TaskBs> base_station_gains(const Scenario& scenario, const Trrg& trrg) {
  const auto& ch = scenario.channel;
  const auto [eps_up, eps_down] = split_epsilon(ch.epsilon);
  std::vector<TaskBs> out;
  for (int s = 0; s < trrg.task_count(); ++s) {
    const int k = std::min(trrg.task_delay(s), trrg.layers());
    const double t = trrg.frame(k).midpoint();
    TaskBs bs;
    bs.gain_up = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < scenario.vehicles.size(); ++v) {
      if (scenario.vehicles[v].role != Role::kFog) continue;
      Rng rng = make_rng(scenario.seed, {tag_of("bs_up"), static_cast<std::uint64_t>(s),
                                         static_cast<std::uint64_t>(v)});
      const Point pos = position_at(scenario.vehicles[v], t);
      std::vector<double> draws(ch.sample_count);
      for (double& g : draws) g = sample_gain(ch, pos, scenario.bs, rng);
      bs.gain_up = std::min(bs.gain_up, quantile_gain(std::move(draws), eps_up).gain);
    }
    if (std::isinf(bs.gain_up)) {
      // No fog vehicle: nothing reaches omega, any positive gain will do.
      bs.gain_up = pathloss_gain(ch, {0.0, 0.0}, {1000.0, 0.0});
    }
    Rng rng = make_rng(scenario.seed, {tag_of("bs_down"), static_cast<std::uint64_t>(s)});
    const Point req = position_at(scenario.vehicles[trrg.task_source(s)], t);
    std::vector<double> draws(ch.sample_count);
    for (double& g : draws) g = sample_gain(ch, scenario.bs, req, rng);
    bs.gain_down = quantile_gain(std::move(draws), eps_down).gain;
    out.push_back(bs);
  }
  return out;
}

double outage_rate(double p_av, double p_link, std::span<const Eigen::VectorXd> samples,
                   double noise) {
  if (samples.empty()) return 0.0;
  std::size_t bad = 0;
  for (const auto& xi : samples) {
    if (p_av * xi(0) - p_link * xi(1) < noise) ++bad;
  }
  return static_cast<double>(bad) / static_cast<double>(samples.size());
}

double pair_outage(const Scenario& scenario, const Trrg& trrg, const PairRecord& pair,
                   int trials) {
  Rng rng = pair_stream(scenario, trrg, "test", pair.arc, pair.av);
  const auto draws = pair_training_samples(scenario, trrg, pair.arc, pair.av, trials, rng);
  return outage_rate(pair.power.p_av, pair.power.p_link, draws, scenario.channel.noise_power());
}

PipelineResult run_pipeline(const Scenario& scenario, Approach approach,
                            const PipelineOptions& options) {
  PipelineResult r;
  const double noise = scenario.channel.noise_power();
  r.frames = stage("contact_frames", [&] {
    return contact_frames(scenario, scenario.comm_range_m, scenario.horizon_s);
  });
  r.trrg = stage("build_trrg", [&] {
    return std::make_shared<const Trrg>(build_trrg(scenario, r.frames, scenario.comm_range_m));
  });
  const Trrg& g = *r.trrg;
  r.schedule = stage("schedule", [&] { return schedule_links(scenario, g, options.node_cap); });
  r.subchannels = stage("assign", [&] { return assign_subchannels(scenario, g, r.schedule); });
  const PowerMode mode = approach == Approach::kNoRobust ? PowerMode::kNominal : PowerMode::kRobust;
  r.pairs = stage("solve_pair", [&] { return plan_powers(scenario, g, r.schedule, r.subchannels, mode); });

  stage("arc_capacities", [&] {
    r.capacities = baseline_mask(g, arc_capacities(g, r.pairs), approach);
    if (approach == Approach::kNoRobust) {
      // One realized channel per pair; the arc is lost when the AV's SINR
      // falls below its threshold.
      for (const auto& pair : r.pairs) {
        if (!pair.power.feasible) continue;
        Rng rng = pair_stream(scenario, g, "realize", pair.arc, pair.av);
        const auto draw = pair_training_samples(scenario, g, pair.arc, pair.av, 1, rng);
        if (outage_rate(pair.power.p_av, pair.power.p_link, draw, noise) > 0.0) {
          r.capacities[pair.arc] = 0.0;
        }
      }
    }
    return 0;
  });

  r.bs = stage("base_station", [&] { return base_station_gains(scenario, g); });
  FlowParams params;
  params.eta = scenario.channel.compression_eta;
  params.bandwidth_hz = scenario.channel.bandwidth_hz;
  params.noise_w = noise;
  params.w_p = scenario.channel.w_p;
  params.p_max_bs_w = scenario.channel.p_max_bs_w;
  r.program = stage("build_program", [&] { return build_program(g, r.capacities, r.bs, params); });
  r.solution = stage("solve", [&] { return solve(r.program, options.solver_tolerance); });

  stage("outage_eval", [&] {
    r.pair_outage.assign(r.pairs.size(), -1.0);
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < r.pairs.size(); ++i) {
      const auto& pair = r.pairs[i];
      if (!pair.power.feasible || pair.power.p_link <= 0.0) continue;
      r.pair_outage[i] = pair_outage(scenario, g, pair, options.outage_trials);
      sum += r.pair_outage[i];
      ++count;
    }
    r.outage_rate = count ? sum / count : 0.0;
    return 0;
  });

  r.throughput_bits = r.solution.throughput;
  r.objective = r.solution.objective;
  r.consumed_power_w = r.solution.bs_power;
  for (const auto& pair : r.pairs) {
    if (pair.power.feasible) r.consumed_power_w += pair.power.p_link;
  }
  return r;
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kNone:
      return "none";
    case SweepAxis::kMaxPower:
      return "max_power";
    case SweepAxis::kDelay:
      return "delay";
    case SweepAxis::kCache:
      return "cache";
    case SweepAxis::kCompute:
      return "compute";
  }
  return "?";
}

SweepAxis parse_sweep(std::string_view name) {
  for (auto axis : {SweepAxis::kNone, SweepAxis::kMaxPower, SweepAxis::kDelay, SweepAxis::kCache,
                    SweepAxis::kCompute}) {
    if (to_string(axis) == name) return axis;
  }
  throw std::invalid_argument("unknown sweep axis '" + std::string(name) + "'");
}

Scenario apply_sweep(const Scenario& base, SweepAxis axis, double value) {
  Scenario s = base;
  switch (axis) {
    case SweepAxis::kNone:
      break;
    case SweepAxis::kMaxPower: {
      const double w = dbm_to_watts(value);
      s.channel.p_max_v_w = s.channel.p_max_av_w = s.channel.p_max_bs_w = w;
      break;
    }
    case SweepAxis::kDelay:
      if (value < 1.0 || value != std::floor(value)) {
        throw std::invalid_argument("delay sweep values must be whole frames >= 1");
      }
      for (auto& t : s.tasks) t.delay_frames = static_cast<int>(value);
      break;
    case SweepAxis::kCache:
      if (value < 0.0) throw std::invalid_argument("cache must be >= 0");
      for (auto& v : s.vehicles) {
        if (v.role == Role::kRelay) v.cache_capacity_bits = value;
      }
      break;
    case SweepAxis::kCompute:
      if (value < 0.0) throw std::invalid_argument("compute must be >= 0");
      for (auto& v : s.vehicles) {
        if (v.role == Role::kFog) v.compute_capacity_bits = value;
      }
      break;
  }
  return s;
}

std::vector<double> sweep_values(double lo, double hi, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("sweep step must be > 0");
  if (hi < lo) throw std::invalid_argument("sweep range is empty");
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double v = lo + i * step;
    if (v > hi + 1e-9 * step) break;
    out.push_back(v);
  }
  return out;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << "approach,sweep_param,value,throughput_bits,consumed_power_watts,objective,outage_rate\n";
  for (const auto& r : rows) {
    out << to_string(r.approach) << ',' << to_string(r.sweep) << ',' << fmt(r.value) << ','
        << fmt(r.throughput_bits) << ',' << fmt(r.consumed_power_w) << ',' << fmt(r.objective)
        << ',' << fmt(r.outage_rate) << '\n';
  }
  return out.str();
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec) {
  std::vector<double> values{0.0};
  if (spec.sweep != SweepAxis::kNone) values = sweep_values(spec.lo, spec.hi, spec.step);
  if (spec.approaches.empty()) throw std::invalid_argument("no approaches selected");

  struct Job {
    Approach approach;
    double value;
  };
  std::vector<Job> jobs;
  for (auto a : spec.approaches) {
    for (double v : values) jobs.push_back({a, v});
  }
  std::vector<ResultRow> rows(jobs.size());
  std::vector<std::string> solutions(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const Scenario sc = stage("sweep", [&] { return apply_sweep(spec.scenario, spec.sweep, jobs[i].value); });
        const PipelineResult r = run_pipeline(sc, jobs[i].approach, spec.options);
        rows[i] = {jobs[i].approach, spec.sweep, jobs[i].value, r.throughput_bits,
                   r.consumed_power_w, r.objective, r.outage_rate};
        if (spec.write_solutions) {
          std::vector<std::string> ids;
          for (const auto& t : sc.tasks) ids.push_back(t.id);
          std::ostringstream out;
          write_solution_csv(out, r.program, r.solution, ids);
          solutions[i] = out.str();
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned threads = spec.threads > 0 ? static_cast<unsigned>(spec.threads)
                                      : std::max(1U, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::filesystem::create_directories(spec.out_dir);
  auto write = [&](const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
  };
  write(spec.out_dir / "results.csv", results_csv(rows));

  const std::string axis = std::string(to_string(spec.sweep));
  struct Metric {
    const char* name;
    double ResultRow::*field;
  };
  const Metric metrics[] = {{"throughput_bits", &ResultRow::throughput_bits},
                            {"consumed_power_watts", &ResultRow::consumed_power_w},
                            {"objective", &ResultRow::objective},
                            {"outage_rate", &ResultRow::outage_rate}};
  for (const auto& m : metrics) {
    std::vector<ChartSeries> series;
    for (auto a : spec.approaches) {
      ChartSeries cs;
      cs.name = std::string(to_string(a));
      for (const auto& r : rows) {
        if (r.approach != a) continue;
        cs.x.push_back(r.value);
        cs.y.push_back(r.*(m.field));
      }
      series.push_back(std::move(cs));
    }
    write(spec.out_dir / (std::string(m.name) + ".svg"),
          render_svg_chart(std::string(m.name) + " vs " + axis, axis, m.name, series));
  }

  if (spec.write_solutions) {
    const auto dir = spec.out_dir / "solutions";
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      char name[128];
      std::snprintf(name, sizeof name, "%s_%s_%03zu.csv", std::string(to_string(jobs[i].approach)).c_str(),
                    axis.c_str(), i % values.size());
      write(dir / name, solutions[i]);
    }
  }
  return rows;
}

}  // namespace fogflow

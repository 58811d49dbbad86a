#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fogflow/flow.hpp"
#include "fogflow/power.hpp"

namespace fogflow {

// An error raised inside one pipeline stage. `solver_failure` marks errors
// of the flow solver, reported with their own exit code by the CLI.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what, bool solver_failure)
      : std::runtime_error(stage + ": " + what),
        stage_(std::move(stage)),
        solver_failure_(solver_failure) {}
  const std::string& stage() const { return stage_; }
  bool solver_failure() const { return solver_failure_; }

 private:
  std::string stage_;
  bool solver_failure_;
};

struct PipelineOptions {
  int node_cap = kDefaultNodeCap;
  int outage_trials = 10000;
  double solver_tolerance = 1e-6;
};

struct PipelineResult {
  std::vector<Frame> frames;
  std::shared_ptr<const Trrg> trrg;  // heap-held so `program` may point at it
  LinkSchedule schedule;
  SubchannelPlan subchannels;
  std::vector<PairRecord> pairs;
  std::vector<double> pair_outage;  // parallel to pairs, -1 when not evaluated
  std::vector<double> capacities;   // what the flow stage saw
  std::vector<TaskBs> bs;
  FlowProgram program;
  FlowSolution solution;

  double throughput_bits = 0.0;
  double consumed_power_w = 0.0;
  double objective = 0.0;
  double outage_rate = 0.0;
};

// Base-station quantile gains of every task (fog vehicle -> BS at frame
// min(T_s, K), BS -> source vehicle at the same frame).
std::vector<TaskBs> base_station_gains(const Scenario& scenario, const Trrg& trrg);

// Fraction of draws (g_av / gamma_th, g_cross) with
// p_av * g_av / gamma_th - p_link * g_cross < noise, i.e. AV SINR below its
// threshold.
double outage_rate(double p_av, double p_link, std::span<const Eigen::VectorXd> samples,
                   double noise);

// Monte-Carlo outage of one solved pair on `trials` fresh frame-level draws.
double pair_outage(const Scenario& scenario, const Trrg& trrg, const PairRecord& pair,
                   int trials);

// contact_frames -> build_trrg -> schedule -> assign -> solve_pair ->
// arc_capacities (+ baseline mask) -> flow solve.
PipelineResult run_pipeline(const Scenario& scenario, Approach approach,
                            const PipelineOptions& options = {});

enum class SweepAxis { kNone, kMaxPower, kDelay, kCache, kCompute };
std::string_view to_string(SweepAxis axis);
SweepAxis parse_sweep(std::string_view name);

// Applies one sweep value: max_power in dBm to every power cap, delay in
// frames to every task, cache bits per frame to every relay, compute bits
// per frame to every fog vehicle.
Scenario apply_sweep(const Scenario& base, SweepAxis axis, double value);

struct ExperimentSpec {
  Scenario scenario;
  std::vector<Approach> approaches{Approach::kRobust};
  SweepAxis sweep = SweepAxis::kNone;
  double lo = 0.0;
  double hi = 0.0;
  double step = 1.0;
  std::filesystem::path out_dir = "results";
  int threads = 0;  // 0 = hardware concurrency
  bool write_solutions = true;
  PipelineOptions options;
};

// Sweep points lo, lo + step, ... up to hi. Throws std::invalid_argument for
// an empty range or step <= 0.
std::vector<double> sweep_values(double lo, double hi, double step);

struct ResultRow {
  Approach approach = Approach::kRobust;
  SweepAxis sweep = SweepAxis::kNone;
  double value = 0.0;
  double throughput_bits = 0.0;
  double consumed_power_w = 0.0;
  double objective = 0.0;
  double outage_rate = 0.0;
};

// Runs every (approach, sweep value) point on a worker pool and writes
// results.csv, one SVG chart per metric and, optionally, one solution CSV per
// point. Returns the rows in output order.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec);

std::string results_csv(const std::vector<ResultRow>& rows);

// Minimal line chart: one polyline per series.
struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};
std::string render_svg_chart(const std::string& title, const std::string& x_label,
                             const std::string& y_label, const std::vector<ChartSeries>& series);

}  // namespace fogflow

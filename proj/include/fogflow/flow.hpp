#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "fogflow/trrg.hpp"

namespace fogflow {

// Base-station legs of one task: fog vehicle to BS and BS to requester.
struct TaskBs {
  double gain_up = 0.0;    // quantile gain, linear
  double gain_down = 0.0;  // quantile gain, linear
};

struct FlowParams {
  double eta = 0.1;
  double bandwidth_hz = 10e6;
  double noise_w = 0.0;
  double w_p = 0.1;
  double p_max_bs_w = 1.0;  // cap of either leg
};

enum class RowClass { kNonnegativity, kArcCapacity, kCompute, kBsRate };
std::string_view to_string(RowClass c);

// P8 restricted to the arcs that can carry each task: communication and
// carry arcs of frames k < T_s with positive capacity that lie on some
// alpha -> omega path. Variables are x[arc, task] in bits per frame; mu is
// the outflow of the task source vertex and d the inflow of a fog vertex,
// so neither needs its own variable.
struct FlowProgram {
  struct Var {
    int arc = 0;
    int task = 0;
  };

  const Trrg* trrg = nullptr;
  int frames = 0;
  int tasks = 0;
  FlowParams params;
  std::vector<double> capacities;  // per arc, bits per frame
  std::vector<TaskBs> bs;
  std::vector<Var> vars;
  // mu_terms[s][k-1]: variables summed into mu(alpha, v_s^k, s).
  std::vector<std::vector<std::vector<int>>> mu_terms;
  // Upper bound on theta_s implied by the BS power caps.
  std::vector<double> theta_max;
  // w_p * noise * (1 / G_up + 1 / G_down) per task.
  std::vector<double> power_coeff;

  // Inequalities G x <= h and balance A x = 0, in bits.
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  std::vector<RowClass> row_class;
  Eigen::MatrixXd A;
  // Strictly positive balanced flow (walk counts), used as the solver start.
  Eigen::VectorXd interior;

  int var_count() const { return static_cast<int>(vars.size()); }
};

// Throws std::invalid_argument if `capacities` does not cover every arc or
// holds NaN or negative values, or `bs` does not cover every task.
FlowProgram build_program(const Trrg& trrg, const std::vector<double>& capacities,
                          const std::vector<TaskBs>& bs, const FlowParams& params);

class FlowError : public std::runtime_error {
 public:
  enum class Kind { kInfeasible, kIterationLimit, kNumerical };
  FlowError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct FlowSolution {
  std::vector<double> x;                // per program variable, bits
  std::vector<std::vector<double>> mu;  // [task][k-1], bits
  std::vector<double> theta;            // bits
  std::vector<double> p_up;             // watts
  std::vector<double> p_down;           // watts
  double objective = 0.0;
  double throughput = 0.0;  // sum of mu, bits
  double bs_power = 0.0;    // sum of both legs over tasks, watts
  double kkt_residual = 0.0;
  int iterations = 0;
};

inline constexpr int kMaxIpmIterations = 200;

// Primal-dual interior-point solve. `tolerance` bounds the relative KKT
// residual of the returned point.
FlowSolution solve(const FlowProgram& program, double tolerance = 1e-6);

// Objective of P8 recomputed from flows in bits:
// (1/K) sum_s sum_k log(mu + e) - sum_s w_p (P_up + P_down).
double evaluate_objective(const FlowProgram& program, const std::vector<double>& x);

// Per-task mu vectors, BS powers and their sum for a flow vector.
void fill_derived(const FlowProgram& program, FlowSolution& solution);

// Largest |A x| over balance rows, bits.
double conservation_residual(const FlowProgram& program, const std::vector<double>& x);

enum class Approach { kRobust, kV2Only, kV5Only, kWithoutCarry, kNoRobust };
std::string_view to_string(Approach a);
// Accepts Robust, V2Only, V5Only, WithoutCarry, NoRobust (case-insensitive).
Approach parse_approach(std::string_view name);

// Carry-arc masking of the storage baselines. V2Only and V5Only keep only
// the carry arcs of vehicle "v2" or "v5"; WithoutCarry drops all of them.
// Robust and NoRobust are returned unchanged (NoRobust differs upstream in
// power and at evaluation time).
std::vector<double> baseline_mask(const Trrg& trrg, const std::vector<double>& capacities,
                                  Approach approach);

// frame,arc,task,flow_bits,capacity_bits rows (perception arcs carry mu),
// followed by a summary header and row.
void write_solution_csv(std::ostream& out, const FlowProgram& program,
                        const FlowSolution& solution, const std::vector<std::string>& task_ids);

}  // namespace fogflow

#pragma once

#include <iosfwd>
#include <vector>

#include "fogflow/robust.hpp"
#include "fogflow/subchannel.hpp"

namespace fogflow {

struct PowerCaps {
  double link_w = 1.0;  // P_max^v
  double av_w = 1.0;    // P_m^max
};

struct PairPower {
  double p_link = 0.0;
  double p_av = 0.0;
  double capacity_bps = 0.0;
  bool feasible = false;
  int iterations = 0;
};

inline constexpr int kMaxBisectionIterations = 64;

// W log2(1 + p_link g_link / (p_av g_interf + noise)).
double pair_capacity(double p_link, double p_av, double g_link, double g_interf,
                     double noise, double bandwidth);

// Smallest AV power meeting the robust constraint with the link silent,
// clamped to `cap`.
double min_av_power(const UncertaintySet& set, double noise, double cap);

// Bisection over the AV power. `g_link` is the mean gain of the V2V link,
// `g_interf` the mean gain from the AV transmitter to the link receiver and
// `set` the learned set over (g_av / gamma_th, g_cross).
PairPower solve_pair(double g_link, double g_interf, const UncertaintySet& set,
                     double noise, double bandwidth, PowerCaps caps, double zeta);

// One V2V link sharing one AV subchannel in one frame.
struct PairRecord {
  int frame = 0;
  int arc = 0;
  int av = 0;
  int tx_vehicle = 0;
  int rx_vehicle = 0;
  double g_link = 0.0;    // mean
  double g_interf = 0.0;  // mean
  UncertaintySet set;
  PairPower power;
};

enum class PowerMode { kRobust, kNominal };

// Learns every pair's set from `sample_count` frame-level draws and solves
// its powers. Nominal mode keeps the sample mean but drops the spread.
std::vector<PairRecord> plan_powers(const Scenario& scenario, const Trrg& trrg,
                                    const LinkSchedule& schedule,
                                    const SubchannelPlan& plan, PowerMode mode);

// Training draws of (g_av / gamma_th, g_cross) for one pair.
std::vector<Eigen::VectorXd> pair_training_samples(const Scenario& scenario, const Trrg& trrg,
                                                   int arc, int av, int count, Rng& rng);

// Stream of the training draws of one (frame, link, AV) pair; independent of
// arc numbering so sweeps share draws.
Rng pair_stream(const Scenario& scenario, const Trrg& trrg, std::string_view stage,
                int arc, int av);

// Bits per frame for every arc: scheduled and paired communication arcs get
// capacity * frame duration, other communication arcs 0, carry and computing
// arcs keep their structural capacity, perception arcs stay unbounded.
std::vector<double> arc_capacities(const Trrg& trrg, const std::vector<PairRecord>& pairs);

void write_powers_csv(std::ostream& out, const Trrg& trrg, const Scenario& scenario,
                      const std::vector<PairRecord>& pairs);

}  // namespace fogflow

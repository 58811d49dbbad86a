#include "fogflow/power.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace fogflow {

double pair_capacity(double p_link, double p_av, double g_link, double g_interf,
                     double noise, double bandwidth) {
  return bandwidth * std::log2(1.0 + p_link * g_link / (p_av * g_interf + noise));
}

double min_av_power(const UncertaintySet& set, double noise, double cap) {
  const double margin = set.center(0) - set.shape.row(0).norm();
  if (margin <= 0.0) return cap;
  double p = noise / margin;
  if (p >= cap) return cap;
  // Round-off can leave the margin a few ulps negative.
  while (!soc_feasible(p, 0.0, set, noise) && p < cap) p = std::nextafter(p, cap);
  return p;
}

PairPower solve_pair(double g_link, double g_interf, const UncertaintySet& set,
                     double noise, double bandwidth, PowerCaps caps, double zeta) {
  const double inf = std::numeric_limits<double>::infinity();
  const double width_guard = 1e-6 * std::max(1.0, caps.av_w);
  PairPower best;
  bool have = false;
  auto consider = [&](double p_av, double q) {
    const double p_link = std::min(q, caps.link_w);
    if (p_link <= 0.0 || !soc_feasible(p_av, p_link, set, noise)) return;
    const double c = pair_capacity(p_link, p_av, g_link, g_interf, noise, bandwidth);
    if (!have || c > best.capacity_bps) {
      best.p_link = p_link;
      best.p_av = p_av;
      best.capacity_bps = c;
      have = true;
    }
  };

  double p_min = 0.0;
  double p_max = caps.av_w;
  double p_m = 0.0;
  int it = 0;
  while (p_m < caps.av_w - zeta && it < kMaxBisectionIterations) {
    if (p_max - p_min <= width_guard) break;
    p_m = 0.5 * (p_min + p_max);
    ++it;
    // Uncapped, otherwise the first branch below could never trigger.
    const double q = max_link_power(p_m, set, noise, inf);
    consider(p_m, q);
    if (q > caps.link_w + zeta) {
      p_max = p_m;
    } else if (q < caps.link_w - zeta) {
      p_min = p_m;
    } else {
      break;
    }
  }
  // The +-zeta band costs up to ~1e-3 relative capacity. Keep bisecting the
  // final bracket to precision, then try the p_av = P_m end.
  for (int k = 0; k < 200 && p_max - p_min > 1e-15 * std::max(1.0, p_max); ++k) {
    const double mid = 0.5 * (p_min + p_max);
    (max_link_power(mid, set, noise, inf) >= caps.link_w ? p_max : p_min) = mid;
  }
  consider(p_max, max_link_power(p_max, set, noise, inf));
  consider(caps.av_w, max_link_power(caps.av_w, set, noise, inf));

  if (!have) {
    PairPower off;
    off.p_av = min_av_power(set, noise, caps.av_w);
    off.iterations = it;
    return off;
  }
  best.feasible = true;
  best.iterations = it;
  return best;
}

Rng pair_stream(const Scenario& scenario, const Trrg& trrg, std::string_view stage,
                int arc, int av) {
  const Arc& a = trrg.arcs().at(arc);
  return make_rng(scenario.seed,
                  {tag_of(stage), static_cast<std::uint64_t>(a.frame),
                   static_cast<std::uint64_t>(trrg.vertices()[a.tail].vehicle),
                   static_cast<std::uint64_t>(trrg.vertices()[a.head].vehicle),
                   static_cast<std::uint64_t>(av)});
}

std::vector<Eigen::VectorXd> pair_training_samples(const Scenario& scenario, const Trrg& trrg,
                                                   int arc, int av, int count, Rng& rng) {
  const Arc& a = trrg.arcs().at(arc);
  const double t = trrg.frame(a.frame).midpoint();
  const Point tx = position_at(scenario.vehicles[trrg.vertices()[a.tail].vehicle], t);
  const AvSpec& m = scenario.avs.at(av);
  const Point av_tx = av_tx_at(m, t);
  const Point av_rx = av_rx_at(m, t);
  const double gamma = scenario.gamma_th(m);
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd xi(2);
    xi(0) = sample_frame_gain(scenario.channel, av_tx, av_rx, rng) / gamma;
    xi(1) = sample_frame_gain(scenario.channel, tx, av_rx, rng);
    out.push_back(std::move(xi));
  }
  return out;
}

std::vector<PairRecord> plan_powers(const Scenario& scenario, const Trrg& trrg,
                                    const LinkSchedule& schedule,
                                    const SubchannelPlan& plan, PowerMode mode) {
  const auto& ch = scenario.channel;
  const double noise = ch.noise_power();
  std::vector<PairRecord> out;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    for (std::size_t idx = 0; idx < schedule[k].size(); ++idx) {
      const int av = plan.at(k).at(idx);
      if (av < 0) continue;
      PairRecord r;
      r.frame = static_cast<int>(k) + 1;
      r.arc = schedule[k][idx];
      r.av = av;
      const Arc& a = trrg.arcs()[r.arc];
      r.tx_vehicle = trrg.vertices()[a.tail].vehicle;
      r.rx_vehicle = trrg.vertices()[a.head].vehicle;

      Rng rng = pair_stream(scenario, trrg, "train", r.arc, av);
      const auto samples = pair_training_samples(scenario, trrg, r.arc, av, ch.sample_count, rng);
      r.set = learn_uncertainty_set(samples, ch.epsilon);
      if (mode == PowerMode::kNominal) r.set = nominal_set(r.set.center.head<2>());

      const double t = trrg.frame(r.frame).midpoint();
      const Point tx = position_at(scenario.vehicles[r.tx_vehicle], t);
      const Point rx = position_at(scenario.vehicles[r.rx_vehicle], t);
      const Point av_tx = av_tx_at(scenario.avs[av], t);
      std::vector<double> link(ch.sample_count), interf(ch.sample_count);
      for (int i = 0; i < ch.sample_count; ++i) {
        link[i] = sample_frame_gain(ch, tx, rx, rng);
        interf[i] = sample_frame_gain(ch, av_tx, rx, rng);
      }
      r.g_link = mean_gain(link);
      r.g_interf = mean_gain(interf);
      r.power = solve_pair(r.g_link, r.g_interf, r.set, noise, ch.bandwidth_hz,
                           {ch.p_max_v_w, ch.p_max_av_w}, ch.bisection_zeta);
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<double> arc_capacities(const Trrg& trrg, const std::vector<PairRecord>& pairs) {
  std::vector<double> caps(trrg.arcs().size(), 0.0);
  for (const auto& a : trrg.arcs()) {
    if (a.kind != ArcKind::kCommunication) caps[a.id] = a.capacity_bits;
  }
  for (const auto& r : pairs) {
    if (!r.power.feasible) continue;
    caps[r.arc] = r.power.capacity_bps * trrg.frame(r.frame).duration();
  }
  return caps;
}

void write_powers_csv(std::ostream& out, const Trrg& trrg, const Scenario& scenario,
                      const std::vector<PairRecord>& pairs) {
  out << "frame,arc,link,av,p_link_w,p_av_w,capacity_bps,feasible\n";
  char buf[256];
  for (const auto& r : pairs) {
    const Arc& a = trrg.arcs()[r.arc];
    std::snprintf(buf, sizeof buf, "%d,%d,%s->%s,%s,%.17g,%.17g,%.17g,%d\n", r.frame, r.arc,
                  trrg.label(a.tail).c_str(), trrg.label(a.head).c_str(),
                  scenario.avs[r.av].id.c_str(), r.power.p_link, r.power.p_av,
                  r.power.capacity_bps, r.power.feasible ? 1 : 0);
    out << buf;
  }
}

}  // namespace fogflow

#include "fogflow/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fogflow {

namespace {

// Boundaries closer than this are treated as one contact event.
constexpr double kBoundaryMergeS = 1e-3;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool link_capable(Role a, Role b) {
  return (can_transmit(a) && can_receive(b)) ||
         (can_transmit(b) && can_receive(a));
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kPerceptual:
      return "perceptual";
    case Role::kRelay:
      return "relay";
    case Role::kFog:
      return "fog";
  }
  return "?";
}

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

double ChannelParams::noise_power() const {
  return dbm_to_watts(noise_dbm_per_hz) * bandwidth_hz;
}

std::optional<std::size_t> Scenario::find_vehicle(std::string_view id) const {
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    if (vehicles[i].id == id) return i;
  }
  return std::nullopt;
}

const VehicleSpec& Scenario::vehicle(std::string_view id) const {
  auto index = find_vehicle(id);
  if (!index) throw std::out_of_range("unknown vehicle id '" + std::string(id) + "'");
  return vehicles[*index];
}

ConfigError::ConfigError(const std::string& message, int line,
                         std::string field)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " +
                                        message
                                  : message),
      line_(line),
      field_(std::move(field)) {}

Point position_at(const VehicleSpec& vehicle, double time_s) {
  if (!(time_s >= 0.0)) throw std::invalid_argument("time must be >= 0");
  return {vehicle.initial_position.x + vehicle.velocity_mps * time_s,
          vehicle.initial_position.y};
}

Point position_at(const Scenario& scenario, std::string_view vehicle_id,
                  double time_s) {
  return position_at(scenario.vehicle(vehicle_id), time_s);
}

Point av_tx_at(const AvSpec& av, double time_s) {
  return {av.tx.x + av.velocity_mps * time_s, av.tx.y};
}

Point av_rx_at(const AvSpec& av, double time_s) {
  return {av.rx.x + av.velocity_mps * time_s, av.rx.y};
}

std::vector<Frame> contact_frames(const Scenario& scenario, double comm_range,
                                  double horizon) {
  if (!(comm_range > 0.0)) throw std::invalid_argument("comm_range must be > 0");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");

  std::vector<double> crossings;
  const auto& vs = scenario.vehicles;
  for (std::size_t a = 0; a < vs.size(); ++a) {
    for (std::size_t b = a + 1; b < vs.size(); ++b) {
      if (!link_capable(vs[a].role, vs[b].role)) continue;
      const double dx0 = vs[b].initial_position.x - vs[a].initial_position.x;
      const double dy = vs[b].initial_position.y - vs[a].initial_position.y;
      const double dv = vs[b].velocity_mps - vs[a].velocity_mps;
      // |d(t)| = R  <=>  dx(t) = +-sqrt(R^2 - dy^2); a tangent touch is not
      // a crossing.
      if (dv == 0.0 || std::abs(dy) >= comm_range) continue;
      const double half = std::sqrt(comm_range * comm_range - dy * dy);
      for (double target : {half, -half}) {
        const double t = (target - dx0) / dv;
        if (t > 0.0 && t < horizon) crossings.push_back(t);
      }
    }
  }
  std::sort(crossings.begin(), crossings.end());

  std::vector<double> bounds{0.0};
  for (double t : crossings) {
    if (t - bounds.back() < kBoundaryMergeS) continue;
    if (horizon - t < kBoundaryMergeS) continue;
    bounds.push_back(t);
  }
  bounds.push_back(horizon);

  std::vector<Frame> frames;
  frames.reserve(bounds.size() - 1);
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
    frames.push_back({static_cast<int>(i) + 1, bounds[i], bounds[i + 1]});
  }
  return frames;
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) / 1000.0; }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts * 1000.0); }

double pathloss_db(const ChannelParams& channel, double distance_m) {
  if (!(distance_m > 0.0)) {
    throw std::invalid_argument("pathloss undefined at zero distance");
  }
  return channel.pathloss_intercept_db +
         channel.pathloss_slope_db * std::log10(distance_m / 1000.0);
}

double pathloss_gain(const ChannelParams& channel, Point tx, Point rx) {
  return db_to_linear(-pathloss_db(channel, distance(tx, rx)));
}

Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t state = splitmix64(seed);
  for (std::uint64_t tag : tags) state = splitmix64(state ^ splitmix64(tag));
  return Rng(state);
}

std::uint64_t tag_of(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

double sample_gain(const ChannelParams& channel, Point tx, Point rx, Rng& rng) {
  double gain_db = -pathloss_db(channel, distance(tx, rx));
  if (channel.deterministic) return db_to_linear(gain_db);
  if (channel.shadowing_stddev_db > 0.0) {
    std::normal_distribution<double> shadow(0.0, channel.shadowing_stddev_db);
    gain_db += shadow(rng);
  }
  double gain = db_to_linear(gain_db);
  if (channel.rayleigh_fading) {
    std::exponential_distribution<double> fading(1.0);
    gain *= fading(rng);
  }
  return gain;
}

double sample_frame_gain(const ChannelParams& channel, Point tx, Point rx,
                         Rng& rng) {
  double gain_db = -pathloss_db(channel, distance(tx, rx));
  if (channel.deterministic) return db_to_linear(gain_db);
  if (channel.frame_shadowing_stddev_db > 0.0) {
    std::normal_distribution<double> shadow(0.0,
                                            channel.frame_shadowing_stddev_db);
    gain_db += shadow(rng);
  }
  double gain = db_to_linear(gain_db);
  if (channel.rayleigh_fading) {
    // Mean of n unit exponentials.
    const double blocks = std::max(1, channel.frame_fading_blocks);
    std::gamma_distribution<double> fading(blocks, 1.0 / blocks);
    gain *= fading(rng);
  }
  return gain;
}

double mean_gain(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("mean_gain of empty sample");
  return std::accumulate(samples.begin(), samples.end(), 0.0) /
         static_cast<double>(samples.size());
}

}  // namespace fogflow

#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fogflow {

enum class Role { kPerceptual, kRelay, kFog };

std::string_view to_string(Role role);

// Vehicles that may transmit on a V2V link (perceptual or relay).
inline bool can_transmit(Role role) { return role != Role::kFog; }
// Vehicles that may receive on a V2V link (relay or fog).
inline bool can_receive(Role role) { return role != Role::kPerceptual; }

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(Point a, Point b);

struct VehicleSpec {
  std::string id;
  Role role = Role::kRelay;
  Point initial_position;
  double velocity_mps = 0.0;  // signed, along the x axis
  std::optional<double> cache_capacity_bits;    // relay only, bits per frame
  std::optional<double> compute_capacity_bits;  // fog only, bits per frame
};

// An audience vehicle: a transmitter/receiver pair whose subchannel may be
// reused by one V2V link.
struct AvSpec {
  std::string id;
  Point tx;
  Point rx;
  double velocity_mps = 0.0;
  std::optional<double> gamma_th;  // overrides ChannelParams::gamma_v_th
};

struct TaskSpec {
  std::string id;
  std::string source;   // perceptual vehicle id
  int delay_frames = 1; // T_s
};

struct ChannelParams {
  double bandwidth_hz = 10e6;
  double noise_dbm_per_hz = -174.0;
  double pathloss_intercept_db = 128.1;
  double pathloss_slope_db = 37.6;

  // Instantaneous channel (shadowing + Rayleigh), used by sample_gain.
  double shadowing_stddev_db = 4.0;
  bool rayleigh_fading = true;

  // Frame-level prediction uncertainty of V2V and AV gains: residual
  // log-normal error plus Rayleigh fading averaged over `frame_fading_blocks`
  // coherence blocks.
  double frame_shadowing_stddev_db = 0.5;
  int frame_fading_blocks = 100;

  // Disables every random term; all samplers return the pathloss gain.
  bool deterministic = false;

  double epsilon = 1e-3;
  int sample_count = 1000;
  double compression_eta = 0.1;
  double gamma_v_th = 10.0;
  double p_max_v_w = 1.0;
  double p_max_av_w = 1.0;
  double p_max_bs_w = 1.0;
  double w_p = 0.1;
  double bisection_zeta = 1e-3;

  // sigma^2 over one subchannel, watts.
  double noise_power() const;
};

struct Scenario {
  std::vector<VehicleSpec> vehicles;
  std::vector<AvSpec> avs;
  Point bs;
  ChannelParams channel;
  std::vector<TaskSpec> tasks;
  std::uint64_t seed = 0;
  double comm_range_m = 20.0;
  double horizon_s = 6.0;

  std::optional<std::size_t> find_vehicle(std::string_view id) const;
  // Throws std::out_of_range for unknown ids.
  const VehicleSpec& vehicle(std::string_view id) const;
  double gamma_th(const AvSpec& av) const {
    return av.gamma_th.value_or(channel.gamma_v_th);
  }
};

// Raised for malformed or semantically invalid scenario configs. `line` is 0
// when the problem is not tied to a single line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, int line, std::string field);

  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);
// Checks every semantic invariant; throws ConfigError naming the field.
void validate_scenario(const Scenario& scenario);

Point position_at(const VehicleSpec& vehicle, double time_s);
Point position_at(const Scenario& scenario, std::string_view vehicle_id,
                  double time_s);
Point av_tx_at(const AvSpec& av, double time_s);
Point av_rx_at(const AvSpec& av, double time_s);

struct Frame {
  int index = 1;  // 1-based, as K layers are numbered
  double start = 0.0;
  double end = 0.0;

  double duration() const { return end - start; }
  double midpoint() const { return 0.5 * (start + end); }
};

// Splits [0, horizon] at every instant where a link-capable vehicle pair
// enters or leaves communication range. Boundaries closer than 1 ms are
// merged.
std::vector<Frame> contact_frames(const Scenario& scenario, double comm_range,
                                  double horizon);

double db_to_linear(double db);
double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

double pathloss_db(const ChannelParams& channel, double distance_m);
// Linear gain of the pathloss alone.
double pathloss_gain(const ChannelParams& channel, Point tx, Point rx);

using Rng = std::mt19937_64;

// Seeds an engine from a base seed and a list of stream tags, so that every
// (stage, frame, link) combination gets an independent reproducible stream.
Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);
std::uint64_t tag_of(std::string_view text);

// One draw of the instantaneous channel: pathloss, log-normal shadowing and
// unit-mean Rayleigh power fading. Throws on zero distance.
double sample_gain(const ChannelParams& channel, Point tx, Point rx, Rng& rng);

// One draw of the frame-level channel used for uncertainty learning and
// outage evaluation.
double sample_frame_gain(const ChannelParams& channel, Point tx, Point rx,
                         Rng& rng);

double mean_gain(std::span<const double> samples);

}  // namespace fogflow

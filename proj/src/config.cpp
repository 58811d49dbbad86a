// Scenario config reader.
//
// The format is line oriented. `#` starts a comment, `[name]` opens a
// section. Sections `general`, `bs` and `channel` hold `key = value` pairs;
// sections `vehicles`, `avs` and `tasks` hold one whitespace-separated record
// per line, optionally followed by `key=value` attributes.

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fogflow/scenario.hpp"

namespace fogflow {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_double(std::string_view token, int line, const std::string& field) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw ConfigError("expected a number for '" + field + "', got '" +
                          std::string(token) + "'",
                      line, field);
  }
  return value;
}

std::int64_t parse_int(std::string_view token, int line, const std::string& field) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ConfigError("expected an integer for '" + field + "', got '" +
                          std::string(token) + "'",
                      line, field);
  }
  return value;
}

std::uint64_t parse_u64(std::string_view token, int line, const std::string& field) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ConfigError("expected an unsigned integer for '" + field + "', got '" +
                          std::string(token) + "'",
                      line, field);
  }
  return value;
}

bool parse_bool(std::string_view token, int line, const std::string& field) {
  if (token == "true" || token == "1" || token == "yes") return true;
  if (token == "false" || token == "0" || token == "no") return false;
  throw ConfigError("expected true/false for '" + field + "'", line, field);
}

Role parse_role(std::string_view token, int line) {
  if (token == "perceptual") return Role::kPerceptual;
  if (token == "relay") return Role::kRelay;
  if (token == "fog") return Role::kFog;
  throw ConfigError("unknown role '" + std::string(token) + "'", line, "role");
}

constexpr double kKmhToMps = 1.0 / 3.6;

// Splits trailing `key=value` attributes from positional fields.
struct Record {
  std::vector<std::string_view> positional;
  std::map<std::string, std::string_view> attributes;
};

Record split_record(std::string_view body, int line) {
  Record record;
  for (auto token : split_ws(body)) {
    auto eq = token.find('=');
    if (eq == std::string_view::npos) {
      if (!record.attributes.empty()) {
        throw ConfigError("positional field after attributes", line,
                          std::string(token));
      }
      record.positional.push_back(token);
    } else {
      record.attributes.emplace(std::string(token.substr(0, eq)),
                                token.substr(eq + 1));
    }
  }
  return record;
}

void require_fields(const Record& record, std::size_t count, int line,
                    const char* layout) {
  if (record.positional.size() != count) {
    throw ConfigError(std::string("expected fields: ") + layout, line, layout);
  }
}

void set_channel_key(ChannelParams& ch, const std::string& key,
                     std::string_view value, int line) {
  auto num = [&] { return parse_double(value, line, key); };
  if (key == "bandwidth_hz") ch.bandwidth_hz = num();
  else if (key == "noise_dbm_per_hz") ch.noise_dbm_per_hz = num();
  else if (key == "pathloss_intercept_db") ch.pathloss_intercept_db = num();
  else if (key == "pathloss_slope_db") ch.pathloss_slope_db = num();
  else if (key == "shadowing_stddev_db") ch.shadowing_stddev_db = num();
  else if (key == "rayleigh_fading") ch.rayleigh_fading = parse_bool(value, line, key);
  else if (key == "frame_shadowing_stddev_db") ch.frame_shadowing_stddev_db = num();
  else if (key == "frame_fading_blocks") ch.frame_fading_blocks = static_cast<int>(parse_int(value, line, key));
  else if (key == "deterministic") ch.deterministic = parse_bool(value, line, key);
  else if (key == "epsilon") ch.epsilon = num();
  else if (key == "sample_count") ch.sample_count = static_cast<int>(parse_int(value, line, key));
  else if (key == "compression_eta") ch.compression_eta = num();
  else if (key == "gamma_v_th") ch.gamma_v_th = num();
  else if (key == "p_max_v_dbm") ch.p_max_v_w = dbm_to_watts(num());
  else if (key == "p_max_av_dbm") ch.p_max_av_w = dbm_to_watts(num());
  else if (key == "p_max_bs_dbm") ch.p_max_bs_w = dbm_to_watts(num());
  else if (key == "p_max_v_w") ch.p_max_v_w = num();
  else if (key == "p_max_av_w") ch.p_max_av_w = num();
  else if (key == "p_max_bs_w") ch.p_max_bs_w = num();
  else if (key == "w_p") ch.w_p = num();
  else if (key == "bisection_zeta") ch.bisection_zeta = num();
  else throw ConfigError("unknown channel key '" + key + "'", line, key);
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  Scenario scenario;
  bool have_seed = false;
  bool have_bs = false;
  std::string section;
  int line_no = 0;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("unterminated section header", line_no, "section");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      static const std::set<std::string> known{"general", "bs", "channel",
                                               "vehicles", "avs", "tasks"};
      if (!known.contains(section)) {
        throw ConfigError("unknown section '" + section + "'", line_no, section);
      }
      continue;
    }
    if (section.empty()) throw ConfigError("content before the first section", line_no, "section");

    if (section == "general" || section == "bs" || section == "channel") {
      auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError("expected 'key = value'", line_no, section);
      }
      const std::string key(trim(line.substr(0, eq)));
      const std::string_view value = trim(line.substr(eq + 1));
      if (section == "general") {
        if (key == "seed") {
          scenario.seed = parse_u64(value, line_no, key);
          have_seed = true;
        } else if (key == "comm_range_m") {
          scenario.comm_range_m = parse_double(value, line_no, key);
        } else if (key == "horizon_s") {
          scenario.horizon_s = parse_double(value, line_no, key);
        } else {
          throw ConfigError("unknown general key '" + key + "'", line_no, key);
        }
      } else if (section == "bs") {
        if (key == "x") scenario.bs.x = parse_double(value, line_no, key);
        else if (key == "y") scenario.bs.y = parse_double(value, line_no, key);
        else throw ConfigError("unknown bs key '" + key + "'", line_no, key);
        have_bs = true;
      } else {
        set_channel_key(scenario.channel, key, value, line_no);
      }
      continue;
    }

    Record record = split_record(line, line_no);
    if (section == "vehicles") {
      require_fields(record, 5, line_no, "id role x y speed_kmh");
      VehicleSpec v;
      v.id = std::string(record.positional[0]);
      v.role = parse_role(record.positional[1], line_no);
      v.initial_position = {parse_double(record.positional[2], line_no, "x"),
                            parse_double(record.positional[3], line_no, "y")};
      v.velocity_mps = parse_double(record.positional[4], line_no, "speed_kmh") * kKmhToMps;
      for (const auto& [key, value] : record.attributes) {
        if (key == "cache_bits") v.cache_capacity_bits = parse_double(value, line_no, key);
        else if (key == "compute_bits") v.compute_capacity_bits = parse_double(value, line_no, key);
        else throw ConfigError("unknown vehicle attribute '" + key + "'", line_no, key);
      }
      scenario.vehicles.push_back(std::move(v));
    } else if (section == "avs") {
      require_fields(record, 5, line_no, "id tx_x tx_y rx_x rx_y");
      AvSpec av;
      av.id = std::string(record.positional[0]);
      av.tx = {parse_double(record.positional[1], line_no, "tx_x"),
               parse_double(record.positional[2], line_no, "tx_y")};
      av.rx = {parse_double(record.positional[3], line_no, "rx_x"),
               parse_double(record.positional[4], line_no, "rx_y")};
      for (const auto& [key, value] : record.attributes) {
        if (key == "gamma_th") av.gamma_th = parse_double(value, line_no, key);
        else if (key == "speed_kmh") av.velocity_mps = parse_double(value, line_no, key) * kKmhToMps;
        else throw ConfigError("unknown av attribute '" + key + "'", line_no, key);
      }
      scenario.avs.push_back(std::move(av));
    } else {
      require_fields(record, 3, line_no, "id source delay_frames");
      TaskSpec task;
      task.id = std::string(record.positional[0]);
      task.source = std::string(record.positional[1]);
      task.delay_frames = static_cast<int>(parse_int(record.positional[2], line_no, "delay_frames"));
      if (!record.attributes.empty()) {
        throw ConfigError("tasks take no attributes", line_no,
                          record.attributes.begin()->first);
      }
      scenario.tasks.push_back(std::move(task));
    }
  }

  if (!have_seed) throw ConfigError("missing mandatory RNG seed", 0, "seed");
  if (!have_bs) throw ConfigError("missing [bs] position", 0, "bs");
  validate_scenario(scenario);
  return scenario;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario '" + path.string() + "'", 0, "path");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

void validate_scenario(const Scenario& s) {
  auto fail = [](const std::string& field, const std::string& what) {
    throw ConfigError(field + ": " + what, 0, field);
  };
  if (s.vehicles.empty()) fail("vehicles", "no vehicles");

  std::set<std::string> ids;
  for (const auto& v : s.vehicles) {
    if (!ids.insert(v.id).second) fail("vehicles", "duplicate id '" + v.id + "'");
    if (!std::isfinite(v.velocity_mps)) fail("speed_kmh", "speed of '" + v.id + "' must be finite");
    const bool relay = v.role == Role::kRelay;
    const bool fog = v.role == Role::kFog;
    if (relay != v.cache_capacity_bits.has_value()) {
      fail("cache_bits", "cache capacity is required for relays and only for relays ('" + v.id + "')");
    }
    if (fog != v.compute_capacity_bits.has_value()) {
      fail("compute_bits", "compute capacity is required for fog vehicles and only for them ('" + v.id + "')");
    }
    if (v.cache_capacity_bits && *v.cache_capacity_bits < 0) fail("cache_bits", "negative cache capacity");
    if (v.compute_capacity_bits && *v.compute_capacity_bits < 0) fail("compute_bits", "negative compute capacity");
  }
  for (const auto& av : s.avs) {
    if (!ids.insert(av.id).second) fail("avs", "duplicate id '" + av.id + "'");
    if (distance(av.tx, av.rx) <= 0.0) fail("avs", "AV '" + av.id + "' has coincident tx and rx");
    if (av.gamma_th && !(*av.gamma_th > 0)) fail("gamma_th", "must be > 0");
  }
  std::set<std::string> task_ids;
  for (const auto& t : s.tasks) {
    if (!task_ids.insert(t.id).second) fail("tasks", "duplicate task id '" + t.id + "'");
    auto src = s.find_vehicle(t.source);
    if (!src) fail("source", "task '" + t.id + "' references unknown vehicle '" + t.source + "'");
    if (s.vehicles[*src].role != Role::kPerceptual) {
      fail("source", "task '" + t.id + "' source must be a perceptual vehicle");
    }
    if (t.delay_frames < 1) fail("delay_frames", "must be >= 1");
  }

  const auto& ch = s.channel;
  if (!(ch.bandwidth_hz > 0)) fail("bandwidth_hz", "must be > 0");
  if (!(ch.epsilon > 0 && ch.epsilon < 1)) fail("epsilon", "must lie in (0, 1)");
  if (ch.sample_count < 2) fail("sample_count", "must be >= 2");
  if (!(ch.compression_eta > 0 && ch.compression_eta <= 1)) fail("compression_eta", "must lie in (0, 1]");
  if (!(ch.gamma_v_th > 0)) fail("gamma_v_th", "must be > 0");
  if (!(ch.p_max_v_w > 0)) fail("p_max_v", "power must be > 0");
  if (!(ch.p_max_av_w > 0)) fail("p_max_av", "power must be > 0");
  if (!(ch.p_max_bs_w > 0)) fail("p_max_bs", "power must be > 0");
  if (!(ch.w_p >= 0)) fail("w_p", "must be >= 0");
  if (!(ch.bisection_zeta > 0 && ch.bisection_zeta < 1)) fail("bisection_zeta", "must lie in (0, 1)");
  if (ch.shadowing_stddev_db < 0) fail("shadowing_stddev_db", "must be >= 0");
  if (ch.frame_shadowing_stddev_db < 0) fail("frame_shadowing_stddev_db", "must be >= 0");
  if (ch.frame_fading_blocks < 1) fail("frame_fading_blocks", "must be >= 1");
  if (!(s.comm_range_m > 0)) fail("comm_range_m", "must be > 0");
  if (!(s.horizon_s > 0)) fail("horizon_s", "must be > 0");
}

}  // namespace fogflow

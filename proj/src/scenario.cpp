#include "pbr/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pbr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (trim(value.substr(pos)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw std::runtime_error("bad numeric value for " + key + ": '" + value +
                           "'");
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (trim(value.substr(pos)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw std::runtime_error("bad integer value for " + key + ": '" + value +
                           "'");
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw std::runtime_error("bad boolean value for " + key + ": '" + value +
                           "'");
}

VehicleSpec& vehicle_entry(ScenarioConfig& cfg, const std::string& name) {
  for (auto& v : cfg.vehicles) {
    if (v.name == name) return v;
  }
  cfg.vehicles.push_back(VehicleSpec{name, {}, {}});
  return cfg.vehicles.back();
}

std::vector<Waypoint> parse_waypoints(const std::string& key,
                                      const std::string& value) {
  std::vector<Waypoint> out;
  for (const auto& piece : split(value, ';')) {
    const auto s = trim(piece);
    if (s.empty()) continue;
    const auto fields = split(s, ':');
    if (fields.size() != 3) {
      throw std::runtime_error("waypoint must be t:x:y in " + key + ": '" +
                               s + "'");
    }
    out.push_back(Waypoint{parse_double(key, trim(fields[0])),
                           parse_double(key, trim(fields[1])),
                           parse_double(key, trim(fields[2]))});
  }
  if (out.empty()) {
    throw std::runtime_error("empty waypoint list for " + key);
  }
  return out;
}

}  // namespace

double ScenarioConfig::transmit_offset_s(std::size_t v) const {
  if (v == 0) return 0.0;
  if (v == 1 && vehicles.size() == 2) {
    if (remote_offset_s >= 0.0) return remote_offset_s;
    return 0.5 * period_s;
  }
  return period_s * static_cast<double>(v) /
         static_cast<double>(vehicles.size());
}

void ScenarioConfig::validate() const {
  if (!(period_s > 0.0) || !std::isfinite(period_s)) {
    throw std::invalid_argument("period_s must be positive");
  }
  if (!(duration_s >= 0.0) || !std::isfinite(duration_s)) {
    throw std::invalid_argument("duration_s must be >= 0");
  }
  if (!(jitter_s >= 0.0) || !std::isfinite(jitter_s)) {
    throw std::invalid_argument("jitter_s must be >= 0");
  }
  if (jitter_s >= period_s / 4.0) {
    throw std::invalid_argument("jitter_s must be below period_s/4");
  }
  if (!(max_speed_mps > 0.0)) {
    throw std::invalid_argument("max_speed must be positive");
  }
  if (!(p_drop >= 0.0 && p_drop < 1.0)) {
    throw std::invalid_argument("p_drop must be in [0, 1)");
  }
  if (!(noise.sigma_m >= 0.0) || !std::isfinite(noise.sigma_m)) {
    throw std::invalid_argument("sigma_m must be >= 0");
  }
  if (!(noise.p_nlos >= 0.0 && noise.p_nlos <= 1.0)) {
    throw std::invalid_argument("p_nlos must be in [0, 1]");
  }
  if (!(noise.nlos_mean_m >= 0.0) || !std::isfinite(noise.nlos_mean_m)) {
    throw std::invalid_argument("nlos_mean_m must be >= 0");
  }
  if (vehicles.size() < 2) {
    throw std::invalid_argument("scenario needs at least two vehicles");
  }
  if (remote_offset_s >= 0.0) {
    if (vehicles.size() != 2) {
      throw std::invalid_argument(
          "remote_offset_s applies to two-vehicle scenarios");
    }
    if (remote_offset_s >= period_s) {
      throw std::invalid_argument(
          "remote_offset_s must lie inside the period");
    }
  }
  std::set<std::string> names;
  for (const auto& v : vehicles) {
    if (!names.insert(v.name).second) {
      throw std::invalid_argument("duplicate vehicle name: " + v.name);
    }
    if (v.waypoints.empty()) {
      throw std::invalid_argument("vehicle " + v.name + " has no waypoints");
    }
    Trajectory check(v.waypoints, max_speed_mps);  // validates times/speeds
    Clock clock_check(v.clock);                    // validates drift bounds
  }
  std::vector<double> offsets;
  for (std::size_t v = 0; v < vehicles.size(); ++v) {
    offsets.push_back(transmit_offset_s(v));
  }
  std::sort(offsets.begin(), offsets.end());
  double min_gap = period_s - offsets.back() + offsets.front();
  for (std::size_t i = 1; i < offsets.size(); ++i) {
    min_gap = std::min(min_gap, offsets[i] - offsets[i - 1]);
  }
  if (!(min_gap > 0.0) || 2.0 * jitter_s >= min_gap) {
    throw std::invalid_argument(
        "transmit jitter overlaps adjacent transmissions");
  }
}

ScenarioConfig parse_scenario(std::istream& in) {
  ScenarioConfig cfg;
  std::set<std::string> seen;
  std::string line;
  bool remote_offset_set = false;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("expected 'key = value', got: '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error("missing key in line: '" + line + "'");
    }
    if (!seen.insert(key).second) {
      throw std::invalid_argument("duplicate key: " + key);
    }

    if (key == "period_s") {
      cfg.period_s = parse_double(key, value);
    } else if (key == "jitter_s") {
      cfg.jitter_s = parse_double(key, value);
    } else if (key == "duration_s") {
      cfg.duration_s = parse_double(key, value);
    } else if (key == "max_speed") {
      cfg.max_speed_mps = parse_double(key, value);
    } else if (key == "half_period_offset") {
      cfg.half_period_offset = parse_bool(key, value);
    } else if (key == "remote_offset_s") {
      cfg.remote_offset_s = parse_double(key, value);
      remote_offset_set = true;
    } else if (key == "p_drop") {
      cfg.p_drop = parse_double(key, value);
    } else if (key == "seed") {
      cfg.seed = parse_u64(key, value);
    } else if (key == "sigma_m") {
      cfg.noise.sigma_m = parse_double(key, value);
    } else if (key == "p_nlos") {
      cfg.noise.p_nlos = parse_double(key, value);
    } else if (key == "nlos_mean_m") {
      cfg.noise.nlos_mean_m = parse_double(key, value);
    } else if (key.rfind("traj.", 0) == 0 || key.rfind("clock.", 0) == 0) {
      const auto parts = split(key, '.');
      if (parts.size() != 3 || parts[1].empty()) {
        throw std::invalid_argument("unknown key: " + key);
      }
      VehicleSpec& veh = vehicle_entry(cfg, parts[1]);
      if (parts[0] == "traj" && parts[2] == "waypoints") {
        veh.waypoints = parse_waypoints(key, value);
      } else if (parts[0] == "clock" && parts[2] == "theta_s") {
        veh.clock.theta_s = parse_double(key, value);
      } else if (parts[0] == "clock" && parts[2] == "delta") {
        veh.clock.delta = parse_double(key, value);
      } else if (parts[0] == "clock" && parts[2] == "drift_walk_std") {
        veh.clock.drift_walk_std = parse_double(key, value);
      } else {
        throw std::invalid_argument("unknown key: " + key);
      }
    } else {
      throw std::invalid_argument("unknown key: " + key);
    }
  }
  if (!cfg.half_period_offset && !remote_offset_set &&
      cfg.vehicles.size() == 2) {
    throw std::invalid_argument(
        "half_period_offset = false requires remote_offset_s");
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open scenario file: " + path);
  }
  return parse_scenario(in);
}

}  // namespace pbr

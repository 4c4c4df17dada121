#include "keysim/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"

namespace keysim {

namespace {

using nlohmann::ordered_json;

std::string join(const std::vector<std::string>& lines) {
  std::string out = "invalid configuration:";
  for (const auto& l : lines) out += "\n  " + l;
  return out;
}

struct Reader {
  const ordered_json& doc;
  std::vector<std::string>& problems;

  const ordered_json* find(const std::string& key) const {
    auto it = doc.find(key);
    return it == doc.end() ? nullptr : &*it;
  }

  template <typename T>
  void count(const std::string& key, T& out) const {
    const auto* v = find(key);
    if (!v) return;
    if (v->is_number_unsigned()) {
      const auto raw = v->get<std::uint64_t>();
      if (raw > std::numeric_limits<T>::max()) {
        problems.push_back(key + ": value out of range");
        return;
      }
      out = static_cast<T>(raw);
      return;
    }
    if (v->is_number_float()) {
      const double d = v->get<double>();
      if (d >= 0 && std::floor(d) == d && d <= static_cast<double>(std::numeric_limits<T>::max())) {
        out = static_cast<T>(d);
        return;
      }
    }
    problems.push_back(key + ": expected a non-negative integer");
  }

  void real(const std::string& key, double& out) const {
    const auto* v = find(key);
    if (!v) return;
    if (!v->is_number()) {
      problems.push_back(key + ": expected a number");
      return;
    }
    out = v->get<double>();
  }

  void boolean(const std::string& key, bool& out) const {
    const auto* v = find(key);
    if (!v) return;
    if (!v->is_boolean()) {
      problems.push_back(key + ": expected true or false");
      return;
    }
    out = v->get<bool>();
  }

  void text(const std::string& key, std::string& out) const {
    const auto* v = find(key);
    if (!v) return;
    if (!v->is_string()) {
      problems.push_back(key + ": expected a string");
      return;
    }
    out = v->get<std::string>();
  }

  template <typename E>
  void choice(const std::string& key, E& out, std::optional<E> (*parse)(const std::string&)) const {
    std::string raw;
    const auto before = problems.size();
    text(key, raw);
    if (raw.empty() || problems.size() != before) return;
    if (auto parsed = parse(raw)) {
      out = *parsed;
    } else {
      problems.push_back(key + ": unknown value '" + raw + "'");
    }
  }
};

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : InvalidConfig(join(problems)), problems_(std::move(problems)) {}

std::vector<std::string> config_keys() {
  return {"n",          "field_width",          "field_height",   "d_r",
          "d",          "M",                    "m",              "c",
          "delete_low_priority", "use_floors",  "simpson_intervals", "seed",
          "trials",     "key_length",           "puzzle_length",  "hash",
          "cipher",     "mobility_model",       "teleport_probability", "speed_min",
          "speed_max",  "pause",                "steps",          "step_duration",
          "N_c",        "capture_timing",       "capture_selection"};
}

LoadedConfig parse_config(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({std::string("syntax: ") + e.what()});
  }
  if (!doc.is_object()) throw ConfigError({"document: expected a JSON object"});

  std::vector<std::string> problems;
  const auto keys = config_keys();
  for (const auto& [key, value] : doc.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) problems.push_back(key + ": unknown key");
  }

  LoadedConfig out;
  auto& c = out.config;
  const Reader r{doc, problems};
  r.count("n", c.n);
  r.real("field_width", c.field.width);
  r.real("field_height", c.field.height);
  r.real("d_r", c.d_r);
  r.real("d", c.d);
  r.count("M", c.pool_size);
  r.count("m", c.ring_size);
  r.count("c", c.high_priority);
  r.boolean("delete_low_priority", c.delete_low_priority);
  r.boolean("use_floors", c.use_floors);
  r.count("simpson_intervals", c.simpson_intervals);
  r.count("seed", c.seed);
  out.seed_given = doc.contains("seed");
  r.count("trials", c.trials);
  r.count("key_length", c.key_length);
  r.count("puzzle_length", c.puzzle_length);
  r.text("hash", c.hash);
  r.text("cipher", c.cipher);
  r.choice("mobility_model", c.mobility.model, &parse_mobility_model);
  r.real("teleport_probability", c.mobility.teleport_probability);
  r.real("speed_min", c.mobility.speed_min);
  r.real("speed_max", c.mobility.speed_max);
  r.real("pause", c.mobility.pause);
  r.count("steps", c.mobility.steps);
  r.real("step_duration", c.mobility.step_duration);
  r.count("N_c", c.adversary.captured);
  r.choice("capture_timing", c.adversary.timing, &parse_capture_timing);
  r.choice("capture_selection", c.adversary.selection, &parse_capture_selection);

  if (!problems.empty()) throw ConfigError(std::move(problems));
  return out;
}

LoadedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"config: cannot open '" + path + "'"});
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const SimConfig& c) {
  ordered_json j;
  j["n"] = c.n;
  j["field_width"] = c.field.width;
  j["field_height"] = c.field.height;
  j["d_r"] = c.d_r;
  j["d"] = c.d;
  j["M"] = c.pool_size;
  j["m"] = c.ring_size;
  j["c"] = c.high_priority;
  j["delete_low_priority"] = c.delete_low_priority;
  j["use_floors"] = c.use_floors;
  j["simpson_intervals"] = c.simpson_intervals;
  j["seed"] = c.seed;
  j["trials"] = c.trials;
  j["key_length"] = c.key_length;
  j["puzzle_length"] = c.puzzle_length;
  j["hash"] = c.hash;
  j["cipher"] = c.cipher;
  j["mobility_model"] = to_string(c.mobility.model);
  j["teleport_probability"] = c.mobility.teleport_probability;
  j["speed_min"] = c.mobility.speed_min;
  j["speed_max"] = c.mobility.speed_max;
  j["pause"] = c.mobility.pause;
  j["steps"] = c.mobility.steps;
  j["step_duration"] = c.mobility.step_duration;
  j["N_c"] = c.adversary.captured;
  j["capture_timing"] = to_string(c.adversary.timing);
  j["capture_selection"] = to_string(c.adversary.selection);
  return j.dump(2) + "\n";
}

}  // namespace keysim

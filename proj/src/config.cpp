#include "spsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "spsim/digest.hpp"
#include "spsim/rng.hpp"

namespace spsim::cli {

namespace {

// Substream tags for seeds derived from run.seed.
constexpr std::uint64_t kObserverStream = 1;
constexpr std::uint64_t kLatencyStream = 2;

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

struct Entry {
  std::string value;
  std::size_t line = 0;
  bool used = false;
};

// "section.key" -> entry. Full-line comments start with '#' or ';'.
std::map<std::string, Entry> tokenize(const std::string& text) {
  std::map<std::string, Entry> entries;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#' || stripped[0] == ';') continue;
    if (stripped.front() == '[') {
      if (stripped.back() != ']')
        throw ConfigError("config: malformed section header (line " +
                          std::to_string(line_no) + ")");
      section = trim(stripped.substr(1, stripped.size() - 2));
      if (section.empty())
        throw ConfigError("config: empty section name (line " +
                          std::to_string(line_no) + ")");
      continue;
    }
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected 'key = value' (line " +
                        std::to_string(line_no) + ")");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config: empty key (line " + std::to_string(line_no) +
                        ")");
    if (section.empty())
      throw ConfigError("config: key '" + key +
                        "' outside any section (line " +
                        std::to_string(line_no) + ")");
    const std::string full = section + "." + key;
    if (entries.count(full))
      throw ConfigError("config: duplicate key '" + full + "' (line " +
                        std::to_string(line_no) + ")");
    entries[full] = Entry{value, line_no, false};
  }
  return entries;
}

class Fields {
 public:
  explicit Fields(std::map<std::string, Entry> entries)
      : entries_(std::move(entries)) {}

  std::optional<std::string> get(const std::string& key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    it->second.used = true;
    return it->second.value;
  }

  std::string require(const std::string& key) {
    auto v = get(key);
    if (!v) throw ConfigError(key + ": required key is missing");
    return *v;
  }

  double get_double(const std::string& key, std::optional<double> fallback) {
    const auto v = fallback ? get(key) : std::optional<std::string>(require(key));
    if (!v) return *fallback;
    double value = 0.0;
    const char* begin = v->data();
    const char* end = begin + v->size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value))
      throw ConfigError(key + ": expected a finite number, got '" + *v + "'");
    return value;
  }

  std::int64_t get_int(const std::string& key,
                       std::optional<std::int64_t> fallback) {
    const auto v = fallback ? get(key) : std::optional<std::string>(require(key));
    if (!v) return *fallback;
    std::int64_t value = 0;
    const char* begin = v->data();
    const char* end = begin + v->size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end)
      throw ConfigError(key + ": expected an integer, got '" + *v + "'");
    return value;
  }

  std::uint64_t get_u64(const std::string& key,
                        std::optional<std::uint64_t> fallback) {
    const auto v = fallback ? get(key) : std::optional<std::string>(require(key));
    if (!v) return *fallback;
    std::uint64_t value = 0;
    const char* begin = v->data();
    const char* end = begin + v->size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end)
      throw ConfigError(key + ": expected an unsigned integer, got '" + *v +
                        "'");
    return value;
  }

  void reject_unknown() const {
    for (const auto& [key, entry] : entries_)
      if (!entry.used)
        throw ConfigError("config: unknown key '" + key + "' (line " +
                          std::to_string(entry.line) + ")");
  }

 private:
  std::map<std::string, Entry> entries_;
};

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

worldsim::ObserverKind observer_kind_from_string(const std::string& name) {
  if (name == "oracle") return worldsim::ObserverKind::Oracle;
  if (name == "noisy") return worldsim::ObserverKind::Noisy;
  throw ConfigError("observer.kind: expected 'oracle' or 'noisy', got '" +
                    name + "'");
}

std::string observer_kind_name(worldsim::ObserverKind kind) {
  return kind == worldsim::ObserverKind::Oracle ? "oracle" : "noisy";
}

}  // namespace

RunConfig RunConfig::parse_file(const std::filesystem::path& path,
                                const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_text(buffer.str(), path.parent_path(), overrides);
}

RunConfig RunConfig::parse_text(const std::string& text,
                                const std::filesystem::path& base_dir,
                                const Overrides& overrides) {
  Fields fields(tokenize(text));
  RunConfig config;

  config.seed = overrides.seed ? *overrides.seed
                               : fields.get_u64("run.seed", std::nullopt);
  if (overrides.seed) fields.get("run.seed");  // consume when overridden

  auto out = fields.get("run.out");
  if (overrides.out) out = *overrides.out;
  if (!out || out->empty())
    throw ConfigError("run.out: required (set in config or pass --out)");
  config.out_dir = std::filesystem::absolute(*out);

  config.policy = scheduler::policy_from_string(fields.require("run.policy"));
  if (const auto list = fields.get("run.policies")) {
    std::stringstream ss(*list);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const std::string name = trim(item);
      if (!name.empty())
        config.policies.push_back(scheduler::policy_from_string(name));
    }
  }

  config.eval_start_frame = fields.get_int("run.eval_start_frame", 0);
  if (config.eval_start_frame < 0)
    throw ConfigError("run.eval_start_frame: must be >= 0");

  const std::int64_t capacity = fields.get_int("queue.capacity", 5);
  if (capacity < 1) throw ConfigError("queue.capacity: must be >= 1");
  config.queue_capacity = static_cast<std::size_t>(capacity);

  // world: exactly one of a file reference or an inline JSON document
  const auto world_file = fields.get("world.file");
  const auto world_inline = fields.get("world.inline");
  if (static_cast<int>(world_file.has_value()) +
          static_cast<int>(world_inline.has_value()) !=
      1)
    throw ConfigError("world.file / world.inline: exactly one is required");
  try {
    if (world_file) {
      std::filesystem::path p = *world_file;
      if (p.is_relative()) p = base_dir / p;
      if (!std::filesystem::exists(p))
        throw ConfigError("world.file: " + p.string() + " does not exist");
      config.world = worldsim::load_world(p);
    } else {
      config.world = worldsim::world_from_json(nlohmann::json::parse(*world_inline));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("world: ") + e.what());
  }

  const double fps = fields.get_double("clock.fps", config.world.fps);
  if (!(fps > 0.0)) throw ConfigError("clock.fps: must be > 0");
  if (std::abs(fps - config.world.fps) > 1e-9)
    throw ConfigError("clock.fps: must match the world fps (" +
                      format_double(config.world.fps) + ")");
  config.clock = core::FrameClock::from_fps(fps);

  config.observer.kind =
      observer_kind_from_string(fields.get("observer.kind").value_or("oracle"));
  config.observer.position_noise_std =
      fields.get_double("observer.position_noise_std", 0.0);
  config.observer.miss_prob = fields.get_double("observer.miss_prob", 0.0);
  config.observer.false_positive_rate =
      fields.get_double("observer.false_positive_rate", 0.0);
  config.observer.seed = fields.get_u64(
      "observer.seed", rng::mix(config.seed, kObserverStream));
  if (config.observer.position_noise_std < 0.0)
    throw ConfigError("observer.position_noise_std: must be >= 0");
  if (config.observer.miss_prob < 0.0 || config.observer.miss_prob > 1.0)
    throw ConfigError("observer.miss_prob: must lie in [0, 1]");
  if (config.observer.false_positive_rate < 0.0)
    throw ConfigError("observer.false_positive_rate: must be >= 0");

  const std::string latency_kind = fields.require("latency.kind");
  const double fraction = fields.get_double("latency.preprocess_fraction", 0.25);
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ConfigError("latency.preprocess_fraction: must lie in (0, 1)");
  const std::uint64_t latency_seed =
      fields.get_u64("latency.seed", rng::mix(config.seed, kLatencyStream));
  try {
    if (latency_kind == "constant") {
      config.model = latency::LatencyModel::constant(
          fields.get_double("latency.mean_ms", std::nullopt), fraction,
          latency_seed);
    } else if (latency_kind == "shifted_lognormal") {
      config.model = latency::fit_shifted_lognormal(
          fields.get_double("latency.mean_ms", std::nullopt),
          fields.get_double("latency.std_ms", std::nullopt),
          fields.get_double("latency.min_ms", std::nullopt), fraction,
          latency_seed);
    } else if (latency_kind == "trace_replay") {
      std::filesystem::path p = fields.require("latency.trace");
      if (p.is_relative()) p = base_dir / p;
      if (!std::filesystem::exists(p))
        throw ConfigError("latency.trace: " + p.string() + " does not exist");
      config.latency_trace_path = std::filesystem::absolute(p);
      config.model =
          latency::LatencyModel::trace_replay(latency::load_trace(p));
      config.model.preprocess_fraction = fraction;
      config.model.seed = latency_seed;
    } else {
      throw ConfigError(
          "latency.kind: expected constant, shifted_lognormal or "
          "trace_replay, got '" +
          latency_kind + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("latency: ") + e.what());
  }

  try {
    config.world.validate();
    config.observer.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  fields.reject_unknown();
  return config;
}

std::string RunConfig::canonical_text() const {
  std::ostringstream out;
  out << "[run]\n";
  out << "seed = " << seed << "\n";
  out << "out = " << out_dir.string() << "\n";
  out << "policy = " << scheduler::to_string(policy) << "\n";
  if (!policies.empty()) {
    out << "policies = ";
    for (std::size_t i = 0; i < policies.size(); ++i) {
      if (i) out << ",";
      out << scheduler::to_string(policies[i]);
    }
    out << "\n";
  }
  out << "eval_start_frame = " << eval_start_frame << "\n";
  out << "[clock]\n";
  out << "fps = " << format_double(clock.fps) << "\n";
  out << "[queue]\n";
  out << "capacity = " << queue_capacity << "\n";
  out << "[world]\n";
  out << "inline = " << worldsim::world_to_json(world).dump() << "\n";
  out << "[observer]\n";
  out << "kind = " << observer_kind_name(observer.kind) << "\n";
  out << "position_noise_std = " << format_double(observer.position_noise_std)
      << "\n";
  out << "miss_prob = " << format_double(observer.miss_prob) << "\n";
  out << "false_positive_rate = "
      << format_double(observer.false_positive_rate) << "\n";
  out << "seed = " << observer.seed << "\n";
  out << "[latency]\n";
  switch (model.kind) {
    case latency::ModelKind::Constant:
      out << "kind = constant\n";
      out << "mean_ms = " << format_double(model.mean_ms) << "\n";
      break;
    case latency::ModelKind::ShiftedLognormal:
      out << "kind = shifted_lognormal\n";
      out << "mean_ms = " << format_double(model.mean_ms) << "\n";
      out << "std_ms = " << format_double(model.std_ms) << "\n";
      out << "min_ms = " << format_double(model.min_ms) << "\n";
      break;
    case latency::ModelKind::TraceReplay:
      out << "kind = trace_replay\n";
      out << "trace = " << latency_trace_path.string() << "\n";
      break;
  }
  out << "preprocess_fraction = " << format_double(model.preprocess_fraction)
      << "\n";
  out << "seed = " << model.seed << "\n";
  return out.str();
}

std::string RunConfig::digest() const {
  return digest::fnv1a_hex(canonical_text());
}

}  // namespace spsim::cli

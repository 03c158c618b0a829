#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spsim/core.hpp"
#include "spsim/latency.hpp"
#include "spsim/scheduler.hpp"
#include "spsim/worldsim.hpp"

namespace spsim::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fully resolved run configuration. Parsed from a sectioned key = value
// file; every default and derived seed is materialized here so the
// canonical echo embedded in reports reproduces the run exactly.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  scheduler::PolicyKind policy = scheduler::PolicyKind::DelayAdaptive;
  std::vector<scheduler::PolicyKind> policies;  // optional list for compare
  std::int64_t eval_start_frame = 0;
  std::size_t queue_capacity = scheduler::kDefaultQueueCapacity;
  core::FrameClock clock;
  worldsim::WorldSpec world;
  worldsim::ObserverSpec observer;
  latency::LatencyModel model;
  std::filesystem::path latency_trace_path;  // trace_replay only

  struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
  };

  static RunConfig parse_file(const std::filesystem::path& path,
                              const Overrides& overrides = {});
  static RunConfig parse_text(const std::string& text,
                              const std::filesystem::path& base_dir,
                              const Overrides& overrides = {});

  // Deterministic serialization of the resolved configuration; parsing it
  // back yields an equivalent config.
  std::string canonical_text() const;
  std::string digest() const;
};

}  // namespace spsim::cli

#pragma once

#include "resilient_mfac/engine.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rmfac {

// Document model of a scenario file. Field names follow the JSON keys; every
// field has a default so a minimal file only needs the topology.

struct TopologyConfig {
  std::vector<std::vector<double>> adjacency;  // row i lists a_i1..a_in
  std::vector<double> pinning;                 // empty means no pinning
  bool operator==(const TopologyConfig&) const = default;
};

struct PlantsConfig {
  std::array<double, 5> w{2.0, 1.0, 2.0, 2.0, 1.0};
  std::vector<std::array<double, 5>> per_agent;  // overrides w when non-empty
  bool operator==(const PlantsConfig&) const = default;
};

struct InitialConfig {
  std::string mode = "uniform";  // "uniform" | "explicit"
  double low = 0.0;
  double high = 1.0;
  std::vector<double> levels;                // uniform: per-agent base added to both channels
  std::vector<std::vector<double>> values;   // explicit: one output vector per agent
  bool operator==(const InitialConfig&) const = default;
};

struct LeaderSegmentConfig {
  Step start = 0;
  std::vector<double> value;
  bool operator==(const LeaderSegmentConfig&) const = default;
};

struct LeaderConfig {
  std::vector<LeaderSegmentConfig> segments;
  bool attacked = false;
  bool operator==(const LeaderConfig&) const = default;
};

struct DosConfig {
  std::string mode = "none";  // "none" | "generate" | "explicit"
  DosBudget budget;
  DosGeneratorSettings generator;
  std::optional<std::uint64_t> seed;  // generator seed; derived from run.seed when absent
  // explicit: [agent][channel] -> list of [on, off)
  std::vector<std::vector<std::vector<DosInterval>>> intervals;
  bool operator==(const DosConfig&) const = default;
};

struct AttacksConfig {
  bool fdi_enabled = true;
  double fdi_amplitude = 0.5;
  std::array<double, 3> fdi_multipliers{5.0, 4.0, 2.0};
  std::optional<double> fdi_period;  // defaults to the horizon
  DosConfig dos;
  bool operator==(const AttacksConfig&) const = default;
};

struct ControllerConfig {
  std::string variant = "proposed";
  ControllerGains gains;
  std::vector<std::vector<double>> phi_init{{1.0, 0.1}, {0.1, 1.0}};
  bool operator==(const ControllerConfig&) const = default;
};

struct RunConfig {
  Step horizon = 1500;
  std::uint64_t seed = 7;
  std::string output_dir = "out";
  bool operator==(const RunConfig&) const = default;
};

struct ScenarioConfig {
  std::string name;
  TopologyConfig topology;
  PlantsConfig plants;
  InitialConfig initial;
  std::optional<LeaderConfig> leader;
  AttacksConfig attacks;
  double disturbance_amplitude = 0.1;
  ControllerConfig controller;
  RunConfig run;
  bool operator==(const ScenarioConfig&) const = default;
};

/// Parses a JSON document (// and /* */ comments allowed). Unknown keys,
/// wrong types and malformed JSON raise ParseError carrying the 1-based line
/// and the dotted field path.
ScenarioConfig parse_config(const std::string& text);

/// Canonical JSON text; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ScenarioConfig& config);

/// Builds a runnable scenario. Initial outputs and the generated DoS schedule
/// draw from independent streams derived from run.seed. Throws
/// ValidationError on contract violations (the Scenario is validated).
Scenario resolve_scenario(const ScenarioConfig& config);

struct LoadedConfig {
  std::filesystem::path path;
  ScenarioConfig config;
  Scenario scenario;
  std::vector<std::string> warnings;
};

/// Reads a file; "presets/scenario2" also finds "presets/scenario2.json".
std::filesystem::path resolve_config_path(const std::filesystem::path& path);

/// Read + parse + resolve + validate, collecting soft warnings. Optional
/// overrides are applied before resolution.
LoadedConfig load_config(const std::filesystem::path& path,
                         std::optional<std::uint64_t> seed_override = std::nullopt,
                         std::optional<ControllerVariant> variant_override = std::nullopt);

}  // namespace rmfac

#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "repoabm/config.hpp"
#include "repoabm/harness.hpp"
#include "repoabm/metrics.hpp"

namespace repoabm {

/// Invalid configuration document or override; the message names the key.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Failure reading or writing a file; the message carries the path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LoadedConfig {
    SimConfig config;
    SweepSpec sweep;
};

/// One `key=value` override. Dotted keys address nested objects
/// ("scenario.kind", "sweep.runs"); the bare keys kind, start and end refer
/// to the scenario. Comma-separated values become lists.
struct Override {
    std::string key;
    std::string value;
};

/// Splits "key=value". Throws ConfigError when there is no '=' or the key is empty.
Override parse_override(std::string_view text);

/// Resolves a JSON document on top of `base`: every key must be known, omitted
/// keys keep their base values, beta_new follows beta when omitted, and
/// overrides are applied afterwards in order (last write wins). The result is
/// validated.
LoadedConfig parse_config(std::string_view json_text, const LoadedConfig& base,
                          const std::vector<Override>& overrides = {});

/// Reads and resolves a configuration file. Throws IoError or ConfigError.
LoadedConfig load_config(const std::filesystem::path& path, const LoadedConfig& base,
                         const std::vector<Override>& overrides = {});

/// JSON document holding every field of the configuration; parse_config of it
/// reproduces the configuration exactly.
std::string config_to_json(const SimConfig& config, const SweepSpec* sweep = nullptr);

/// printf "%.12g".
std::string format_number(double x);

/// Writes metrics.csv, network.csv, degrees.csv, edges.csv and summary.json
/// into `dir` (created if missing).
void write_outputs(const RunResult& result, const std::filesystem::path& dir);

void write_network_csv(const std::vector<NetworkRow>& rows, const std::filesystem::path& path);

/// Reads an edge list "src,dst,first_step,last_step" with a header row.
std::vector<EdgeInterval> read_edges(const std::filesystem::path& path);

/// Network rows recomputed from an edge history covering steps 1..last_step.
std::vector<NetworkRow> analyze_edges(const std::vector<EdgeInterval>& edges,
                                      const NetworkTrackerConfig& tracker, Step last_step);

/// Bundle metadata needed to replay a stored run.
struct BundleInfo {
    SimConfig config;
    std::uint64_t seed = 0;
    Step steps_completed = 0;
};

BundleInfo read_bundle_info(const std::filesystem::path& dir);

/// Writes sweep.csv (one row per grid value and metric) and summary.json.
void write_sweep_outputs(const std::vector<SweepPointSummary>& points, const SweepSpec& sweep,
                         const SimConfig& base, const std::filesystem::path& dir);

}  // namespace repoabm

#ifndef BODE_IO_HPP
#define BODE_IO_HPP

#include <json.hpp>

#include <string>

#include "bode/engine.hpp"
#include "bode/problems.hpp"

namespace bode::io {

/// Fixed-order trace columns: iteration, x_1..x_d (raw), y_raw, qoi_mean,
/// qoi_sd, max_mean_ekld, acceptance_rate, elapsed_s. One row per iteration.
void write_trace_csv(const std::string& path, const RunRecord& record);

/// Termination reason, final belief, per-run stats and the echoed config.
/// The echoed config is itself a loadable config object.
void write_summary_json(const std::string& path, const Problem& problem,
                        const RunRecord& record);

struct LoadedConfig {
  Problem problem;
  EngineConfig engine;
};

/// Parse a config JSON object (see README for the schema). Unknown keys and
/// non-uniform input densities are rejected.
LoadedConfig parse_config(const nlohmann::json& j);
LoadedConfig load_config_file(const std::string& path);

/// Serialize (problem, engine config) back into a loadable config object.
nlohmann::json echo_config(const Problem& problem, const EngineConfig& config);

}  // namespace bode::io

#endif

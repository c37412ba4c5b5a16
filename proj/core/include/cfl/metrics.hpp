#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cfl/engine.hpp"

namespace cfl {

inline constexpr const char* kMetricsHeader =
    "round,policy,global_loss,global_accuracy,comp_energy_j,comm_energy_j,cum_energy_j,"
    "round_delay_s,cum_delay_s,bytes_tx,agg_server";

// Reals are exported with 9 significant digits (printf %.9g).
std::string format_real(double value);
// The double that format_real(value) parses back to.
double round_to_export(double value);

std::string metrics_csv(const RunReport& report);
std::string report_json(const RunReport& report);

// Writes <policy>_<seed>.csv and <policy>_<seed>.json into dir (created if
// needed); returns both paths.
std::vector<std::filesystem::path> write_metrics(const RunReport& report,
                                                 const std::filesystem::path& dir);

// One row per policy: final accuracy, cumulative cost, and per-target hits.
std::string summary_csv(std::span<const RunReport> reports);

}  // namespace cfl

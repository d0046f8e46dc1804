#pragma once

// The `rareda` command line and the JSON forms of its artifacts.
//
// Run directory written by `train` (and per cell by `sweep`):
//   config.json            effective training config (file values + flags)
//   run.json               dataset path, dataset content hash, method, seed
//   checkpoint.bin(.json)  selected checkpoint and its sidecar
//   epochs.csv             per-epoch losses and split metrics
//   selected_metrics.json  selected epoch and full metrics for every split
//   train.log              progress and diagnostics

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "rareda/dataio.hpp"
#include "rareda/metrics.hpp"
#include "rareda/trainer.hpp"

namespace rareda::cli {

/// Fields as in GenSpec. Derived fields (train_counts, gap) are recomputed
/// from the structural ones unless given explicitly; an optional "gap"
/// object {angle_rad, condition, offset_units, noise_ratio} sets the
/// parametric gap. Unknown keys are rejected.
GenSpec gen_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GenSpec& g);

nlohmann::json to_json(const SplitMetrics& m);
SplitMetrics split_metrics_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunMetrics& m);
RunMetrics run_metrics_from_json(const nlohmann::json& j);

/// epochs.csv content for a training history.
std::string epochs_csv(const std::vector<EpochRecord>& history);

/// Writes every file of a run directory except train.log.
void write_run_dir(const std::filesystem::path& dir, const TrainConfig& cfg,
                   const std::filesystem::path& data_path, std::uint64_t data_hash,
                   const TrainResult& result);

/// FNV-1a of the file's bytes.
std::uint64_t file_hash(const std::filesystem::path& path);

/// Entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rareda::cli

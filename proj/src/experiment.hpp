#pragma once

#include <cstdint>
#include <string>

#include "dataset.hpp"
#include "json.hpp"
#include "trainer.hpp"

namespace pinnse {

inline constexpr const char* kVersion = "0.1.0";

/// Training configuration from JSON. Keys: epochs, batch_size, folds,
/// regimes (list of keys), seed, learning_rate, hidden, period,
/// parallel_folds. Unknown keys and wrong types raise ConfigError. A missing
/// seed falls back to `default_seed` (the dataset's seed).
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, std::uint64_t default_seed);

/// Every key of the configuration. parallel_folds is omitted by default: it
/// changes how folds are scheduled, never what they compute.
nlohmann::ordered_json experiment_config_to_json(const ExperimentConfig& cfg, bool include_execution = false);

/// Scenario, seed, case, sizes, noise and a content fingerprint.
nlohmann::ordered_json dataset_info_json(const Dataset& ds);

/// FNV-1a over the bit patterns of every measured and true value.
std::uint64_t dataset_fingerprint(const Dataset& ds);

/// Master seed, fold split seed and per-fold init/shuffle seeds.
nlohmann::ordered_json seeds_json(const ExperimentConfig& cfg);

/// Runs compare_regimes and writes report.json, report.txt,
/// curves/<regime>_fold<k>.csv and checkpoints/<regime>_fold<k>.json under
/// out_dir (created if needed). Returns the report document. No timestamps
/// or absolute paths are recorded, so equal inputs give identical bytes.
nlohmann::ordered_json run_experiment(const GridModel& grid, const Dataset& ds, const ExperimentConfig& cfg,
                                      const std::string& out_dir);

}  // namespace pinnse

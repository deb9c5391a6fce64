#pragma once

#include <string>

#include "dataset.hpp"
#include "json.hpp"

namespace pinnse {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Header p_1..p_N, q_1..q_N, vmag_1..vmag_N, vang_1..vang_N, ire_1..ire_N,
/// iim_1..iim_N; one row per instance; angles in radians.
void write_dataset_csv(const Dataset& ds, const std::string& path);
Dataset read_dataset_csv(const std::string& path);

/// `ds.csv` -> `ds.json`; any other name gets `.json` appended.
std::string sidecar_path(const std::string& csv_path);

nlohmann::ordered_json stats_to_json(const PreprocessStats& stats);
PreprocessStats stats_from_json(const nlohmann::json& j);

nlohmann::ordered_json sidecar_json(const Dataset& ds);
void write_sidecar(const Dataset& ds, const std::string& path);

/// Reads the CSV and, when present, its sidecar (scenario, seed, noise).
Dataset read_dataset(const std::string& csv_path);

/// Writes CSV + sidecar; the sidecar carries statistics fitted on all rows.
void write_dataset(Dataset ds, const std::string& csv_path);

}  // namespace pinnse

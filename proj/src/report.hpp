#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "trainer.hpp"

namespace pinnse {

/// Text table with the columns: training method, cross-validation error,
/// normalized, fold standard deviation, normalized, average best epoch,
/// normalized. The PlainNN row is labelled "NN".
std::string report_table(const std::vector<RegimeReport>& reports, const std::string& title);

/// Same table rebuilt from a report.json document.
std::string report_table_from_json(const nlohmann::json& report);

/// Title used for a scenario's table.
std::string scenario_title(Scenario scenario);

/// Per-regime JSON rows (metrics plus per-fold best epoch/error).
nlohmann::ordered_json regimes_json(const std::vector<RegimeReport>& reports);

/// Per-fold training curve: epoch,train_loss,u_norm,f_norm,lambda1,lambda2,val_error
void write_curve_csv(const FoldReport& fold, const std::string& path);

/// Model checkpoint: shapes, flat parameter arrays in full precision, Adam
/// state, and the preprocessing statistics used during training.
nlohmann::ordered_json checkpoint_json(const FoldReport& fold, Regime regime);

struct Checkpoint {
  MLP model;
  AdamState adam;
  PreprocessStats stats;
};
Checkpoint checkpoint_from_json(const nlohmann::json& j);

}  // namespace pinnse

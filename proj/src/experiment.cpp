#include "experiment.hpp"

#include <bit>
#include <filesystem>
#include <fstream>
#include <set>

#include "error.hpp"
#include "report.hpp"

namespace pinnse {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

template <typename T>
T get_field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::string artifact_name(Regime regime, int fold) {
  return std::string(regime_key(regime)) + "_fold" + std::to_string(fold);
}

}  // namespace

ExperimentConfig experiment_config_from_json(const json& j, std::uint64_t default_seed) {
  if (!j.is_object()) throw ConfigError("training config must be a JSON object");
  static const std::set<std::string> known{"epochs", "batch_size",    "folds",         "regimes", "seed",
                                           "learning_rate", "hidden", "period", "parallel_folds"};
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) throw ConfigError("unknown config key '" + item.key() + "'");
  }
  ExperimentConfig cfg;
  cfg.seed = default_seed;
  if (j.contains("epochs")) cfg.epochs = get_field<int>(j, "epochs");
  if (j.contains("batch_size")) cfg.batch_size = get_field<int>(j, "batch_size");
  if (j.contains("folds")) cfg.folds = get_field<int>(j, "folds");
  if (j.contains("seed")) cfg.seed = get_field<std::uint64_t>(j, "seed");
  if (j.contains("learning_rate")) cfg.learning_rate = get_field<double>(j, "learning_rate");
  if (j.contains("hidden")) cfg.hidden = get_field<int>(j, "hidden");
  if (j.contains("period")) cfg.period = get_field<int>(j, "period");
  if (j.contains("parallel_folds")) cfg.parallel_folds = get_field<int>(j, "parallel_folds");
  if (j.contains("regimes")) {
    const auto keys = get_field<std::vector<std::string>>(j, "regimes");
    cfg.regimes.clear();
    for (const std::string& k : keys) {
      const Regime r = parse_regime(k);
      if (std::find(cfg.regimes.begin(), cfg.regimes.end(), r) != cfg.regimes.end()) {
        throw ConfigError("regime '" + k + "' listed twice");
      }
      cfg.regimes.push_back(r);
    }
  }
  if (std::find(cfg.regimes.begin(), cfg.regimes.end(), Regime::PlainNN) == cfg.regimes.end()) {
    throw ConfigError("the nn regime is required as the normalization baseline");
  }
  cfg.validate();
  return cfg;
}

ordered_json experiment_config_to_json(const ExperimentConfig& cfg, bool include_execution) {
  ordered_json j;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["folds"] = cfg.folds;
  ordered_json regimes = ordered_json::array();
  for (Regime r : cfg.regimes) regimes.push_back(std::string(regime_key(r)));
  j["regimes"] = regimes;
  j["seed"] = cfg.seed;
  j["learning_rate"] = cfg.learning_rate;
  j["hidden"] = cfg.hidden;
  j["period"] = cfg.period;
  if (include_execution) j["parallel_folds"] = cfg.parallel_folds;
  return j;
}

std::uint64_t dataset_fingerprint(const Dataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  };
  for (const Sample& s : ds.samples) {
    for (const Eigen::VectorXd* v : {&s.p_meas, &s.q_meas, &s.v_true.v_mag, &s.v_true.v_ang}) {
      for (Eigen::Index k = 0; k < v->size(); ++k) mix((*v)(k));
    }
  }
  return h;
}

ordered_json dataset_info_json(const Dataset& ds) {
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(dataset_fingerprint(ds)));
  return {{"scenario", std::string(to_string(ds.scenario))},
          {"seed", ds.seed},
          {"case", ds.case_name},
          {"n_buses", ds.n_buses},
          {"n_samples", ds.size()},
          {"noise", {{"p_sigma_rel", ds.noise.p_sigma_rel}, {"q_sigma_rel", ds.noise.q_sigma_rel}, {"seed", ds.noise.seed}}},
          {"fingerprint", hex}};
}

ordered_json seeds_json(const ExperimentConfig& cfg) {
  ordered_json folds = ordered_json::array();
  for (int f = 0; f < cfg.folds; ++f) {
    folds.push_back({{"fold", f}, {"init", fold_init_seed(cfg.seed, f)}, {"shuffle", fold_shuffle_seed(cfg.seed, f)}});
  }
  return {{"master", cfg.seed}, {"fold_split", fold_split_seed(cfg.seed)}, {"folds", folds}};
}

ordered_json run_experiment(const GridModel& grid, const Dataset& ds, const ExperimentConfig& cfg,
                            const std::string& out_dir) {
  cfg.validate();
  if (ds.n_buses != grid.n()) {
    throw DimensionError("dataset has " + std::to_string(ds.n_buses) + " buses, grid has " +
                         std::to_string(grid.n()));
  }
  if (ds.size() < static_cast<std::size_t>(cfg.folds)) throw ConfigError("fewer samples than folds");

  const fs::path root(out_dir);
  std::error_code ec;
  fs::create_directories(root / "curves", ec);
  fs::create_directories(root / "checkpoints", ec);
  if (!fs::is_directory(root / "curves") || !fs::is_directory(root / "checkpoints")) {
    throw Error("cannot create output directory '" + out_dir + "'");
  }

  const std::vector<RegimeReport> reports = compare_regimes(cfg, grid.y_bus(), ds);

  ordered_json curves = ordered_json::array();
  ordered_json checkpoints = ordered_json::array();
  for (const RegimeReport& r : reports) {
    for (const FoldReport& f : r.folds) {
      const std::string name = artifact_name(r.regime, f.fold_index);
      write_curve_csv(f, (root / "curves" / (name + ".csv")).string());
      write_text(root / "checkpoints" / (name + ".json"), checkpoint_json(f, r.regime).dump(1) + "\n");
      curves.push_back("curves/" + name + ".csv");
      checkpoints.push_back("checkpoints/" + name + ".json");
    }
  }

  ordered_json report;
  report["format"] = "pinnse-report/1";
  report["version"] = kVersion;
  report["title"] = scenario_title(ds.scenario);
  report["config"] = experiment_config_to_json(cfg);
  report["dataset"] = dataset_info_json(ds);
  report["seeds"] = seeds_json(cfg);
  report["metrics"] = {
      {"validation_error", "100 x mean |prediction - target| over validation samples, scaled [-1, 1] target space, "
                           "data term only"},
      {"cv_error", "mean over folds of the best validation error"},
      {"fold_std", "population standard deviation (divide by k) of the per-fold best validation errors"},
      {"best_epoch", "0-based epoch of the first minimum of the validation error"},
      {"normalized", "100 x (value - NN value) / NN value"}};
  report["regimes"] = regimes_json(reports);
  report["files"] = {{"table", "report.txt"}, {"curves", curves}, {"checkpoints", checkpoints}};

  write_text(root / "report.json", report.dump(2) + "\n");
  write_text(root / "report.txt", report_table(reports, report["title"].get<std::string>()));
  return report;
}

}  // namespace pinnse

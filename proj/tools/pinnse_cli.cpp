// Command-line front end. Talks to the library only through its C interface.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pinnse/pinnse.h"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitTraining = 3;

struct Failure {
  int exit_code;
  std::string message;
};

[[noreturn]] void config_error(const std::string& message) { throw Failure{kExitConfig, message}; }

void check(pinnse_status status, const std::string& context) {
  if (status == PINNSE_OK) return;
  const int code = status == PINNSE_E_TRAINING ? kExitTraining : kExitConfig;
  throw Failure{code, context + ": " + pinnse_status_name(status) + ": " + pinnse_last_error()};
}

// RAII wrappers for library handles and strings.
struct Grid {
  pinnse_grid* p = nullptr;
  ~Grid() { pinnse_grid_free(p); }
};
struct DatasetHandle {
  pinnse_dataset* p = nullptr;
  ~DatasetHandle() { pinnse_dataset_free(p); }
};
struct Text {
  char* p = nullptr;
  ~Text() { pinnse_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

json read_json_file(const std::string& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot open " + what + " '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    config_error(what + " '" + path + "' is not valid JSON: " + e.what());
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) config_error("cannot write '" + path.string() + "'");
}

// Settings of one subcommand: a config file or manifest provides the base
// values, flags given on the command line override them.
class Settings {
 public:
  explicit Settings(std::set<std::string> keys) : keys_(std::move(keys)) {}

  void load(const json& j, const std::string& origin) {
    if (!j.is_object()) config_error(origin + " must be a JSON object");
    for (const auto& item : j.items()) {
      if (!keys_.count(item.key())) config_error(origin + ": unknown key '" + item.key() + "'");
      values_[item.key()] = item.value();
    }
  }

  template <typename T>
  void flag(const std::string& key, const std::optional<T>& value) {
    if (value) values_[key] = *value;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  template <typename T>
  T get(const std::string& key) const {
    try {
      return values_.at(key).get<T>();
    } catch (const json::exception&) {
      config_error("setting '" + key + "' has the wrong type");
    }
  }

  template <typename T>
  T get_or(const std::string& key, T fallback) const {
    return has(key) ? get<T>(key) : fallback;
  }

  std::string require(const std::string& key, const std::string& flag_name) const {
    if (!has(key)) config_error("missing required setting " + flag_name);
    return get<std::string>(key);
  }

  json subset(const std::set<std::string>& keys) const {
    json out = json::object();
    for (const auto& [k, v] : values_) {
      if (keys.count(k)) out[k] = v;
    }
    return out;
  }

 private:
  std::set<std::string> keys_;
  std::map<std::string, json> values_;
};

void load_base(Settings& settings, const std::string& config_path, const std::string& manifest_path,
               const std::string& command) {
  if (!config_path.empty() && !manifest_path.empty()) config_error("--config and --manifest are exclusive");
  if (!config_path.empty()) settings.load(read_json_file(config_path, "config file"), config_path);
  if (!manifest_path.empty()) {
    const json m = read_json_file(manifest_path, "manifest");
    if (!m.is_object() || m.value("format", "") != "pinnse-manifest/1") {
      config_error("'" + manifest_path + "' is not a pinnse manifest");
    }
    if (m.value("command", "") != command) {
      config_error("manifest '" + manifest_path + "' records a '" + m.value("command", "") + "' run, not '" +
                   command + "'");
    }
    settings.load(m.at("config"), manifest_path);
  }
}

void load_grid(Grid& grid, const std::string& case_name) {
  if (case_name == "case14") check(pinnse_grid_load_case14(&grid.p), "loading case14");
  else check(pinnse_grid_load_file(case_name.c_str(), &grid.p), "loading case '" + case_name + "'");
}

ordered_json manifest(const std::string& command, const ordered_json& config) {
  ordered_json m;
  m["format"] = "pinnse-manifest/1";
  m["version"] = pinnse_version();
  m["command"] = command;
  m["config"] = ordered_json::object();
  for (const auto& item : config.items()) m["config"][item.key()] = item.value();
  return m;
}

fs::path stem_sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  return p.parent_path() / (p.stem().string() + suffix);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ---- generate --------------------------------------------------------------

struct GenerateFlags {
  std::optional<std::string> scenario, out, case_name;
  std::optional<int> n, outage_bus;
  std::optional<std::uint64_t> seed;
  std::optional<double> load_band, load_jitter, p_noise, q_noise;
  std::string config, manifest;
};

int run_generate(const GenerateFlags& f) {
  Settings s({"scenario", "n", "seed", "out", "case", "load_band", "load_jitter", "outage_bus", "p_noise",
              "q_noise"});
  load_base(s, f.config, f.manifest, "generate");
  s.flag("scenario", f.scenario);
  s.flag("n", f.n);
  s.flag("seed", f.seed);
  s.flag("out", f.out);
  s.flag("case", f.case_name);
  s.flag("load_band", f.load_band);
  s.flag("load_jitter", f.load_jitter);
  s.flag("outage_bus", f.outage_bus);
  s.flag("p_noise", f.p_noise);
  s.flag("q_noise", f.q_noise);

  const std::string scenario_name = s.require("scenario", "--scenario");
  pinnse_scenario scenario;
  if (scenario_name == "steady") scenario = PINNSE_SCENARIO_STEADY;
  else if (scenario_name == "outage") scenario = PINNSE_SCENARIO_OUTAGE;
  else config_error("unknown scenario '" + scenario_name + "' (expected steady|outage)");

  pinnse_generate_options opt;
  pinnse_generate_options_init(&opt, scenario);
  opt.n = s.get_or("n", opt.n);
  opt.seed = s.get_or<std::uint64_t>("seed", 0);
  opt.load_band = s.get_or("load_band", opt.load_band);
  opt.load_jitter = s.get_or("load_jitter", opt.load_jitter);
  opt.outage_bus = s.get_or("outage_bus", opt.outage_bus);
  opt.p_sigma_rel = s.get_or("p_noise", opt.p_sigma_rel);
  opt.q_sigma_rel = s.get_or("q_noise", opt.q_sigma_rel);
  const std::string out = s.get_or<std::string>("out", scenario_name + ".csv");
  const std::string case_name = s.get_or<std::string>("case", "case14");

  Grid grid;
  load_grid(grid, case_name);
  DatasetHandle ds;
  check(pinnse_dataset_generate(grid.p, &opt, &ds.p), "generating dataset");
  check(pinnse_dataset_write(ds.p, out.c_str()), "writing dataset");
  Text info;
  check(pinnse_dataset_info(ds.p, &info.p), "summarising dataset");

  // Record the resolved values, so replay does not depend on defaults.
  ordered_json resolved{{"scenario", scenario_name}, {"n", opt.n},
                        {"seed", opt.seed},          {"out", out},
                        {"case", case_name},         {"load_band", opt.load_band},
                        {"load_jitter", opt.load_jitter}, {"outage_bus", opt.outage_bus}};
  const ordered_json summary = ordered_json::parse(info.str());
  resolved["p_noise"] = summary["noise"]["p_sigma_rel"];
  resolved["q_noise"] = summary["noise"]["q_sigma_rel"];
  ordered_json m = manifest("generate", resolved);
  m["dataset"] = summary;
  m["outputs"] = {out, stem_sibling(out, ".json").string()};
  const fs::path manifest_path = stem_sibling(out, ".manifest.json");
  write_file(manifest_path, m.dump(2) + "\n");

  std::cout << "wrote " << summary["n_samples"].get<int>() << " instances (" << scenario_name << ", "
            << summary["n_buses"].get<int>() << " buses) to " << out << "\n"
            << "  power flow: max " << summary["generation"]["max_iterations"] << " iterations, max mismatch "
            << summary["generation"]["max_mismatch"] << ", " << summary["generation"]["retries"]
            << " redrawn instances\n"
            << "  noise: relative gaussian, P sigma " << summary["noise"]["p_sigma_rel"] << ", Q sigma "
            << summary["noise"]["q_sigma_rel"] << ", seed " << summary["noise"]["seed"] << "\n"
            << "  manifest: " << manifest_path.string() << "\n";
  return kExitOk;
}

// ---- train -------------------------------------------------------------------

const std::set<std::string> kTrainKeys{"epochs", "batch_size", "folds",  "regimes",       "seed",
                                       "learning_rate", "hidden", "period", "parallel_folds"};

struct TrainFlags {
  std::optional<std::string> dataset, out, case_name, regimes;
  std::optional<int> epochs, batch, folds, hidden, period, parallel_folds;
  std::optional<std::uint64_t> seed;
  std::optional<double> learning_rate;
  std::string config, manifest;
};

int run_train(const TrainFlags& f) {
  std::set<std::string> keys = kTrainKeys;
  keys.insert({"dataset", "out", "case"});
  Settings s(keys);
  load_base(s, f.config, f.manifest, "train");
  s.flag("dataset", f.dataset);
  s.flag("out", f.out);
  s.flag("case", f.case_name);
  s.flag("epochs", f.epochs);
  s.flag("batch_size", f.batch);
  s.flag("folds", f.folds);
  s.flag("hidden", f.hidden);
  s.flag("period", f.period);
  s.flag("parallel_folds", f.parallel_folds);
  s.flag("seed", f.seed);
  s.flag("learning_rate", f.learning_rate);
  if (f.regimes) s.flag("regimes", std::optional<std::vector<std::string>>(split_list(*f.regimes)));
  if (s.has("regimes") && s.get_or<json>("regimes", json()).is_string()) {
    s.flag("regimes", std::optional<std::vector<std::string>>(split_list(s.get<std::string>("regimes"))));
  }

  const std::string dataset_path = s.require("dataset", "--dataset");
  const std::string out = s.get_or<std::string>("out", "run");
  const std::string case_name = s.get_or<std::string>("case", "case14");

  DatasetHandle ds;
  check(pinnse_dataset_read(dataset_path.c_str(), &ds.p), "reading dataset");
  Grid grid;
  load_grid(grid, case_name);

  const std::string train_config = s.subset(kTrainKeys).dump();
  Text resolved_text;
  check(pinnse_train_config_resolve(ds.p, train_config.c_str(), &resolved_text.p), "training config");
  json resolved = json::parse(resolved_text.str());

  std::cerr << "training " << resolved["regimes"].size() << " regime(s) x " << resolved["folds"] << " folds x "
            << resolved["epochs"] << " epochs on " << dataset_path << "\n";
  Text report;
  check(pinnse_train(grid.p, ds.p, resolved.dump().c_str(), out.c_str(), &report.p), "training");
  Text table;
  check(pinnse_render_report(report.str().c_str(), &table.p), "rendering report");

  ordered_json config{{"dataset", dataset_path}, {"out", out}, {"case", case_name}};
  const ordered_json resolved_ordered = ordered_json::parse(resolved_text.str());
  for (const auto& item : resolved_ordered.items()) config[item.key()] = item.value();
  ordered_json m = manifest("train", config);
  const ordered_json r = ordered_json::parse(report.str());
  m["dataset"] = r["dataset"];
  m["seeds"] = r["seeds"];
  ordered_json outputs = ordered_json::array({"report.json", "report.txt"});
  for (const auto& c : r["files"]["curves"]) outputs.push_back(c.get<std::string>());
  for (const auto& c : r["files"]["checkpoints"]) outputs.push_back(c.get<std::string>());
  m["outputs"] = outputs;
  write_file(fs::path(out) / "manifest.json", m.dump(2) + "\n");

  std::cout << table.str() << "outputs in " << out << "/ (report.json, report.txt, curves/, checkpoints/, "
            << "manifest.json)\n";
  return kExitOk;
}

// ---- wls -------------------------------------------------------------------

struct WlsFlags {
  std::optional<std::string> dataset, out, case_name;
  std::optional<double> sigma_floor;
  std::string config, manifest;
};

int run_wls(const WlsFlags& f) {
  Settings s({"dataset", "out", "case", "sigma_floor"});
  load_base(s, f.config, f.manifest, "wls");
  s.flag("dataset", f.dataset);
  s.flag("out", f.out);
  s.flag("case", f.case_name);
  s.flag("sigma_floor", f.sigma_floor);

  const std::string dataset_path = s.require("dataset", "--dataset");
  const std::string out = s.get_or<std::string>("out", stem_sibling(dataset_path, ".wls.csv").string());
  const std::string case_name = s.get_or<std::string>("case", "case14");
  const double sigma_floor = s.get_or("sigma_floor", 1e-4);

  DatasetHandle ds;
  check(pinnse_dataset_read(dataset_path.c_str(), &ds.p), "reading dataset");
  Grid grid;
  load_grid(grid, case_name);
  pinnse_wls_summary summary{};
  check(pinnse_wls_batch(grid.p, ds.p, sigma_floor, out.c_str(), &summary), "WLS estimation");

  ordered_json m = manifest("wls", ordered_json{{"dataset", dataset_path}, {"out", out}, {"case", case_name},
                                        {"sigma_floor", sigma_floor}});
  m["summary"] = {{"samples", summary.samples},
                  {"max_iterations", summary.max_iterations},
                  {"mean_mag_error", summary.mean_mag_error},
                  {"max_mag_error", summary.max_mag_error},
                  {"mean_ang_error", summary.mean_ang_error},
                  {"max_ang_error", summary.max_ang_error}};
  m["outputs"] = {out};
  const fs::path manifest_path = stem_sibling(out, ".manifest.json");
  write_file(manifest_path, m.dump(2) + "\n");

  char line[160];
  std::cout << "WLS estimates for " << summary.samples << " instances written to " << out << "\n";
  std::snprintf(line, sizeof(line), "  %-18s %12s %12s\n", "quantity", "mean", "max");
  std::cout << line;
  std::snprintf(line, sizeof(line), "  %-18s %12.4e %12.4e\n", "|V| error (pu)", summary.mean_mag_error,
                summary.max_mag_error);
  std::cout << line;
  std::snprintf(line, sizeof(line), "  %-18s %12.4e %12.4e\n", "angle error (rad)", summary.mean_ang_error,
                summary.max_ang_error);
  std::cout << line;
  std::cout << "  max Gauss-Newton iterations: " << summary.max_iterations << "\n"
            << "  manifest: " << manifest_path.string() << "\n";
  return kExitOk;
}

// ---- report ------------------------------------------------------------------

int run_report(const std::string& report_path, const std::string& out) {
  std::ifstream in(report_path, std::ios::binary);
  if (!in) config_error("cannot open report '" + report_path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  Text table;
  check(pinnse_render_report(ss.str().c_str(), &table.p), "rendering report");
  if (out.empty()) std::cout << table.str();
  else write_file(out, table.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  Text defaults_text;
  if (pinnse_train_config_defaults(&defaults_text.p) != PINNSE_OK) {
    std::cerr << "error: " << pinnse_last_error() << "\n";
    return kExitConfig;
  }
  const json defaults = json::parse(defaults_text.str());
  auto dflt = [&](const char* key) { return defaults.at(key).dump(); };
  std::string default_regimes;
  for (const auto& r : defaults.at("regimes")) {
    default_regimes += (default_regimes.empty() ? "" : ",") + r.get<std::string>();
  }

  CLI::App app{"Physics-informed neural network state estimation for IEEE test grids"};
  app.set_version_flag("--version", std::string(pinnse_version()));
  app.require_subcommand(1);

  GenerateFlags gen;
  auto* g = app.add_subcommand("generate", "Generate a dataset CSV with a JSON sidecar and manifest");
  g->add_option("--scenario", gen.scenario, "steady | outage")->check(CLI::IsMember({"steady", "outage"}));
  g->add_option("--n", gen.n, "Number of time instances")->default_str("192 (steady), 2000 (outage)");
  g->add_option("--seed", gen.seed, "Master seed for load, jitter and noise substreams")->default_str("0");
  g->add_option("--out", gen.out, "Output CSV path")->default_str("<scenario>.csv");
  g->add_option("--case", gen.case_name, "case14 or a path to a .case file")->default_str("case14");
  g->add_option("--load-band", gen.load_band, "Steady: loads scaled by U[1-b, 1+b]")->default_str("0.2");
  g->add_option("--load-jitter", gen.load_jitter, "Outage: relative load jitter")->default_str("0.01");
  g->add_option("--outage-bus", gen.outage_bus, "Outage: bus whose generator trips")->default_str("2");
  g->add_option("--p-noise", gen.p_noise, "Relative noise on P")->default_str("0.01 (steady), 0.001 (outage)");
  g->add_option("--q-noise", gen.q_noise, "Relative noise on Q")->default_str("0.01 (steady), 0.001 (outage)");
  g->add_option("--config", gen.config, "JSON file with any of the settings above (flags override)");
  g->add_option("--manifest", gen.manifest, "Replay the run recorded in a manifest");

  TrainFlags tr;
  auto* t = app.add_subcommand("train", "Cross-validate the configured training regimes and write reports");
  t->add_option("--dataset", tr.dataset, "Dataset CSV (sidecar JSON read when present)");
  t->add_option("--out", tr.out, "Output directory")->default_str("run");
  t->add_option("--case", tr.case_name, "case14 or a path to a .case file")->default_str("case14");
  t->add_option("--epochs", tr.epochs, "Training epochs per fold")->default_str(dflt("epochs"));
  t->add_option("--batch", tr.batch, "Mini-batch size")->default_str(dflt("batch_size"));
  t->add_option("--folds", tr.folds, "Cross-validation folds")->default_str(dflt("folds"));
  t->add_option("--regimes", tr.regimes, "Comma list of nn, inc10, inc20, inc25, inc33, inc50")
      ->default_str(default_regimes);
  t->add_option("--seed", tr.seed, "Master seed for folds, initialisation and shuffling")
      ->default_str("dataset seed");
  t->add_option("--lr", tr.learning_rate, "Adam learning rate")->default_str(dflt("learning_rate"));
  t->add_option("--hidden", tr.hidden, "Hidden units (one tanh layer)")->default_str(dflt("hidden"));
  t->add_option("--period", tr.period, "Epochs between lambda steps")->default_str(dflt("period"));
  t->add_option("--parallel-folds", tr.parallel_folds, "Folds trained concurrently")
      ->default_str(dflt("parallel_folds"));
  t->add_option("--config", tr.config, "JSON file with any of the settings above (flags override)");
  t->add_option("--manifest", tr.manifest, "Replay the run recorded in a manifest");

  WlsFlags wl;
  auto* w = app.add_subcommand("wls", "Weighted least-squares state estimation over a dataset");
  w->add_option("--dataset", wl.dataset, "Dataset CSV");
  w->add_option("--out", wl.out, "Estimates CSV")->default_str("<dataset>.wls.csv");
  w->add_option("--case", wl.case_name, "case14 or a path to a .case file")->default_str("case14");
  w->add_option("--sigma-floor", wl.sigma_floor, "Lower bound on measurement sigma (pu)")->default_str("0.0001");
  w->add_option("--config", wl.config, "JSON file with any of the settings above (flags override)");
  w->add_option("--manifest", wl.manifest, "Replay the run recorded in a manifest");

  std::string report_path, report_out;
  auto* r = app.add_subcommand("report", "Render report.txt from a report.json");
  r->add_option("report", report_path, "Path to report.json")->required();
  r->add_option("--out", report_out, "Write the table to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (g->parsed()) return run_generate(gen);
    if (t->parsed()) return run_train(tr);
    if (w->parsed()) return run_wls(wl);
    return run_report(report_path, report_out);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

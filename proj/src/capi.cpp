#include "pinnse/pinnse.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "dataset_io.hpp"
#include "error.hpp"
#include "experiment.hpp"
#include "report.hpp"
#include "wls.hpp"

struct pinnse_grid {
  pinnse::GridModel model;
};

struct pinnse_dataset {
  pinnse::Dataset data;
};

namespace {

thread_local std::string last_error;

pinnse_status fail(pinnse_status status, const std::string& message) {
  last_error = message;
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <typename F>
pinnse_status guarded(F&& body) {
  try {
    body();
    return PINNSE_OK;
  } catch (const pinnse::ParseError& e) {
    return fail(PINNSE_E_PARSE, e.what());
  } catch (const pinnse::GridError& e) {
    return fail(PINNSE_E_GRID, e.what());
  } catch (const pinnse::ConfigError& e) {
    return fail(PINNSE_E_CONFIG, e.what());
  } catch (const pinnse::DimensionError& e) {
    return fail(PINNSE_E_DIMENSION, e.what());
  } catch (const pinnse::ConvergenceError& e) {
    return fail(PINNSE_E_CONVERGENCE, e.what());
  } catch (const pinnse::TrainingError& e) {
    return fail(PINNSE_E_TRAINING, e.what());
  } catch (const pinnse::Error& e) {
    return fail(PINNSE_E_IO, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(PINNSE_E_CONFIG, std::string("invalid JSON: ") + e.what());
  } catch (const std::bad_alloc&) {
    return fail(PINNSE_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PINNSE_E_INTERNAL, e.what());
  } catch (...) {
    return fail(PINNSE_E_INTERNAL, "unknown error");
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlohmann::json parse_config(const char* config_json) {
  if (!config_json || !*config_json) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(config_json);
  } catch (const nlohmann::json::parse_error& e) {
    throw pinnse::ConfigError(std::string("training config is not valid JSON: ") + e.what());
  }
}

#define PINNSE_REQUIRE(cond, what) \
  if (!(cond)) return fail(PINNSE_E_INVALID_ARGUMENT, what)

}  // namespace

extern "C" {

const char* pinnse_version(void) { return pinnse::kVersion; }

const char* pinnse_status_name(pinnse_status status) {
  switch (status) {
    case PINNSE_OK: return "ok";
    case PINNSE_E_INVALID_ARGUMENT: return "invalid argument";
    case PINNSE_E_PARSE: return "parse error";
    case PINNSE_E_GRID: return "grid error";
    case PINNSE_E_CONFIG: return "configuration error";
    case PINNSE_E_DIMENSION: return "dimension mismatch";
    case PINNSE_E_CONVERGENCE: return "convergence failure";
    case PINNSE_E_TRAINING: return "training aborted";
    case PINNSE_E_IO: return "i/o error";
    case PINNSE_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* pinnse_last_error(void) { return last_error.c_str(); }

void pinnse_string_free(char* s) { std::free(s); }

pinnse_status pinnse_grid_load_case14(pinnse_grid** out) {
  PINNSE_REQUIRE(out, "out is null");
  *out = nullptr;
  return guarded([&] { *out = new pinnse_grid{pinnse::load_case14()}; });
}

pinnse_status pinnse_grid_load_file(const char* path, pinnse_grid** out) {
  PINNSE_REQUIRE(path && out, "path and out must not be null");
  *out = nullptr;
  return guarded([&] { *out = new pinnse_grid{pinnse::load_case_file(path)}; });
}

void pinnse_grid_free(pinnse_grid* grid) { delete grid; }

pinnse_status pinnse_grid_bus_count(const pinnse_grid* grid, int* out) {
  PINNSE_REQUIRE(grid && out, "grid and out must not be null");
  *out = grid->model.n();
  return PINNSE_OK;
}

pinnse_status pinnse_grid_name(const pinnse_grid* grid, char** out) {
  PINNSE_REQUIRE(grid && out, "grid and out must not be null");
  *out = nullptr;
  return guarded([&] { *out = copy_string(grid->model.name()); });
}

void pinnse_generate_options_init(pinnse_generate_options* options, pinnse_scenario scenario) {
  if (!options) return;
  *options = {};
  options->scenario = scenario;
  options->n = scenario == PINNSE_SCENARIO_OUTAGE ? pinnse::OutageOptions{}.n : pinnse::SteadyStateOptions{}.n;
  options->load_band = pinnse::SteadyStateOptions{}.load_band;
  options->load_jitter = pinnse::OutageOptions{}.load_jitter;
  options->outage_bus = pinnse::OutageOptions{}.outage_bus + 1;
  options->p_sigma_rel = -1.0;
  options->q_sigma_rel = -1.0;
}

pinnse_status pinnse_dataset_generate(const pinnse_grid* grid, const pinnse_generate_options* options,
                                      pinnse_dataset** out) {
  PINNSE_REQUIRE(grid && options && out, "grid, options and out must not be null");
  PINNSE_REQUIRE(options->scenario == PINNSE_SCENARIO_STEADY || options->scenario == PINNSE_SCENARIO_OUTAGE,
                 "unknown scenario");
  *out = nullptr;
  return guarded([&] {
    if (options->n < 1) throw pinnse::ConfigError("number of instances must be positive");
    pinnse::Dataset ds;
    pinnse::Scenario scenario;
    if (options->scenario == PINNSE_SCENARIO_STEADY) {
      scenario = pinnse::Scenario::SteadyState;
      ds = pinnse::generate_steady_state(grid->model, {options->n, options->load_band, options->seed});
    } else {
      scenario = pinnse::Scenario::GeneratorOutage;
      pinnse::OutageOptions o;
      o.n = options->n;
      o.seed = options->seed;
      o.load_jitter = options->load_jitter;
      o.outage_bus = options->outage_bus - 1;
      ds = pinnse::generate_outage_trajectory(grid->model, o);
    }
    pinnse::NoiseSpec noise = pinnse::default_noise(scenario, options->seed);
    if (options->p_sigma_rel >= 0.0) noise.p_sigma_rel = options->p_sigma_rel;
    if (options->q_sigma_rel >= 0.0) noise.q_sigma_rel = options->q_sigma_rel;
    *out = new pinnse_dataset{pinnse::add_noise(std::move(ds), noise)};
  });
}

pinnse_status pinnse_dataset_read(const char* csv_path, pinnse_dataset** out) {
  PINNSE_REQUIRE(csv_path && out, "csv_path and out must not be null");
  *out = nullptr;
  return guarded([&] { *out = new pinnse_dataset{pinnse::read_dataset(csv_path)}; });
}

pinnse_status pinnse_dataset_write(const pinnse_dataset* dataset, const char* csv_path) {
  PINNSE_REQUIRE(dataset && csv_path, "dataset and csv_path must not be null");
  return guarded([&] { pinnse::write_dataset(dataset->data, csv_path); });
}

pinnse_status pinnse_dataset_size(const pinnse_dataset* dataset, int* out) {
  PINNSE_REQUIRE(dataset && out, "dataset and out must not be null");
  *out = static_cast<int>(dataset->data.size());
  return PINNSE_OK;
}

pinnse_status pinnse_dataset_info(const pinnse_dataset* dataset, char** out_json) {
  PINNSE_REQUIRE(dataset && out_json, "dataset and out_json must not be null");
  *out_json = nullptr;
  return guarded([&] {
    auto info = pinnse::dataset_info_json(dataset->data);
    const auto& g = dataset->data.generation;
    info["generation"] = {{"retries", g.retries}, {"max_iterations", g.max_iterations},
                          {"max_mismatch", g.max_mismatch}};
    *out_json = copy_string(info.dump(2));
  });
}

void pinnse_dataset_free(pinnse_dataset* dataset) { delete dataset; }

pinnse_status pinnse_wls_batch(const pinnse_grid* grid, const pinnse_dataset* dataset, double sigma_floor,
                               const char* out_csv, pinnse_wls_summary* out) {
  PINNSE_REQUIRE(grid && dataset && out, "grid, dataset and out must not be null");
  PINNSE_REQUIRE(sigma_floor >= 0.0, "sigma_floor must not be negative");
  return guarded([&] {
    pinnse::WlsBatchOptions options;
    if (sigma_floor > 0.0) options.sigma_floor = sigma_floor;
    const auto results = pinnse::wls_batch(grid->model, dataset->data, options);
    if (out_csv) pinnse::write_wls_csv(results, grid->model.n(), out_csv);
    const pinnse::WlsSummary s = pinnse::summarize(results);
    *out = {s.samples, s.max_iterations, s.mean_mag_error, s.max_mag_error, s.mean_ang_error, s.max_ang_error};
  });
}

pinnse_status pinnse_train_config_defaults(char** out_json) {
  PINNSE_REQUIRE(out_json, "out_json must not be null");
  *out_json = nullptr;
  return guarded([&] {
    auto j = pinnse::experiment_config_to_json(pinnse::ExperimentConfig{}, true);
    j.erase("seed");
    *out_json = copy_string(j.dump(2));
  });
}

pinnse_status pinnse_train_config_resolve(const pinnse_dataset* dataset, const char* config_json,
                                          char** out_json) {
  PINNSE_REQUIRE(dataset && out_json, "dataset and out_json must not be null");
  *out_json = nullptr;
  return guarded([&] {
    const auto cfg = pinnse::experiment_config_from_json(parse_config(config_json), dataset->data.seed);
    *out_json = copy_string(pinnse::experiment_config_to_json(cfg, true).dump(2));
  });
}

pinnse_status pinnse_train(const pinnse_grid* grid, const pinnse_dataset* dataset, const char* config_json,
                           const char* out_dir, char** report_json) {
  PINNSE_REQUIRE(grid && dataset && out_dir, "grid, dataset and out_dir must not be null");
  if (report_json) *report_json = nullptr;
  return guarded([&] {
    const auto cfg = pinnse::experiment_config_from_json(parse_config(config_json), dataset->data.seed);
    const auto report = pinnse::run_experiment(grid->model, dataset->data, cfg, out_dir);
    if (report_json) *report_json = copy_string(report.dump(2));
  });
}

pinnse_status pinnse_render_report(const char* report_json, char** out_text) {
  PINNSE_REQUIRE(report_json && out_text, "report_json and out_text must not be null");
  *out_text = nullptr;
  return guarded([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(report_json);
    } catch (const nlohmann::json::parse_error& e) {
      throw pinnse::ParseError(std::string("report is not valid JSON: ") + e.what());
    }
    *out_text = copy_string(pinnse::report_table_from_json(j));
  });
}

}  // extern "C"

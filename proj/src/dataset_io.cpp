#include "dataset_io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "error.hpp"

namespace pinnse {

using nlohmann::json;
using nlohmann::ordered_json;

std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

namespace {

const char* const kColumnGroups[] = {"p", "q", "vmag", "vang", "ire", "iim"};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

ordered_json vec_json(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

Eigen::VectorXd vec_from(const json& a) {
  Eigen::VectorXd v(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) v(k) = a[k].get<double>();
  return v;
}

}  // namespace

void write_dataset_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  const int n = ds.n_buses;
  bool first = true;
  for (const char* group : kColumnGroups) {
    for (int k = 1; k <= n; ++k) {
      if (!first) out << ',';
      out << group << '_' << k;
      first = false;
    }
  }
  out << '\n';
  for (const Sample& s : ds.samples) {
    const Eigen::VectorXd* cols[] = {&s.p_meas, &s.q_meas, &s.v_true.v_mag,
                                     &s.v_true.v_ang, &s.i_true.i_re, &s.i_true.i_im};
    first = true;
    for (const Eigen::VectorXd* c : cols) {
      for (int k = 0; k < n; ++k) {
        if (!first) out << ',';
        out << format_double((*c)(k));
        first = false;
      }
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open dataset '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("dataset '" + path + "' is empty", 1);
  const auto header = split_csv(line);
  if (header.empty() || header.size() % 6 != 0) {
    throw ParseError("header must have 6N columns", 1);
  }
  const int n = static_cast<int>(header.size() / 6);
  for (int g = 0; g < 6; ++g) {
    for (int k = 0; k < n; ++k) {
      const std::string expected = std::string(kColumnGroups[g]) + "_" + std::to_string(k + 1);
      if (header[g * n + k] != expected) {
        throw ParseError("unexpected column '" + header[g * n + k] + "', expected '" + expected + "'", 1);
      }
    }
  }

  Dataset ds;
  ds.n_buses = n;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw ParseError("row has " + std::to_string(cells.size()) + " columns, expected " +
                           std::to_string(header.size()),
                       line_no);
    }
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string& cell = cells[c];
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), values[c]);
      if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw ParseError("invalid number '" + cell + "'", line_no);
      }
    }
    auto group = [&](int g) { return Eigen::Map<const Eigen::VectorXd>(values.data() + g * n, n).eval(); };
    Sample s;
    s.p_meas = group(0);
    s.q_meas = group(1);
    s.v_true = {group(2), group(3)};
    s.i_true = {group(4), group(5)};
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

std::string sidecar_path(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  if (p.extension() == ".csv") return p.replace_extension(".json").string();
  return csv_path + ".json";
}

ordered_json stats_to_json(const PreprocessStats& st) {
  ordered_json j;
  j["zero_epsilon"] = st.zero_epsilon;
  j["input_mean"] = vec_json(st.input_mean);
  j["input_std"] = vec_json(st.input_std);
  j["input_min"] = vec_json(st.input_min);
  j["input_max"] = vec_json(st.input_max);
  j["input_constant"] = st.input_constant;
  j["target_min"] = vec_json(st.target_min);
  j["target_max"] = vec_json(st.target_max);
  j["target_constant"] = st.target_constant;
  j["warnings"] = st.warnings;
  return j;
}

PreprocessStats stats_from_json(const json& j) {
  PreprocessStats st;
  st.zero_epsilon = j.at("zero_epsilon").get<double>();
  st.input_mean = vec_from(j.at("input_mean"));
  st.input_std = vec_from(j.at("input_std"));
  st.input_min = vec_from(j.at("input_min"));
  st.input_max = vec_from(j.at("input_max"));
  st.input_constant = j.at("input_constant").get<std::vector<bool>>();
  st.target_min = vec_from(j.at("target_min"));
  st.target_max = vec_from(j.at("target_max"));
  st.target_constant = j.at("target_constant").get<std::vector<bool>>();
  st.warnings = j.value("warnings", std::vector<std::string>{});
  const auto dim = static_cast<std::size_t>(st.input_mean.size());
  if (st.input_std.size() != st.input_mean.size() || st.input_constant.size() != dim ||
      st.target_constant.size() != static_cast<std::size_t>(st.target_min.size())) {
    throw ParseError("inconsistent preprocessing statistics");
  }
  return st;
}

ordered_json sidecar_json(const Dataset& ds) {
  ordered_json j;
  j["format"] = "pinnse-dataset/1";
  j["scenario"] = std::string(to_string(ds.scenario));
  j["seed"] = ds.seed;
  j["case"] = ds.case_name;
  j["n_buses"] = ds.n_buses;
  j["n_samples"] = ds.size();
  j["angles"] = "radians";
  j["noise"] = {{"model", "relative gaussian"},
                {"p_sigma_rel", ds.noise.p_sigma_rel},
                {"q_sigma_rel", ds.noise.q_sigma_rel},
                {"seed", ds.noise.seed}};
  j["generation"] = {{"retries", ds.generation.retries},
                     {"max_iterations", ds.generation.max_iterations},
                     {"max_mismatch", ds.generation.max_mismatch}};
  if (ds.preprocess) j["preprocess"] = stats_to_json(*ds.preprocess);
  return j;
}

void write_sidecar(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << sidecar_json(ds).dump(2) << '\n';
}

Dataset read_dataset(const std::string& csv_path) {
  Dataset ds = read_dataset_csv(csv_path);
  const std::string side = sidecar_path(csv_path);
  std::ifstream in(side, std::ios::binary);
  if (!in) return ds;
  json j;
  try {
    j = json::parse(in);
    ds.scenario = parse_scenario(j.at("scenario").get<std::string>());
    ds.seed = j.at("seed").get<std::uint64_t>();
    ds.case_name = j.value("case", std::string{});
    const auto& noise = j.at("noise");
    ds.noise = {noise.at("p_sigma_rel").get<double>(), noise.at("q_sigma_rel").get<double>(),
                noise.at("seed").get<std::uint64_t>()};
    if (j.contains("preprocess")) ds.preprocess = stats_from_json(j.at("preprocess"));
  } catch (const json::exception& e) {
    throw ParseError("malformed sidecar '" + side + "': " + e.what());
  }
  if (j.at("n_buses").get<int>() != ds.n_buses || j.at("n_samples").get<std::size_t>() != ds.size()) {
    throw ParseError("sidecar '" + side + "' does not describe '" + csv_path + "'");
  }
  return ds;
}

void write_dataset(Dataset ds, const std::string& csv_path) {
  if (!ds.samples.empty()) {
    std::vector<int> all(ds.size());
    std::iota(all.begin(), all.end(), 0);
    ds.preprocess = fit_preprocess(ds, all);
  }
  write_dataset_csv(ds, csv_path);
  write_sidecar(ds, sidecar_path(csv_path));
}

}  // namespace pinnse

#include "report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dataset_io.hpp"
#include "error.hpp"

namespace pinnse {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string percent(double value) {
  if (!std::isfinite(value)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", value);
  // -0.00% reads oddly for the baseline row
  return std::string(buf) == "-0.00%" ? "0.00%" : buf;
}

std::string epoch_text(double value) {
  char buf[32];
  if (value == std::floor(value)) std::snprintf(buf, sizeof(buf), "%.0f", value);
  else std::snprintf(buf, sizeof(buf), "%.1f", value);
  return buf;
}

struct Row {
  std::string cells[7];
};

std::string render(const std::vector<Row>& rows, const std::string& title) {
  const Row header{{"Training Methods", "Cross-Validation Error", "Normalized", "Fold Standard Deviation",
                    "Normalized", "Average Best Epoch", "Normalized"}};
  std::size_t width[7];
  for (int c = 0; c < 7; ++c) {
    width[c] = header.cells[c].size();
    for (const Row& r : rows) width[c] = std::max(width[c], r.cells[c].size());
  }
  std::ostringstream out;
  auto rule = [&] {
    out << '+';
    for (int c = 0; c < 7; ++c) out << std::string(width[c] + 2, '-') << '+';
    out << '\n';
  };
  auto line = [&](const Row& r) {
    out << '|';
    for (int c = 0; c < 7; ++c) {
      out << ' ' << r.cells[c] << std::string(width[c] - r.cells[c].size(), ' ') << " |";
    }
    out << '\n';
  };
  out << title << '\n';
  rule();
  line(header);
  rule();
  for (const Row& r : rows) line(r);
  rule();
  out << "Validation error: 100 x mean |prediction - target| in the scaled [-1, 1] target space.\n"
      << "Fold standard deviation: population (divide by k). Best epoch: 0-based.\n"
      << "Normalized: percent change against the NN row.\n";
  return out.str();
}

Row make_row(const std::string& label, double err, double nerr, double sd, double nsd, double ep, double nep) {
  return Row{{label, percent(err), percent(nerr), percent(sd), percent(nsd), epoch_text(ep), percent(nep)}};
}

double number_or_nan(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

ordered_json number_or_null(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

ordered_json vec_json(Eigen::Map<const Eigen::VectorXd> v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

void fill(Eigen::Map<Eigen::VectorXd> dst, const json& a) {
  if (a.size() != static_cast<std::size_t>(dst.size())) throw ParseError("checkpoint array has wrong length");
  for (std::size_t k = 0; k < a.size(); ++k) dst(k) = a[k].get<double>();
}

ordered_json params_json(const Parameters& p) {
  const auto v = p.views();
  return {{"w1", vec_json(v[0])}, {"b1", vec_json(v[1])}, {"w2", vec_json(v[2])}, {"b2", vec_json(v[3])}};
}

void params_from_json(Parameters& p, const json& j) {
  auto v = p.views();
  fill(v[0], j.at("w1"));
  fill(v[1], j.at("b1"));
  fill(v[2], j.at("w2"));
  fill(v[3], j.at("b2"));
}

}  // namespace

std::string scenario_title(Scenario scenario) {
  return scenario == Scenario::SteadyState ? "Steady-State Dataset Results" : "Generator Shut-down Dataset Results";
}

std::string report_table(const std::vector<RegimeReport>& reports, const std::string& title) {
  std::vector<Row> rows;
  for (const RegimeReport& r : reports) {
    rows.push_back(make_row(regime_label(r.regime), r.cv_error, r.normalized_error, r.fold_std, r.normalized_std,
                            r.avg_best_epoch, r.normalized_epoch));
  }
  return render(rows, title);
}

std::string report_table_from_json(const json& report) {
  std::vector<Row> rows;
  try {
    for (const json& r : report.at("regimes")) {
      rows.push_back(make_row(r.at("label").get<std::string>(), r.at("cv_error").get<double>(),
                              number_or_nan(r.at("normalized_error")), r.at("fold_std").get<double>(),
                              number_or_nan(r.at("normalized_std")), r.at("avg_best_epoch").get<double>(),
                              number_or_nan(r.at("normalized_epoch"))));
    }
    return render(rows, report.at("title").get<std::string>());
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what());
  }
}

ordered_json regimes_json(const std::vector<RegimeReport>& reports) {
  ordered_json out = ordered_json::array();
  for (const RegimeReport& r : reports) {
    ordered_json row;
    row["regime"] = std::string(regime_key(r.regime));
    row["label"] = regime_label(r.regime);
    row["cv_error"] = r.cv_error;
    row["normalized_error"] = number_or_null(r.normalized_error);
    row["fold_std"] = r.fold_std;
    row["normalized_std"] = number_or_null(r.normalized_std);
    row["avg_best_epoch"] = r.avg_best_epoch;
    row["normalized_epoch"] = number_or_null(r.normalized_epoch);
    ordered_json folds = ordered_json::array();
    for (const FoldReport& f : r.folds) {
      folds.push_back({{"fold", f.fold_index},
                       {"best_epoch", f.best_epoch},
                       {"best_val_error", f.best_val_error},
                       {"final_val_error", f.val_error_per_epoch.empty() ? 0.0 : f.val_error_per_epoch.back()}});
    }
    row["folds"] = std::move(folds);
    out.push_back(std::move(row));
  }
  return out;
}

void write_curve_csv(const FoldReport& fold, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "epoch,train_loss,u_norm,f_norm,lambda1,lambda2,val_error\n";
  for (const EpochLog& e : fold.curve) {
    out << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.u_norm) << ','
        << format_double(e.f_norm) << ',' << format_double(e.lambda1) << ',' << format_double(e.lambda2) << ','
        << format_double(e.val_error) << '\n';
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

ordered_json checkpoint_json(const FoldReport& fold, Regime regime) {
  const MLP& m = fold.final_model;
  ordered_json j;
  j["format"] = "pinnse-checkpoint/1";
  j["regime"] = std::string(regime_key(regime));
  j["fold"] = fold.fold_index;
  j["shapes"] = {{"input", m.input_dim()}, {"hidden", m.hidden()}, {"output", m.output_dim()}};
  j["activation"] = "tanh";
  j["layout"] = "column-major w1 (hidden x input), w2 (output x hidden)";
  j["parameters"] = params_json(m);
  j["adam"] = {{"t", fold.adam.t},
               {"alpha", fold.adam.alpha},
               {"beta1", fold.adam.beta1},
               {"beta2", fold.adam.beta2},
               {"epsilon", fold.adam.epsilon},
               {"m", params_json(fold.adam.m)},
               {"v", params_json(fold.adam.v)}};
  j["preprocess"] = stats_to_json(fold.stats);
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    const int in = j.at("shapes").at("input").get<int>();
    const int hidden = j.at("shapes").at("hidden").get<int>();
    const int out = j.at("shapes").at("output").get<int>();
    if (in < 1 || hidden < 1 || out < 1) throw ParseError("checkpoint shapes must be positive");
    Checkpoint c;
    c.model = {Eigen::MatrixXd(hidden, in), Eigen::VectorXd(hidden), Eigen::MatrixXd(out, hidden),
               Eigen::VectorXd(out)};
    params_from_json(c.model, j.at("parameters"));
    const json& adam = j.at("adam");
    c.adam = AdamState::for_model(c.model, adam.at("alpha").get<double>());
    c.adam.t = adam.at("t").get<std::int64_t>();
    c.adam.beta1 = adam.at("beta1").get<double>();
    c.adam.beta2 = adam.at("beta2").get<double>();
    c.adam.epsilon = adam.at("epsilon").get<double>();
    params_from_json(c.adam.m, adam.at("m"));
    params_from_json(c.adam.v, adam.at("v"));
    c.stats = stats_from_json(j.at("preprocess"));
    return c;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace pinnse

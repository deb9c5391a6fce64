#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "error.hpp"
#include "seeding.hpp"

namespace pinnse {

std::string_view to_string(Scenario scenario) {
  return scenario == Scenario::SteadyState ? "steady" : "outage";
}

Scenario parse_scenario(std::string_view name) {
  if (name == "steady") return Scenario::SteadyState;
  if (name == "outage") return Scenario::GeneratorOutage;
  throw ConfigError("unknown scenario '" + std::string(name) + "' (expected steady|outage)");
}

NoiseSpec default_noise(Scenario scenario, std::uint64_t seed) {
  const double sigma = scenario == Scenario::SteadyState ? 0.01 : 0.001;
  return {sigma, sigma, derive_seed(seed, "noise")};
}

Eigen::VectorXd input_vector(const Sample& s) {
  Eigen::VectorXd x(s.p_meas.size() * 2);
  x << s.p_meas, s.q_meas;
  return x;
}

Eigen::VectorXd target_vector(const Sample& s) {
  Eigen::VectorXd t(s.v_true.n() * 2);
  t << s.v_true.v_mag, s.v_true.v_ang;
  return t;
}

namespace {

constexpr int kMaxAttempts = 10;

/// Builds a sample from a solved operating point. Scheduled quantities are
/// copied exactly; the free ones (slack P/Q, PV Q) come from the solution.
Sample make_sample(const GridModel& grid, const InjectionSet& specified, const PolarVoltage& v) {
  const InjectionSet calc = injections(v, grid.y_bus());
  Sample s;
  s.p_meas = specified.p;
  s.q_meas = specified.q;
  for (const Bus& bus : grid.buses()) {
    if (bus.kind == BusKind::Slack) s.p_meas(bus.id) = calc.p(bus.id);
    if (bus.kind != BusKind::PQ) s.q_meas(bus.id) = calc.q(bus.id);
  }
  s.v_true = v;
  s.i_true = current_injections(v, grid.y_bus());
  return s;
}

void record(GenerationStats& stats, const NewtonRaphsonResult& r, int attempts) {
  stats.retries += attempts;
  stats.max_iterations = std::max(stats.max_iterations, r.iterations);
  stats.max_mismatch = std::max(stats.max_mismatch, r.mismatch);
}

template <typename Perturb>
Sample solve_with_retries(const GridModel& grid, std::uint64_t seed, int index,
                          GenerationStats& stats, Perturb&& perturb) {
  double last_residual = 0.0;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(derive_seed(seed, "load", static_cast<std::uint64_t>(index) * kMaxAttempts + attempt));
    const InjectionSet spec = perturb(rng);
    try {
      const auto result = solve_newton_raphson(grid, spec);
      record(stats, result, attempt);
      return make_sample(grid, spec, result.voltage);
    } catch (const ConvergenceError& e) {
      last_residual = e.residual();
    }
  }
  throw ConvergenceError("instance " + std::to_string(index) + " failed to converge after " +
                             std::to_string(kMaxAttempts) + " perturbations",
                         last_residual);
}

}  // namespace

Dataset generate_steady_state(const GridModel& grid, const SteadyStateOptions& options) {
  if (options.n < 1) throw ConfigError("sample count must be positive");
  if (options.load_band < 0.0 || options.load_band >= 1.0) {
    throw ConfigError("load band must lie in [0, 1)");
  }
  Dataset ds;
  ds.scenario = Scenario::SteadyState;
  ds.seed = options.seed;
  ds.n_buses = grid.n();
  ds.case_name = grid.name();
  ds.samples.reserve(options.n);

  const double band = options.load_band;
  for (int i = 0; i < options.n; ++i) {
    ds.samples.push_back(solve_with_retries(grid, options.seed, i, ds.generation, [&](Rng& rng) {
      std::uniform_real_distribution<double> factor(1.0 - band, 1.0 + band);
      InjectionSet spec{Eigen::VectorXd::Zero(grid.n()), Eigen::VectorXd::Zero(grid.n())};
      for (const Bus& bus : grid.buses()) {
        const double f = band > 0.0 ? factor(rng) : 1.0;
        spec.p(bus.id) = bus.gen_p - f * bus.base_load_p;
        spec.q(bus.id) = -f * bus.base_load_q;
      }
      return spec;
    }));
  }
  return ds;
}

double outage_generation_fraction(int index, int n) {
  const int step = std::max(1, n / 10);
  if (index < step) return 1.0;
  const double tau = 0.25 * n;
  return 1.0 - std::exp(-(index - step) / tau);
}

Dataset generate_outage_trajectory(const GridModel& grid, const OutageOptions& options) {
  if (options.n < 2) throw ConfigError("outage trajectory needs at least 2 instances");
  const int bus = options.outage_bus;
  if (bus < 0 || bus >= grid.n() || grid.buses()[bus].kind != BusKind::PV ||
      grid.buses()[bus].gen_p <= 0.0) {
    throw GridError("outage bus " + std::to_string(bus + 1) + " has no generator");
  }

  // Reactive output of the generator in the base case; it recovers along with
  // the active output once the unit is back.
  const auto base = solve_newton_raphson(grid, scheduled_injections(grid));
  const double base_gen_q =
      injections(base.voltage, grid.y_bus()).q(bus) + grid.buses()[bus].base_load_q;
  const double base_gen_p = grid.buses()[bus].gen_p;
  const GridModel outage_grid = grid.with_bus_kind(bus, BusKind::PQ);

  Dataset ds;
  ds.scenario = Scenario::GeneratorOutage;
  ds.seed = options.seed;
  ds.n_buses = grid.n();
  ds.case_name = grid.name();
  ds.samples.reserve(options.n);

  const int step = std::max(1, options.n / 10);
  for (int i = 0; i < options.n; ++i) {
    const bool out = i >= step;
    const double fraction = outage_generation_fraction(i, options.n);
    const GridModel& g = out ? outage_grid : grid;
    ds.samples.push_back(solve_with_retries(g, options.seed, i, ds.generation, [&](Rng& rng) {
      std::uniform_real_distribution<double> jitter(1.0 - options.load_jitter,
                                                    1.0 + options.load_jitter);
      InjectionSet spec{Eigen::VectorXd::Zero(g.n()), Eigen::VectorXd::Zero(g.n())};
      for (const Bus& b : g.buses()) {
        const double f = options.load_jitter > 0.0 ? jitter(rng) : 1.0;
        spec.p(b.id) = b.gen_p - f * b.base_load_p;
        spec.q(b.id) = -f * b.base_load_q;
      }
      if (out) {
        spec.p(bus) += (fraction - 1.0) * base_gen_p;
        spec.q(bus) += fraction * base_gen_q;
      }
      return spec;
    }));
  }
  return ds;
}

Dataset add_noise(Dataset ds, const NoiseSpec& spec) {
  if (spec.p_sigma_rel < 0.0 || spec.q_sigma_rel < 0.0) {
    throw ConfigError("noise sigmas must be non-negative");
  }
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    Rng rng(derive_seed(spec.seed, "measurement", i));
    std::normal_distribution<double> unit(0.0, 1.0);
    Sample& s = ds.samples[i];
    for (Eigen::Index k = 0; k < s.p_meas.size(); ++k) s.p_meas(k) *= 1.0 + spec.p_sigma_rel * unit(rng);
    for (Eigen::Index k = 0; k < s.q_meas.size(); ++k) s.q_meas(k) *= 1.0 + spec.q_sigma_rel * unit(rng);
  }
  ds.noise = spec;
  return ds;
}

// ---------------------------------------------------------------------------
// Pre-processing

namespace {

Eigen::VectorXd replace_zeros(Eigen::VectorXd x, double eps) {
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (x(k) == 0.0) x(k) = eps;
  }
  return x;
}

double to_unit_range(double value, double lo, double hi) {
  return 2.0 * (value - lo) / (hi - lo) - 1.0;
}

double from_unit_range(double scaled, double lo, double hi) {
  return lo + (scaled + 1.0) * 0.5 * (hi - lo);
}

}  // namespace

Eigen::VectorXd PreprocessStats::transform_input(const Eigen::VectorXd& raw) const {
  if (raw.size() != input_dim()) throw DimensionError("input vector has wrong length");
  const Eigen::VectorXd x = replace_zeros(raw, zero_epsilon);
  Eigen::VectorXd out(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (input_constant[k]) {
      out(k) = 0.0;
      continue;
    }
    const double z = (x(k) - input_mean(k)) / input_std(k);
    out(k) = to_unit_range(z, input_min(k), input_max(k));
  }
  return out;
}

Eigen::VectorXd PreprocessStats::inverse_input(const Eigen::VectorXd& scaled) const {
  if (scaled.size() != input_dim()) throw DimensionError("input vector has wrong length");
  Eigen::VectorXd out(scaled.size());
  for (Eigen::Index k = 0; k < scaled.size(); ++k) {
    if (input_constant[k]) {
      out(k) = input_mean(k);
      continue;
    }
    out(k) = from_unit_range(scaled(k), input_min(k), input_max(k)) * input_std(k) + input_mean(k);
  }
  return out;
}

Eigen::VectorXd PreprocessStats::transform_target(const Eigen::VectorXd& physical) const {
  if (physical.size() != target_dim()) throw DimensionError("target vector has wrong length");
  Eigen::VectorXd out(physical.size());
  for (Eigen::Index k = 0; k < physical.size(); ++k) {
    out(k) = target_constant[k] ? 0.0 : to_unit_range(physical(k), target_min(k), target_max(k));
  }
  return out;
}

Eigen::VectorXd PreprocessStats::inverse_target(const Eigen::VectorXd& scaled) const {
  if (scaled.size() != target_dim()) throw DimensionError("target vector has wrong length");
  Eigen::VectorXd out(scaled.size());
  for (Eigen::Index k = 0; k < scaled.size(); ++k) {
    out(k) = target_constant[k] ? target_min(k)
                                : from_unit_range(scaled(k), target_min(k), target_max(k));
  }
  return out;
}

Eigen::VectorXd PreprocessStats::target_scale() const {
  Eigen::VectorXd out(target_dim());
  for (int k = 0; k < target_dim(); ++k) {
    out(k) = target_constant[k] ? 0.0 : 0.5 * (target_max(k) - target_min(k));
  }
  return out;
}

PreprocessStats fit_preprocess(const Dataset& ds, const std::vector<int>& train_indices) {
  if (train_indices.empty()) throw ConfigError("preprocessing needs at least one training row");
  if (ds.samples.empty()) throw ConfigError("dataset is empty");
  const int dim = static_cast<int>(ds.samples.front().p_meas.size()) * 2;
  const double rows = static_cast<double>(train_indices.size());

  PreprocessStats st;
  std::vector<Eigen::VectorXd> inputs;
  inputs.reserve(train_indices.size());
  for (int idx : train_indices) {
    if (idx < 0 || idx >= static_cast<int>(ds.size())) throw ConfigError("training index out of range");
    inputs.push_back(replace_zeros(input_vector(ds.samples[idx]), st.zero_epsilon));
  }

  st.input_mean = Eigen::VectorXd::Zero(dim);
  for (const auto& x : inputs) st.input_mean += x;
  st.input_mean /= rows;
  st.input_std = Eigen::VectorXd::Zero(dim);
  for (const auto& x : inputs) st.input_std += (x - st.input_mean).cwiseAbs2();
  st.input_std = (st.input_std / rows).cwiseSqrt();

  st.input_constant.assign(dim, false);
  st.input_min = Eigen::VectorXd::Constant(dim, std::numeric_limits<double>::infinity());
  st.input_max = -st.input_min;
  Eigen::VectorXd raw_min = st.input_min;
  Eigen::VectorXd raw_max = st.input_max;
  for (const auto& x : inputs) {
    raw_min = raw_min.cwiseMin(x);
    raw_max = raw_max.cwiseMax(x);
  }
  for (int k = 0; k < dim; ++k) {
    if (st.input_std(k) == 0.0) st.input_std(k) = st.zero_epsilon;
    if (raw_min(k) == raw_max(k)) {
      st.input_constant[k] = true;
      st.input_min(k) = st.input_max(k) = 0.0;
      st.warnings.push_back("input feature " + std::to_string(k) + " is constant; mapped to 0");
    }
  }
  for (const auto& x : inputs) {
    for (int k = 0; k < dim; ++k) {
      if (st.input_constant[k]) continue;
      const double z = (x(k) - st.input_mean(k)) / st.input_std(k);
      st.input_min(k) = std::min(st.input_min(k), z);
      st.input_max(k) = std::max(st.input_max(k), z);
    }
  }

  st.target_min = Eigen::VectorXd::Constant(dim, std::numeric_limits<double>::infinity());
  st.target_max = -st.target_min;
  for (int idx : train_indices) {
    const Eigen::VectorXd t = target_vector(ds.samples[idx]);
    st.target_min = st.target_min.cwiseMin(t);
    st.target_max = st.target_max.cwiseMax(t);
  }
  st.target_constant.assign(dim, false);
  for (int k = 0; k < dim; ++k) {
    if (st.target_min(k) == st.target_max(k)) {
      st.target_constant[k] = true;
      st.warnings.push_back("target feature " + std::to_string(k) + " is constant; mapped to 0");
    }
  }
  return st;
}

Preprocessed apply_preprocess(const Dataset& ds, const PreprocessStats& stats) {
  const int n = ds.n_buses;
  const int count = static_cast<int>(ds.size());
  Preprocessed out;
  out.inputs.resize(2 * n, count);
  out.targets.resize(2 * n, count);
  out.currents.resize(n, count);
  for (int s = 0; s < count; ++s) {
    const Sample& sample = ds.samples[s];
    out.inputs.col(s) = stats.transform_input(input_vector(sample));
    out.targets.col(s) = stats.transform_target(target_vector(sample));
    for (int k = 0; k < n; ++k) out.currents(k, s) = Complex(sample.i_true.i_re(k), sample.i_true.i_im(k));
  }
  out.stats = stats;
  return out;
}

Preprocessed preprocess(const Dataset& ds, const std::vector<int>& train_indices) {
  return apply_preprocess(ds, fit_preprocess(ds, train_indices));
}

std::vector<Fold> k_fold_split(int n, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k must be at least 2");
  if (n < k) {
    throw ConfigError("cannot split " + std::to_string(n) + " samples into " + std::to_string(k) + " folds");
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Fold> folds(k);
  int start = 0;
  for (int f = 0; f < k; ++f) {
    const int size = n / k + (f < n % k ? 1 : 0);
    std::vector<bool> in_val(n, false);
    for (int i = start; i < start + size; ++i) {
      folds[f].val.push_back(order[i]);
      in_val[order[i]] = true;
    }
    for (int i = 0; i < n; ++i) {
      if (!in_val[i]) folds[f].train.push_back(i);
    }
    std::sort(folds[f].val.begin(), folds[f].val.end());
    start += size;
  }
  return folds;
}

}  // namespace pinnse

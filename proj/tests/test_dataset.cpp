#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "dataset.hpp"
#include "dataset_io.hpp"
#include "doctest.h"
#include "error.hpp"
#include "test_grids.hpp"

using namespace pinnse;

namespace {

std::vector<int> iota_indices(int n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

bool same_samples(const Dataset& a, const Dataset& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Sample& x = a.samples[i];
    const Sample& y = b.samples[i];
    if (x.p_meas != y.p_meas || x.q_meas != y.q_meas || x.v_true.v_mag != y.v_true.v_mag ||
        x.v_true.v_ang != y.v_true.v_ang || x.i_true.i_re != y.i_true.i_re ||
        x.i_true.i_im != y.i_true.i_im) {
      return false;
    }
  }
  return true;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("pinnse_test_" + name)).string();
}

}  // namespace

TEST_CASE("steady-state generation is reproducible and physically consistent") {
  const GridModel grid = load_case14();
  const Dataset a = generate_steady_state(grid, {192, 0.2, 7});
  const Dataset b = generate_steady_state(grid, {192, 0.2, 7});
  REQUIRE(a.size() == 192);
  CHECK(same_samples(a, b));
  CHECK_FALSE(same_samples(a, generate_steady_state(grid, {192, 0.2, 8})));

  for (const Sample& s : a.samples) {
    const InjectionSet calc = injections(s.v_true, grid.y_bus());
    for (const Bus& bus : grid.buses()) {
      CHECK(std::abs(calc.p(bus.id) - s.p_meas(bus.id)) < 1e-7);
      CHECK(std::abs(calc.q(bus.id) - s.q_meas(bus.id)) < 1e-7);
    }
    const CurrentSet i = current_injections(s.v_true, grid.y_bus());
    CHECK((i.i_re - s.i_true.i_re).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((i.i_im - s.i_true.i_im).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("zero load band reproduces the base case at every instance") {
  const GridModel grid = load_case14();
  const Dataset ds = generate_steady_state(grid, {5, 0.0, 3});
  const auto base = solve_newton_raphson(grid, scheduled_injections(grid));
  for (const Sample& s : ds.samples) {
    CHECK(s.v_true.v_mag == base.voltage.v_mag);
    CHECK(s.v_true.v_ang == base.voltage.v_ang);
  }
}

TEST_CASE("load factors stay inside the band") {
  const GridModel grid = load_case14();
  const Dataset ds = generate_steady_state(grid, {50, 0.2, 1});
  for (const Sample& s : ds.samples) {
    for (const Bus& bus : grid.buses()) {
      if (bus.kind != BusKind::PQ || bus.base_load_p == 0.0) continue;
      const double factor = -s.p_meas(bus.id) / bus.base_load_p;
      CHECK(factor >= 0.8 - 1e-12);
      CHECK(factor <= 1.2 + 1e-12);
    }
  }
}

TEST_CASE("outage trajectory follows the step and recovery profile") {
  const GridModel grid = load_case14();
  const Dataset ds = generate_outage_trajectory(grid, {2000, 7});
  REQUIRE(ds.size() == 2000);
  const int step = 200;
  const double base_gen = grid.buses()[1].gen_p;
  auto gen_p = [&](const Sample& s) {
    // injection = generation - load; the load itself carries up to 1% jitter
    return s.p_meas(1) + grid.buses()[1].base_load_p;
  };
  // Bus-2 generation recovered to within 5% of base by the last instance.
  const double final_fraction = outage_generation_fraction(1999, 2000);
  CHECK(final_fraction > 0.95);
  CHECK(std::abs(gen_p(ds.samples.back()) - base_gen) < 0.05 * base_gen + 0.01 * grid.buses()[1].base_load_p);
  CHECK(outage_generation_fraction(step, 2000) == 0.0);
  CHECK(outage_generation_fraction(step - 1, 2000) == 1.0);

  // Lost reactive support: bus-2 voltage drops across the step.
  CHECK(ds.samples[step].v_true.v_mag(1) < ds.samples[step - 1].v_true.v_mag(1));
  // Voltage control is held before the outage.
  CHECK(ds.samples[step - 1].v_true.v_mag(1) == grid.buses()[1].v_setpoint);

  for (const Sample& s : ds.samples) {
    const InjectionSet calc = injections(s.v_true, grid.y_bus());
    CHECK((calc.p - s.p_meas).cwiseAbs().maxCoeff() < 1e-7);
    CHECK((calc.q - s.q_meas).cwiseAbs().maxCoeff() < 1e-7);
  }
  CHECK(same_samples(ds, generate_outage_trajectory(grid, {2000, 7})));
}

TEST_CASE("outage requires a generator at the outage bus") {
  const GridModel grid = load_case14();
  OutageOptions options;
  options.n = 20;
  options.outage_bus = 3;  // bus 4 is a load bus
  CHECK_THROWS_AS(generate_outage_trajectory(grid, options), GridError);
}

TEST_CASE("noise: zero sigma, determinism, empirical spread") {
  const GridModel grid = load_case14();
  const Dataset clean = generate_steady_state(grid, {192, 0.2, 7});
  CHECK(same_samples(add_noise(clean, {0.0, 0.0, 9}), clean));

  const NoiseSpec spec{0.01, 0.01, 9};
  const Dataset noisy = add_noise(clean, spec);
  CHECK(same_samples(noisy, add_noise(clean, spec)));

  double sum = 0.0, sum_sq = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const Sample& c = clean.samples[i];
    const Sample& n = noisy.samples[i];
    CHECK(n.v_true.v_mag == c.v_true.v_mag);
    CHECK(n.i_true.i_re == c.i_true.i_re);
    for (int k = 0; k < 14; ++k) {
      if (c.p_meas(k) == 0.0) {
        CHECK(n.p_meas(k) == 0.0);
        continue;
      }
      const double ratio = n.p_meas(k) / c.p_meas(k) - 1.0;
      sum += ratio;
      sum_sq += ratio * ratio;
      ++count;
    }
  }
  const double mean = sum / count;
  const double std = std::sqrt(sum_sq / count - mean * mean);
  CHECK(std::abs(std - 0.01) < 0.2 * 0.01);
  CHECK_THROWS_AS(add_noise(clean, {-0.1, 0.0, 1}), ConfigError);
}

TEST_CASE("preprocessing maps training inputs into [-1, 1] and inverts exactly") {
  const GridModel grid = load_case14();
  const Dataset ds = add_noise(generate_steady_state(grid, {60, 0.2, 2}), {0.01, 0.01, 4});
  std::vector<int> train;
  for (int i = 0; i < 40; ++i) train.push_back(i);
  const Preprocessed pre = preprocess(ds, train);
  for (int s : train) {
    CHECK(pre.inputs.col(s).cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
    CHECK(pre.targets.col(s).cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
  }
  for (int s = 0; s < 60; ++s) {
    const Eigen::VectorXd x = input_vector(ds.samples[s]);
    const Eigen::VectorXd back = pre.stats.inverse_input(pre.inputs.col(s));
    for (int k = 0; k < x.size(); ++k) {
      if (pre.stats.input_constant[k]) continue;
      CHECK(std::abs(back(k) - x(k)) < 1e-12);
    }
    const Eigen::VectorXd t = target_vector(ds.samples[s]);
    const Eigen::VectorXd t_back = pre.stats.inverse_target(pre.targets.col(s));
    CHECK((t_back - t).cwiseAbs().maxCoeff() < 1e-12);
  }
  // Slack angle is identically zero: a constant target mapped to 0.
  CHECK(pre.stats.target_constant[14]);
  CHECK(pre.targets.row(14).cwiseAbs().maxCoeff() == 0.0);
  CHECK_FALSE(pre.stats.warnings.empty());
}

TEST_CASE("identically zero features become 1e-8 before standardization") {
  const GridModel grid = load_case14();
  const Dataset ds = generate_steady_state(grid, {20, 0.2, 2});
  // Bus 7 has neither load nor generation.
  REQUIRE(ds.samples[0].p_meas(6) == 0.0);
  const PreprocessStats st = fit_preprocess(ds, iota_indices(20));
  CHECK(st.input_mean(6) == doctest::Approx(1e-8).epsilon(1e-12));
  CHECK(st.input_std(6) > 0.0);
  CHECK(st.input_constant[6]);
  CHECK(st.transform_input(input_vector(ds.samples[3]))(6) == 0.0);
}

TEST_CASE("statistics depend on training rows only") {
  const GridModel grid = load_case14();
  Dataset ds = add_noise(generate_steady_state(grid, {30, 0.2, 5}), {0.01, 0.01, 1});
  std::vector<int> train = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19};
  const PreprocessStats before = fit_preprocess(ds, train);
  for (int i = 20; i < 30; ++i) ds.samples[i].p_meas *= 50.0;
  const PreprocessStats after = fit_preprocess(ds, train);
  CHECK(before.input_mean == after.input_mean);
  CHECK(before.input_max == after.input_max);
  CHECK(before.target_max == after.target_max);
  CHECK_THROWS_AS(fit_preprocess(ds, {}), ConfigError);
}

TEST_CASE("k-fold split partitions the indices") {
  const auto folds = k_fold_split(10, 5, 3);
  REQUIRE(folds.size() == 5);
  std::set<int> seen;
  for (const Fold& f : folds) {
    CHECK(f.val.size() == 2);
    CHECK(f.train.size() == 8);
    for (int i : f.val) CHECK(seen.insert(i).second);
    for (int i : f.train) CHECK(std::find(f.val.begin(), f.val.end(), i) == f.val.end());
  }
  CHECK(seen.size() == 10);

  std::multiset<std::size_t> sizes;
  for (const Fold& f : k_fold_split(192, 5, 11)) sizes.insert(f.val.size());
  CHECK(sizes == std::multiset<std::size_t>{38, 38, 38, 39, 39});

  const auto again = k_fold_split(192, 5, 11);
  const auto first = k_fold_split(192, 5, 11);
  for (int f = 0; f < 5; ++f) CHECK(again[f].val == first[f].val);
  CHECK_THROWS_AS(k_fold_split(4, 5, 0), ConfigError);
}

TEST_CASE("dataset CSV and sidecar roundtrip exactly") {
  const GridModel grid = load_case14();
  Dataset ds = add_noise(generate_steady_state(grid, {12, 0.2, 3}), default_noise(Scenario::SteadyState, 3));
  const std::string path = temp_path("roundtrip.csv");
  write_dataset(ds, path);
  const Dataset back = read_dataset(path);
  CHECK(same_samples(ds, back));
  CHECK(back.scenario == Scenario::SteadyState);
  CHECK(back.seed == 3);
  CHECK(back.noise.p_sigma_rel == 0.01);
  REQUIRE(back.preprocess.has_value());
  CHECK(back.preprocess->input_mean.size() == 28);

  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("p_1,p_2,", 0) == 0);
  CHECK(header.find(",iim_14") != std::string::npos);
  CHECK(sidecar_path(path).ends_with("roundtrip.json"));
}

TEST_CASE("malformed dataset files are rejected with a line number") {
  const std::string path = temp_path("bad.csv");
  {
    std::ofstream out(path);
    out << "p_1,q_1,vmag_1,vang_1,ire_1,iim_1\n1,2,3,4,5,6\n1,2,x,4,5,6\n";
  }
  CHECK_THROWS_WITH_AS(read_dataset_csv(path), doctest::Contains("line 3"), ParseError);
  {
    std::ofstream out(path);
    out << "p_1,q_1,vmag_1,vang_1,ire_1\n";
  }
  CHECK_THROWS_AS(read_dataset_csv(path), ParseError);
  CHECK_THROWS_AS(read_dataset_csv(temp_path("missing.csv")), ParseError);
}

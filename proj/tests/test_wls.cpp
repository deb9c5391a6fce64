#include <cmath>
#include <filesystem>
#include <fstream>

#include "dataset.hpp"
#include "doctest.h"
#include "error.hpp"
#include "test_grids.hpp"
#include "wls.hpp"

using namespace pinnse;

namespace {

MeasurementSet exact_measurements(const GridModel& grid, const PolarVoltage& v) {
  const InjectionSet s = injections(v, grid.y_bus());
  MeasurementSet m;
  m.values.resize(2 * grid.n());
  m.values << s.p, s.q;
  m.weights = Eigen::VectorXd::Ones(2 * grid.n());
  return m;
}

double max_error(const PolarVoltage& a, const PolarVoltage& b) {
  return std::max((a.v_mag - b.v_mag).cwiseAbs().maxCoeff(), (a.v_ang - b.v_ang).cwiseAbs().maxCoeff());
}

// Mean per-sample magnitude error of WLS on a noisy copy of ds.
double noisy_mag_error(const GridModel& grid, const Dataset& clean, double sigma) {
  NoiseSpec spec{sigma, sigma, 99};
  const Dataset noisy = add_noise(clean, spec);
  return summarize(wls_batch(grid, noisy)).mean_mag_error;
}

}  // namespace

TEST_CASE("noiseless measurements from a solved power flow are recovered exactly") {
  const GridModel grid = load_case14();
  const auto pf = solve_newton_raphson(grid, scheduled_injections(grid));
  const WlsResult r = estimate_wls(grid, exact_measurements(grid, pf.voltage));
  CHECK(max_error(r.voltage, pf.voltage) < 1e-6);
  CHECK(r.residual_norm < 1e-7);
  CHECK(r.iterations <= 10);
}

TEST_CASE("flat profile is a fixed point on a shunt-free grid with zero measurements") {
  const GridModel grid = pinnse::testing::two_bus();
  MeasurementSet m;
  m.values = Eigen::VectorXd::Zero(4);
  m.weights = Eigen::VectorXd::Ones(4);
  const WlsResult r = estimate_wls(grid, m);
  CHECK(r.iterations == 1);
  CHECK(r.residual_norm == 0.0);
  CHECK(max_error(r.voltage, PolarVoltage::flat(2)) == 0.0);
}

TEST_CASE("three-bus toy grid with charging is recovered from exact injections") {
  const GridModel grid = pinnse::testing::three_bus();
  const auto pf = solve_newton_raphson(grid, scheduled_injections(grid));
  const WlsResult r = estimate_wls(grid, exact_measurements(grid, pf.voltage));
  CHECK(max_error(r.voltage, pf.voltage) < 1e-9);
}

TEST_CASE("noiseless steady-state and outage datasets are recovered on every sample") {
  const GridModel grid = load_case14();
  SUBCASE("steady") {
    const Dataset ds = generate_steady_state(grid, {192, 0.2, 3});
    const auto results = wls_batch(grid, ds);
    REQUIRE(results.size() == 192);
    for (const auto& r : results) {
      CHECK(r.max_mag_error < 1e-6);
      CHECK(r.max_ang_error < 1e-6);
    }
  }
  SUBCASE("outage") {
    OutageOptions opt;
    opt.n = 300;
    opt.seed = 3;
    const Dataset ds = generate_outage_trajectory(grid, opt);
    const WlsSummary s = summarize(wls_batch(grid, ds));
    CHECK(s.samples == 300);
    CHECK(s.max_mag_error < 1e-6);
    CHECK(s.max_ang_error < 1e-6);
  }
}

TEST_CASE("1% noise gives a positive but small magnitude error") {
  const GridModel grid = load_case14();
  const Dataset clean = generate_steady_state(grid, {60, 0.2, 5});
  const double err = noisy_mag_error(grid, clean, 0.01);
  CHECK(err > 0.0);
  // Injections are known to ~1%; magnitudes are tightly held by PV setpoints
  // and the network, so the estimate stays within a fraction of a percent.
  CHECK(err < 0.01);
}

TEST_CASE("estimator error decreases as the noise level decreases") {
  const GridModel grid = load_case14();
  const Dataset clean = generate_steady_state(grid, {60, 0.2, 11});
  const double e1 = noisy_mag_error(grid, clean, 1e-2);
  const double e2 = noisy_mag_error(grid, clean, 1e-3);
  const double e3 = noisy_mag_error(grid, clean, 1e-4);
  CHECK(e1 > e2);
  CHECK(e2 > e3);
}

TEST_CASE("measurement weights follow the noise spec with a floor") {
  Sample s;
  s.p_meas = Eigen::Vector2d(0.5, 0.0);
  s.q_meas = Eigen::Vector2d(-0.2, 1e-6);
  const MeasurementSet m = measurements_for(s, {0.01, 0.02, 0}, 1e-4);
  CHECK(m.weights(0) == doctest::Approx(1.0 / (0.005 * 0.005)));
  CHECK(m.weights(1) == doctest::Approx(1e8));
  CHECK(m.weights(2) == doctest::Approx(1.0 / (0.004 * 0.004)));
  CHECK(m.weights(3) == doctest::Approx(1e8));
  CHECK_THROWS_AS(measurements_for(s, {0.01, 0.01, 0}, 0.0), ConfigError);
}

TEST_CASE("error paths") {
  const GridModel grid = pinnse::testing::two_bus();
  SUBCASE("wrong measurement length") {
    MeasurementSet m{Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3)};
    CHECK_THROWS_AS(estimate_wls(grid, m), DimensionError);
  }
  SUBCASE("non-positive weight") {
    MeasurementSet m{Eigen::VectorXd::Zero(4), Eigen::VectorXd::Ones(4)};
    m.weights(2) = 0.0;
    CHECK_THROWS_AS(estimate_wls(grid, m), ConfigError);
  }
  SUBCASE("isolated bus makes the gain matrix singular") {
    std::vector<Bus> buses(3);
    for (int k = 0; k < 3; ++k) buses[k].id = k;
    buses[0].kind = BusKind::Slack;
    Branch br;
    br.from_bus = 0;
    br.to_bus = 1;
    br.x = 0.1;
    const GridModel islanded(buses, {br}, 100.0, "islanded");
    MeasurementSet m{Eigen::VectorXd::Zero(6), Eigen::VectorXd::Ones(6)};
    CHECK_THROWS_AS(estimate_wls(islanded, m), ConvergenceError);
  }
  SUBCASE("unreachable measurements do not converge") {
    MeasurementSet m{Eigen::VectorXd::Zero(4), Eigen::VectorXd::Ones(4)};
    m.values(1) = -50.0;  // far beyond the transfer limit of the line
    m.values(0) = 50.0;
    WlsOptions opt;
    opt.max_iter = 5;
    try {
      estimate_wls(grid, m, opt);
      FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
      CHECK(e.residual() > 0.0);
    }
  }
  SUBCASE("dataset for a different grid") {
    Dataset ds;
    ds.n_buses = 14;
    CHECK_THROWS_AS(wls_batch(grid, ds), DimensionError);
  }
}

TEST_CASE("batch CSV lists one row per sample with estimates") {
  const GridModel grid = pinnse::testing::three_bus();
  const Dataset ds = generate_steady_state(grid, {4, 0.1, 1});
  const auto results = wls_batch(grid, ds);
  const std::string path = (std::filesystem::temp_directory_path() / "pinnse_test_wls.csv").string();
  write_wls_csv(results, 3, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "sample,iterations,residual,mean_mag_error,max_mag_error,mean_ang_error,max_ang_error,"
        "vmag_est_1,vmag_est_2,vmag_est_3,vang_est_1,vang_est_2,vang_est_3");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 4);
  std::filesystem::remove(path);
}

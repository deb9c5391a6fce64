#include <cmath>

#include "doctest.h"
#include "error.hpp"
#include "grid_model.hpp"
#include "test_grids.hpp"

using namespace pinnse;

TEST_CASE("two-bus admittance by hand") {
  const GridModel grid = testing::two_bus();
  const AdmittanceMatrix& y = grid.y_bus();
  REQUIRE(y.n() == 2);
  // 1 / (j0.1) = -j10
  CHECK(std::abs(y(0, 0) - Complex(0, -10)) < 1e-12);
  CHECK(std::abs(y(0, 1) - Complex(0, 10)) < 1e-12);
  CHECK(std::abs(y(1, 0) - Complex(0, 10)) < 1e-12);
  CHECK(std::abs(y(1, 1) - Complex(0, -10)) < 1e-12);
}

TEST_CASE("shunt-free rows sum to zero and Y is symmetric") {
  std::vector<Bus> buses(4);
  for (int k = 0; k < 4; ++k) buses[k].id = k;
  buses[0].kind = BusKind::Slack;
  std::vector<Branch> branches = {
      {0, 1, 0.01, 0.05, 0.0, 1.0, 0.0},
      {1, 2, 0.02, 0.07, 0.0, 1.0, 0.0},
      {2, 3, 0.00, 0.11, 0.0, 1.0, 0.0},
      {3, 0, 0.03, 0.09, 0.0, 1.0, 0.0},
      {0, 2, 0.04, 0.12, 0.0, 1.0, 0.0},
  };
  const GridModel grid(buses, branches);
  const ComplexMatrix& y = grid.y_bus().entries();
  CHECK(y.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
  CHECK((y - y.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("row sums equal attached shunts") {
  const GridModel grid = testing::three_bus();
  const ComplexMatrix& y = grid.y_bus().entries();
  // bus 3: shunt j0.05 plus half of two charging susceptances (0.01 + 0.01)
  CHECK(std::abs(y.row(2).sum() - Complex(0, 0.07)) < 1e-12);
  CHECK(std::abs(y.row(0).sum() - Complex(0, 0.025)) < 1e-12);
}

TEST_CASE("rebuilding Y is bit-identical") {
  const GridModel a = load_case14();
  const GridModel b = load_case14();
  CHECK(a.y_bus().entries() == b.y_bus().entries());
}

TEST_CASE("construction errors name the offending element") {
  std::vector<Bus> buses(2);
  buses[0] = {0, BusKind::Slack};
  buses[1] = {1, BusKind::Slack};
  Branch br{0, 1, 0.0, 0.1, 0.0, 1.0, 0.0};
  CHECK_THROWS_WITH_AS(GridModel(buses, {br}), doctest::Contains("bus 2: duplicate slack"), GridError);

  buses[1].kind = BusKind::PQ;
  Branch dangling{0, 5, 0.0, 0.1, 0.0, 1.0, 0.0};
  CHECK_THROWS_WITH_AS(GridModel(buses, {br, dangling}), doctest::Contains("branch 2"), GridError);

  Branch zero{0, 1, 0.0, 0.0, 0.0, 1.0, 0.0};
  CHECK_THROWS_WITH_AS(GridModel(buses, {zero}), doctest::Contains("zero series impedance"), GridError);

  Branch loop{1, 1, 0.0, 0.1, 0.0, 1.0, 0.0};
  CHECK_THROWS_AS(GridModel(buses, {loop}), GridError);

  Branch bad_tap{0, 1, 0.0, 0.1, 0.0, 0.0, 0.0};
  CHECK_THROWS_AS(GridModel(buses, {bad_tap}), GridError);

  buses[0].kind = BusKind::PQ;
  CHECK_THROWS_WITH_AS(GridModel(buses, {br}), doctest::Contains("no slack"), GridError);
}

TEST_CASE("case14 loads with the standard shape") {
  const GridModel grid = load_case14();
  CHECK(grid.n() == 14);
  CHECK(grid.branches().size() == 20);
  CHECK(grid.y_bus().n() == grid.n());
  int slacks = 0;
  for (const Bus& bus : grid.buses()) slacks += bus.kind == BusKind::Slack;
  CHECK(slacks == 1);
  CHECK(grid.slack_index() == 0);
  CHECK(grid.base_mva() == 100.0);
  CHECK(grid.buses()[1].gen_p == doctest::Approx(0.40));
  CHECK(grid.buses()[8].shunt_b == doctest::Approx(0.19));
  const ComplexMatrix& y = grid.y_bus().entries();
  CHECK((y - y.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("case14 Y-bus matches the independent reference entrywise") {
  const GridModel grid = load_case14();
  const auto rows = testing::read_fixture("case14_ybus_reference.txt");
  REQUIRE(rows.size() == 196);
  double worst = 0.0;
  for (const auto& r : rows) {
    const Complex ref(r[2], r[3]);
    worst = std::max(worst, std::abs(grid.y_bus()(int(r[0]) - 1, int(r[1]) - 1) - ref));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("bundled case file on disk parses identically to the embedded copy") {
  const GridModel from_disk = load_case_file(std::string(PINNSE_DATA_DIR) + "/case14.case");
  CHECK(from_disk.y_bus().entries() == load_case14().y_bus().entries());
}

TEST_CASE("case parser rejects malformed input with a line number") {
  CHECK_THROWS_WITH_AS(parse_case("[case]\nname x\n[generators]\n"),
                       doctest::Contains("line 3"), ParseError);
  CHECK_THROWS_WITH_AS(parse_case("[buses]\n1 slack 0 0 0 0 0\n"), doctest::Contains("line 2"),
                       ParseError);
  CHECK_THROWS_WITH_AS(parse_case("[buses]\n1 slack 0 0 0 0 0 abc\n"),
                       doctest::Contains("invalid number"), ParseError);
  CHECK_THROWS_WITH_AS(parse_case("[buses]\n1 slack 0 0 0 0 0 1\n2 pq 0 0 0 0 0 1\n[branches]\n1 3 0 0.1 0 1 0\n"),
                       doctest::Contains("line 5"), ParseError);
  CHECK_THROWS_WITH_AS(parse_case("[buses]\n1 gen 0 0 0 0 0 1\n"), doctest::Contains("bus kind"),
                       ParseError);
  CHECK_THROWS_AS(load_case_file("/nonexistent/file.case"), ParseError);
}

TEST_CASE("with_bus_kind keeps Y and revalidates") {
  const GridModel grid = load_case14();
  const GridModel outage = grid.with_bus_kind(1, BusKind::PQ);
  CHECK(outage.buses()[1].kind == BusKind::PQ);
  CHECK(outage.y_bus().entries() == grid.y_bus().entries());
  CHECK_THROWS_AS(grid.with_bus_kind(1, BusKind::Slack), GridError);
}

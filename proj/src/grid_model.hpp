#pragma once

#include <complex>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace pinnse {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

enum class BusKind { Slack, PV, PQ };

std::string_view to_string(BusKind kind);

/// All electrical quantities are per unit on the grid's base_mva.
struct Bus {
  int id = 0;  // 0-based, contiguous
  BusKind kind = BusKind::PQ;
  double base_load_p = 0.0;
  double base_load_q = 0.0;
  double gen_p = 0.0;
  double v_setpoint = 1.0;
  double shunt_g = 0.0;
  double shunt_b = 0.0;
};

struct Branch {
  int from_bus = 0;
  int to_bus = 0;
  double r = 0.0;
  double x = 0.0;
  double b_charging = 0.0;
  double tap_ratio = 1.0;
  double phase_shift = 0.0;  // radians
};

/// Dense N x N bus admittance matrix, Y_ij = G_ij + j B_ij.
class AdmittanceMatrix {
 public:
  AdmittanceMatrix() = default;
  explicit AdmittanceMatrix(ComplexMatrix entries) : entries_(std::move(entries)) {}

  int n() const noexcept { return static_cast<int>(entries_.rows()); }
  Complex operator()(int i, int j) const { return entries_(i, j); }
  const ComplexMatrix& entries() const noexcept { return entries_; }
  Eigen::MatrixXd g() const { return entries_.real(); }
  Eigen::MatrixXd b() const { return entries_.imag(); }

 private:
  ComplexMatrix entries_;
};

/// Builds Y from the branch list and bus shunts. Throws GridError on a
/// dangling endpoint, a self loop, zero series impedance or a non-positive
/// tap; the message names the offending branch (1-based, as in case files).
AdmittanceMatrix build_admittance(const std::vector<Bus>& buses,
                                  const std::vector<Branch>& branches);

/// Immutable network description. Construction validates the topology and
/// builds the admittance matrix.
class GridModel {
 public:
  GridModel(std::vector<Bus> buses, std::vector<Branch> branches,
            double base_mva = 100.0, std::string name = {});

  int n() const noexcept { return static_cast<int>(buses_.size()); }
  const std::vector<Bus>& buses() const noexcept { return buses_; }
  const std::vector<Branch>& branches() const noexcept { return branches_; }
  const AdmittanceMatrix& y_bus() const noexcept { return y_bus_; }
  double base_mva() const noexcept { return base_mva_; }
  const std::string& name() const noexcept { return name_; }
  int slack_index() const noexcept { return slack_; }

  /// Copy of this grid with one bus reclassified (Y is unchanged).
  GridModel with_bus_kind(int bus, BusKind kind) const;

 private:
  std::vector<Bus> buses_;
  std::vector<Branch> branches_;
  double base_mva_;
  std::string name_;
  int slack_ = -1;
  AdmittanceMatrix y_bus_;
};

/// Parses the sectioned plain-text case format (see data/case14.case).
/// Sections: [case] (key value pairs), [buses], [branches]. Bus ids in the
/// file are 1-based and must be contiguous. Unknown sections are rejected.
GridModel parse_case(std::string_view text);
GridModel load_case_file(const std::string& path);

/// The bundled IEEE 14-bus case.
GridModel load_case14();
std::string_view case14_text();

}  // namespace pinnse

#pragma once

#include <optional>
#include <vector>

#include "grid_model.hpp"

namespace pinnse {

/// Polar bus voltages; the slack angle is the phase reference.
struct PolarVoltage {
  Eigen::VectorXd v_mag;
  Eigen::VectorXd v_ang;  // radians

  int n() const noexcept { return static_cast<int>(v_mag.size()); }
  ComplexVector phasors() const;
  static PolarVoltage flat(int n);
};

/// Net active/reactive injections per bus (generation minus load), per unit.
struct InjectionSet {
  Eigen::VectorXd p;
  Eigen::VectorXd q;

  int n() const noexcept { return static_cast<int>(p.size()); }
};

/// Rectangular injection currents per bus, per unit.
struct CurrentSet {
  Eigen::VectorXd i_re;
  Eigen::VectorXd i_im;

  int n() const noexcept { return static_cast<int>(i_re.size()); }
};

/// P_i = V_i sum_j V_j (G_ij cos t_ij + B_ij sin t_ij),
/// Q_i = V_i sum_j V_j (G_ij sin t_ij - B_ij cos t_ij).
InjectionSet injections(const PolarVoltage& v, const AdmittanceMatrix& y);

/// I = Y V (no conjugation of Y).
CurrentSet current_injections(const PolarVoltage& v, const AdmittanceMatrix& y);

/// Scheduled net injections of the base case: gen_p - load at every bus,
/// -load_q for reactive. Slack entries and PV reactive entries are what the
/// solver leaves free.
InjectionSet scheduled_injections(const GridModel& grid);

struct NewtonRaphsonOptions {
  double tol = 1e-8;
  int max_iter = 50;
  bool flat_start = true;
  /// Used when flat_start is false. PV/slack magnitudes are still reset to
  /// their setpoints.
  std::optional<PolarVoltage> initial;
};

struct NewtonRaphsonResult {
  PolarVoltage voltage;
  int iterations = 0;
  double mismatch = 0.0;  // final max-abs mismatch
};

/// Polar Newton-Raphson power flow with the full Jacobian. `specified` holds
/// the net injections to match: P at PV and PQ buses, Q at PQ buses.
/// Throws ConvergenceError after max_iter, or on a singular Jacobian.
NewtonRaphsonResult solve_newton_raphson(const GridModel& grid, const InjectionSet& specified,
                                         const NewtonRaphsonOptions& options = {});

/// Partial derivatives of (P, Q) with respect to angles and magnitudes at the
/// given voltage, as dense N x N blocks. Shared by the power flow and WLS.
struct InjectionJacobian {
  Eigen::MatrixXd dp_dang, dp_dmag, dq_dang, dq_dmag;
};
InjectionJacobian injection_jacobian(const PolarVoltage& v, const AdmittanceMatrix& y);

}  // namespace pinnse

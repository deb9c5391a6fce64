#include "power_flow.hpp"

#include <cmath>

#include "error.hpp"

namespace pinnse {

ComplexVector PolarVoltage::phasors() const {
  ComplexVector out(n());
  for (int k = 0; k < n(); ++k) out(k) = std::polar(v_mag(k), v_ang(k));
  return out;
}

PolarVoltage PolarVoltage::flat(int n) {
  return {Eigen::VectorXd::Ones(n), Eigen::VectorXd::Zero(n)};
}

namespace {

void check_dims(const PolarVoltage& v, const AdmittanceMatrix& y) {
  if (v.v_mag.size() != v.v_ang.size() || v.n() != y.n()) {
    throw DimensionError("voltage length " + std::to_string(v.n()) +
                         " does not match admittance size " + std::to_string(y.n()));
  }
}

}  // namespace

InjectionSet injections(const PolarVoltage& v, const AdmittanceMatrix& y) {
  check_dims(v, y);
  const int n = v.n();
  InjectionSet out{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  for (int i = 0; i < n; ++i) {
    double p = 0.0;
    double q = 0.0;
    for (int j = 0; j < n; ++j) {
      const Complex yij = y(i, j);
      if (yij == Complex{}) continue;
      const double theta = v.v_ang(i) - v.v_ang(j);
      const double c = std::cos(theta);
      const double s = std::sin(theta);
      p += v.v_mag(j) * (yij.real() * c + yij.imag() * s);
      q += v.v_mag(j) * (yij.real() * s - yij.imag() * c);
    }
    out.p(i) = v.v_mag(i) * p;
    out.q(i) = v.v_mag(i) * q;
  }
  return out;
}

CurrentSet current_injections(const PolarVoltage& v, const AdmittanceMatrix& y) {
  check_dims(v, y);
  const ComplexVector current = y.entries() * v.phasors();
  return {current.real(), current.imag()};
}

InjectionSet scheduled_injections(const GridModel& grid) {
  const int n = grid.n();
  InjectionSet out{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  for (const Bus& bus : grid.buses()) {
    out.p(bus.id) = bus.gen_p - bus.base_load_p;
    out.q(bus.id) = -bus.base_load_q;
  }
  return out;
}

InjectionJacobian injection_jacobian(const PolarVoltage& v, const AdmittanceMatrix& y) {
  check_dims(v, y);
  const ComplexVector vc = v.phasors();
  const ComplexMatrix& ym = y.entries();
  const ComplexVector current = ym * vc;
  const int n = v.n();

  ComplexVector v_unit(n);
  for (int k = 0; k < n; ++k) v_unit(k) = vc(k) / v.v_mag(k);

  // dS/dang = j diag(V) conj(diag(I) - Y diag(V))
  // dS/dmag = diag(V) conj(Y diag(V/|V|)) + conj(diag(I)) diag(V/|V|)
  ComplexMatrix ds_dang = -(ym * vc.asDiagonal());
  ds_dang.diagonal() += current;
  ds_dang = Complex(0.0, 1.0) * (vc.asDiagonal() * ds_dang.conjugate());

  ComplexMatrix ds_dmag = vc.asDiagonal() * (ym * v_unit.asDiagonal()).conjugate();
  ds_dmag.diagonal() += current.conjugate().cwiseProduct(v_unit);

  return {ds_dang.real(), ds_dmag.real(), ds_dang.imag(), ds_dmag.imag()};
}

NewtonRaphsonResult solve_newton_raphson(const GridModel& grid, const InjectionSet& specified,
                                         const NewtonRaphsonOptions& options) {
  const int n = grid.n();
  if (specified.n() != n || specified.q.size() != n) {
    throw DimensionError("specified injections do not match bus count");
  }
  if (!specified.p.allFinite() || !specified.q.allFinite()) {
    throw Error("specified injections must be finite");
  }

  PolarVoltage v = PolarVoltage::flat(n);
  if (!options.flat_start && options.initial) {
    if (options.initial->n() != n) throw DimensionError("initial voltage has wrong length");
    v = *options.initial;
  }
  // Unknowns: angles at PV+PQ buses, then magnitudes at PQ buses.
  std::vector<int> ang_idx;
  std::vector<int> mag_idx;
  for (const Bus& bus : grid.buses()) {
    if (bus.kind != BusKind::PQ) v.v_mag(bus.id) = bus.v_setpoint;
    if (bus.kind == BusKind::Slack) v.v_ang(bus.id) = 0.0;
    if (bus.kind != BusKind::Slack) ang_idx.push_back(bus.id);
    if (bus.kind == BusKind::PQ) mag_idx.push_back(bus.id);
  }
  const int na = static_cast<int>(ang_idx.size());
  const int nm = static_cast<int>(mag_idx.size());
  const int dim = na + nm;

  auto mismatch = [&](const PolarVoltage& volt) {
    const InjectionSet calc = injections(volt, grid.y_bus());
    Eigen::VectorXd f(dim);
    for (int k = 0; k < na; ++k) f(k) = specified.p(ang_idx[k]) - calc.p(ang_idx[k]);
    for (int k = 0; k < nm; ++k) f(na + k) = specified.q(mag_idx[k]) - calc.q(mag_idx[k]);
    return f;
  };

  Eigen::VectorXd f = mismatch(v);
  double norm = dim > 0 ? f.cwiseAbs().maxCoeff() : 0.0;
  for (int iter = 0;; ++iter) {
    if (!std::isfinite(norm)) {
      throw ConvergenceError("power flow diverged (non-finite mismatch)", norm);
    }
    if (norm < options.tol) return {v, iter, norm};
    if (iter >= options.max_iter) {
      throw ConvergenceError("power flow did not converge in " + std::to_string(options.max_iter) +
                                 " iterations (max mismatch " + std::to_string(norm) + ")",
                             norm);
    }

    const InjectionJacobian jac = injection_jacobian(v, grid.y_bus());
    Eigen::MatrixXd j(dim, dim);
    for (int r = 0; r < na; ++r) {
      for (int c = 0; c < na; ++c) j(r, c) = jac.dp_dang(ang_idx[r], ang_idx[c]);
      for (int c = 0; c < nm; ++c) j(r, na + c) = jac.dp_dmag(ang_idx[r], mag_idx[c]);
    }
    for (int r = 0; r < nm; ++r) {
      for (int c = 0; c < na; ++c) j(na + r, c) = jac.dq_dang(mag_idx[r], ang_idx[c]);
      for (int c = 0; c < nm; ++c) j(na + r, na + c) = jac.dq_dmag(mag_idx[r], mag_idx[c]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(j);
    if (!lu.isInvertible()) throw ConvergenceError("singular power-flow Jacobian", norm);
    const Eigen::VectorXd dx = lu.solve(f);

    for (int k = 0; k < na; ++k) v.v_ang(ang_idx[k]) += dx(k);
    for (int k = 0; k < nm; ++k) v.v_mag(mag_idx[k]) += dx(na + k);
    f = mismatch(v);
    norm = f.cwiseAbs().maxCoeff();
  }
}

}  // namespace pinnse

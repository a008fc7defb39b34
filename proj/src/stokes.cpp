#include "divfree/stokes.hpp"

#include <stdexcept>
#include <string>

#include "divfree/timer.hpp"

namespace divfree {

namespace {

int levi(int a, int b, int c) {
  if (a == b || b == c || a == c) return 0;
  return ((a + 1) % 3 == b) ? 1 : -1;
}

void check_rows(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols)
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                                std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()));
}

void check_pin(const BoxDomain& box, const Eigen::VectorXd& pin) {
  if (pin.size() != box.dim() || !box.strictly_contains(pin))
    throw std::invalid_argument("pressure pin point must lie strictly inside the domain");
}

Eigen::RowVectorXd value_row(const Basis& basis, const Eigen::VectorXd& x) {
  PointSet p(1, x.size());
  p.row(0) = x.transpose();
  return eval_derivatives(basis.bank, basis.map, p, {Deriv::Value}).value().row(0);
}

}  // namespace

CollocationTables CollocationTables::build(const Basis& basis, const CollocationSet& colloc, Use use) {
  if (colloc.dim() != basis.dim()) throw std::invalid_argument("CollocationTables: dimension mismatch");
  const bool three = basis.dim() == 3;
  DerivSet in;
  DerivSet bd{Deriv::Value, Deriv::Grad};
  switch (use) {
    case Use::Stokes:
      in = three ? DerivSet{Deriv::Bilaplacian, Deriv::Grad} : DerivSet{Deriv::Bilaplacian};
      break;
    case Use::Nonlinear:
      in = three ? DerivSet{Deriv::Bilaplacian, Deriv::Grad, Deriv::Hessian, Deriv::Laplacian,
                            Deriv::GradLaplacian}
                 : DerivSet{Deriv::Bilaplacian, Deriv::Grad, Deriv::GradLaplacian};
      break;
    case Use::Coupled:
      in = DerivSet{Deriv::Value, Deriv::Grad, Deriv::Laplacian};
      bd = DerivSet{Deriv::Value};
      break;
  }
  return CollocationTables{eval_derivatives(basis.bank, basis.map, colloc.interior, in),
                           eval_derivatives(basis.bank, basis.map, colloc.boundary, bd),
                           colloc.normals};
}

LeastSquaresProblem assemble_stokes2d_velocity(const CollocationTables& t, const VelocityData& data) {
  if (t.dim() != 2) throw std::invalid_argument("assemble_stokes2d_velocity: tables must be 2D");
  if (!(data.nu > 0.0)) throw std::invalid_argument("assemble_stokes2d_velocity: nu must be > 0");
  const Eigen::Index I = t.interior_count(), J = t.boundary_count(), n = t.cols();
  check_rows(data.curl_f, I, 1, "curl f");

  LeastSquaresProblem p;
  p.matrix.resize(I + 2 * J, n);
  p.rhs.setZero(I + 2 * J);
  p.matrix.topRows(I) = data.nu * t.interior.bilaplacian();
  p.matrix.middleRows(I, J) = t.boundary.value();
  p.matrix.middleRows(I + J, J) = t.normals.col(0).asDiagonal() * t.boundary.grad(0);
  p.matrix.middleRows(I + J, J) += t.normals.col(1).asDiagonal() * t.boundary.grad(1);
  p.rhs.head(I) = data.curl_f.col(0);
  if (data.boundary.phi.size()) {
    if (data.boundary.phi.size() != J) throw std::invalid_argument("boundary phi length");
    p.rhs.segment(I, J) = data.boundary.phi;
  }
  if (data.boundary.dphi_dn.size()) {
    if (data.boundary.dphi_dn.size() != J) throw std::invalid_argument("boundary dphi/dn length");
    p.rhs.segment(I + J, J) = data.boundary.dphi_dn;
  }
  p.blocks = {{"interior-pde", 0, I}, {"boundary-value", I, J}, {"boundary-normal", I + J, J}};
  return p;
}

LeastSquaresProblem assemble_stokes2d_velocity(const Basis& basis, const CollocationSet& colloc,
                                               const VelocityData& data) {
  return assemble_stokes2d_velocity(
      CollocationTables::build(basis, colloc, CollocationTables::Use::Stokes), data);
}

LeastSquaresProblem assemble_stokes3d_velocity(const CollocationTables& t, const VelocityData& data) {
  if (t.dim() != 3) throw std::invalid_argument("assemble_stokes3d_velocity: tables must be 3D");
  if (!(data.nu > 0.0)) throw std::invalid_argument("assemble_stokes3d_velocity: nu must be > 0");
  const Eigen::Index I = t.interior_count(), J = t.boundary_count(), n = t.cols();
  check_rows(data.curl_f, I, 3, "curl f");

  LeastSquaresProblem p;
  p.matrix.setZero(4 * I + 4 * J, 3 * n);
  p.rhs.setZero(4 * I + 4 * J);
  const Eigen::Index div0 = 3 * I, flux0 = 4 * I, curl0 = 4 * I + J;
  for (int c = 0; c < 3; ++c) {
    p.matrix.block(c * I, c * n, I, n) = data.nu * t.interior.bilaplacian();
    p.rhs.segment(c * I, I) = data.curl_f.col(c);
    p.matrix.block(div0, c * n, I, n) = t.interior.grad(c);
    p.matrix.block(flux0, c * n, J, n) = t.normals.col(c).asDiagonal() * t.boundary.value();
  }
  // (curl phi)_a = eps_abc d_b phi_c
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) {
        const int s = levi(a, b, c);
        if (s == 0) continue;
        if (s > 0)
          p.matrix.block(curl0 + a * J, c * n, J, n) = t.boundary.grad(b);
        else
          p.matrix.block(curl0 + a * J, c * n, J, n) = -t.boundary.grad(b);
      }
  if (data.boundary.velocity.size()) {
    check_rows(data.boundary.velocity, J, 3, "boundary velocity");
    for (int a = 0; a < 3; ++a) p.rhs.segment(curl0 + a * J, J) = data.boundary.velocity.col(a);
  }
  p.blocks = {{"interior-pde", 0, 3 * I},
              {"divergence", div0, I},
              {"boundary-flux", flux0, J},
              {"boundary-curl", curl0, 3 * J}};
  return p;
}

LeastSquaresProblem assemble_stokes3d_velocity(const Basis& basis, const CollocationSet& colloc,
                                               const VelocityData& data) {
  return assemble_stokes3d_velocity(
      CollocationTables::build(basis, colloc, CollocationTables::Use::Stokes), data);
}

LeastSquaresProblem assemble_stokes_velocity(const CollocationTables& tables, const VelocityData& data) {
  return tables.dim() == 2 ? assemble_stokes2d_velocity(tables, data)
                           : assemble_stokes3d_velocity(tables, data);
}

LeastSquaresProblem assemble_pressure(const Basis& basis, const CollocationSet& colloc,
                                      const PressureData& data, const VelocityField& velocity) {
  const int d = basis.dim();
  if (velocity.dim() != d || colloc.dim() != d)
    throw std::invalid_argument("assemble_pressure: dimension mismatch");
  check_pin(colloc.box, data.pin);
  const Eigen::Index I = colloc.interior_count(), n = basis.size();
  check_rows(data.f, I, d, "forcing");

  const VelocityEval v = velocity.evaluate(colloc.interior, true);
  const DerivativeTable t = eval_derivatives(basis.bank, basis.map, colloc.interior, {Deriv::Grad});

  LeastSquaresProblem p;
  p.matrix.resize(d * I + 1, n);
  p.rhs.resize(d * I + 1);
  for (int r = 0; r < d; ++r) {
    p.matrix.middleRows(r * I, I) = t.grad(r);
    Eigen::VectorXd rhs = data.f.col(r) + data.nu * v.lap.col(r);
    if (data.nonlinear)
      for (int k = 0; k < d; ++k) rhs -= v.u.col(k).cwiseProduct(v.grad.col(r * d + k));
    p.rhs.segment(r * I, I) = rhs;
  }
  p.matrix.row(d * I) = value_row(basis, data.pin);
  p.rhs(d * I) = 0.0;
  p.blocks = {{"pressure-gradient", 0, d * I}, {"pin", d * I, 1}};
  return p;
}

PressureResult recover_pressure(const Basis& basis, const CollocationSet& colloc,
                                const PressureData& data, const VelocityField& velocity,
                                const LsqOptions& lsq) {
  Stopwatch sw;
  LeastSquaresProblem p = assemble_pressure(basis, colloc, data, velocity);
  SolveInfo info;
  info.rows = p.rows();
  info.cols = p.cols();
  info.assemble_seconds = sw.seconds();
  sw.reset();
  LsqResult r = solve_lsq(std::move(p), lsq);
  info.solve_seconds = sw.seconds();
  info.rank = r.rank;
  info.residual_norm = r.residual_norm;
  info.condition_estimate = r.condition_estimate;
  return PressureResult{PressureSolution{basis, std::move(r.x), data.pin}, info};
}

std::unique_ptr<VelocityField> make_velocity_field(const Basis& basis, Eigen::VectorXd alpha) {
  if (basis.dim() == 2) return std::make_unique<StreamSolution2D>(basis, std::move(alpha));
  return std::make_unique<PotentialSolution3D>(basis, std::move(alpha));
}

VelocityResult solve_stokes_velocity(const Basis& basis, const CollocationSet& colloc,
                                     const VelocityData& data, const LsqOptions& lsq) {
  Stopwatch sw;
  LeastSquaresProblem p = assemble_stokes_velocity(
      CollocationTables::build(basis, colloc, CollocationTables::Use::Stokes), data);
  SolveInfo info;
  info.rows = p.rows();
  info.cols = p.cols();
  info.assemble_seconds = sw.seconds();
  sw.reset();
  LsqResult r = solve_lsq(std::move(p), lsq);
  info.solve_seconds = sw.seconds();
  info.rank = r.rank;
  info.residual_norm = r.residual_norm;
  info.condition_estimate = r.condition_estimate;
  return VelocityResult{make_velocity_field(basis, std::move(r.x)), info};
}

LeastSquaresProblem assemble_coupled(const Basis& basis, const CollocationTables& t,
                                     const CoupledData& data, const Eigen::VectorXd* iterate) {
  const int d = t.dim();
  if (!(data.nu > 0.0)) throw std::invalid_argument("assemble_coupled: nu must be > 0");
  const Eigen::Index I = t.interior_count(), J = t.boundary_count(), n = t.cols();
  check_rows(data.f, I, d, "forcing");
  if (data.pin.size() != d) throw std::invalid_argument("assemble_coupled: pin dimension");
  if (iterate && iterate->size() != (d + 1) * n)
    throw std::invalid_argument("assemble_coupled: iterate size");

  const Eigen::Index rows = (d + 1) * I + d * J + 1;
  LeastSquaresProblem p;
  p.matrix.setZero(rows, (d + 1) * n);
  p.rhs.setZero(rows);

  Eigen::MatrixXd uk, duk;  // I x d, I x d*d (a*d+b = d_b u_a)
  if (iterate) {
    uk.resize(I, d);
    duk.resize(I, d * d);
    for (int a = 0; a < d; ++a) {
      const auto c = iterate->segment(a * n, n);
      uk.col(a) = t.interior.value() * c;
      for (int b = 0; b < d; ++b) duk.col(a * d + b) = t.interior.grad(b) * c;
    }
  }

  for (int i = 0; i < d; ++i) {
    auto diag = p.matrix.block(i * I, i * n, I, n);
    diag = -data.nu * t.interior.laplacian();
    p.matrix.block(i * I, d * n, I, n) = t.interior.grad(i);
    p.rhs.segment(i * I, I) = data.f.col(i);
    if (iterate) {
      for (int r = 0; r < d; ++r) diag += uk.col(r).asDiagonal() * t.interior.grad(r);
      for (int j = 0; j < d; ++j)
        p.matrix.block(i * I, j * n, I, n) += duk.col(i * d + j).asDiagonal() * t.interior.value();
      for (int k = 0; k < d; ++k)
        p.rhs.segment(i * I, I) += uk.col(k).cwiseProduct(duk.col(i * d + k));
    }
    p.matrix.block(d * I, i * n, I, n) = t.interior.grad(i);
  }
  const Eigen::Index bd0 = (d + 1) * I;
  for (int a = 0; a < d; ++a) {
    p.matrix.block(bd0 + a * J, a * n, J, n) = t.boundary.value();
    if (data.boundary_velocity.size()) {
      check_rows(data.boundary_velocity, J, d, "boundary velocity");
      p.rhs.segment(bd0 + a * J, J) = data.boundary_velocity.col(a);
    }
  }
  p.matrix.block(rows - 1, d * n, 1, n) = value_row(basis, data.pin);
  p.blocks = {{"momentum", 0, d * I},
              {"divergence", d * I, I},
              {"boundary-velocity", bd0, d * J},
              {"pin", rows - 1, 1}};
  return p;
}

CoupledResult coupled_from_coefficients(const Basis& basis, const Eigen::VectorXd& coeffs,
                                        const Eigen::VectorXd& pin) {
  const int d = basis.dim();
  const Eigen::Index n = basis.size();
  CoupledResult out{std::make_unique<DirectVelocity>(basis, coeffs.head(d * n)),
                    PressureSolution{basis, coeffs.segment(d * n, n), pin}, SolveInfo{}};
  return out;
}

CoupledResult solve_coupled_baseline(const Basis& basis, const CollocationSet& colloc,
                                     const CoupledData& data, const LsqOptions& lsq) {
  check_pin(colloc.box, data.pin);
  Stopwatch sw;
  const CollocationTables t = CollocationTables::build(basis, colloc, CollocationTables::Use::Coupled);
  LeastSquaresProblem p = assemble_coupled(basis, t, data);
  SolveInfo info;
  info.rows = p.rows();
  info.cols = p.cols();
  info.assemble_seconds = sw.seconds();
  sw.reset();
  LsqResult r = solve_lsq(std::move(p), lsq);
  info.solve_seconds = sw.seconds();
  info.rank = r.rank;
  info.residual_norm = r.residual_norm;
  info.condition_estimate = r.condition_estimate;
  CoupledResult out = coupled_from_coefficients(basis, r.x, data.pin);
  out.info = info;
  return out;
}

}  // namespace divfree

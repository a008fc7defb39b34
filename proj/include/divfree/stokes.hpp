#pragma once

#include <memory>

#include <Eigen/Dense>

#include "divfree/feature_bank.hpp"
#include "divfree/fields.hpp"
#include "divfree/linsolve.hpp"
#include "divfree/sampling.hpp"

namespace divfree {

/// Derivative tables at the collocation points, computed once and shared by every
/// assembly of one (basis, collocation set) pair.
struct CollocationTables {
  DerivativeTable interior;
  DerivativeTable boundary;
  PointSet normals;

  enum class Use { Stokes, Nonlinear, Coupled };
  static CollocationTables build(const Basis& basis, const CollocationSet& colloc, Use use);

  Eigen::Index interior_count() const { return interior.points(); }
  Eigen::Index boundary_count() const { return boundary.points(); }
  Eigen::Index cols() const { return interior.cols(); }
  int dim() const { return interior.dim(); }
};

/// Velocity boundary data. Empty members mean homogeneous data.
///   2D: phi and d phi / dn at the boundary points (stream-function trace).
///   3D: prescribed velocity g (J x 3), imposed through curl phi = g; phi . n = 0 always.
struct BoundaryData {
  Eigen::VectorXd phi;
  Eigen::VectorXd dphi_dn;
  Eigen::MatrixXd velocity;
};

struct VelocityData {
  double nu = 1.0;
  /// 2D: I x 1; 3D: I x 3.
  Eigen::MatrixXd curl_f;
  BoundaryData boundary;
};

/// Rows [nu lap^2 Psi_in; Psi_bd; d_n Psi_bd], (I + 2J) x (M+1).
LeastSquaresProblem assemble_stokes2d_velocity(const CollocationTables& tables, const VelocityData& data);
LeastSquaresProblem assemble_stokes2d_velocity(const Basis& basis, const CollocationSet& colloc,
                                               const VelocityData& data);

/// Rows [nu lap^2 Psi (x3, block diagonal); div; phi . n; curl phi (3 blocks)],
/// (4I + 4J) x 3(M+1). Columns are [alpha_1 | alpha_2 | alpha_3].
LeastSquaresProblem assemble_stokes3d_velocity(const CollocationTables& tables, const VelocityData& data);
LeastSquaresProblem assemble_stokes3d_velocity(const Basis& basis, const CollocationSet& colloc,
                                               const VelocityData& data);

/// Dispatches on tables.dim().
LeastSquaresProblem assemble_stokes_velocity(const CollocationTables& tables, const VelocityData& data);

struct PressureData {
  double nu = 1.0;
  /// I x d forcing at the interior points.
  Eigen::MatrixXd f;
  bool nonlinear = false;
  /// Pin point; must be strictly inside the box.
  Eigen::VectorXd pin;
};

/// Gradient-match rows grad p = f + nu lap u [- (u . grad) u] (d*I rows) plus p(pin) = 0.
LeastSquaresProblem assemble_pressure(const Basis& basis, const CollocationSet& colloc,
                                      const PressureData& data, const VelocityField& velocity);

struct SolveInfo {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index rank = 0;
  double residual_norm = 0.0;
  double condition_estimate = 0.0;
  double assemble_seconds = 0.0;
  double solve_seconds = 0.0;
};

struct PressureResult {
  PressureSolution solution;
  SolveInfo info;
};

/// (2I+1) x (M+1) in 2D, (3I+1) x (M+1) in 3D.
PressureResult recover_pressure(const Basis& basis, const CollocationSet& colloc,
                                const PressureData& data, const VelocityField& velocity,
                                const LsqOptions& lsq = {});

/// Wraps the velocity coefficients in the matching field type.
std::unique_ptr<VelocityField> make_velocity_field(const Basis& basis, Eigen::VectorXd alpha);

struct VelocityResult {
  std::unique_ptr<VelocityField> field;
  SolveInfo info;
};

VelocityResult solve_stokes_velocity(const Basis& basis, const CollocationSet& colloc,
                                     const VelocityData& data, const LsqOptions& lsq = {});

/// Coupled baseline: velocity components and pressure each expanded in the shared basis.
/// Rows: momentum (d*I), divergence (I), boundary velocity (d*J), pressure pin (1).
/// Columns [c_1 | ... | c_d | c_p].
struct CoupledData {
  double nu = 1.0;
  Eigen::MatrixXd f;                  ///< I x d
  Eigen::MatrixXd boundary_velocity;  ///< J x d, empty for zero
  Eigen::VectorXd pin;
};

/// With `iterate` (stacked [c_1..c_d | c_p] of the previous step) the convection term is
/// linearized Gauss-Newton style: (u^k . grad) u + (u . grad) u^k = rhs + (u^k . grad) u^k.
LeastSquaresProblem assemble_coupled(const Basis& basis, const CollocationTables& tables,
                                     const CoupledData& data, const Eigen::VectorXd* iterate = nullptr);

struct CoupledResult {
  std::unique_ptr<DirectVelocity> velocity;
  PressureSolution pressure;
  SolveInfo info;
};

CoupledResult coupled_from_coefficients(const Basis& basis, const Eigen::VectorXd& coeffs,
                                        const Eigen::VectorXd& pin);

CoupledResult solve_coupled_baseline(const Basis& basis, const CollocationSet& colloc,
                                     const CoupledData& data, const LsqOptions& lsq = {});

}  // namespace divfree

#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "divfree/stokes.hpp"

namespace divfree {

enum class Linearization { Stokes, GaussNewton, PicardI, PicardII, PicardIII };

/// Velocity system linearized about `iterate` (stacked coefficients). Boundary rows are the
/// Stokes ones. Needs tables built with CollocationTables::Use::Nonlinear.
///
/// 2D, with u^k = curl phi^k and W = lap phi^k:
///   Gauss-Newton  nu lap^2 phi - (u^k . grad) lap phi - (curl phi . grad) W = curl f - (u^k . grad) W
///   Picard I      nu lap^2 phi - (u^k . grad) lap phi                       = curl f
///   Picard II     nu lap^2 phi - (curl phi . grad) W                        = curl f
/// 3D, with the four terms
///   A = -(u^k . grad) lap phi     B = (lap phi . grad) u^k
///   C = (W . grad) curl phi       D = -(curl phi . grad) W
///   Gauss-Newton  nu lap^2 phi + A + B + C + D = curl f - (u^k . grad) W + (W . grad) u^k
///   Picard I      nu lap^2 phi + A + B         = curl f
///   Picard II     nu lap^2 phi + C + D         = curl f
/// Picard III is the entrywise average of the Picard I and II systems.
LeastSquaresProblem assemble_linearized(const CollocationTables& tables, const VelocityData& data,
                                        Linearization kind, const Eigen::VectorXd& iterate);

LeastSquaresProblem gn_step_2d(const CollocationTables& tables, const VelocityData& data,
                               const Eigen::VectorXd& alpha_k);
LeastSquaresProblem gn_step_3d(const CollocationTables& tables, const VelocityData& data,
                               const Eigen::VectorXd& alpha_k);

enum class PicardScheme { I, II, III };
LeastSquaresProblem picard_step(const CollocationTables& tables, const VelocityData& data,
                                const Eigen::VectorXd& iterate, PicardScheme scheme);

/// Residual of the full nonlinear collocation system (interior PDE rows followed by the
/// same constraint and boundary rows as the linear systems).
Eigen::VectorXd nonlinear_residual(const CollocationTables& tables, const VelocityData& data,
                                   const Eigen::VectorXd& alpha);

/// Velocity of the stream function (2D) or vector potential (3D) `alpha` at the interior
/// then boundary points, components stacked. Needs first derivatives in both tables.
Eigen::VectorXd collocation_velocity(const CollocationTables& tables, const Eigen::VectorXd& alpha);

enum class InitStrategy { Zero, Stokes, SchemeI };
enum class NonlinearScheme { GaussNewton, PicardI, PicardII, PicardIII };
enum class Termination { Converged, MaxIters, Diverged };

std::string to_string(InitStrategy s);
std::string to_string(NonlinearScheme s);
std::string to_string(Termination t);
InitStrategy parse_init_strategy(const std::string& s);
NonlinearScheme parse_scheme(const std::string& s);

struct NonlinearConfig {
  int max_iters = 40;
  /// Relative coefficient update ||a_new - a|| / ||a_new||.
  double update_tol = 1e-8;
  InitStrategy init = InitStrategy::SchemeI;
  /// Picard I steps after the Stokes solve when init = SchemeI.
  int warmup_iters = 5;
  NonlinearScheme scheme = NonlinearScheme::GaussNewton;
  /// Diverged when the residual grows by this factor three iterations in a row.
  double divergence_factor = 1.5;
  double damping = 1.0;
  LsqOptions lsq;

  /// 2D: 40 iterations, 5 warm-up steps. 3D: 15 iterations, 10 warm-up steps.
  static NonlinearConfig defaults_for(int dim);
  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  double residual = 0.0;
  /// ||u_{k+1} - u_k|| / ||u_{k+1}|| over the collocation points. The coefficients of the
  /// random-feature expansion are too ill-determined to converge themselves.
  double update_norm = 0.0;
  double seconds = 0.0;
};

struct IterationHistory {
  std::vector<IterationRecord> records;
  Termination reason = Termination::MaxIters;
  int warmup_iterations = 0;
  double initial_residual = 0.0;

  int iterations() const { return static_cast<int>(records.size()); }
  double final_update_norm() const;
  double final_residual() const;
  /// iter,residual,update_norm,seconds
  void write_csv(std::ostream& out) const;
};

struct NavierStokesResult {
  std::unique_ptr<VelocityField> velocity;
  PressureResult pressure;
  IterationHistory history;
  /// Dimensions and rank of the last velocity solve; times summed over all solves.
  SolveInfo velocity_info;
};

/// Decoupled solve: nonlinear iteration for the velocity, then pressure recovery with the
/// convection term included.
NavierStokesResult solve_navier_stokes(const Basis& basis, const CollocationSet& colloc,
                                       const VelocityData& velocity_data,
                                       const PressureData& pressure_data,
                                       const NonlinearConfig& config);

struct CoupledNavierStokesResult {
  CoupledResult solution;
  IterationHistory history;
};

/// Coupled baseline with Gauss-Newton steps started from the coupled Stokes solution.
CoupledNavierStokesResult solve_coupled_navier_stokes(const Basis& basis, const CollocationSet& colloc,
                                                      const CoupledData& data,
                                                      const NonlinearConfig& config);

}  // namespace divfree

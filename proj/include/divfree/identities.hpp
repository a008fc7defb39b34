#pragma once

#include <Eigen/Dense>

#include "divfree/feature_bank.hpp"

namespace divfree {

/// Max over points and components of |lhs - rhs|, divided by max |rhs| (absolute when the
/// right side vanishes everywhere).
struct IdentityCheck {
  double discrepancy = 0.0;
  double max_abs_difference = 0.0;
  double rhs_scale = 0.0;
};

/// 2D: curl((u . grad) u) against -(curl phi . grad) lap phi with u = curl phi. The left side
/// is a Richardson-extrapolated central difference (step h) of the analytic (u . grad) u.
IdentityCheck verify_curl_identity_2d(const Basis& basis, const Eigen::VectorXd& alpha,
                                      const PointSet& points, double h = 1e-3);

/// 3D: curl((u . grad) u) against (lap phi . grad) curl phi - (curl phi . grad) lap phi with
/// phi = curl chi (so div phi = 0) and u = curl phi. `chi` stacks three coefficient blocks.
IdentityCheck verify_curl_identity_3d(const Basis& basis, const Eigen::VectorXd& chi,
                                      const PointSet& points, double h = 1e-3);

/// 3D: curl curl phi against -lap phi for phi = curl chi, both analytic.
IdentityCheck verify_vorticity_identity_3d(const Basis& basis, const Eigen::VectorXd& chi,
                                           const PointSet& points);

}  // namespace divfree

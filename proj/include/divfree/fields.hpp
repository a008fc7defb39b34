#pragma once

#include <memory>

#include <Eigen/Dense>
#include <json.hpp>

#include "divfree/feature_bank.hpp"

namespace divfree {

/// Velocity and its derivatives at a point set (one row per point).
struct VelocityEval {
  Eigen::MatrixXd u;     ///< n x d
  Eigen::MatrixXd grad;  ///< n x d*d, column a*d + b holds d u_a / d x_b
  Eigen::MatrixXd lap;   ///< n x d, empty unless requested

  Eigen::VectorXd divergence() const;
};

class VelocityField {
 public:
  virtual ~VelocityField() = default;
  virtual int dim() const = 0;
  virtual const Basis& basis() const = 0;
  /// Evaluated in chunks so large point sets do not materialize full tables.
  virtual VelocityEval evaluate(const PointSet& points, bool with_laplacian = true) const = 0;
  virtual nlohmann::json to_json() const = 0;
};

/// 2D stream function phi = sum alpha_m psi_m, u = (d_y phi, -d_x phi).
class StreamSolution2D final : public VelocityField {
 public:
  StreamSolution2D(Basis basis, Eigen::VectorXd alpha);
  int dim() const override { return 2; }
  const Basis& basis() const override { return basis_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  VelocityEval evaluate(const PointSet& points, bool with_laplacian = true) const override;
  nlohmann::json to_json() const override;

 private:
  Basis basis_;
  Eigen::VectorXd alpha_;
};

/// 3D vector potential with components stacked [alpha_1; alpha_2; alpha_3], u = curl phi.
class PotentialSolution3D final : public VelocityField {
 public:
  PotentialSolution3D(Basis basis, Eigen::VectorXd alpha);
  int dim() const override { return 3; }
  const Basis& basis() const override { return basis_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  Eigen::Ref<const Eigen::VectorXd> component(int c) const;
  VelocityEval evaluate(const PointSet& points, bool with_laplacian = true) const override;
  nlohmann::json to_json() const override;

 private:
  Basis basis_;
  Eigen::VectorXd alpha_;
};

/// Velocity components expanded directly in the basis (coupled baseline), stacked per component.
class DirectVelocity final : public VelocityField {
 public:
  DirectVelocity(Basis basis, Eigen::VectorXd coeffs);
  int dim() const override { return basis_.dim(); }
  const Basis& basis() const override { return basis_; }
  const Eigen::VectorXd& coeffs() const { return coeffs_; }
  VelocityEval evaluate(const PointSet& points, bool with_laplacian = true) const override;
  nlohmann::json to_json() const override;

 private:
  Basis basis_;
  Eigen::VectorXd coeffs_;
};

struct PressureSolution {
  Basis basis;
  Eigen::VectorXd beta;
  Eigen::VectorXd pin;

  Eigen::VectorXd values(const PointSet& points) const;
  /// n x d
  Eigen::MatrixXd gradient(const PointSet& points) const;
  nlohmann::json to_json() const;
};

nlohmann::json basis_to_json(const Basis& basis);
Basis basis_from_json(const nlohmann::json& j);
std::unique_ptr<VelocityField> velocity_from_json(const nlohmann::json& j);
PressureSolution pressure_from_json(const nlohmann::json& j);

/// Rows per chunk used by the field evaluators.
inline constexpr Eigen::Index kEvalChunk = 2048;

}  // namespace divfree

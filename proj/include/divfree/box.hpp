#pragma once

#include <Eigen/Dense>

namespace divfree {

/// Point sets are stored one point per row.
using PointSet = Eigen::MatrixXd;

/// Axis-aligned box (lower, upper) in 2D or 3D.
class BoxDomain {
 public:
  BoxDomain(Eigen::VectorXd lower, Eigen::VectorXd upper);

  static BoxDomain unit(int dim);

  int dim() const { return static_cast<int>(lower_.size()); }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  Eigen::VectorXd center() const { return 0.5 * (lower_ + upper_); }
  Eigen::VectorXd extent() const { return upper_ - lower_; }
  double half_diagonal() const { return 0.5 * extent().norm(); }

  /// Closed-box membership with absolute slack `tol`.
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x, double tol = 0.0) const;
  /// Strict interior membership.
  bool strictly_contains(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// Smallest distance from x to any face.
  double distance_to_boundary(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
};

}  // namespace divfree

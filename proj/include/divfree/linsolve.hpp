#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace divfree {

/// Contiguous row range of a stacked system, for diagnostics.
struct RowBlock {
  std::string label;
  Eigen::Index begin = 0;
  Eigen::Index size = 0;
};

struct LeastSquaresProblem {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd rhs;
  std::vector<RowBlock> blocks;

  Eigen::Index rows() const { return matrix.rows(); }
  Eigen::Index cols() const { return matrix.cols(); }

  /// Throws std::invalid_argument on empty or mismatched shapes and bad block ranges.
  void validate() const;
  /// Per-block residual norms ||(Ax - b)_block||.
  std::vector<std::pair<std::string, double>> block_residuals(const Eigen::VectorXd& x) const;
};

enum class LsqMethod { PivotedQR, SVD };

struct LsqOptions {
  LsqMethod method = LsqMethod::PivotedQR;
  /// Absolute cutoff on pivots / singular values. Default max(m,n) * eps * largest column norm.
  std::optional<double> rank_tol;
  /// Tikhonov weight lambda; adds sqrt(lambda) I rows. 0 disables.
  double ridge = 0.0;
  /// Row scaling by block label, applied to matrix and rhs before solving. Blocks not listed
  /// keep weight 1 and labels absent from the problem are ignored, so one list can serve
  /// several formulations. residual_norm then refers to the weighted system.
  std::vector<std::pair<std::string, double>> block_weights;
};

struct LsqResult {
  Eigen::VectorXd x;
  /// ||Ax - b|| of the original (unregularized) system.
  double residual_norm = 0.0;
  Eigen::Index rank = 0;
  /// Largest over smallest retained pivot (QR) or singular value (SVD).
  double condition_estimate = 0.0;
};

/// Minimum-norm least-squares solution. Tall systems are first reduced by an unpivoted
/// Householder QR in the problem's own storage; the square factor is then solved with a
/// complete orthogonal decomposition (or SVD). Throws on non-finite input.
LsqResult solve_lsq(LeastSquaresProblem problem, const LsqOptions& options = {});

/// Binary dump: "DFLS", int64 rows, int64 cols, column-major matrix, rhs.
void dump_problem(const LeastSquaresProblem& problem, const std::string& path);
LeastSquaresProblem load_problem(const std::string& path);

}  // namespace divfree

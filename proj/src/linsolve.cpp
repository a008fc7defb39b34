#include "divfree/linsolve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace divfree {

void LeastSquaresProblem::validate() const {
  if (matrix.rows() < 1 || matrix.cols() < 1)
    throw std::invalid_argument("LeastSquaresProblem: empty matrix");
  if (rhs.size() != matrix.rows())
    throw std::invalid_argument("LeastSquaresProblem: rhs length " + std::to_string(rhs.size()) +
                                " != rows " + std::to_string(matrix.rows()));
  for (const auto& b : blocks)
    if (b.begin < 0 || b.size < 0 || b.begin + b.size > matrix.rows())
      throw std::invalid_argument("LeastSquaresProblem: block '" + b.label + "' out of range");
}

std::vector<std::pair<std::string, double>> LeastSquaresProblem::block_residuals(
    const Eigen::VectorXd& x) const {
  const Eigen::VectorXd r = matrix * x - rhs;
  std::vector<std::pair<std::string, double>> out;
  for (const auto& b : blocks) out.emplace_back(b.label, r.segment(b.begin, b.size).norm());
  return out;
}

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct SquareSolve {
  Eigen::VectorXd x;
  Eigen::Index rank;
  double condition;
};

// Min-norm solve of a (possibly wide or square) system with an absolute cutoff.
SquareSolve solve_small(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, LsqMethod method,
                        double abs_tol) {
  const double scale = a.colwise().norm().maxCoeff();
  if (scale == 0.0) return {Eigen::VectorXd::Zero(a.cols()), 0, 0.0};
  if (method == LsqMethod::SVD) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    svd.setThreshold(std::max(abs_tol / s(0), kEps));
    const Eigen::Index rank = svd.rank();
    return {svd.solve(b), rank, rank > 0 ? s(0) / s(rank - 1) : 0.0};
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a.rows(), a.cols());
  // Relative to the largest pivot, which equals the largest column norm.
  cod.setThreshold(std::max(abs_tol / scale, kEps));
  cod.compute(a);
  const Eigen::Index rank = cod.rank();
  double cond = 0.0;
  if (rank > 0) {
    const auto diag = cod.matrixQTZ().diagonal().head(rank).cwiseAbs();
    cond = diag.maxCoeff() / diag.minCoeff();
  }
  return {cod.solve(b), rank, cond};
}

}  // namespace

LsqResult solve_lsq(LeastSquaresProblem problem, const LsqOptions& options) {
  problem.validate();
  if (!problem.matrix.allFinite() || !problem.rhs.allFinite())
    throw std::invalid_argument("solve_lsq: non-finite entries in the system");
  if (options.ridge < 0.0 || !std::isfinite(options.ridge))
    throw std::invalid_argument("solve_lsq: ridge must be >= 0");
  if (options.rank_tol && !(*options.rank_tol >= 0.0))
    throw std::invalid_argument("solve_lsq: rank_tol must be >= 0");

  for (const auto& [label, w] : options.block_weights) {
    if (!(w > 0.0) || !std::isfinite(w))
      throw std::invalid_argument("solve_lsq: block weight for " + label + " must be positive");
    for (const RowBlock& b : problem.blocks)
      if (b.label == label) {
        problem.matrix.middleRows(b.begin, b.size) *= w;
        problem.rhs.segment(b.begin, b.size) *= w;
      }
  }

  const Eigen::Index m = problem.rows();
  const Eigen::Index n = problem.cols();
  const double col_scale = problem.matrix.colwise().norm().maxCoeff();
  const double abs_tol =
      options.rank_tol.value_or(static_cast<double>(std::max(m, n)) * kEps * col_scale);

  LsqResult out;
  if (m > n) {
    Eigen::MatrixXd r;
    Eigen::VectorXd qtb = std::move(problem.rhs);
    {
      Eigen::HouseholderQR<Eigen::Ref<Eigen::MatrixXd>> qr(problem.matrix);
      qtb.applyOnTheLeft(qr.householderQ().adjoint());
      r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    }
    problem.matrix.resize(0, 0);
    const double tail2 = qtb.tail(m - n).squaredNorm();
    const Eigen::VectorXd head = qtb.head(n);

    SquareSolve s;
    if (options.ridge > 0.0) {
      Eigen::MatrixXd aug(2 * n, n);
      aug.topRows(n) = r;
      aug.bottomRows(n) = std::sqrt(options.ridge) * Eigen::MatrixXd::Identity(n, n);
      Eigen::VectorXd baug = Eigen::VectorXd::Zero(2 * n);
      baug.head(n) = head;
      Eigen::HouseholderQR<Eigen::Ref<Eigen::MatrixXd>> qr2(aug);
      baug.applyOnTheLeft(qr2.householderQ().adjoint());
      const Eigen::MatrixXd r2 = aug.topRows(n).triangularView<Eigen::Upper>();
      s = solve_small(r2, baug.head(n), options.method, abs_tol);
    } else {
      s = solve_small(r, head, options.method, abs_tol);
    }
    out.x = std::move(s.x);
    out.rank = s.rank;
    out.condition_estimate = s.condition;
    out.residual_norm = std::sqrt(tail2 + (r.triangularView<Eigen::Upper>() * out.x - head).squaredNorm());
  } else {
    SquareSolve s;
    if (options.ridge > 0.0) {
      Eigen::MatrixXd aug(m + n, n);
      aug.topRows(m) = problem.matrix;
      aug.bottomRows(n) = std::sqrt(options.ridge) * Eigen::MatrixXd::Identity(n, n);
      Eigen::VectorXd baug = Eigen::VectorXd::Zero(m + n);
      baug.head(m) = problem.rhs;
      s = solve_small(aug, baug, options.method, abs_tol);
    } else {
      s = solve_small(problem.matrix, problem.rhs, options.method, abs_tol);
    }
    out.x = std::move(s.x);
    out.rank = s.rank;
    out.condition_estimate = s.condition;
    out.residual_norm = (problem.matrix * out.x - problem.rhs).norm();
  }
  return out;
}

void dump_problem(const LeastSquaresProblem& problem, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("dump_problem: cannot open " + path);
  const std::int64_t dims[2] = {problem.rows(), problem.cols()};
  f.write("DFLS", 4);
  f.write(reinterpret_cast<const char*>(dims), sizeof dims);
  f.write(reinterpret_cast<const char*>(problem.matrix.data()),
          static_cast<std::streamsize>(sizeof(double) * problem.matrix.size()));
  f.write(reinterpret_cast<const char*>(problem.rhs.data()),
          static_cast<std::streamsize>(sizeof(double) * problem.rhs.size()));
  if (!f) throw std::runtime_error("dump_problem: write failed for " + path);
}

LeastSquaresProblem load_problem(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_problem: cannot open " + path);
  char magic[4];
  std::int64_t dims[2];
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(dims), sizeof dims);
  if (!f || std::memcmp(magic, "DFLS", 4) != 0 || dims[0] < 1 || dims[1] < 1)
    throw std::runtime_error("load_problem: bad header in " + path);
  LeastSquaresProblem p;
  p.matrix.resize(dims[0], dims[1]);
  p.rhs.resize(dims[0]);
  f.read(reinterpret_cast<char*>(p.matrix.data()),
         static_cast<std::streamsize>(sizeof(double) * p.matrix.size()));
  f.read(reinterpret_cast<char*>(p.rhs.data()),
         static_cast<std::streamsize>(sizeof(double) * p.rhs.size()));
  if (!f) throw std::runtime_error("load_problem: truncated file " + path);
  return p;
}

}  // namespace divfree

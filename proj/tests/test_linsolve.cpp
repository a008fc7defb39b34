#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "divfree/linsolve.hpp"

using namespace divfree;

namespace {

LeastSquaresProblem problem(Eigen::MatrixXd a, Eigen::VectorXd b) {
  LeastSquaresProblem p;
  p.matrix = std::move(a);
  p.rhs = std::move(b);
  return p;
}

Eigen::MatrixXd random_matrix(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(m, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  return a;
}

}  // namespace

TEST_CASE("identity system") {
  for (LsqMethod method : {LsqMethod::PivotedQR, LsqMethod::SVD}) {
    const LsqResult r = solve_lsq(problem(Eigen::Matrix2d::Identity(), Eigen::Vector2d(1.0, 2.0)), {method});
    CHECK(r.x.isApprox(Eigen::Vector2d(1.0, 2.0)));
    CHECK(r.residual_norm == doctest::Approx(0.0));
    CHECK(r.rank == 2);
  }
}

TEST_CASE("overdetermined single column") {
  for (LsqMethod method : {LsqMethod::PivotedQR, LsqMethod::SVD}) {
    const LsqResult r = solve_lsq(problem(Eigen::Vector2d(1.0, 1.0), Eigen::Vector2d(0.0, 2.0)), {method});
    CHECK(r.x(0) == doctest::Approx(1.0));
    CHECK(r.residual_norm == doctest::Approx(std::sqrt(2.0)));
  }
}

TEST_CASE("rank deficient system gives the minimum norm solution") {
  Eigen::Matrix2d a;
  a << 1, 1, 1, 1;
  for (LsqMethod method : {LsqMethod::PivotedQR, LsqMethod::SVD}) {
    LsqOptions o{method};
    o.rank_tol = 1e-10;
    const LsqResult r = solve_lsq(problem(a, Eigen::Vector2d(2.0, 2.0)), o);
    CHECK(r.x.isApprox(Eigen::Vector2d(1.0, 1.0), 1e-12));
    CHECK(r.rank == 1);
  }
}

TEST_CASE("normal equations hold for random tall systems") {
  for (std::uint64_t seed = 0; seed < 5; ++seed)
    for (LsqMethod method : {LsqMethod::PivotedQR, LsqMethod::SVD}) {
      const Eigen::MatrixXd a = random_matrix(120, 30, seed);
      const Eigen::VectorXd b = random_matrix(120, 1, seed + 100);
      const LsqResult r = solve_lsq(problem(a, b), {method});
      const double ne = (a.transpose() * (a * r.x - b)).norm();
      CHECK(ne <= 1e-8 * a.norm() * b.norm());
      CHECK(r.residual_norm == doctest::Approx((a * r.x - b).norm()).epsilon(1e-10));
      CHECK(r.rank == 30);
      // Optimality against a reference solver and against perturbations.
      const Eigen::VectorXd ref = a.colPivHouseholderQr().solve(b);
      CHECK((r.x - ref).norm() <= 1e-10 * ref.norm());
      const Eigen::VectorXd e = random_matrix(30, 1, seed + 200);
      CHECK((a * (r.x + 1e-3 * e) - b).norm() >= r.residual_norm);
    }
}

TEST_CASE("wide and rank deficient systems agree with the pseudoinverse") {
  // Rank 8 matrix, 20 x 40.
  const Eigen::MatrixXd a = random_matrix(20, 8, 1) * random_matrix(8, 40, 2);
  const Eigen::VectorXd b = random_matrix(20, 1, 3);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-10);
  const Eigen::VectorXd pinv = svd.solve(b);
  for (LsqMethod method : {LsqMethod::PivotedQR, LsqMethod::SVD}) {
    LsqOptions o{method};
    o.rank_tol = 1e-8;
    const LsqResult r = solve_lsq(problem(a, b), o);
    CHECK(r.rank == 8);
    CHECK((r.x - pinv).norm() <= 1e-8 * pinv.norm());
  }
  // Tall, rank deficient.
  const Eigen::MatrixXd t = random_matrix(60, 5, 4) * random_matrix(5, 12, 5);
  const Eigen::VectorXd tb = random_matrix(60, 1, 6);
  Eigen::JacobiSVD<Eigen::MatrixXd> tsvd(t, Eigen::ComputeThinU | Eigen::ComputeThinV);
  tsvd.setThreshold(1e-10);
  LsqOptions o;
  o.rank_tol = 1e-8;
  const LsqResult r = solve_lsq(problem(t, tb), o);
  CHECK(r.rank == 5);
  CHECK((r.x - tsvd.solve(tb)).norm() <= 1e-8 * tsvd.solve(tb).norm());
}

TEST_CASE("ridge shrinks toward the Tikhonov solution") {
  const Eigen::MatrixXd a = random_matrix(50, 10, 7);
  const Eigen::VectorXd b = random_matrix(50, 1, 8);
  const double lambda = 0.5;
  LsqOptions o;
  o.ridge = lambda;
  const LsqResult r = solve_lsq(problem(a, b), o);
  const Eigen::MatrixXd n = a.transpose() * a + lambda * Eigen::MatrixXd::Identity(10, 10);
  const Eigen::VectorXd ref = n.ldlt().solve(a.transpose() * b);
  CHECK((r.x - ref).norm() <= 1e-10 * ref.norm());
  CHECK(r.residual_norm == doctest::Approx((a * r.x - b).norm()).epsilon(1e-10));
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(solve_lsq(problem(Eigen::MatrixXd(0, 0), Eigen::VectorXd(0))), std::invalid_argument);
  CHECK_THROWS_AS(solve_lsq(problem(Eigen::Matrix2d::Identity(), Eigen::Vector3d::Ones())), std::invalid_argument);
  Eigen::Matrix2d bad = Eigen::Matrix2d::Identity();
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(solve_lsq(problem(bad, Eigen::Vector2d::Ones())), std::invalid_argument);
  LsqOptions o;
  o.ridge = -1.0;
  CHECK_THROWS_AS(solve_lsq(problem(Eigen::Matrix2d::Identity(), Eigen::Vector2d::Ones()), o), std::invalid_argument);
}

TEST_CASE("block residuals") {
  LeastSquaresProblem p = problem(Eigen::Matrix3d::Identity(), Eigen::Vector3d(1.0, 2.0, 3.0));
  p.blocks = {{"a", 0, 2}, {"b", 2, 1}};
  const auto res = p.block_residuals(Eigen::Vector3d::Zero());
  REQUIRE(res.size() == 2);
  CHECK(res[0].second == doctest::Approx(std::sqrt(5.0)));
  CHECK(res[1].second == doctest::Approx(3.0));
  p.blocks.push_back({"c", 2, 5});
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("binary dump round trip") {
  LeastSquaresProblem p = problem(random_matrix(7, 3, 9), random_matrix(7, 1, 10));
  const auto path = (std::filesystem::temp_directory_path() / "divfree_dump_test.bin").string();
  dump_problem(p, path);
  const LeastSquaresProblem q = load_problem(path);
  CHECK(q.matrix == p.matrix);
  CHECK(q.rhs == p.rhs);
  std::filesystem::remove(path);
  CHECK_THROWS(load_problem(path));
}

TEST_CASE("block weights rescale rows and shift the compromise between blocks") {
  // Two incompatible equations x = 0 and x = 1: the minimizer is the weighted mean.
  LeastSquaresProblem p;
  p.matrix = Eigen::MatrixXd::Ones(2, 1);
  p.rhs = Eigen::Vector2d(0.0, 1.0);
  p.blocks = {{"a", 0, 1}, {"b", 1, 1}};
  CHECK(solve_lsq(p).x(0) == doctest::Approx(0.5));
  LsqOptions o;
  o.block_weights = {{"b", 3.0}};
  CHECK(solve_lsq(p, o).x(0) == doctest::Approx(9.0 / 10.0));
  o.block_weights = {{"b", 3.0}, {"not-there", 2.0}};
  CHECK(solve_lsq(p, o).x(0) == doctest::Approx(9.0 / 10.0));
  o.block_weights = {{"a", 0.0}};
  CHECK_THROWS_AS(solve_lsq(p, o), std::invalid_argument);
}

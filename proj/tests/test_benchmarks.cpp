#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <algorithm>
#include <numeric>
#include <random>

#include "divfree/benchmarks.hpp"

using namespace divfree;

namespace {

constexpr double pi = std::numbers::pi;
using Vec = Eigen::VectorXd;
// Exact (u, p) written out directly from the closed forms; returns d+1 values.
using Exact = std::function<Vec(const Vec&)>;

Exact kovasznay(double nu) {
  const double zeta = 1.0 / (2 * nu) - std::sqrt(1.0 / (4 * nu * nu) + 4 * pi * pi);
  return [zeta](const Vec& x) {
    Vec out(3);
    out << 1 - std::exp(zeta * x(0)) * std::cos(2 * pi * x(1)),
        zeta / (2 * pi) * std::exp(zeta * x(0)) * std::sin(2 * pi * x(1)), 0.5 * std::exp(2 * zeta * x(0));
    return out;
  };
}

Vec ns2d(const Vec& x) {
  const double y = x(1), s = std::sin(pi * x(0));
  Vec out(3);
  out << 16 * y * (y - 1) * (2 * y - 1) * s * s, -8 * pi * y * y * (y - 1) * (y - 1) * std::sin(2 * pi * x(0)),
      std::sin(pi * x(0)) * std::cos(pi * x(1));
  return out;
}

Vec stokes3d(const Vec& x) {
  Vec out(4);
  out << std::exp(std::cos(pi * x(1))) * std::sin(pi * x(2)), std::exp(std::cos(pi * x(2))) * std::sin(pi * x(0)),
      std::exp(std::cos(pi * x(0))) * std::sin(pi * x(1)),
      std::exp(std::cos(pi * x(0)) + std::sin(pi * x(1))) + std::exp(std::cos(pi * x(2)) + std::sin(pi * x(0)));
  return out;
}

Vec ns3d(const Vec& v) {
  const double x = v(0), y = v(1), z = v(2);
  using std::cos;
  using std::sin;
  Vec out(4);
  out << 2 * (y - 1) * (z - 1) * sin(y) * sin(z) - 2 * (y - 1) * sin(y) * cos(z) - 2 * (z - 1) * cos(y) * sin(z),
      2 * (z - 1) * (x - 1) * sin(z) * sin(x) - 2 * (z - 1) * sin(z) * cos(x) - 2 * (x - 1) * cos(z) * sin(x),
      2 * (x - 1) * (y - 1) * sin(x) * sin(y) - 2 * (x - 1) * sin(x) * cos(y) - 2 * (y - 1) * cos(x) * sin(y),
      x * y * z + x * x * x * y * y * y * z - 5.0 / 32.0;
  return out;
}

struct Case {
  std::string name;
  double nu;
  Exact exact;
};

std::vector<Case> all_cases() {
  return {{"stokes2d", 1e-2, kovasznay(1e-2)}, {"ns2d", 1e-1, ns2d}, {"stokes3d", 1e-2, stokes3d}, {"ns3d", 1e-2, ns3d}};
}

double d1(const Exact& f, const Vec& x, int comp, int r, double h = 1e-3) {
  auto c = [&](double s) {
    Vec p = x, m = x;
    p(r) += s;
    m(r) -= s;
    return (f(p)(comp) - f(m)(comp)) / (2 * s);
  };
  return (4 * c(h / 2) - c(h)) / 3;
}

double d2(const Exact& f, const Vec& x, int comp, int r, double h = 1e-3) {
  auto c = [&](double s) {
    Vec p = x, m = x;
    p(r) += s;
    m(r) -= s;
    return (f(p)(comp) - 2 * f(x)(comp) + f(m)(comp)) / (s * s);
  };
  return (4 * c(h / 2) - c(h)) / 3;
}

// -nu lap u + grad p [+ (u . grad) u] from finite differences of the hand-written fields.
Vec fd_forcing(const Exact& f, const Vec& x, int d, double nu, bool nonlinear) {
  const Vec val = f(x);
  Vec out(d);
  for (int i = 0; i < d; ++i) {
    double lap = 0.0, conv = 0.0;
    for (int r = 0; r < d; ++r) {
      lap += d2(f, x, i, r);
      conv += val(r) * d1(f, x, i, r);
    }
    out(i) = -nu * lap + d1(f, x, d, i) + (nonlinear ? conv : 0.0);
  }
  return out;
}

Vec random_point(const BoxDomain& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.02, 0.98);
  Vec x(box.dim());
  for (int r = 0; r < box.dim(); ++r) x(r) = box.lower()(r) + u(rng) * box.extent()(r);
  return x;
}

}  // namespace

TEST_CASE("case names") {
  CHECK(case_names().size() == 4);
  CHECK(canonical_case_name("stokes2d") == "stokes2d-kovasznay");
  CHECK(canonical_case_name("ns3d-trig") == "ns3d-trig");
  CHECK_THROWS_AS(make_case("cavity", 1.0), std::invalid_argument);
  CHECK_THROWS_AS(make_case("ns2d", 0.0), std::invalid_argument);
  CHECK(make_case("stokes2d", 1.0).domain().lower()(1) == -0.5);
  CHECK_FALSE(make_case("stokes3d", 1.0).nonlinear());
  CHECK(make_case("ns3d", 1.0).nonlinear());
}

TEST_CASE("closed forms agree with direct evaluation") {
  std::mt19937_64 rng(1);
  for (const auto& c : all_cases()) {
    const BenchmarkCase bc = make_case(c.name, c.nu);
    const int d = bc.dim();
    for (int k = 0; k < 50; ++k) {
      const Vec x = random_point(bc.domain(), rng);
      const Vec e = c.exact(x);
      CHECK((bc.velocity(x) - e.head(d)).norm() <= 1e-13 * (1 + e.head(d).norm()));
      CHECK(std::abs(bc.pressure(x) - e(d)) <= 1e-13 * (1 + std::abs(e(d))));
    }
  }
}

TEST_CASE("forcing matches finite differences of (u, p)") {
  std::mt19937_64 rng(2);
  for (const auto& c : all_cases()) {
    const BenchmarkCase bc = make_case(c.name, c.nu);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const Vec x = random_point(bc.domain(), rng);
      const Vec f = bc.forcing(x);
      const Vec ref = fd_forcing(c.exact, x, bc.dim(), c.nu, bc.nonlinear());
      worst = std::max(worst, (f - ref).norm() / std::max(ref.norm(), 1.0));
    }
    INFO(c.name);
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("forcing gradient and curl match finite differences of the forcing") {
  std::mt19937_64 rng(3);
  for (const auto& c : all_cases()) {
    const BenchmarkCase bc = make_case(c.name, c.nu);
    const int d = bc.dim();
    for (int k = 0; k < 30; ++k) {
      const Vec x = random_point(bc.domain(), rng);
      const Eigen::MatrixXd g = bc.forcing_gradient(x);
      const Exact forcing = [&](const Vec& y) { return bc.forcing(y); };
      double scale = std::max(g.norm(), 1.0);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) CHECK(std::abs(g(i, j) - d1(forcing, x, i, j)) <= 1e-6 * scale);
      const Eigen::MatrixXd curl = bc.curl_forcing_at(x.transpose());
      if (d == 2) {
        CHECK(curl(0, 0) == doctest::Approx(g(1, 0) - g(0, 1)).epsilon(1e-12));
      } else {
        CHECK(curl(0, 0) == doctest::Approx(g(2, 1) - g(1, 2)).epsilon(1e-12));
        CHECK(curl(0, 1) == doctest::Approx(g(0, 2) - g(2, 0)).epsilon(1e-12));
        CHECK(curl(0, 2) == doctest::Approx(g(1, 0) - g(0, 1)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("exact velocities are divergence free") {
  std::mt19937_64 rng(4);
  for (const auto& c : all_cases()) {
    const BenchmarkCase bc = make_case(c.name, c.nu);
    PointSet pts(1000, bc.dim());
    for (int k = 0; k < 1000; ++k) pts.row(k) = random_point(bc.domain(), rng).transpose();
    const VelocityEval e = bc.exact_velocity_eval(pts);
    INFO(c.name);
    CHECK(e.divergence().cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("2D stream functions reproduce the velocity") {
  std::mt19937_64 rng(5);
  for (const char* name : {"stokes2d", "ns2d"}) {
    const BenchmarkCase bc = make_case(name, 0.05);
    REQUIRE(bc.has_stream_function());
    for (int k = 0; k < 50; ++k) {
      const Vec x = random_point(bc.domain(), rng);
      const Vec u = bc.velocity(x);
      CHECK(bc.stream(x, {0, 1, 0}) == doctest::Approx(u(0)).epsilon(1e-12));
      CHECK(-bc.stream(x, {1, 0, 0}) == doctest::Approx(u(1)).epsilon(1e-12));
    }
  }
  CHECK_FALSE(make_case("ns3d", 1.0).has_stream_function());
}

TEST_CASE("Kovasznay exponent is stable for tiny viscosity") {
  const double nu = 1e-9;
  // u_x(0, 0) = -zeta, and zeta ~ -4 pi^2 nu for small nu
  const double ux = make_case("stokes2d", nu).velocity_partial(0, Eigen::Vector2d(0.0, 0.0), {1, 0, 0});
  CHECK(ux == doctest::Approx(4 * pi * pi * nu).epsilon(1e-6));
}

TEST_CASE("relative L2 error") {
  Eigen::MatrixXd exact(2, 1), approx(2, 1);
  exact << 1, 1;
  approx << 1, 0;
  CHECK(relative_l2_error(exact, approx) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(relative_l2_error(exact, exact) == 0.0);
  CHECK(relative_l2_error(exact, Eigen::MatrixXd::Zero(2, 1)) == 1.0);
  CHECK_THROWS_AS(relative_l2_error(Eigen::MatrixXd::Zero(2, 1), exact), std::domain_error);
}

TEST_CASE("divergence error of linear fields") {
  // (x, -y) and (x, y) on a grid
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(50), two = Eigen::VectorXd::Constant(50, 2.0);
  CHECK(divergence_error(zero) == 0.0);
  CHECK(divergence_error(two) == doctest::Approx(2.0));
}

TEST_CASE("dimension formulas") {
  const auto d2 = expected_dimensions(2, 2500, 200, 1000);
  CHECK(d2[0].dims.rows == 2900);
  CHECK(d2[0].dims.cols == 1001);
  CHECK(d2[1].dims.rows == 5001);
  CHECK(d2[1].dims.cols == 1001);
  CHECK(d2[2].dims.rows == 7901);
  CHECK(d2[2].dims.cols == 3003);
  const auto d3 = expected_dimensions(3, 10000, 2400, 1500);
  CHECK(d3[0].dims.rows == 49600);
  CHECK(d3[0].dims.cols == 4503);
  CHECK(d3[1].dims.rows == 30001);
  CHECK(d3[1].dims.cols == 1501);
  CHECK(d3[2].dims.rows == 47201);
  CHECK(d3[2].dims.cols == 6004);
  for (const auto* d : {&d2, &d3}) CHECK((*d)[0].dims.cost() + (*d)[1].dims.cost() < (*d)[2].dims.cost());
  CHECK_THROWS_AS(complexity_report(2, 2500, 200, 1000, {{"decoupled", "velocity", {2900, 1000}}}), std::logic_error);
  CHECK_NOTHROW(complexity_report(2, 2500, 200, 1000, {{"decoupled", "velocity", {2900, 1001}}}));
}

TEST_CASE("metrics on the exact solution and permutation invariance") {
  const BenchmarkCase bc = make_case("stokes2d", 0.1);
  std::mt19937_64 rng(6);
  PointSet pts(200, 2);
  for (int k = 0; k < 200; ++k) pts.row(k) = random_point(bc.domain(), rng).transpose();
  const Eigen::MatrixXd u = bc.velocity_at(pts);
  const double e = relative_l2_error(u, u * 1.01);
  PointSet shuffled = pts;
  std::vector<int> perm(200);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (int k = 0; k < 200; ++k) shuffled.row(k) = pts.row(perm[k]);
  const Eigen::MatrixXd us = bc.velocity_at(shuffled);
  CHECK(relative_l2_error(us, us * 1.01) == doctest::Approx(e).epsilon(1e-12));
}

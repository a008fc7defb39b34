#include "divfree/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace divfree {

namespace fn {

Fn1D one() {
  return [](double, int n) { return n == 0 ? 1.0 : 0.0; };
}

Fn1D poly(std::vector<double> coeffs) {
  return [c = std::move(coeffs)](double t, int n) {
    double sum = 0.0;
    for (int k = static_cast<int>(c.size()) - 1; k >= n; --k) {
      double falling = 1.0;
      for (int q = 0; q < n; ++q) falling *= k - q;
      sum += c[static_cast<std::size_t>(k)] * falling * std::pow(t, k - n);
    }
    return sum;
  };
}

Fn1D exp_lin(double a) {
  return [a](double t, int n) { return std::pow(a, n) * std::exp(a * t); };
}

Fn1D sin_lin(double w) {
  return [w](double t, int n) {
    const double s = std::sin(w * t);
    const double c = std::cos(w * t);
    const double v[4] = {s, c, -s, -c};
    return std::pow(w, n) * v[n % 4];
  };
}

Fn1D cos_lin(double w) {
  return [w](double t, int n) {
    const double s = std::sin(w * t);
    const double c = std::cos(w * t);
    const double v[4] = {c, -s, -c, s};
    return std::pow(w, n) * v[n % 4];
  };
}

Fn1D exp_of(Fn1D h) {
  return [h = std::move(h)](double t, int n) {
    const double g = std::exp(h(t, 0));
    if (n == 0) return g;
    const double h1 = h(t, 1);
    const double h2 = n >= 2 ? h(t, 2) : 0.0;
    const double h3 = n >= 3 ? h(t, 3) : 0.0;
    switch (n) {
      case 1: return h1 * g;
      case 2: return (h2 + h1 * h1) * g;
      case 3: return (h3 + 3.0 * h1 * h2 + h1 * h1 * h1) * g;
      case 4: {
        const double h4 = h(t, 4);
        return (h4 + 4.0 * h1 * h3 + 3.0 * h2 * h2 + 6.0 * h1 * h1 * h2 + h1 * h1 * h1 * h1) * g;
      }
      default: throw std::out_of_range("fn::exp_of: derivative order above 4");
    }
  };
}

Fn1D times_poly(Fn1D f, std::vector<double> coeffs) {
  if (coeffs.size() > 2) throw std::invalid_argument("fn::times_poly: degree above 1");
  coeffs.resize(2, 0.0);
  return [f = std::move(f), c0 = coeffs[0], c1 = coeffs[1]](double t, int n) {
    double v = (c0 + c1 * t) * f(t, n);
    if (n > 0) v += n * c1 * f(t, n - 1);
    return v;
  };
}

}  // namespace fn

SeparableField& SeparableField::add(double coeff, Fn1D f0, Fn1D f1, Fn1D f2) {
  terms_.push_back(SeparableTerm{coeff, {std::move(f0), std::move(f1), std::move(f2)}});
  return *this;
}

double SeparableField::partial(const Eigen::Ref<const Eigen::VectorXd>& x,
                               std::array<int, 3> order) const {
  double sum = 0.0;
  for (const auto& term : terms_) {
    double v = term.coeff;
    for (int r = 0; r < 3 && v != 0.0; ++r) {
      if (r < dim_)
        v *= term.factors[r](x(r), order[r]);
      else if (order[r] != 0)
        v = 0.0;
    }
    sum += v;
  }
  return sum;
}

namespace {

std::array<int, 3> unit_order(int r) {
  std::array<int, 3> o{0, 0, 0};
  o[r] = 1;
  return o;
}

std::array<int, 3> plus(std::array<int, 3> a, std::array<int, 3> b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

}  // namespace

BenchmarkCase::BenchmarkCase(std::string name, BoxDomain domain, double nu, bool nonlinear,
                             std::vector<SeparableField> velocity, SeparableField pressure,
                             std::optional<SeparableField> stream)
    : name_(std::move(name)),
      domain_(std::move(domain)),
      nu_(nu),
      nonlinear_(nonlinear),
      velocity_(std::move(velocity)),
      pressure_(std::move(pressure)),
      stream_(std::move(stream)) {
  if (!(nu_ > 0.0) || !std::isfinite(nu_)) throw std::invalid_argument("BenchmarkCase: nu must be > 0");
  if (static_cast<int>(velocity_.size()) != dim())
    throw std::invalid_argument("BenchmarkCase: one velocity component per dimension");
}

double BenchmarkCase::velocity_partial(int comp, const Eigen::Ref<const Eigen::VectorXd>& x,
                                       std::array<int, 3> order) const {
  return velocity_.at(static_cast<std::size_t>(comp)).partial(x, order);
}

double BenchmarkCase::pressure_partial(const Eigen::Ref<const Eigen::VectorXd>& x,
                                       std::array<int, 3> order) const {
  return pressure_.partial(x, order);
}

Eigen::VectorXd BenchmarkCase::velocity(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd u(dim());
  for (int i = 0; i < dim(); ++i) u(i) = velocity_partial(i, x, {0, 0, 0});
  return u;
}

double BenchmarkCase::pressure(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return pressure_.value(x);
}

Eigen::VectorXd BenchmarkCase::forcing(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const int d = dim();
  Eigen::VectorXd u = velocity(x);
  Eigen::VectorXd f(d);
  for (int i = 0; i < d; ++i) {
    double lap = 0.0;
    for (int l = 0; l < d; ++l) {
      auto o = unit_order(l);
      o[l] = 2;
      lap += velocity_partial(i, x, o);
    }
    double v = -nu_ * lap + pressure_partial(x, unit_order(i));
    if (nonlinear_)
      for (int k = 0; k < d; ++k) v += u(k) * velocity_partial(i, x, unit_order(k));
    f(i) = v;
  }
  return f;
}

Eigen::MatrixXd BenchmarkCase::forcing_gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const int d = dim();
  const Eigen::VectorXd u = velocity(x);
  Eigen::MatrixXd du(d, d);  // du(k, j) = d_j u_k
  for (int k = 0; k < d; ++k)
    for (int j = 0; j < d; ++j) du(k, j) = velocity_partial(k, x, unit_order(j));

  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double dlap = 0.0;
      for (int l = 0; l < d; ++l) {
        auto o = unit_order(j);
        o[l] += 2;
        dlap += velocity_partial(i, x, o);
      }
      double v = -nu_ * dlap + pressure_partial(x, plus(unit_order(i), unit_order(j)));
      if (nonlinear_)
        for (int k = 0; k < d; ++k)
          v += du(k, j) * du(i, k) + u(k) * velocity_partial(i, x, plus(unit_order(j), unit_order(k)));
      g(i, j) = v;
    }
  return g;
}

Eigen::MatrixXd BenchmarkCase::velocity_at(const PointSet& pts) const {
  Eigen::MatrixXd out(pts.rows(), dim());
  for (Eigen::Index i = 0; i < pts.rows(); ++i) out.row(i) = velocity(pts.row(i).transpose()).transpose();
  return out;
}

Eigen::VectorXd BenchmarkCase::pressure_at(const PointSet& pts) const {
  Eigen::VectorXd out(pts.rows());
  for (Eigen::Index i = 0; i < pts.rows(); ++i) out(i) = pressure(pts.row(i).transpose());
  return out;
}

Eigen::MatrixXd BenchmarkCase::forcing_at(const PointSet& pts) const {
  Eigen::MatrixXd out(pts.rows(), dim());
  for (Eigen::Index i = 0; i < pts.rows(); ++i) out.row(i) = forcing(pts.row(i).transpose()).transpose();
  return out;
}

Eigen::MatrixXd BenchmarkCase::curl_forcing_at(const PointSet& pts) const {
  const int d = dim();
  Eigen::MatrixXd out(pts.rows(), d == 2 ? 1 : 3);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Eigen::MatrixXd g = forcing_gradient(pts.row(i).transpose());
    if (d == 2) {
      out(i, 0) = g(1, 0) - g(0, 1);
    } else {
      out(i, 0) = g(2, 1) - g(1, 2);
      out(i, 1) = g(0, 2) - g(2, 0);
      out(i, 2) = g(1, 0) - g(0, 1);
    }
  }
  return out;
}

VelocityEval BenchmarkCase::exact_velocity_eval(const PointSet& pts) const {
  const int d = dim();
  VelocityEval e;
  e.u.resize(pts.rows(), d);
  e.grad.resize(pts.rows(), d * d);
  e.lap.resize(pts.rows(), d);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Eigen::VectorXd x = pts.row(i).transpose();
    for (int a = 0; a < d; ++a) {
      e.u(i, a) = velocity_partial(a, x, {0, 0, 0});
      double lap = 0.0;
      for (int b = 0; b < d; ++b) {
        e.grad(i, a * d + b) = velocity_partial(a, x, unit_order(b));
        auto o = unit_order(b);
        o[b] = 2;
        lap += velocity_partial(a, x, o);
      }
      e.lap(i, a) = lap;
    }
  }
  return e;
}

double BenchmarkCase::stream(const Eigen::Ref<const Eigen::VectorXd>& x, std::array<int, 3> order) const {
  if (!stream_) throw std::logic_error("BenchmarkCase: no stream function for " + name_);
  return stream_->partial(x, order);
}

std::string canonical_case_name(const std::string& name) {
  if (name == "stokes2d" || name == "stokes2d-kovasznay") return "stokes2d-kovasznay";
  if (name == "ns2d" || name == "ns2d-cavitylike") return "ns2d-cavitylike";
  if (name == "stokes3d" || name == "stokes3d-exp") return "stokes3d-exp";
  if (name == "ns3d" || name == "ns3d-trig") return "ns3d-trig";
  throw std::invalid_argument("unknown benchmark case '" + name + "'");
}

std::vector<std::string> case_names() {
  return {"stokes2d-kovasznay", "ns2d-cavitylike", "stokes3d-exp", "ns3d-trig"};
}

BenchmarkCase make_case(const std::string& name, double nu) {
  using namespace fn;
  constexpr double pi = std::numbers::pi;
  const std::string canon = canonical_case_name(name);
  if (!(nu > 0.0) || !std::isfinite(nu)) throw std::invalid_argument("make_case: nu must be > 0");

  if (canon == "stokes2d-kovasznay") {
    // 1/(2nu) - sqrt(1/(4nu^2) + 4pi^2), written without cancellation
    const double zeta = -4.0 * pi * pi / (1.0 / (2.0 * nu) + std::sqrt(1.0 / (4.0 * nu * nu) + 4.0 * pi * pi));
    SeparableField u(2), v(2), p(2), phi(2);
    u.add(1.0, one(), one()).add(-1.0, exp_lin(zeta), cos_lin(2 * pi));
    v.add(zeta / (2 * pi), exp_lin(zeta), sin_lin(2 * pi));
    p.add(0.5, exp_lin(2 * zeta), one());
    phi.add(1.0, one(), poly({0.0, 1.0})).add(-1.0 / (2 * pi), exp_lin(zeta), sin_lin(2 * pi));
    BoxDomain box(Eigen::Vector2d(0.0, -0.5), Eigen::Vector2d(2.0, 1.5));
    return BenchmarkCase(canon, box, nu, false, {u, v}, p, phi);
  }
  if (canon == "ns2d-cavitylike") {
    // sin^2(pi x) = (1 - cos(2 pi x)) / 2
    const Fn1D cubic = poly({0.0, 1.0, -3.0, 2.0});      // y(y-1)(2y-1)
    const Fn1D quartic = poly({0.0, 0.0, 1.0, -2.0, 1.0});  // y^2 (y-1)^2
    SeparableField u(2), v(2), p(2), phi(2);
    u.add(8.0, one(), cubic).add(-8.0, cos_lin(2 * pi), cubic);
    v.add(-8.0 * pi, sin_lin(2 * pi), quartic);
    p.add(1.0, sin_lin(pi), cos_lin(pi));
    phi.add(4.0, one(), quartic).add(-4.0, cos_lin(2 * pi), quartic);
    return BenchmarkCase(canon, BoxDomain::unit(2), nu, true, {u, v}, p, phi);
  }
  if (canon == "stokes3d-exp") {
    const Fn1D g = exp_of(cos_lin(pi));
    const Fn1D l = exp_of(sin_lin(pi));
    SeparableField u(3), v(3), w(3), p(3);
    u.add(1.0, one(), g, sin_lin(pi));
    v.add(1.0, sin_lin(pi), one(), g);
    w.add(1.0, g, sin_lin(pi), one());
    p.add(1.0, g, l, one()).add(1.0, l, one(), g);
    return BenchmarkCase(canon, BoxDomain::unit(3), nu, false, {u, v, w}, p, std::nullopt);
  }
  // ns3d-trig
  const Fn1D a = times_poly(sin_lin(1.0), {-1.0, 1.0});  // (t-1) sin t
  const Fn1D c = cos_lin(1.0);
  SeparableField u(3), v(3), w(3), p(3);
  u.add(2.0, one(), a, a).add(-2.0, one(), a, c).add(-2.0, one(), c, a);
  v.add(2.0, a, one(), a).add(-2.0, c, one(), a).add(-2.0, a, one(), c);
  w.add(2.0, a, a, one()).add(-2.0, a, c, one()).add(-2.0, c, a, one());
  const Fn1D lin = poly({0.0, 1.0});
  const Fn1D cube = poly({0.0, 0.0, 0.0, 1.0});
  p.add(1.0, lin, lin, lin).add(1.0, cube, cube, lin).add(-5.0 / 32.0, one(), one(), one());
  return BenchmarkCase(canon, BoxDomain::unit(3), nu, true, {u, v, w}, p, std::nullopt);
}

double relative_l2_error(const Eigen::Ref<const Eigen::MatrixXd>& exact,
                         const Eigen::Ref<const Eigen::MatrixXd>& approx) {
  if (exact.rows() != approx.rows() || exact.cols() != approx.cols())
    throw std::invalid_argument("relative_l2_error: shape mismatch");
  const double denom = exact.norm();
  if (denom == 0.0) throw std::domain_error("relative_l2_error: exact field vanishes on the test set");
  return (exact - approx).norm() / denom;
}

double divergence_error(const Eigen::Ref<const Eigen::VectorXd>& divergence) {
  if (divergence.size() == 0) return 0.0;
  return std::sqrt(divergence.squaredNorm() / static_cast<double>(divergence.size()));
}

std::vector<ComplexityRow> expected_dimensions(int dim, Eigen::Index I, Eigen::Index J,
                                               Eigen::Index M) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("expected_dimensions: dim must be 2 or 3");
  const Eigen::Index n = M + 1;
  if (dim == 2)
    return {{"decoupled", "velocity", {I + 2 * J, n}},
            {"decoupled", "pressure", {2 * I + 1, n}},
            {"coupled", "coupled", {3 * I + 2 * J + 1, 3 * n}}};
  return {{"decoupled", "velocity", {4 * I + 4 * J, 3 * n}},
          {"decoupled", "pressure", {3 * I + 1, n}},
          {"coupled", "coupled", {4 * I + 3 * J + 1, 4 * n}}};
}

std::vector<ComplexityRow> complexity_report(int dim, Eigen::Index I, Eigen::Index J, Eigen::Index M,
                                             const std::vector<ComplexityRow>& measured) {
  auto expected = expected_dimensions(dim, I, J, M);
  for (const auto& m : measured) {
    auto it = std::find_if(expected.begin(), expected.end(), [&](const ComplexityRow& e) {
      return e.method == m.method && e.subproblem == m.subproblem;
    });
    if (it == expected.end())
      throw std::logic_error("complexity_report: unknown subproblem " + m.method + "/" + m.subproblem);
    if (it->dims.rows != m.dims.rows || it->dims.cols != m.dims.cols)
      throw std::logic_error("complexity_report: " + m.method + "/" + m.subproblem + " is " +
                             std::to_string(m.dims.rows) + "x" + std::to_string(m.dims.cols) +
                             ", expected " + std::to_string(it->dims.rows) + "x" +
                             std::to_string(it->dims.cols));
  }
  return expected;
}

nlohmann::json MetricsReport::to_json() const {
  return {{"error_u", error_u},
          {"error_p", error_p},
          {"error_div", error_div},
          {"assemble_seconds", assemble_seconds},
          {"solve_seconds", solve_seconds},
          {"pressure_seconds", pressure_seconds},
          {"seconds", total_seconds},
          {"rows", velocity_dims.rows},
          {"cols", velocity_dims.cols},
          {"p_rows", pressure_dims.rows},
          {"p_cols", pressure_dims.cols},
          {"rank", rank}};
}

MetricsReport evaluate_metrics(const BenchmarkCase& bc, const VelocityField& velocity,
                               const PressureSolution& pressure, const PointSet& test_points) {
  MetricsReport r;
  const VelocityEval e = velocity.evaluate(test_points, false);
  r.error_u = relative_l2_error(bc.velocity_at(test_points), e.u);
  r.error_div = divergence_error(e.divergence());
  const Eigen::VectorXd p_exact = bc.pressure_at(test_points);
  const Eigen::VectorXd p_nn =
      pressure.values(test_points).array() + bc.pressure(pressure.pin);
  r.error_p = relative_l2_error(p_exact, p_nn);
  return r;
}

}  // namespace divfree

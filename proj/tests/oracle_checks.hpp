#pragma once

// Assembly and derivative checks against finite-difference oracles, shared by the unit
// tests and the acceptance runner. Each check returns labelled relative errors.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "divfree/navier_stokes.hpp"
#include "divfree/stokes.hpp"
#include "fd_oracle.hpp"

namespace oracle {

struct Labelled {
  std::string label;
  double error = 0.0;
};

inline double worst(const std::vector<Labelled>& v) {
  double w = 0.0;
  for (const auto& e : v) w = std::max(w, e.error);
  return w;
}

inline const divfree::BoxDomain& box2() {
  static const divfree::BoxDomain b(Eigen::Vector2d(0.0, -0.5), Eigen::Vector2d(2.0, 1.5));
  return b;
}
inline const divfree::BoxDomain& box3() {
  static const divfree::BoxDomain b(Eigen::Vector3d(0.0, 0.0, -1.0), Eigen::Vector3d(1.0, 2.0, 0.0));
  return b;
}

inline Vec row(const divfree::PointSet& p, Eigen::Index i) { return p.row(i).transpose(); }

// Rows [begin, begin+len) of A x - b.
inline Vec residual(const divfree::LeastSquaresProblem& p, const Vec& x, Eigen::Index begin, Eigen::Index len) {
  return p.matrix.middleRows(begin, len) * x - p.rhs.segment(begin, len);
}

inline double relative(double a, double b, double floor) { return std::abs(a - b) / std::max(std::abs(b), floor); }

/// Orders 1 to 4 of the feature tables against differences, over `pairs` random (bank, point)
/// pairs. Order 1 differences a direct evaluation of tanh; higher orders difference the
/// next-lower analytic table. Errors are relative with a floor of 1e-3 times the natural
/// scale (gamma/rho)^order, so values that vanish by symmetry do not blow up.
inline double derivative_kernel_error(int pairs = 50) {
  using namespace divfree;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  auto fd = [](auto&& g, Vec x, int r) {
    return richardson([&](const Vec& y) { return g(y); }, x, r, 1e-4);
  };
  double w = 0.0;
  for (int trial = 0; trial < pairs; ++trial) {
    const int dim = trial % 2 == 0 ? 2 : 3;
    const Basis basis{FeatureBank::create(dim, 12, 1.0 + 0.1 * trial, 100 + trial),
                      AffineMap::for_box(BoxDomain::unit(dim))};
    Vec x(dim);
    for (int r = 0; r < dim; ++r) x(r) = unif(rng);
    const DerivSet all{Deriv::Value, Deriv::Grad, Deriv::Hessian, Deriv::Laplacian, Deriv::GradLaplacian,
                       Deriv::Bilaplacian};
    const DerivativeTable t = eval_derivatives(basis.bank, basis.map, Eigen::MatrixXd(x.transpose()), all);
    auto at = [&](const Vec& y) { return eval_derivatives(basis.bank, basis.map, Eigen::MatrixXd(y.transpose()), all); };
    const double k = basis.bank.shape() / basis.map.scale();
    for (int m = 1; m <= basis.bank.count(); ++m) {
      auto feature = [&](const Vec& y) {
        const Vec z = (y - basis.map.center()) / basis.map.scale();
        return std::tanh(basis.bank.shape() * (basis.bank.directions().row(m - 1).dot(z) + basis.bank.offsets()(m - 1)));
      };
      w = std::max(w, relative(t.value()(0, m), feature(x), 1e-12));
      for (int r = 0; r < dim; ++r) {
        w = std::max(w, relative(t.grad(r)(0, m), fd(feature, x, r), k * 1e-3));
        for (int s = 0; s < dim; ++s)
          w = std::max(w, relative(t.hess(r, s)(0, m), fd([&](const Vec& y) { return at(y).grad(s)(0, m); }, x, r),
                                   k * k * 1e-3));
        w = std::max(w, relative(t.grad_laplacian(r)(0, m),
                                 fd([&](const Vec& y) { return at(y).laplacian()(0, m); }, x, r), std::pow(k, 3) * 1e-3));
      }
      double bl = 0.0;
      for (int r = 0; r < dim; ++r) bl += fd([&](const Vec& y) { return at(y).grad_laplacian(r)(0, m); }, x, r);
      w = std::max(w, relative(t.bilaplacian()(0, m), bl, std::pow(k, 4) * 1e-3));
    }
  }
  return w;
}

inline std::vector<Labelled> velocity2d_errors() {
  using namespace divfree;
  const Basis basis{FeatureBank::create(2, 20, 2.0, 31), AffineMap::for_box(box2())};
  const CollocationSet c = grid_collocation_2d(box2(), 4, 4, 3);
  const Eigen::Index I = c.interior_count(), J = c.boundary_count();
  VelocityData data;
  data.nu = 0.37;
  data.curl_f = random_vector(I, 1);
  data.boundary.phi = random_vector(J, 2);
  data.boundary.dphi_dn = random_vector(J, 3);
  const LeastSquaresProblem p = assemble_stokes2d_velocity(basis, c, data);
  const Vec alpha = random_vector(basis.size(), 4);
  const Potential f(basis, alpha, 2e-2);
  Vec pde(I), val(J), nrm(J);
  for (Eigen::Index i = 0; i < I; ++i) pde(i) = data.nu * f.bilap(0, row(c.interior, i)) - data.curl_f(i);
  for (Eigen::Index j = 0; j < J; ++j) {
    const Vec x = row(c.boundary, j);
    val(j) = f.d(0, x, {0, 0, 0}) - data.boundary.phi(j);
    nrm(j) = f.d(0, x, {1, 0, 0}) * c.normals(j, 0) + f.d(0, x, {0, 1, 0}) * c.normals(j, 1) - data.boundary.dphi_dn(j);
  }
  return {{"stokes2d interior", block_error(residual(p, alpha, 0, I), pde)},
          {"stokes2d boundary value", block_error(residual(p, alpha, I, J), val)},
          {"stokes2d boundary normal", block_error(residual(p, alpha, I + J, J), nrm)}};
}

inline std::vector<Labelled> velocity3d_errors() {
  using namespace divfree;
  const Basis basis{FeatureBank::create(3, 12, 2.0, 32), AffineMap::for_box(box3())};
  const CollocationSet c = halton_collocation_3d(box3(), 8, 2, 2);
  const Eigen::Index I = c.interior_count(), J = c.boundary_count(), n = basis.size();
  VelocityData data;
  data.nu = 0.21;
  data.curl_f = Eigen::Map<const Eigen::MatrixXd>(random_vector(3 * I, 5).data(), I, 3);
  data.boundary.velocity = Eigen::Map<const Eigen::MatrixXd>(random_vector(3 * J, 6).data(), J, 3);
  const LeastSquaresProblem p = assemble_stokes3d_velocity(basis, c, data);
  const Vec alpha = random_vector(3 * n, 7);
  const Potential f(basis, alpha, 2e-2);
  std::vector<Labelled> out;
  for (int a = 0; a < 3; ++a) {
    Vec pde(I), curl(J);
    for (Eigen::Index i = 0; i < I; ++i) pde(i) = data.nu * f.bilap(a, row(c.interior, i)) - data.curl_f(i, a);
    for (Eigen::Index j = 0; j < J; ++j) curl(j) = f.u(a, row(c.boundary, j)) - data.boundary.velocity(j, a);
    out.push_back({"stokes3d interior " + std::to_string(a), block_error(residual(p, alpha, a * I, I), pde)});
    out.push_back({"stokes3d boundary curl " + std::to_string(a),
                   block_error(residual(p, alpha, 4 * I + J + a * J, J), curl)});
  }
  Vec div = Vec::Zero(I), flux = Vec::Zero(J);
  for (Eigen::Index i = 0; i < I; ++i)
    for (int r = 0; r < 3; ++r) div(i) += f.d(r, row(c.interior, i), unit(r));
  for (Eigen::Index j = 0; j < J; ++j)
    for (int r = 0; r < 3; ++r) flux(j) += f.d(r, row(c.boundary, j), {0, 0, 0}) * c.normals(j, r);
  out.push_back({"stokes3d gauge divergence", block_error(residual(p, alpha, 3 * I, I), div)});
  out.push_back({"stokes3d boundary flux", block_error(residual(p, alpha, 4 * I, J), flux)});
  return out;
}

inline std::vector<Labelled> pressure_errors() {
  using namespace divfree;
  std::vector<Labelled> out;
  for (int d : {2, 3}) {
    const BoxDomain& box = d == 2 ? box2() : box3();
    const Basis basis{FeatureBank::create(d, 12, 2.0, 34 + d), AffineMap::for_box(box)};
    const CollocationSet c = d == 2 ? grid_collocation_2d(box, 3, 3, 2) : halton_collocation_3d(box, 6, 2, 2);
    const Eigen::Index I = c.interior_count(), n = basis.size();
    const Vec alpha = random_vector((d == 2 ? 1 : 3) * n, 40 + d, 0.3);
    const auto velocity = make_velocity_field(basis, alpha);
    const Potential f(basis, alpha, 2e-2);
    for (bool nonlinear : {false, true}) {
      PressureData data;
      data.nu = 0.4;
      data.nonlinear = nonlinear;
      data.f = Eigen::Map<const Eigen::MatrixXd>(random_vector(d * I, 41).data(), I, d);
      data.pin = box.center();
      const LeastSquaresProblem p = assemble_pressure(basis, c, data, *velocity);
      const Vec beta = random_vector(n, 42);
      const Scalar pf = expansion(basis, beta);
      for (int r = 0; r < d; ++r) {
        Vec ref(I);
        for (Eigen::Index i = 0; i < I; ++i) {
          const Vec x = row(c.interior, i);
          double rhs = data.f(i, r) + data.nu * f.lap_u(r, x);
          if (nonlinear)
            for (int k = 0; k < d; ++k) rhs -= f.u(k, x) * f.u(r, x, unit(k));
          ref(i) = partial(pf, x, unit(r), 2e-2) - rhs;
        }
        out.push_back({"pressure " + std::to_string(d) + "d " + (nonlinear ? "navier-stokes" : "stokes") +
                           " component " + std::to_string(r),
                       block_error(residual(p, beta, r * I, I), ref)});
      }
    }
  }
  return out;
}

inline std::vector<Labelled> coupled_errors() {
  using namespace divfree;
  std::vector<Labelled> out;
  for (int d : {2, 3}) {
    const BoxDomain& box = d == 2 ? box2() : box3();
    const Basis basis{FeatureBank::create(d, 12, 2.0, 50 + d), AffineMap::for_box(box)};
    const CollocationSet c = d == 2 ? grid_collocation_2d(box, 3, 3, 2) : halton_collocation_3d(box, 6, 2, 2);
    const Eigen::Index I = c.interior_count(), J = c.boundary_count(), n = basis.size();
    CoupledData data;
    data.nu = 0.3;
    data.f = Eigen::Map<const Eigen::MatrixXd>(random_vector(d * I, 51).data(), I, d);
    data.boundary_velocity = Eigen::Map<const Eigen::MatrixXd>(random_vector(d * J, 52).data(), J, d);
    data.pin = box.center();
    const CollocationTables t = CollocationTables::build(basis, c, CollocationTables::Use::Coupled);
    const Vec trial = random_vector((d + 1) * n, 53);
    const Vec iter = random_vector((d + 1) * n, 54, 0.5);
    std::vector<Scalar> u, uk;
    for (int a = 0; a < d; ++a) {
      u.push_back(expansion(basis, trial.segment(a * n, n)));
      uk.push_back(expansion(basis, iter.segment(a * n, n)));
    }
    const Scalar p = expansion(basis, trial.segment(d * n, n));
    auto D = [](const Scalar& g, const Vec& x, Order o) { return partial(g, x, o, 2e-2); };
    for (bool linearized : {false, true}) {
      const std::string tag = "coupled " + std::to_string(d) + "d " + (linearized ? "newton" : "stokes");
      const LeastSquaresProblem sys = assemble_coupled(basis, t, data, linearized ? &iter : nullptr);
      for (int a = 0; a < d; ++a) {
        Vec ref(I), bd(J);
        for (Eigen::Index i = 0; i < I; ++i) {
          const Vec x = row(c.interior, i);
          double lap = 0.0;
          for (int r = 0; r < d; ++r) lap += D(u[a], x, add(unit(r), unit(r)));
          double v = -data.nu * lap + D(p, x, unit(a)) - data.f(i, a);
          if (linearized)
            for (int k = 0; k < d; ++k)
              v += uk[k](x) * D(u[a], x, unit(k)) + u[k](x) * D(uk[a], x, unit(k)) - uk[k](x) * D(uk[a], x, unit(k));
          ref(i) = v;
        }
        for (Eigen::Index j = 0; j < J; ++j) bd(j) = u[a](row(c.boundary, j)) - data.boundary_velocity(j, a);
        out.push_back({tag + " momentum " + std::to_string(a), block_error(residual(sys, trial, a * I, I), ref)});
        out.push_back({tag + " boundary " + std::to_string(a),
                       block_error(residual(sys, trial, (d + 1) * I + a * J, J), bd)});
      }
      Vec div = Vec::Zero(I);
      for (Eigen::Index i = 0; i < I; ++i)
        for (int r = 0; r < d; ++r) div(i) += D(u[r], row(c.interior, i), unit(r));
      out.push_back({tag + " divergence", block_error(residual(sys, trial, d * I, I), div)});
      const Vec pin = residual(sys, trial, sys.rows() - 1, 1);
      out.push_back({tag + " pin", relative(pin(0), p(data.pin), 1e-12)});
    }
  }
  return out;
}

/// Fixture for the linearized velocity systems on a non-unit box.
struct LinearizationSetup {
  divfree::Basis basis;
  divfree::CollocationSet colloc;
  divfree::CollocationTables tables;
  divfree::VelocityData data;

  explicit LinearizationSetup(int d)
      : basis{divfree::FeatureBank::create(d, d == 2 ? 16 : 10, 2.0, 70 + d),
              divfree::AffineMap::for_box(d == 2 ? box2() : box3())},
        colloc(d == 2 ? divfree::grid_collocation_2d(box2(), 3, 3, 2) : divfree::halton_collocation_3d(box3(), 6, 2, 2)),
        tables(divfree::CollocationTables::build(basis, colloc, divfree::CollocationTables::Use::Nonlinear)) {
    data.nu = 0.3;
    const Eigen::Index I = colloc.interior_count(), J = colloc.boundary_count();
    const int k = d == 2 ? 1 : 3;
    data.curl_f = Eigen::Map<const Eigen::MatrixXd>(random_vector(k * I, 71).data(), I, k);
    if (d == 2) {
      data.boundary.phi = random_vector(J, 72);
      data.boundary.dphi_dn = random_vector(J, 73);
    } else {
      data.boundary.velocity = Eigen::Map<const Eigen::MatrixXd>(random_vector(3 * J, 74).data(), J, 3);
    }
  }
};

// Interior rows of each linearization, by finite differences of the trial potential `phi`
// and the linearization point `pk`. One vector per potential component.
inline std::vector<Vec> fd_interior_rows(const LinearizationSetup& s, divfree::Linearization kind, const Potential& phi,
                                         const Potential& pk) {
  using divfree::Linearization;
  const int d = s.basis.dim();
  const int comps = d == 2 ? 1 : 3;
  const Eigen::Index I = s.colloc.interior_count();
  std::vector<Vec> out(comps, Vec(I));
  for (Eigen::Index i = 0; i < I; ++i) {
    const Vec x = row(s.colloc.interior, i);
    if (d == 2) {
      double a = 0.0, b = 0.0, rhs_extra = 0.0;
      for (int r = 0; r < 2; ++r) {
        a += pk.u(r, x) * phi.lap(0, x, unit(r));         // (u^k . grad) lap phi
        b += phi.u(r, x) * pk.lap(0, x, unit(r));         // (curl phi . grad) W
        rhs_extra += pk.u(r, x) * pk.lap(0, x, unit(r));  // (u^k . grad) W
      }
      double v = s.data.nu * phi.bilap(0, x) - s.data.curl_f(i, 0);
      switch (kind) {
        case Linearization::Stokes: break;
        case Linearization::GaussNewton: v += -a - b + rhs_extra; break;
        case Linearization::PicardI: v += -a; break;
        case Linearization::PicardII: v += -b; break;
        case Linearization::PicardIII: v += -0.5 * (a + b); break;
      }
      out[0](i) = v;
      continue;
    }
    for (int c = 0; c < 3; ++c) {
      double A = 0.0, B = 0.0, C = 0.0, D = 0.0, ukW = 0.0, Wuk = 0.0;
      for (int r = 0; r < 3; ++r) {
        const Order dr = unit(r);
        A -= pk.u(r, x) * phi.lap(c, x, dr);
        B += phi.lap(r, x) * pk.u(c, x, dr);
        C += pk.lap(r, x) * phi.u(c, x, dr);
        D -= phi.u(r, x) * pk.lap(c, x, dr);
        ukW += pk.u(r, x) * pk.lap(c, x, dr);
        Wuk += pk.lap(r, x) * pk.u(c, x, dr);
      }
      double v = s.data.nu * phi.bilap(c, x) - s.data.curl_f(i, c);
      switch (kind) {
        case Linearization::Stokes: break;
        case Linearization::GaussNewton: v += A + B + C + D + ukW - Wuk; break;
        case Linearization::PicardI: v += A + B; break;
        case Linearization::PicardII: v += C + D; break;
        case Linearization::PicardIII: v += 0.5 * (A + B + C + D); break;
      }
      out[c](i) = v;
    }
  }
  return out;
}

inline std::vector<Labelled> linearization_errors() {
  using namespace divfree;
  std::vector<Labelled> out;
  for (int d : {2, 3}) {
    const LinearizationSetup s(d);
    const Eigen::Index n = s.basis.size(), I = s.colloc.interior_count();
    const int comps = d == 2 ? 1 : 3;
    const Vec trial = random_vector(comps * n, 80);
    const Vec iter = random_vector(comps * n, 81, 0.7);
    const Potential phi(s.basis, trial, 2e-2), pk(s.basis, iter, 2e-2);
    const std::pair<Linearization, const char*> kinds[] = {{Linearization::GaussNewton, "gauss-newton"},
                                                           {Linearization::PicardI, "picard-i"},
                                                           {Linearization::PicardII, "picard-ii"},
                                                           {Linearization::PicardIII, "picard-iii"}};
    for (const auto& [kind, name] : kinds) {
      const LeastSquaresProblem p = assemble_linearized(s.tables, s.data, kind, iter);
      const auto ref = fd_interior_rows(s, kind, phi, pk);
      const Vec res = p.matrix * trial - p.rhs;
      for (int c = 0; c < comps; ++c)
        out.push_back({std::string(name) + " " + std::to_string(d) + "d component " + std::to_string(c),
                       block_error(res.segment(c * I, I), ref[c])});
    }
    // Full nonlinear residual, used for convergence monitoring.
    const Vec alpha = random_vector(comps * n, 91, 0.6);
    const Potential f(s.basis, alpha, 2e-2);
    const Vec res = nonlinear_residual(s.tables, s.data, alpha);
    for (int c = 0; c < comps; ++c) {
      Vec ref(I);
      for (Eigen::Index i = 0; i < I; ++i) {
        const Vec x = row(s.colloc.interior, i);
        double v = s.data.nu * f.bilap(c, x) - s.data.curl_f(i, c);
        for (int r = 0; r < d; ++r) {
          v -= f.u(r, x) * f.lap(c, x, unit(r));
          if (d == 3) v += f.lap(r, x) * f.u(c, x, unit(r));
        }
        ref(i) = v;
      }
      out.push_back({"nonlinear residual " + std::to_string(d) + "d component " + std::to_string(c),
                     block_error(res.segment(c * I, I), ref)});
    }
  }
  return out;
}

inline std::vector<Labelled> assembly_errors() {
  std::vector<Labelled> all;
  for (auto part : {velocity2d_errors(), velocity3d_errors(), pressure_errors(), coupled_errors(), linearization_errors()})
    all.insert(all.end(), part.begin(), part.end());
  return all;
}

}  // namespace oracle

#pragma once

// Finite-difference oracles used by the assembly tests. Fields are evaluated directly from
// the bank parameters, never through the library's derivative tables.

#include <array>
#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Dense>

#include "divfree/feature_bank.hpp"

namespace oracle {

using Vec = Eigen::VectorXd;
using Order = std::array<int, 3>;
using Scalar = std::function<double(const Vec&)>;

inline double richardson(const Scalar& f, const Vec& x, int r, double h) {
  auto central = [&](double s) {
    Vec p = x, m = x;
    p(r) += s;
    m(r) -= s;
    return (f(p) - f(m)) / (2.0 * s);
  };
  return (4.0 * central(0.5 * h) - central(h)) / 3.0;
}

/// Mixed partial by nested Richardson central differences.
inline double partial(const Scalar& f, const Vec& x, Order o, double h) {
  for (int r = 0; r < 3; ++r)
    if (o[r] > 0) {
      Order lower = o;
      --lower[r];
      return richardson([&](const Vec& y) { return partial(f, y, lower, h); }, x, r, h);
    }
  return f(x);
}

/// Expansion sum_m c_m psi_m (one block of a stacked coefficient vector) evaluated directly.
inline Scalar expansion(const divfree::Basis& b, Vec coeffs) {
  return [&b, c = std::move(coeffs)](const Vec& x) {
    const Vec xh = (x - b.map.center()) / b.map.scale();
    double s = c(0);
    for (int m = 0; m < b.bank.count(); ++m)
      s += c(m + 1) * std::tanh(b.bank.shape() * (b.bank.directions().row(m).dot(xh) + b.bank.offsets()(m)));
    return s;
  };
}

inline Order unit(int r) {
  Order o{0, 0, 0};
  ++o[r];
  return o;
}

inline Order add(Order a, Order b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }

inline int levi(int a, int b, int c) {
  if (a == b || b == c || a == c) return 0;
  return ((a + 1) % 3 == b) ? 1 : -1;
}

/// Stream function (2D, one block) or vector potential (3D, three blocks) with all the
/// derived quantities the PDE rows need, each by finite differences of direct evaluation.
struct Potential {
  const divfree::Basis& basis;
  std::vector<Scalar> comps;
  double h;

  Potential(const divfree::Basis& b, const Vec& alpha, double step) : basis(b), h(step) {
    const Eigen::Index n = b.size();
    const int blocks = b.dim() == 2 ? 1 : 3;
    for (int c = 0; c < blocks; ++c) comps.push_back(expansion(b, alpha.segment(c * n, n)));
  }

  int dim() const { return basis.dim(); }
  double d(int c, const Vec& x, Order o) const { return partial(comps[c], x, o, h); }
  double lap(int c, const Vec& x, Order o = {0, 0, 0}) const {
    double s = 0.0;
    for (int r = 0; r < dim(); ++r) s += d(c, x, add(o, add(unit(r), unit(r))));
    return s;
  }
  double bilap(int c, const Vec& x) const {
    double s = 0.0;
    for (int r = 0; r < dim(); ++r)
      for (int q = 0; q < dim(); ++q) s += d(c, x, add(add(unit(r), unit(r)), add(unit(q), unit(q))));
    return s;
  }
  /// Velocity component a (curl), differentiated by o.
  double u(int a, const Vec& x, Order o = {0, 0, 0}) const {
    if (dim() == 2) return a == 0 ? d(0, x, add(o, unit(1))) : -d(0, x, add(o, unit(0)));
    double s = 0.0;
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        if (int e = levi(a, b, c)) s += e * d(c, x, add(o, unit(b)));
    return s;
  }
  /// Laplacian of the velocity component a.
  double lap_u(int a, const Vec& x) const {
    double s = 0.0;
    for (int r = 0; r < dim(); ++r) s += u(a, x, add(unit(r), unit(r)));
    return s;
  }
};

inline Vec random_vector(Eigen::Index n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Vec v(n);
  for (auto& e : v) e = scale * g(rng);
  return v;
}

/// max |a - b| / max |b| over a block.
inline double block_error(const Vec& a, const Vec& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-300);
}

}  // namespace oracle

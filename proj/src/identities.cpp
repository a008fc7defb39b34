#include "divfree/identities.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace divfree {

namespace {

using Order = std::array<int, 3>;

int levi(int a, int b, int c) {
  if (a == b || b == c || a == c) return 0;
  return ((a + 1) % 3 == b) ? 1 : -1;
}

Order bump(Order o, int r) {
  ++o[r];
  return o;
}

// Richardson-extrapolated central difference of g along axis r.
double fd(const std::function<double(const Eigen::VectorXd&)>& g, const Eigen::VectorXd& x, int r,
          double h) {
  auto central = [&](double step) {
    Eigen::VectorXd xp = x, xm = x;
    xp(r) += step;
    xm(r) -= step;
    return (g(xp) - g(xm)) / (2.0 * step);
  };
  return (4.0 * central(0.5 * h) - central(h)) / 3.0;
}

class Accumulator {
 public:
  void add(double lhs, double rhs) {
    diff_ = std::max(diff_, std::abs(lhs - rhs));
    scale_ = std::max(scale_, std::abs(rhs));
  }
  IdentityCheck result() const {
    return {scale_ > 0.0 ? diff_ / scale_ : diff_, diff_, scale_};
  }

 private:
  double diff_ = 0.0;
  double scale_ = 0.0;
};

// phi_a = (curl chi)_a, any partial.
struct Potential3D {
  const Basis& basis;
  const Eigen::VectorXd& chi;

  double phi(int a, const Eigen::VectorXd& x, Order o) const {
    const Eigen::Index n = basis.size();
    double s = 0.0;
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) {
        const int e = levi(a, b, c);
        if (e) s += e * expansion_partial(basis, chi.segment(c * n, n), x, bump(o, b));
      }
    return s;
  }
  // u_a = (curl phi)_a
  double u(int a, const Eigen::VectorXd& x, Order o) const {
    double s = 0.0;
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) {
        const int e = levi(a, b, c);
        if (e) s += e * phi(c, x, bump(o, b));
      }
    return s;
  }
  double lap_phi(int a, const Eigen::VectorXd& x, Order o) const {
    double s = 0.0;
    for (int r = 0; r < 3; ++r) s += phi(a, x, bump(bump(o, r), r));
    return s;
  }
  double convection(int i, const Eigen::VectorXd& x) const {
    double s = 0.0;
    for (int k = 0; k < 3; ++k) s += u(k, x, {0, 0, 0}) * u(i, x, bump({0, 0, 0}, k));
    return s;
  }
};

void check_points(const PointSet& pts, int dim) {
  if (pts.cols() != dim) throw std::invalid_argument("identity check: point dimension mismatch");
}

}  // namespace

IdentityCheck verify_curl_identity_2d(const Basis& basis, const Eigen::VectorXd& alpha,
                                      const PointSet& points, double h) {
  if (basis.dim() != 2) throw std::invalid_argument("verify_curl_identity_2d: basis must be 2D");
  check_points(points, 2);
  auto d = [&](const Eigen::VectorXd& x, Order o) { return expansion_partial(basis, alpha, x, o); };
  // u = (phi_y, -phi_x)
  auto u = [&](int a, const Eigen::VectorXd& x, Order o) {
    return a == 0 ? d(x, bump(o, 1)) : -d(x, bump(o, 0));
  };
  auto conv = [&](int i) {
    return [&, i](const Eigen::VectorXd& x) {
      return u(0, x, {0, 0, 0}) * u(i, x, {1, 0, 0}) + u(1, x, {0, 0, 0}) * u(i, x, {0, 1, 0});
    };
  };
  Accumulator acc;
  for (Eigen::Index p = 0; p < points.rows(); ++p) {
    const Eigen::VectorXd x = points.row(p).transpose();
    const double lhs = fd(conv(1), x, 0, h) - fd(conv(0), x, 1, h);
    const double lap_x = d(x, {3, 0, 0}) + d(x, {1, 2, 0});
    const double lap_y = d(x, {2, 1, 0}) + d(x, {0, 3, 0});
    const double rhs = -(u(0, x, {0, 0, 0}) * lap_x + u(1, x, {0, 0, 0}) * lap_y);
    acc.add(lhs, rhs);
  }
  return acc.result();
}

IdentityCheck verify_curl_identity_3d(const Basis& basis, const Eigen::VectorXd& chi,
                                      const PointSet& points, double h) {
  if (basis.dim() != 3) throw std::invalid_argument("verify_curl_identity_3d: basis must be 3D");
  if (chi.size() != 3 * basis.size()) throw std::invalid_argument("verify_curl_identity_3d: chi size");
  check_points(points, 3);
  const Potential3D f{basis, chi};
  Accumulator acc;
  for (Eigen::Index p = 0; p < points.rows(); ++p) {
    const Eigen::VectorXd x = points.row(p).transpose();
    double u[3], lap[3];
    for (int a = 0; a < 3; ++a) {
      u[a] = f.u(a, x, {0, 0, 0});
      lap[a] = f.lap_phi(a, x, {0, 0, 0});
    }
    for (int a = 0; a < 3; ++a) {
      double lhs = 0.0;
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c) {
          const int e = levi(a, b, c);
          if (e)
            lhs += e * fd([&](const Eigen::VectorXd& y) { return f.convection(c, y); }, x, b, h);
        }
      double rhs = 0.0;
      for (int r = 0; r < 3; ++r) {
        const Order dr = bump({0, 0, 0}, r);
        rhs += lap[r] * f.u(a, x, dr) - u[r] * f.lap_phi(a, x, dr);
      }
      acc.add(lhs, rhs);
    }
  }
  return acc.result();
}

IdentityCheck verify_vorticity_identity_3d(const Basis& basis, const Eigen::VectorXd& chi,
                                           const PointSet& points) {
  if (basis.dim() != 3) throw std::invalid_argument("verify_vorticity_identity_3d: basis must be 3D");
  if (chi.size() != 3 * basis.size()) throw std::invalid_argument("verify_vorticity_identity_3d: chi size");
  check_points(points, 3);
  const Potential3D f{basis, chi};
  Accumulator acc;
  for (Eigen::Index p = 0; p < points.rows(); ++p) {
    const Eigen::VectorXd x = points.row(p).transpose();
    for (int a = 0; a < 3; ++a) {
      double curlcurl = 0.0;
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c) {
          const int e = levi(a, b, c);
          if (e) curlcurl += e * f.u(c, x, bump({0, 0, 0}, b));
        }
      acc.add(curlcurl, -f.lap_phi(a, x, {0, 0, 0}));
    }
  }
  return acc.result();
}

}  // namespace divfree

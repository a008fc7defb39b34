#include "divfree/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace divfree {

BoxDomain::BoxDomain(Eigen::VectorXd lower, Eigen::VectorXd upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size() || (lower_.size() != 2 && lower_.size() != 3))
    throw std::invalid_argument("BoxDomain: corners must both be 2D or 3D");
  for (Eigen::Index r = 0; r < lower_.size(); ++r)
    if (!(lower_(r) < upper_(r)) || !std::isfinite(lower_(r)) || !std::isfinite(upper_(r)))
      throw std::invalid_argument("BoxDomain: degenerate box");
}

BoxDomain BoxDomain::unit(int dim) {
  return BoxDomain(Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim));
}

bool BoxDomain::contains(const Eigen::Ref<const Eigen::VectorXd>& x, double tol) const {
  for (int r = 0; r < dim(); ++r)
    if (x(r) < lower_(r) - tol || x(r) > upper_(r) + tol) return false;
  return true;
}

bool BoxDomain::strictly_contains(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  for (int r = 0; r < dim(); ++r)
    if (!(x(r) > lower_(r) && x(r) < upper_(r))) return false;
  return true;
}

double BoxDomain::distance_to_boundary(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  double d = std::numeric_limits<double>::infinity();
  for (int r = 0; r < dim(); ++r)
    d = std::min({d, std::abs(x(r) - lower_(r)), std::abs(upper_(r) - x(r))});
  return d;
}

CollocationSet grid_collocation_2d(const BoxDomain& box, int nx, int ny, int nb) {
  if (box.dim() != 2) throw std::invalid_argument("grid_collocation_2d: box must be 2D");
  if (nx < 2 || ny < 2 || nb < 2)
    throw std::invalid_argument("grid_collocation_2d: nx, ny, nb must be >= 2");
  const Eigen::VectorXd lo = box.lower();
  const Eigen::VectorXd hi = box.upper();
  const double lx = hi(0) - lo(0);
  const double ly = hi(1) - lo(1);

  PointSet interior(static_cast<Eigen::Index>(nx) * ny, 2);
  Eigen::Index k = 0;
  for (int j = 1; j <= ny; ++j)
    for (int i = 1; i <= nx; ++i, ++k) {
      interior(k, 0) = lo(0) + i * lx / (nx + 1);
      interior(k, 1) = lo(1) + j * ly / (ny + 1);
    }

  PointSet boundary(4 * nb, 2);
  PointSet normals = PointSet::Zero(4 * nb, 2);
  for (int q = 0; q < nb; ++q) {
    const double tx = q * lx / nb;
    const double ty = q * ly / nb;
    boundary.row(q) << lo(0) + tx, lo(1);
    normals.row(q) << 0.0, -1.0;
    boundary.row(nb + q) << hi(0), lo(1) + ty;
    normals.row(nb + q) << 1.0, 0.0;
    boundary.row(2 * nb + q) << hi(0) - tx, hi(1);
    normals.row(2 * nb + q) << 0.0, 1.0;
    boundary.row(3 * nb + q) << lo(0), hi(1) - ty;
    normals.row(3 * nb + q) << -1.0, 0.0;
  }
  return CollocationSet{box, std::move(interior), std::move(boundary), std::move(normals)};
}

PointSet uniform_grid_2d(const BoxDomain& box, int nx, int ny) {
  if (box.dim() != 2) throw std::invalid_argument("uniform_grid_2d: box must be 2D");
  if (nx < 2 || ny < 2) throw std::invalid_argument("uniform_grid_2d: nx, ny must be >= 2");
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(nx, box.lower()(0), box.upper()(0));
  const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(ny, box.lower()(1), box.upper()(1));
  PointSet pts(static_cast<Eigen::Index>(nx) * ny, 2);
  Eigen::Index k = 0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i, ++k) pts.row(k) << x(i), y(j);
  return pts;
}

double radical_inverse(std::uint64_t index, int base) {
  if (base < 2) throw std::invalid_argument("radical_inverse: base must be >= 2");
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % static_cast<std::uint64_t>(base));
    index /= static_cast<std::uint64_t>(base);
    f /= base;
  }
  return result;
}

PointSet halton_points(int dim, int n, const BoxDomain& box, std::uint64_t start_index) {
  static constexpr int bases[3] = {2, 3, 5};
  if (dim != box.dim()) throw std::invalid_argument("halton_points: dimension mismatch");
  if (n < 1) throw std::invalid_argument("halton_points: n must be >= 1");
  const Eigen::VectorXd ext = box.extent();
  PointSet pts(n, dim);
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < dim; ++r)
      pts(i, r) = box.lower()(r) + ext(r) * radical_inverse(start_index + static_cast<std::uint64_t>(i), bases[r]);
  return pts;
}

FacePoints face_grid_boundary_3d(const BoxDomain& box, int n1, int n2) {
  if (box.dim() != 3) throw std::invalid_argument("face_grid_boundary_3d: box must be 3D");
  if (n1 < 2 || n2 < 2) throw std::invalid_argument("face_grid_boundary_3d: n1, n2 must be >= 2");
  const Eigen::VectorXd lo = box.lower();
  const Eigen::VectorXd hi = box.upper();
  const Eigen::Index per_face = static_cast<Eigen::Index>(n1) * n2;
  FacePoints out{PointSet(6 * per_face, 3), PointSet::Zero(6 * per_face, 3)};
  Eigen::Index k = 0;
  for (int axis = 0; axis < 3; ++axis) {
    const int a = axis == 0 ? 1 : 0;  // first in-face coordinate
    const int b = axis == 2 ? 1 : 2;  // second in-face coordinate
    for (int side = 0; side < 2; ++side) {
      for (int j = 0; j < n2; ++j)
        for (int i = 0; i < n1; ++i, ++k) {
          out.points(k, axis) = side == 0 ? lo(axis) : hi(axis);
          out.points(k, a) = lo(a) + (i + 0.5) * (hi(a) - lo(a)) / n1;
          out.points(k, b) = lo(b) + (j + 0.5) * (hi(b) - lo(b)) / n2;
          out.normals(k, axis) = side == 0 ? -1.0 : 1.0;
        }
    }
  }
  return out;
}

CollocationSet halton_collocation_3d(const BoxDomain& box, int interior, int n1, int n2,
                                     std::uint64_t start_index) {
  FacePoints faces = face_grid_boundary_3d(box, n1, n2);
  return CollocationSet{box, halton_points(3, interior, box, start_index), std::move(faces.points),
                        std::move(faces.normals)};
}

void write_points_csv(std::ostream& out, const PointSet& points, const PointSet* normals) {
  static constexpr const char* coord[3] = {"x", "y", "z"};
  static constexpr const char* ncoord[3] = {"nx", "ny", "nz"};
  const auto d = points.cols();
  if (normals && (normals->rows() != points.rows() || normals->cols() != d))
    throw std::invalid_argument("write_points_csv: normals shape mismatch");
  for (Eigen::Index r = 0; r < d; ++r) out << (r ? "," : "") << coord[r];
  if (normals)
    for (Eigen::Index r = 0; r < d; ++r) out << ',' << ncoord[r];
  out << '\n';
  const auto old = out.precision(17);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index r = 0; r < d; ++r) out << (r ? "," : "") << points(i, r);
    if (normals)
      for (Eigen::Index r = 0; r < d; ++r) out << ',' << (*normals)(i, r);
    out << '\n';
  }
  out.precision(old);
}

}  // namespace divfree

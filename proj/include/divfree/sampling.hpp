#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include <Eigen/Dense>

#include "divfree/box.hpp"

namespace divfree {

/// Interior points, boundary points and the outward unit normal of each boundary point.
struct CollocationSet {
  BoxDomain box;
  PointSet interior;
  PointSet boundary;
  PointSet normals;

  int dim() const { return box.dim(); }
  Eigen::Index interior_count() const { return interior.rows(); }
  Eigen::Index boundary_count() const { return boundary.rows(); }
};

/// nx*ny interior points on the open grid lo + i*L/(n+1), i = 1..n, and nb points per
/// side walked counterclockwise from the bottom-left corner. Each side owns its starting
/// corner, so corners appear once.
CollocationSet grid_collocation_2d(const BoxDomain& box, int nx, int ny, int nb);

/// Closed nx*ny grid including the boundary (2D test sets).
PointSet uniform_grid_2d(const BoxDomain& box, int nx, int ny);

/// Radical inverse of `index` in `base`.
double radical_inverse(std::uint64_t index, int base);

/// Halton points with bases 2, 3 (, 5) for indices start_index .. start_index+n-1,
/// rescaled into the box.
PointSet halton_points(int dim, int n, const BoxDomain& box, std::uint64_t start_index = 1);

struct FacePoints {
  PointSet points;
  PointSet normals;
};

/// n1*n2 cell-centered points on each of the six faces (order x-, x+, y-, y+, z-, z+).
/// Points never touch an edge, so each one lies on exactly one face.
FacePoints face_grid_boundary_3d(const BoxDomain& box, int n1, int n2);

/// Halton interior (I points, start 1) plus face grids.
CollocationSet halton_collocation_3d(const BoxDomain& box, int interior, int n1, int n2,
                                     std::uint64_t start_index = 1);

/// One row per point: x,y[,z] and, if normals are given, nx,ny[,nz].
void write_points_csv(std::ostream& out, const PointSet& points, const PointSet* normals = nullptr);

}  // namespace divfree

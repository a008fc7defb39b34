#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>

#include <Eigen/Dense>
#include <json.hpp>

#include "divfree/box.hpp"

namespace divfree {

/// tanh(z) and its first four derivatives.
struct ActivationChain {
  double s0 = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  double s3 = 0.0;
  double s4 = 0.0;

  double operator[](int order) const;
};

/// Closed forms in sigma = tanh(z); total for finite z.
ActivationChain tanh_chain(double z) noexcept;

/// Fixed random ridge features psi_m(xh) = tanh(gamma (s_m . xh + r_m)), m = 1..M,
/// plus the constant psi_0 = 1. Directions are normalized Gaussian draws and offsets
/// are uniform on [0, 1]; the whole bank is regenerated from (dim, count, shape, seed).
class FeatureBank {
 public:
  static FeatureBank create(int dim, int count, double shape, std::uint64_t seed);

  /// Bank with explicit parameters (no seed). Directions are count x dim rows.
  static FeatureBank from_parameters(Eigen::MatrixXd directions, Eigen::VectorXd offsets,
                                     double shape);

  int dim() const { return static_cast<int>(directions_.cols()); }
  int count() const { return static_cast<int>(directions_.rows()); }
  /// Number of basis functions including the constant, M + 1.
  int size() const { return count() + 1; }
  double shape() const { return shape_; }
  std::optional<std::uint64_t> seed() const { return seed_; }
  const Eigen::MatrixXd& directions() const { return directions_; }
  const Eigen::VectorXd& offsets() const { return offsets_; }

  /// {dim, count, seed, shape}; only seeded banks serialize.
  nlohmann::json to_json() const;
  static FeatureBank from_json(const nlohmann::json& j);

  friend bool operator==(const FeatureBank& a, const FeatureBank& b);

 private:
  FeatureBank(Eigen::MatrixXd directions, Eigen::VectorXd offsets, double shape,
              std::optional<std::uint64_t> seed);

  Eigen::MatrixXd directions_;
  Eigen::VectorXd offsets_;
  double shape_;
  std::optional<std::uint64_t> seed_;
};

/// xh = (x - center) / scale. Derivatives of order k pick up scale^-k.
class AffineMap {
 public:
  AffineMap(Eigen::VectorXd center, double scale);

  /// Center of the box, scale = half the diagonal: the box lands in the unit ball.
  static AffineMap for_box(const BoxDomain& box);

  const Eigen::VectorXd& center() const { return center_; }
  double scale() const { return scale_; }
  int dim() const { return static_cast<int>(center_.size()); }

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  Eigen::VectorXd center_;
  double scale_;
};

enum class Deriv : std::uint8_t {
  Value = 1U << 0,
  Grad = 1U << 1,
  Hessian = 1U << 2,
  Laplacian = 1U << 3,
  GradLaplacian = 1U << 4,
  Bilaplacian = 1U << 5,
};

class DerivSet {
 public:
  constexpr DerivSet() = default;
  constexpr DerivSet(std::initializer_list<Deriv> kinds) {
    for (Deriv k : kinds) bits_ |= static_cast<std::uint8_t>(k);
  }
  constexpr bool contains(Deriv k) const { return (bits_ & static_cast<std::uint8_t>(k)) != 0; }
  constexpr DerivSet operator|(DerivSet other) const {
    DerivSet out;
    out.bits_ = static_cast<std::uint8_t>(bits_ | other.bits_);
    return out;
  }
  constexpr bool empty() const { return bits_ == 0; }

 private:
  std::uint8_t bits_ = 0;
};

/// Basis values and partial derivatives at a point set: one (#points x (M+1)) matrix per
/// requested kind. Column 0 is the constant feature.
class DerivativeTable {
 public:
  int dim() const { return dim_; }
  Eigen::Index points() const { return points_; }
  Eigen::Index cols() const { return cols_; }
  DerivSet kinds() const { return kinds_; }

  const Eigen::MatrixXd& value() const;
  const Eigen::MatrixXd& grad(int r) const;
  /// Symmetric access: hess(r, s) and hess(s, r) are the same stored matrix.
  const Eigen::MatrixXd& hess(int r, int s) const;
  const Eigen::MatrixXd& laplacian() const;
  const Eigen::MatrixXd& grad_laplacian(int r) const;
  const Eigen::MatrixXd& bilaplacian() const;

 private:
  friend DerivativeTable eval_derivatives(const FeatureBank&, const AffineMap&,
                                          const PointSet&, DerivSet);

  static int hess_slot(int r, int s, int dim);

  int dim_ = 0;
  Eigen::Index points_ = 0;
  Eigen::Index cols_ = 0;
  DerivSet kinds_;
  Eigen::MatrixXd value_;
  std::array<Eigen::MatrixXd, 3> grad_;
  std::array<Eigen::MatrixXd, 6> hess_;
  Eigen::MatrixXd laplacian_;
  std::array<Eigen::MatrixXd, 3> grad_laplacian_;
  Eigen::MatrixXd bilaplacian_;
};

/// Evaluates the requested derivative kinds of every basis function at `points`.
/// Throws std::invalid_argument for points mapped outside the unit ball (1e-9 slack).
DerivativeTable eval_derivatives(const FeatureBank& bank, const AffineMap& map,
                                 const PointSet& points, DerivSet request);

/// Shared-basis handle used by assemblies and solutions.
struct Basis {
  FeatureBank bank;
  AffineMap map;

  int size() const { return bank.size(); }
  int dim() const { return bank.dim(); }
};

/// Arbitrary mixed partial d^a/dx^a0 dy^a1 dz^a2 (total order <= 4) of the expansion
/// sum_m coeffs[m] psi_m at a single point.
double expansion_partial(const Basis& basis, const Eigen::Ref<const Eigen::VectorXd>& coeffs,
                         const Eigen::Ref<const Eigen::VectorXd>& x, std::array<int, 3> order);

}  // namespace divfree

#include "divfree/feature_bank.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace divfree {

double ActivationChain::operator[](int order) const {
  switch (order) {
    case 0: return s0;
    case 1: return s1;
    case 2: return s2;
    case 3: return s3;
    case 4: return s4;
    default: throw std::out_of_range("ActivationChain: order must be in [0, 4]");
  }
}

ActivationChain tanh_chain(double z) noexcept {
  ActivationChain c;
  c.s0 = std::tanh(z);
  c.s1 = 1.0 - c.s0 * c.s0;
  c.s2 = -2.0 * c.s0 * c.s1;
  c.s3 = -2.0 * (c.s1 * c.s1 + c.s0 * c.s2);
  c.s4 = -2.0 * (3.0 * c.s1 * c.s2 + c.s0 * c.s3);
  return c;
}

FeatureBank::FeatureBank(Eigen::MatrixXd directions, Eigen::VectorXd offsets, double shape,
                         std::optional<std::uint64_t> seed)
    : directions_(std::move(directions)),
      offsets_(std::move(offsets)),
      shape_(shape),
      seed_(seed) {}

FeatureBank FeatureBank::create(int dim, int count, double shape, std::uint64_t seed) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("FeatureBank: dim must be 2 or 3");
  if (count < 1) throw std::invalid_argument("FeatureBank: count must be >= 1");
  if (!(shape > 0.0) || !std::isfinite(shape))
    throw std::invalid_argument("FeatureBank: shape must be positive");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Eigen::MatrixXd directions(count, dim);
  Eigen::VectorXd offsets(count);
  for (int m = 0; m < count; ++m) {
    double norm = 0.0;
    do {
      for (int r = 0; r < dim; ++r) directions(m, r) = gauss(rng);
      norm = directions.row(m).norm();
    } while (norm == 0.0);
    directions.row(m) /= norm;
    offsets(m) = unit(rng);
  }
  return FeatureBank(std::move(directions), std::move(offsets), shape, seed);
}

FeatureBank FeatureBank::from_parameters(Eigen::MatrixXd directions, Eigen::VectorXd offsets,
                                         double shape) {
  const auto dim = directions.cols();
  if (dim != 2 && dim != 3) throw std::invalid_argument("FeatureBank: dim must be 2 or 3");
  if (directions.rows() < 1 || directions.rows() != offsets.size())
    throw std::invalid_argument("FeatureBank: need one offset per direction");
  if (!(shape > 0.0)) throw std::invalid_argument("FeatureBank: shape must be positive");
  for (Eigen::Index m = 0; m < directions.rows(); ++m) {
    if (std::abs(directions.row(m).norm() - 1.0) > 1e-12)
      throw std::invalid_argument("FeatureBank: directions must be unit vectors");
    if (offsets(m) < 0.0 || offsets(m) > 1.0)
      throw std::invalid_argument("FeatureBank: offsets must lie in [0, 1]");
  }
  return FeatureBank(std::move(directions), std::move(offsets), shape, std::nullopt);
}

nlohmann::json FeatureBank::to_json() const {
  if (!seed_) throw std::logic_error("FeatureBank: only seeded banks can be serialized");
  return {{"dim", dim()}, {"count", count()}, {"seed", *seed_}, {"shape", shape_}};
}

FeatureBank FeatureBank::from_json(const nlohmann::json& j) {
  return create(j.at("dim").get<int>(), j.at("count").get<int>(), j.at("shape").get<double>(),
                j.at("seed").get<std::uint64_t>());
}

bool operator==(const FeatureBank& a, const FeatureBank& b) {
  return a.shape_ == b.shape_ && a.seed_ == b.seed_ && a.directions_ == b.directions_ &&
         a.offsets_ == b.offsets_;
}

AffineMap::AffineMap(Eigen::VectorXd center, double scale)
    : center_(std::move(center)), scale_(scale) {
  if (!(scale_ > 0.0)) throw std::invalid_argument("AffineMap: scale must be positive");
}

AffineMap AffineMap::for_box(const BoxDomain& box) {
  return AffineMap(box.center(), box.half_diagonal());
}

Eigen::VectorXd AffineMap::apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return (x - center_) / scale_;
}

int DerivativeTable::hess_slot(int r, int s, int dim) {
  if (r > s) std::swap(r, s);
  if (dim == 2) return r == 0 ? s : 2;  // xx, xy, yy
  // xx, xy, xz, yy, yz, zz
  static constexpr int slots[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
  return slots[r][s];
}

namespace {

[[noreturn]] void missing(const char* what) {
  throw std::logic_error(std::string("DerivativeTable: kind not requested: ") + what);
}

}  // namespace

const Eigen::MatrixXd& DerivativeTable::value() const {
  if (!kinds_.contains(Deriv::Value)) missing("value");
  return value_;
}

const Eigen::MatrixXd& DerivativeTable::grad(int r) const {
  if (!kinds_.contains(Deriv::Grad)) missing("grad");
  if (r < 0 || r >= dim_) throw std::out_of_range("DerivativeTable::grad");
  return grad_[static_cast<std::size_t>(r)];
}

const Eigen::MatrixXd& DerivativeTable::hess(int r, int s) const {
  if (!kinds_.contains(Deriv::Hessian)) missing("hessian");
  if (r < 0 || r >= dim_ || s < 0 || s >= dim_) throw std::out_of_range("DerivativeTable::hess");
  return hess_[static_cast<std::size_t>(hess_slot(r, s, dim_))];
}

const Eigen::MatrixXd& DerivativeTable::laplacian() const {
  if (!kinds_.contains(Deriv::Laplacian)) missing("laplacian");
  return laplacian_;
}

const Eigen::MatrixXd& DerivativeTable::grad_laplacian(int r) const {
  if (!kinds_.contains(Deriv::GradLaplacian)) missing("grad-laplacian");
  if (r < 0 || r >= dim_) throw std::out_of_range("DerivativeTable::grad_laplacian");
  return grad_laplacian_[static_cast<std::size_t>(r)];
}

const Eigen::MatrixXd& DerivativeTable::bilaplacian() const {
  if (!kinds_.contains(Deriv::Bilaplacian)) missing("bilaplacian");
  return bilaplacian_;
}

DerivativeTable eval_derivatives(const FeatureBank& bank, const AffineMap& map,
                                 const PointSet& points, DerivSet request) {
  const int dim = bank.dim();
  if (map.dim() != dim || points.cols() != dim)
    throw std::invalid_argument("eval_derivatives: dimension mismatch");

  const Eigen::Index n = points.rows();
  const Eigen::Index cols = bank.size();

  Eigen::MatrixXd mapped(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    mapped.row(i) = map.apply(points.row(i).transpose()).transpose();
    if (mapped.row(i).norm() > 1.0 + 1e-9)
      throw std::invalid_argument("eval_derivatives: point " + std::to_string(i) +
                                  " maps outside the unit ball");
  }

  DerivativeTable t;
  t.dim_ = dim;
  t.points_ = n;
  t.cols_ = cols;
  t.kinds_ = request;

  const bool want_value = request.contains(Deriv::Value);
  const bool want_grad = request.contains(Deriv::Grad);
  const bool want_hess = request.contains(Deriv::Hessian);
  const bool want_lap = request.contains(Deriv::Laplacian);
  const bool want_glap = request.contains(Deriv::GradLaplacian);
  const bool want_bilap = request.contains(Deriv::Bilaplacian);
  const int n_hess = dim == 2 ? 3 : 6;

  // Column 0 (the constant feature) stays zero in every derivative table.
  if (want_value) {
    t.value_.setZero(n, cols);
    t.value_.col(0).setOnes();
  }
  if (want_grad)
    for (int r = 0; r < dim; ++r) t.grad_[r].setZero(n, cols);
  if (want_hess)
    for (int h = 0; h < n_hess; ++h) t.hess_[h].setZero(n, cols);
  if (want_lap) t.laplacian_.setZero(n, cols);
  if (want_glap)
    for (int r = 0; r < dim; ++r) t.grad_laplacian_[r].setZero(n, cols);
  if (want_bilap) t.bilaplacian_.setZero(n, cols);

  const double gamma = bank.shape();
  const double k1 = gamma / map.scale();
  const double k2 = k1 * k1;
  const double k3 = k2 * k1;
  const double k4 = k2 * k2;

  for (int m = 0; m < bank.count(); ++m) {
    const Eigen::Index c = m + 1;
    const auto s = bank.directions().row(m);
    const double r_m = bank.offsets()(m);

    double hess_coef[6] = {};
    double pure_coef[3] = {};
    for (int a = 0; a < dim; ++a) {
      for (int b = a; b < dim; ++b) hess_coef[DerivativeTable::hess_slot(a, b, dim)] = k2 * s(a) * s(b);
      pure_coef[a] = hess_coef[DerivativeTable::hess_slot(a, a, dim)];
    }

    for (Eigen::Index i = 0; i < n; ++i) {
      const double z = gamma * (mapped.row(i).dot(s) + r_m);
      const ActivationChain ch = tanh_chain(z);
      if (want_value) t.value_(i, c) = ch.s0;
      if (want_grad)
        for (int a = 0; a < dim; ++a) t.grad_[a](i, c) = k1 * s(a) * ch.s1;
      if (want_hess)
        for (int h = 0; h < n_hess; ++h) t.hess_[h](i, c) = hess_coef[h] * ch.s2;
      if (want_lap) {
        // Same products as the pure Hessian entries so the sum matches them exactly.
        double lap = pure_coef[0] * ch.s2;
        for (int a = 1; a < dim; ++a) lap += pure_coef[a] * ch.s2;
        t.laplacian_(i, c) = lap;
      }
      if (want_glap)
        for (int a = 0; a < dim; ++a) t.grad_laplacian_[a](i, c) = k3 * s(a) * ch.s3;
      if (want_bilap) t.bilaplacian_(i, c) = k4 * ch.s4;
    }
  }
  return t;
}

double expansion_partial(const Basis& basis, const Eigen::Ref<const Eigen::VectorXd>& coeffs,
                         const Eigen::Ref<const Eigen::VectorXd>& x, std::array<int, 3> order) {
  const FeatureBank& bank = basis.bank;
  const int dim = bank.dim();
  if (coeffs.size() != bank.size()) throw std::invalid_argument("expansion_partial: coeffs size");
  if (x.size() != dim) throw std::invalid_argument("expansion_partial: point dimension");
  int total = 0;
  for (int r = 0; r < 3; ++r) {
    if (order[r] < 0 || (r >= dim && order[r] != 0))
      throw std::invalid_argument("expansion_partial: bad multi-index");
    total += order[r];
  }
  if (total > 4) throw std::invalid_argument("expansion_partial: order above 4");

  const Eigen::VectorXd xh = basis.map.apply(x);
  const double k = bank.shape() / basis.map.scale();
  const double kpow = std::pow(k, total);

  double sum = total == 0 ? coeffs(0) : 0.0;
  for (int m = 0; m < bank.count(); ++m) {
    const auto s = bank.directions().row(m);
    double mono = 1.0;
    for (int r = 0; r < dim; ++r)
      for (int p = 0; p < order[r]; ++p) mono *= s(r);
    const ActivationChain ch = tanh_chain(bank.shape() * (xh.dot(s.transpose()) + bank.offsets()(m)));
    sum += coeffs(m + 1) * kpow * mono * ch[total];
  }
  return sum;
}

}  // namespace divfree

#include "divfree/fields.hpp"

#include <stdexcept>
#include <vector>

namespace divfree {

namespace {

// Levi-Civita symbol on {0,1,2}.
int levi(int a, int b, int c) {
  if (a == b || b == c || a == c) return 0;
  return ((a + 1) % 3 == b) ? 1 : -1;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

template <class Fn>
void for_chunks(const PointSet& points, Fn&& fn) {
  for (Eigen::Index start = 0; start < points.rows(); start += kEvalChunk) {
    const Eigen::Index len = std::min(kEvalChunk, points.rows() - start);
    fn(start, len, PointSet(points.middleRows(start, len)));
  }
}

VelocityEval allocate(Eigen::Index n, int d, bool with_lap) {
  VelocityEval e;
  e.u.setZero(n, d);
  e.grad.setZero(n, d * d);
  if (with_lap) e.lap.setZero(n, d);
  return e;
}

}  // namespace

Eigen::VectorXd VelocityEval::divergence() const {
  const auto d = u.cols();
  Eigen::VectorXd div = grad.col(0);
  for (Eigen::Index a = 1; a < d; ++a) div += grad.col(a * d + a);
  return div;
}

StreamSolution2D::StreamSolution2D(Basis basis, Eigen::VectorXd alpha)
    : basis_(std::move(basis)), alpha_(std::move(alpha)) {
  if (basis_.dim() != 2) throw std::invalid_argument("StreamSolution2D: basis must be 2D");
  if (alpha_.size() != basis_.size()) throw std::invalid_argument("StreamSolution2D: alpha size");
}

VelocityEval StreamSolution2D::evaluate(const PointSet& points, bool with_laplacian) const {
  VelocityEval e = allocate(points.rows(), 2, with_laplacian);
  DerivSet kinds{Deriv::Grad, Deriv::Hessian};
  if (with_laplacian) kinds = kinds | DerivSet{Deriv::GradLaplacian};
  for_chunks(points, [&](Eigen::Index s, Eigen::Index n, const PointSet& chunk) {
    const DerivativeTable t = eval_derivatives(basis_.bank, basis_.map, chunk, kinds);
    e.u.col(0).segment(s, n) = t.grad(1) * alpha_;
    e.u.col(1).segment(s, n) = -(t.grad(0) * alpha_);
    for (int b = 0; b < 2; ++b) {
      e.grad.col(0 * 2 + b).segment(s, n) = t.hess(b, 1) * alpha_;
      e.grad.col(1 * 2 + b).segment(s, n) = -(t.hess(b, 0) * alpha_);
    }
    if (with_laplacian) {
      e.lap.col(0).segment(s, n) = t.grad_laplacian(1) * alpha_;
      e.lap.col(1).segment(s, n) = -(t.grad_laplacian(0) * alpha_);
    }
  });
  return e;
}

nlohmann::json StreamSolution2D::to_json() const {
  return {{"kind", "stream2d"}, {"basis", basis_to_json(basis_)}, {"alpha", to_vec(alpha_)}};
}

PotentialSolution3D::PotentialSolution3D(Basis basis, Eigen::VectorXd alpha)
    : basis_(std::move(basis)), alpha_(std::move(alpha)) {
  if (basis_.dim() != 3) throw std::invalid_argument("PotentialSolution3D: basis must be 3D");
  if (alpha_.size() != 3 * basis_.size())
    throw std::invalid_argument("PotentialSolution3D: alpha must stack three components");
}

Eigen::Ref<const Eigen::VectorXd> PotentialSolution3D::component(int c) const {
  return alpha_.segment(static_cast<Eigen::Index>(c) * basis_.size(), basis_.size());
}

VelocityEval PotentialSolution3D::evaluate(const PointSet& points, bool with_laplacian) const {
  VelocityEval e = allocate(points.rows(), 3, with_laplacian);
  DerivSet kinds{Deriv::Grad, Deriv::Hessian};
  if (with_laplacian) kinds = kinds | DerivSet{Deriv::GradLaplacian};
  for_chunks(points, [&](Eigen::Index s, Eigen::Index n, const PointSet& chunk) {
    const DerivativeTable t = eval_derivatives(basis_.bank, basis_.map, chunk, kinds);
    // u_a = eps_abc d_b phi_c
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c) {
          const int sgn = levi(a, b, c);
          if (sgn == 0) continue;
          e.u.col(a).segment(s, n) += sgn * (t.grad(b) * component(c));
          for (int j = 0; j < 3; ++j)
            e.grad.col(a * 3 + j).segment(s, n) += sgn * (t.hess(j, b) * component(c));
          if (with_laplacian) e.lap.col(a).segment(s, n) += sgn * (t.grad_laplacian(b) * component(c));
        }
  });
  return e;
}

nlohmann::json PotentialSolution3D::to_json() const {
  return {{"kind", "potential3d"}, {"basis", basis_to_json(basis_)}, {"alpha", to_vec(alpha_)}};
}

DirectVelocity::DirectVelocity(Basis basis, Eigen::VectorXd coeffs)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != static_cast<Eigen::Index>(basis_.dim()) * basis_.size())
    throw std::invalid_argument("DirectVelocity: need one coefficient block per component");
}

VelocityEval DirectVelocity::evaluate(const PointSet& points, bool with_laplacian) const {
  const int d = dim();
  const Eigen::Index cols = basis_.size();
  VelocityEval e = allocate(points.rows(), d, with_laplacian);
  DerivSet kinds{Deriv::Value, Deriv::Grad};
  if (with_laplacian) kinds = kinds | DerivSet{Deriv::Laplacian};
  for_chunks(points, [&](Eigen::Index s, Eigen::Index n, const PointSet& chunk) {
    const DerivativeTable t = eval_derivatives(basis_.bank, basis_.map, chunk, kinds);
    for (int a = 0; a < d; ++a) {
      const auto c = coeffs_.segment(a * cols, cols);
      e.u.col(a).segment(s, n) = t.value() * c;
      for (int b = 0; b < d; ++b) e.grad.col(a * d + b).segment(s, n) = t.grad(b) * c;
      if (with_laplacian) e.lap.col(a).segment(s, n) = t.laplacian() * c;
    }
  });
  return e;
}

nlohmann::json DirectVelocity::to_json() const {
  return {{"kind", "direct"}, {"basis", basis_to_json(basis_)}, {"coeffs", to_vec(coeffs_)}};
}

Eigen::VectorXd PressureSolution::values(const PointSet& points) const {
  Eigen::VectorXd out(points.rows());
  for_chunks(points, [&](Eigen::Index s, Eigen::Index n, const PointSet& chunk) {
    out.segment(s, n) = eval_derivatives(basis.bank, basis.map, chunk, {Deriv::Value}).value() * beta;
  });
  return out;
}

Eigen::MatrixXd PressureSolution::gradient(const PointSet& points) const {
  const int d = basis.dim();
  Eigen::MatrixXd out(points.rows(), d);
  for_chunks(points, [&](Eigen::Index s, Eigen::Index n, const PointSet& chunk) {
    const DerivativeTable t = eval_derivatives(basis.bank, basis.map, chunk, {Deriv::Grad});
    for (int r = 0; r < d; ++r) out.col(r).segment(s, n) = t.grad(r) * beta;
  });
  return out;
}

nlohmann::json PressureSolution::to_json() const {
  return {{"basis", basis_to_json(basis)}, {"beta", to_vec(beta)}, {"pin", to_vec(pin)}};
}

nlohmann::json basis_to_json(const Basis& basis) {
  return {{"bank", basis.bank.to_json()},
          {"center", to_vec(basis.map.center())},
          {"scale", basis.map.scale()}};
}

Basis basis_from_json(const nlohmann::json& j) {
  return Basis{FeatureBank::from_json(j.at("bank")),
               AffineMap(from_vec(j.at("center")), j.at("scale").get<double>())};
}

std::unique_ptr<VelocityField> velocity_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  Basis basis = basis_from_json(j.at("basis"));
  if (kind == "stream2d")
    return std::make_unique<StreamSolution2D>(std::move(basis), from_vec(j.at("alpha")));
  if (kind == "potential3d")
    return std::make_unique<PotentialSolution3D>(std::move(basis), from_vec(j.at("alpha")));
  if (kind == "direct")
    return std::make_unique<DirectVelocity>(std::move(basis), from_vec(j.at("coeffs")));
  throw std::invalid_argument("velocity_from_json: unknown kind '" + kind + "'");
}

PressureSolution pressure_from_json(const nlohmann::json& j) {
  return PressureSolution{basis_from_json(j.at("basis")), from_vec(j.at("beta")),
                          from_vec(j.at("pin"))};
}

}  // namespace divfree

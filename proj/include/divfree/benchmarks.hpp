#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "divfree/box.hpp"
#include "divfree/fields.hpp"

namespace divfree {

/// One-variable function with derivatives: f(t, n) = d^n f / dt^n (n <= 6).
using Fn1D = std::function<double(double, int)>;

namespace fn {
Fn1D one();
Fn1D poly(std::vector<double> coeffs);  ///< sum c_k t^k
Fn1D exp_lin(double a);                 ///< e^{a t}
Fn1D sin_lin(double w);                 ///< sin(w t)
Fn1D cos_lin(double w);                 ///< cos(w t)
Fn1D exp_of(Fn1D h);                    ///< e^{h(t)}, derivatives through order 4
Fn1D times_poly(Fn1D f, std::vector<double> coeffs);  ///< (sum c_k t^k) f(t), degree <= 1
}  // namespace fn

/// c * f_0(x) * f_1(y) [* f_2(z)].
struct SeparableTerm {
  double coeff = 1.0;
  std::array<Fn1D, 3> factors;
};

/// Sum of separable terms with exact mixed partials.
class SeparableField {
 public:
  SeparableField() = default;
  explicit SeparableField(int dim) : dim_(dim) {}

  SeparableField& add(double coeff, Fn1D f0, Fn1D f1, Fn1D f2 = fn::one());
  int dim() const { return dim_; }
  double partial(const Eigen::Ref<const Eigen::VectorXd>& x, std::array<int, 3> order) const;
  double value(const Eigen::Ref<const Eigen::VectorXd>& x) const { return partial(x, {0, 0, 0}); }

 private:
  int dim_ = 2;
  std::vector<SeparableTerm> terms_;
};

/// Manufactured steady flow with closed-form forcing. Forcing and its gradient are formed
/// from exact derivatives of (u, p):
///   f_i = -nu lap u_i + d_i p + [u . grad u_i]
///   d_j f_i = -nu d_j lap u_i + d_j d_i p + [d_j u_k d_k u_i + u_k d_j d_k u_i]
class BenchmarkCase {
 public:
  BenchmarkCase(std::string name, BoxDomain domain, double nu, bool nonlinear,
                std::vector<SeparableField> velocity, SeparableField pressure,
                std::optional<SeparableField> stream);

  const std::string& name() const { return name_; }
  int dim() const { return domain_.dim(); }
  const BoxDomain& domain() const { return domain_; }
  double nu() const { return nu_; }
  bool nonlinear() const { return nonlinear_; }

  double velocity_partial(int comp, const Eigen::Ref<const Eigen::VectorXd>& x,
                          std::array<int, 3> order) const;
  double pressure_partial(const Eigen::Ref<const Eigen::VectorXd>& x, std::array<int, 3> order) const;

  Eigen::VectorXd velocity(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  double pressure(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd forcing(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// d x d, entry (i, j) = d_j f_i
  Eigen::MatrixXd forcing_gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Batched versions, one row per point.
  Eigen::MatrixXd velocity_at(const PointSet& pts) const;
  Eigen::VectorXd pressure_at(const PointSet& pts) const;
  Eigen::MatrixXd forcing_at(const PointSet& pts) const;
  /// 2D: n x 1 with d_x f_2 - d_y f_1; 3D: n x 3 curl f.
  Eigen::MatrixXd curl_forcing_at(const PointSet& pts) const;
  /// Exact velocity with derivatives, same layout as the field evaluators.
  VelocityEval exact_velocity_eval(const PointSet& pts) const;

  bool has_stream_function() const { return stream_.has_value(); }
  /// 2D stream function with u = (d_y phi, -d_x phi).
  double stream(const Eigen::Ref<const Eigen::VectorXd>& x, std::array<int, 3> order = {0, 0, 0}) const;

 private:
  std::string name_;
  BoxDomain domain_;
  double nu_;
  bool nonlinear_;
  std::vector<SeparableField> velocity_;
  SeparableField pressure_;
  std::optional<SeparableField> stream_;
};

/// Names: stokes2d-kovasznay, ns2d-cavitylike, stokes3d-exp, ns3d-trig. Short aliases
/// stokes2d, ns2d, stokes3d, ns3d are accepted.
BenchmarkCase make_case(const std::string& name, double nu);
std::string canonical_case_name(const std::string& name);
std::vector<std::string> case_names();

/// sqrt(sum (g - g_nn)^2) / sqrt(sum g^2) over all entries. Throws on a zero denominator.
double relative_l2_error(const Eigen::Ref<const Eigen::MatrixXd>& exact,
                         const Eigen::Ref<const Eigen::MatrixXd>& approx);
/// sqrt(mean(div^2)).
double divergence_error(const Eigen::Ref<const Eigen::VectorXd>& divergence);

struct ProblemDims {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  double cost() const { return static_cast<double>(rows) * cols * cols; }
};

struct ComplexityRow {
  std::string method;
  std::string subproblem;
  ProblemDims dims;
};

/// Expected dimensions per subproblem for the decoupled and coupled formulations.
std::vector<ComplexityRow> expected_dimensions(int dim, Eigen::Index interior,
                                               Eigen::Index boundary, Eigen::Index features);

/// Compares measured subproblem dimensions against the expected formulas; throws
/// std::logic_error on any mismatch. Returns the expected table.
std::vector<ComplexityRow> complexity_report(int dim, Eigen::Index interior, Eigen::Index boundary,
                                             Eigen::Index features,
                                             const std::vector<ComplexityRow>& measured);

struct MetricsReport {
  double error_u = 0.0;
  double error_p = 0.0;
  double error_div = 0.0;
  double assemble_seconds = 0.0;
  double solve_seconds = 0.0;
  double pressure_seconds = 0.0;
  double total_seconds = 0.0;
  ProblemDims velocity_dims;
  ProblemDims pressure_dims;
  Eigen::Index rank = 0;

  nlohmann::json to_json() const;
};

/// Velocity, pressure and divergence errors on a test set. The pressure is compared after
/// adding the exact value at the pin, since the solve fixes p(pin) = 0.
MetricsReport evaluate_metrics(const BenchmarkCase& bc, const VelocityField& velocity,
                               const PressureSolution& pressure, const PointSet& test_points);

}  // namespace divfree

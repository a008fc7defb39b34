#include "divfree/navier_stokes.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "divfree/timer.hpp"

namespace divfree {

namespace {

int levi(int a, int b, int c) {
  if (a == b || b == c || a == c) return 0;
  return ((a + 1) % 3 == b) ? 1 : -1;
}

int third(int a, int b) { return 3 - a - b; }

// Iterate-dependent fields at the interior points.
struct Iterate2D {
  Eigen::VectorXd u1, u2;  // curl phi^k
  Eigen::VectorXd wx, wy;  // grad lap phi^k
};

Iterate2D iterate_2d(const CollocationTables& t, const Eigen::VectorXd& a) {
  return {t.interior.grad(1) * a, -(t.interior.grad(0) * a), t.interior.grad_laplacian(0) * a,
          t.interior.grad_laplacian(1) * a};
}

struct Iterate3D {
  Eigen::MatrixXd u;   // I x 3, curl phi^k
  Eigen::MatrixXd du;  // I x 9, column a*3+j = d_j u_a
  Eigen::MatrixXd w;   // I x 3, lap phi^k
  Eigen::MatrixXd dw;  // I x 9, column i*3+r = d_r lap phi_i
};

Iterate3D iterate_3d(const CollocationTables& t, const Eigen::VectorXd& a) {
  const Eigen::Index I = t.interior_count(), n = t.cols();
  Iterate3D it;
  it.u.setZero(I, 3);
  it.du.setZero(I, 9);
  it.w.resize(I, 3);
  it.dw.resize(I, 9);
  for (int c = 0; c < 3; ++c) {
    const auto ac = a.segment(c * n, n);
    it.w.col(c) = t.interior.laplacian() * ac;
    for (int r = 0; r < 3; ++r) it.dw.col(c * 3 + r) = t.interior.grad_laplacian(r) * ac;
  }
  for (int a_ = 0; a_ < 3; ++a_)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) {
        const int s = levi(a_, b, c);
        if (s == 0) continue;
        const auto ac = a.segment(c * n, n);
        it.u.col(a_) += s * (t.interior.grad(b) * ac);
        for (int j = 0; j < 3; ++j) it.du.col(a_ * 3 + j) += s * (t.interior.hess(j, b) * ac);
      }
  return it;
}

void check_iterate(const CollocationTables& t, const Eigen::VectorXd& a) {
  const Eigen::Index expect = (t.dim() == 2 ? 1 : 3) * t.cols();
  if (a.size() != expect) throw std::invalid_argument("iterate has wrong length");
  if (!a.allFinite()) throw std::invalid_argument("iterate has non-finite entries");
}

void add_picard1_2d(const CollocationTables& t, const Iterate2D& k, LeastSquaresProblem& p) {
  auto in = p.matrix.topRows(t.interior_count());
  in -= k.u1.asDiagonal() * t.interior.grad_laplacian(0);
  in -= k.u2.asDiagonal() * t.interior.grad_laplacian(1);
}

void add_picard2_2d(const CollocationTables& t, const Iterate2D& k, LeastSquaresProblem& p) {
  // (curl phi . grad) W = d_y phi W_x - d_x phi W_y
  auto in = p.matrix.topRows(t.interior_count());
  in -= k.wx.asDiagonal() * t.interior.grad(1);
  in += k.wy.asDiagonal() * t.interior.grad(0);
}

// A + B of the 3D linearization.
void add_picard1_3d(const CollocationTables& t, const Iterate3D& k, LeastSquaresProblem& p) {
  const Eigen::Index I = t.interior_count(), n = t.cols();
  Eigen::MatrixXd adv = k.u.col(0).asDiagonal() * t.interior.grad_laplacian(0);
  adv += k.u.col(1).asDiagonal() * t.interior.grad_laplacian(1);
  adv += k.u.col(2).asDiagonal() * t.interior.grad_laplacian(2);
  for (int i = 0; i < 3; ++i) {
    p.matrix.block(i * I, i * n, I, n) -= adv;
    for (int r = 0; r < 3; ++r)
      p.matrix.block(i * I, r * n, I, n) += k.du.col(i * 3 + r).asDiagonal() * t.interior.laplacian();
  }
}

// C + D of the 3D linearization.
void add_picard2_3d(const CollocationTables& t, const Iterate3D& k, LeastSquaresProblem& p) {
  const Eigen::Index I = t.interior_count(), n = t.cols();
  for (int b = 0; b < 3; ++b) {
    // H_b = sum_r W_r d_r d_b Psi; C(i, c) = eps_ibc H_b
    Eigen::MatrixXd h = k.w.col(0).asDiagonal() * t.interior.hess(0, b);
    h += k.w.col(1).asDiagonal() * t.interior.hess(1, b);
    h += k.w.col(2).asDiagonal() * t.interior.hess(2, b);
    for (int i = 0; i < 3; ++i) {
      if (i == b) continue;
      const int c = third(i, b);
      if (levi(i, b, c) > 0)
        p.matrix.block(i * I, c * n, I, n) += h;
      else
        p.matrix.block(i * I, c * n, I, n) -= h;
    }
  }
  // D(i, c) = -sum_r eps_rbc d_r W_i d_b Psi
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c)
      for (int r = 0; r < 3; ++r) {
        if (r == c) continue;
        const int b = third(r, c);
        const double s = -levi(r, b, c);
        p.matrix.block(i * I, c * n, I, n) += (s * k.dw.col(i * 3 + r)).asDiagonal() * t.interior.grad(b);
      }
}

LeastSquaresProblem average(LeastSquaresProblem a, const LeastSquaresProblem& b) {
  a.matrix = 0.5 * (a.matrix + b.matrix);
  a.rhs = 0.5 * (a.rhs + b.rhs);
  return a;
}

}  // namespace

LeastSquaresProblem assemble_linearized(const CollocationTables& t, const VelocityData& data,
                                        Linearization kind, const Eigen::VectorXd& iterate) {
  LeastSquaresProblem p = assemble_stokes_velocity(t, data);
  if (kind == Linearization::Stokes) return p;
  check_iterate(t, iterate);
  if (kind == Linearization::PicardIII)
    return average(assemble_linearized(t, data, Linearization::PicardI, iterate),
                   assemble_linearized(t, data, Linearization::PicardII, iterate));

  const bool first = kind == Linearization::GaussNewton || kind == Linearization::PicardI;
  const bool second = kind == Linearization::GaussNewton || kind == Linearization::PicardII;
  const Eigen::Index I = t.interior_count();
  if (t.dim() == 2) {
    const Iterate2D k = iterate_2d(t, iterate);
    if (first) add_picard1_2d(t, k, p);
    if (second) add_picard2_2d(t, k, p);
    if (kind == Linearization::GaussNewton)
      p.rhs.head(I) -= k.u1.cwiseProduct(k.wx) + k.u2.cwiseProduct(k.wy);
  } else {
    const Iterate3D k = iterate_3d(t, iterate);
    if (first) add_picard1_3d(t, k, p);
    if (second) add_picard2_3d(t, k, p);
    if (kind == Linearization::GaussNewton)
      for (int i = 0; i < 3; ++i)
        for (int r = 0; r < 3; ++r)
          p.rhs.segment(i * I, I) += k.w.col(r).cwiseProduct(k.du.col(i * 3 + r)) -
                                     k.u.col(r).cwiseProduct(k.dw.col(i * 3 + r));
  }
  return p;
}

LeastSquaresProblem gn_step_2d(const CollocationTables& t, const VelocityData& data,
                               const Eigen::VectorXd& alpha_k) {
  if (t.dim() != 2) throw std::invalid_argument("gn_step_2d: tables must be 2D");
  return assemble_linearized(t, data, Linearization::GaussNewton, alpha_k);
}

LeastSquaresProblem gn_step_3d(const CollocationTables& t, const VelocityData& data,
                               const Eigen::VectorXd& alpha_k) {
  if (t.dim() != 3) throw std::invalid_argument("gn_step_3d: tables must be 3D");
  return assemble_linearized(t, data, Linearization::GaussNewton, alpha_k);
}

LeastSquaresProblem picard_step(const CollocationTables& t, const VelocityData& data,
                                const Eigen::VectorXd& iterate, PicardScheme scheme) {
  switch (scheme) {
    case PicardScheme::I: return assemble_linearized(t, data, Linearization::PicardI, iterate);
    case PicardScheme::II: return assemble_linearized(t, data, Linearization::PicardII, iterate);
    case PicardScheme::III: return assemble_linearized(t, data, Linearization::PicardIII, iterate);
  }
  throw std::invalid_argument("picard_step: unknown scheme");
}

Eigen::VectorXd nonlinear_residual(const CollocationTables& t, const VelocityData& data,
                                   const Eigen::VectorXd& alpha) {
  check_iterate(t, alpha);
  const Eigen::Index I = t.interior_count(), J = t.boundary_count(), n = t.cols();
  if (t.dim() == 2) {
    const Iterate2D k = iterate_2d(t, alpha);
    Eigen::VectorXd r(I + 2 * J);
    r.head(I) = data.nu * (t.interior.bilaplacian() * alpha) - k.u1.cwiseProduct(k.wx) -
                k.u2.cwiseProduct(k.wy) - data.curl_f.col(0);
    r.segment(I, J) = t.boundary.value() * alpha;
    r.segment(I + J, J) = t.normals.col(0).cwiseProduct(t.boundary.grad(0) * alpha) +
                          t.normals.col(1).cwiseProduct(t.boundary.grad(1) * alpha);
    if (data.boundary.phi.size()) r.segment(I, J) -= data.boundary.phi;
    if (data.boundary.dphi_dn.size()) r.segment(I + J, J) -= data.boundary.dphi_dn;
    return r;
  }
  const Iterate3D k = iterate_3d(t, alpha);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(4 * I + 4 * J);
  for (int i = 0; i < 3; ++i) {
    const auto ai = alpha.segment(i * n, n);
    Eigen::VectorXd ri = data.nu * (t.interior.bilaplacian() * ai) - data.curl_f.col(i);
    for (int q = 0; q < 3; ++q)
      ri += k.w.col(q).cwiseProduct(k.du.col(i * 3 + q)) - k.u.col(q).cwiseProduct(k.dw.col(i * 3 + q));
    r.segment(i * I, I) = ri;
    r.segment(3 * I, I) += t.interior.grad(i) * ai;
    r.segment(4 * I, J) += t.normals.col(i).cwiseProduct(t.boundary.value() * ai);
  }
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      if (a == b) continue;
      const int c = third(a, b);
      r.segment(4 * I + J + a * J, J) += levi(a, b, c) * (t.boundary.grad(b) * alpha.segment(c * n, n));
    }
    if (data.boundary.velocity.size()) r.segment(4 * I + J + a * J, J) -= data.boundary.velocity.col(a);
  }
  return r;
}

std::string to_string(InitStrategy s) {
  switch (s) {
    case InitStrategy::Zero: return "zero";
    case InitStrategy::Stokes: return "stokes";
    case InitStrategy::SchemeI: return "scheme-i";
  }
  return "?";
}

std::string to_string(NonlinearScheme s) {
  switch (s) {
    case NonlinearScheme::GaussNewton: return "gauss-newton";
    case NonlinearScheme::PicardI: return "picard-i";
    case NonlinearScheme::PicardII: return "picard-ii";
    case NonlinearScheme::PicardIII: return "picard-iii";
  }
  return "?";
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::MaxIters: return "max-iters";
    case Termination::Diverged: return "diverged";
  }
  return "?";
}

InitStrategy parse_init_strategy(const std::string& s) {
  if (s == "zero") return InitStrategy::Zero;
  if (s == "stokes") return InitStrategy::Stokes;
  if (s == "scheme-i" || s == "scheme-I" || s == "picard-i") return InitStrategy::SchemeI;
  throw std::invalid_argument("unknown init strategy '" + s + "'");
}

NonlinearScheme parse_scheme(const std::string& s) {
  if (s == "gauss-newton" || s == "gn") return NonlinearScheme::GaussNewton;
  if (s == "picard-i") return NonlinearScheme::PicardI;
  if (s == "picard-ii") return NonlinearScheme::PicardII;
  if (s == "picard-iii") return NonlinearScheme::PicardIII;
  throw std::invalid_argument("unknown nonlinear scheme '" + s + "'");
}

NonlinearConfig NonlinearConfig::defaults_for(int dim) {
  NonlinearConfig c;
  c.max_iters = dim == 3 ? 15 : 40;
  c.warmup_iters = dim == 3 ? 10 : 5;
  return c;
}

void NonlinearConfig::validate() const {
  if (max_iters < 1) throw std::invalid_argument("NonlinearConfig: max_iters must be >= 1");
  if (!(update_tol > 0.0)) throw std::invalid_argument("NonlinearConfig: update_tol must be > 0");
  if (warmup_iters < 0) throw std::invalid_argument("NonlinearConfig: warmup_iters must be >= 0");
  if (!(divergence_factor > 1.0))
    throw std::invalid_argument("NonlinearConfig: divergence_factor must be > 1");
  if (!(damping > 0.0 && damping <= 1.0))
    throw std::invalid_argument("NonlinearConfig: damping must be in (0, 1]");
}

double IterationHistory::final_update_norm() const {
  return records.empty() ? std::numeric_limits<double>::infinity() : records.back().update_norm;
}

double IterationHistory::final_residual() const {
  return records.empty() ? initial_residual : records.back().residual;
}

void IterationHistory::write_csv(std::ostream& out) const {
  const auto old = out.precision(17);
  out << "iter,residual,update_norm,seconds\n";
  for (const auto& r : records)
    out << r.iter << ',' << r.residual << ',' << r.update_norm << ',' << r.seconds << '\n';
  out.precision(old);
}

Eigen::VectorXd collocation_velocity(const CollocationTables& tables, const Eigen::VectorXd& alpha) {
  const Eigen::Index n = tables.cols();
  const int d = tables.dim();
  const Eigen::Index I = tables.interior_count(), J = tables.boundary_count(), P = I + J;
  Eigen::VectorXd u(d * P);
  for (int part = 0; part < 2; ++part) {
    const DerivativeTable& t = part == 0 ? tables.interior : tables.boundary;
    const Eigen::Index off = part == 0 ? 0 : I, len = part == 0 ? I : J;
    if (d == 2) {
      if (alpha.size() != n) throw std::invalid_argument("collocation_velocity: coefficient size");
      u.segment(off, len).noalias() = t.grad(1) * alpha;
      u.segment(P + off, len).noalias() = -t.grad(0) * alpha;
      continue;
    }
    if (alpha.size() != 3 * n) throw std::invalid_argument("collocation_velocity: coefficient size");
    for (int a = 0; a < 3; ++a) {
      const int b = (a + 1) % 3, c = (a + 2) % 3;
      // u_a = d_b phi_c - d_c phi_b
      u.segment(a * P + off, len).noalias() = t.grad(b) * alpha.segment(c * n, n);
      u.segment(a * P + off, len).noalias() -= t.grad(c) * alpha.segment(b * n, n);
    }
  }
  return u;
}

namespace {

Linearization step_kind(NonlinearScheme s) {
  switch (s) {
    case NonlinearScheme::GaussNewton: return Linearization::GaussNewton;
    case NonlinearScheme::PicardI: return Linearization::PicardI;
    case NonlinearScheme::PicardII: return Linearization::PicardII;
    case NonlinearScheme::PicardIII: return Linearization::PicardIII;
  }
  return Linearization::GaussNewton;
}

double relative_update(const Eigen::VectorXd& prev, const Eigen::VectorXd& next) {
  return (next - prev).norm() / std::max(next.norm(), std::numeric_limits<double>::min());
}

// Shared driver: `step(a)` returns the next full iterate, `residual(a)` the nonlinear
// residual, `observe(a)` the velocity samples the update norm is measured on.
template <class Step, class Residual, class Observe>
IterationHistory iterate(Eigen::VectorXd& a, const NonlinearConfig& cfg, Step&& step, Residual&& residual,
                         Observe&& observe) {
  IterationHistory h;
  h.initial_residual = residual(a);
  double prev = h.initial_residual;
  int growth = 0;
  Eigen::VectorXd seen = observe(a);
  Stopwatch total;
  for (int k = 1; k <= cfg.max_iters; ++k) {
    const Eigen::VectorXd next = step(a);
    a += cfg.damping * (next - a);
    Eigen::VectorXd now = observe(a);
    IterationRecord rec;
    rec.iter = k;
    rec.update_norm = relative_update(seen, now);
    seen = std::move(now);
    rec.residual = residual(a);
    rec.seconds = total.seconds();
    h.records.push_back(rec);
    if (!std::isfinite(rec.residual) || !std::isfinite(rec.update_norm)) {
      h.reason = Termination::Diverged;
      return h;
    }
    growth = rec.residual > cfg.divergence_factor * prev ? growth + 1 : 0;
    prev = rec.residual;
    if (growth >= 3) {
      h.reason = Termination::Diverged;
      return h;
    }
    if (rec.update_norm < cfg.update_tol) {
      h.reason = Termination::Converged;
      return h;
    }
  }
  h.reason = Termination::MaxIters;
  return h;
}

void add_solve(SolveInfo& info, const LeastSquaresProblem& p, double assemble_s) {
  info.rows = p.rows();
  info.cols = p.cols();
  info.assemble_seconds += assemble_s;
}

}  // namespace

NavierStokesResult solve_navier_stokes(const Basis& basis, const CollocationSet& colloc,
                                       const VelocityData& vdata, const PressureData& pdata,
                                       const NonlinearConfig& cfg) {
  cfg.validate();
  SolveInfo info;
  Stopwatch sw;
  const CollocationTables tables =
      CollocationTables::build(basis, colloc, CollocationTables::Use::Nonlinear);
  info.assemble_seconds += sw.seconds();

  auto solve = [&](Linearization kind, const Eigen::VectorXd& a) {
    Stopwatch s;
    LeastSquaresProblem p = assemble_linearized(tables, vdata, kind, a);
    // Solve for the increment: the minimum-norm correction leaves near-null directions of
    // the feature matrix alone instead of re-picking them every step.
    p.rhs.noalias() -= p.matrix * a;
    add_solve(info, p, s.seconds());
    s.reset();
    LsqResult r = solve_lsq(std::move(p), cfg.lsq);
    info.solve_seconds += s.seconds();
    info.rank = r.rank;
    info.residual_norm = r.residual_norm;
    info.condition_estimate = r.condition_estimate;
    return Eigen::VectorXd(a + r.x);
  };

  const Eigen::Index len = (basis.dim() == 2 ? 1 : 3) * basis.size();
  Eigen::VectorXd a = Eigen::VectorXd::Zero(len);
  int warm = 0;
  if (cfg.init != InitStrategy::Zero) a = solve(Linearization::Stokes, a);
  if (cfg.init == InitStrategy::SchemeI)
    for (; warm < cfg.warmup_iters; ++warm) a = solve(Linearization::PicardI, a);

  const Linearization kind = step_kind(cfg.scheme);
  IterationHistory h = iterate(
      a, cfg, [&](const Eigen::VectorXd& cur) { return solve(kind, cur); },
      [&](const Eigen::VectorXd& cur) { return nonlinear_residual(tables, vdata, cur).norm(); },
      [&](const Eigen::VectorXd& cur) { return collocation_velocity(tables, cur); });
  h.warmup_iterations = warm;

  std::unique_ptr<VelocityField> velocity = make_velocity_field(basis, a);
  PressureResult pressure =
      h.reason != Termination::Diverged
          ? recover_pressure(basis, colloc, pdata, *velocity, cfg.lsq)
          : PressureResult{PressureSolution{basis, Eigen::VectorXd::Zero(basis.size()), pdata.pin}, {}};
  return NavierStokesResult{std::move(velocity), std::move(pressure), std::move(h), info};
}

CoupledNavierStokesResult solve_coupled_navier_stokes(const Basis& basis, const CollocationSet& colloc,
                                                      const CoupledData& data,
                                                      const NonlinearConfig& cfg) {
  cfg.validate();
  SolveInfo info;
  Stopwatch sw;
  const CollocationTables tables = CollocationTables::build(basis, colloc, CollocationTables::Use::Coupled);
  info.assemble_seconds += sw.seconds();

  auto solve = [&](const Eigen::VectorXd* it) {
    Stopwatch s;
    LeastSquaresProblem p = assemble_coupled(basis, tables, data, it);
    if (it) p.rhs.noalias() -= p.matrix * *it;
    add_solve(info, p, s.seconds());
    s.reset();
    LsqResult r = solve_lsq(std::move(p), cfg.lsq);
    info.solve_seconds += s.seconds();
    info.rank = r.rank;
    info.residual_norm = r.residual_norm;
    info.condition_estimate = r.condition_estimate;
    if (it) r.x += *it;
    return std::move(r.x);
  };
  // A(c) c - b(c) with the system linearized at c is the nonlinear residual.
  auto residual = [&](const Eigen::VectorXd& c) {
    const LeastSquaresProblem p = assemble_coupled(basis, tables, data, &c);
    return (p.matrix * c - p.rhs).norm();
  };

  Eigen::VectorXd c = solve(nullptr);
  IterationHistory h = iterate(
      c, cfg, [&](const Eigen::VectorXd& cur) { return solve(&cur); }, residual, [&](const Eigen::VectorXd& cur) {
        const Eigen::Index n = tables.cols(), I = tables.interior_count(), J = tables.boundary_count();
        const int d = tables.dim();
        Eigen::VectorXd u(d * (I + J));
        for (int i = 0; i < d; ++i) {
          u.segment(i * (I + J), I).noalias() = tables.interior.value() * cur.segment(i * n, n);
          u.segment(i * (I + J) + I, J).noalias() = tables.boundary.value() * cur.segment(i * n, n);
        }
        return u;
      });

  CoupledNavierStokesResult out{coupled_from_coefficients(basis, c, data.pin), std::move(h)};
  out.solution.info = info;
  return out;
}

}  // namespace divfree

#include <cstdio>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "divfree/benchmarks.hpp"
#include "divfree/experiment.hpp"
#include "divfree/identities.hpp"

using namespace divfree;

namespace {

struct Overrides {
  std::string config;
  std::string case_pos;
  std::vector<std::pair<std::string, std::string>> values;
};

// Registers a string flag that, when given, is forwarded to ExperimentConfig::set.
void forward(CLI::App* app, Overrides& ov, const std::string& flag, const std::string& key,
             const std::string& help) {
  app->add_option_function<std::string>(
      flag, [&ov, key](const std::string& v) { ov.values.emplace_back(key, v); }, help);
}

void add_experiment_flags(CLI::App* app, Overrides& ov) {
  app->add_option("CASE", ov.case_pos, "Benchmark case (" + [] {
    std::string s;
    for (const auto& n : case_names()) s += (s.empty() ? "" : ", ") + n;
    return s;
  }() + ")");
  app->add_option("--config", ov.config, "key=value config file; flags override it");
  forward(app, ov, "--case", "case", "Benchmark case");
  forward(app, ov, "--nu", "nu", "Viscosity, comma separated list");
  forward(app, ov, "--m", "m", "Feature count, comma separated list");
  forward(app, ov, "--seed,--seeds", "seed", "Feature seed, comma separated list");
  forward(app, ov, "--gamma", "gamma", "Feature shape parameter");
  forward(app, ov, "--method", "method", "decoupled, coupled or both");
  forward(app, ov, "--out", "out", "Results CSV (JSON summary is written alongside)");
  forward(app, ov, "--workers", "workers", "Parallel cells");
  forward(app, ov, "--dump-system", "dump_system", "Prefix for binary dumps of the assembled systems");
  forward(app, ov, "--max-iters", "max_iters", "Nonlinear iteration cap");
  forward(app, ov, "--warmup", "warmup", "Picard warmup iterations");
  forward(app, ov, "--init", "init", "zero, stokes or scheme-i");
  forward(app, ov, "--scheme", "scheme", "gauss-newton, picard-i, picard-ii or picard-iii");
  forward(app, ov, "--update-tol", "update_tol", "Relative update tolerance");
  forward(app, ov, "--damping", "damping", "Step damping in (0, 1]");
  forward(app, ov, "--lsq", "lsq", "qr or svd");
  forward(app, ov, "--ridge", "ridge", "Ridge parameter");
  forward(app, ov, "--rank-tol", "rank_tol", "Absolute rank threshold");
  forward(app, ov, "--block-weights", "block_weights", "Row block weights, label:w,...");
  forward(app, ov, "--nx", "nx", "2D interior grid points along x");
  forward(app, ov, "--ny", "ny", "2D interior grid points along y");
  forward(app, ov, "--nb", "nb", "2D boundary points per side");
  forward(app, ov, "--interior", "interior", "3D Halton interior points");
  forward(app, ov, "--face-n", "face_n", "3D boundary grid per face edge");
  forward(app, ov, "--test-points", "test_points", "3D Halton test points");
}

ExperimentConfig build_config(const Overrides& ov) {
  ExperimentConfig cfg = ov.config.empty() ? ExperimentConfig{} : ExperimentConfig::from_file(ov.config);
  if (!ov.case_pos.empty()) cfg.set("case", ov.case_pos);
  for (const auto& [k, v] : ov.values) cfg.set(k, v);
  return cfg;
}

int run(const Overrides& ov) {
  try {
    const ExperimentConfig cfg = build_config(ov);
    const ExperimentOutcome outcome = run_experiment(cfg, std::cerr);
    std::cerr << outcome.results.size() << " cells run, " << outcome.skipped << " skipped; results in "
              << cfg.out << "\n";
    return outcome.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int identity_check(int dim, int seeds, int features, int points, double gamma) {
  if (dim != 2 && dim != 3) {
    std::cerr << "error: --dim must be 2 or 3\n";
    return 1;
  }
  const double tol = 1e-5;
  const BoxDomain box(Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim));
  double worst = 0.0, worst_vort = 0.0;
  for (int s = 0; s < seeds; ++s) {
    const std::uint64_t seed = 1000 + s;
    const Basis basis{FeatureBank::create(dim, features, gamma, seed), AffineMap::for_box(box)};
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const int ncoef = dim == 2 ? basis.size() : 3 * basis.size();
    Eigen::VectorXd c(ncoef);
    for (auto& v : c) v = normal(rng) / std::sqrt(double(features));
    PointSet pts = halton_points(dim, points, box, 1 + 97 * s);
    if (dim == 2) {
      worst = std::max(worst, verify_curl_identity_2d(basis, c, pts).discrepancy);
    } else {
      worst = std::max(worst, verify_curl_identity_3d(basis, c, pts).discrepancy);
      worst_vort = std::max(worst_vort, verify_vorticity_identity_3d(basis, c, pts).discrepancy);
    }
  }
  std::printf("max curl identity discrepancy over %d seeds: %.3e (tol %.0e)\n", seeds, worst, tol);
  if (dim == 3) std::printf("max vorticity identity discrepancy: %.3e (tol 1e-10)\n", worst_vort);
  return worst <= tol && worst_vort <= 1e-10 ? 0 : 1;
}

int dims(int dim, long long I, long long J, long long M) {
  const auto rows = expected_dimensions(dim, I, J, M);
  std::printf("%-10s %-10s %10s %10s %14s\n", "method", "subproblem", "rows", "cols", "m*n^2");
  double decoupled = 0.0, coupled = 0.0;
  for (const auto& r : rows) {
    std::printf("%-10s %-10s %10lld %10lld %14.4e\n", r.method.c_str(), r.subproblem.c_str(),
                static_cast<long long>(r.dims.rows), static_cast<long long>(r.dims.cols), r.dims.cost());
    (r.method == "coupled" ? coupled : decoupled) += r.dims.cost();
  }
  std::printf("total m*n^2: decoupled %.4e, coupled %.4e\n", decoupled, coupled);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Divergence-free random-feature solver for steady Stokes and Navier-Stokes flows"};
  app.require_subcommand(1);

  Overrides solve_ov, sweep_ov;
  auto* solve = app.add_subcommand("solve", "Run one case over the given nu/M/seed lists");
  add_experiment_flags(solve, solve_ov);
  auto* sweep = app.add_subcommand("sweep", "Run the nu x M x seed product (at most 200 cells)");
  add_experiment_flags(sweep, sweep_ov);

  int id_dim = 2, id_seeds = 20, id_features = 40, id_points = 200;
  double id_gamma = 2.0;
  auto* ident = app.add_subcommand("identity-check", "Check the convection curl identities on random fields");
  ident->add_option("--dim", id_dim, "2 or 3")->capture_default_str();
  ident->add_option("--seeds", id_seeds, "Number of random fields")->capture_default_str();
  ident->add_option("--m", id_features, "Features per field")->capture_default_str();
  ident->add_option("--points", id_points, "Points per field")->capture_default_str();
  ident->add_option("--gamma", id_gamma, "Feature shape parameter")->capture_default_str();

  int d_dim = 2;
  long long d_I = 2500, d_J = 200, d_M = 1000;
  auto* dimcmd = app.add_subcommand("dims", "Print least-squares dimensions for both methods");
  dimcmd->add_option("--dim", d_dim, "2 or 3")->capture_default_str();
  dimcmd->add_option("--interior,-I", d_I, "Interior points")->capture_default_str();
  dimcmd->add_option("--boundary,-J", d_J, "Boundary points")->capture_default_str();
  dimcmd->add_option("--m", d_M, "Features")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (*solve) return run(solve_ov);
  if (*sweep) return run(sweep_ov);
  if (*ident) return identity_check(id_dim, id_seeds, id_features, id_points, id_gamma);
  if (*dimcmd) return dims(d_dim, d_I, d_J, d_M);
  return 1;
}

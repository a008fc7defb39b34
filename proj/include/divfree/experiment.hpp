#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "divfree/benchmarks.hpp"
#include "divfree/navier_stokes.hpp"
#include "divfree/sampling.hpp"
#include "divfree/stokes.hpp"

namespace divfree {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string case_name = "stokes2d-kovasznay";
  std::vector<double> nus{1e-2};
  std::vector<int> ms{1000};
  std::vector<std::uint64_t> seeds{7};
  double gamma = 2.0;
  /// decoupled | coupled | both
  std::string method = "decoupled";

  // 2D training grid and test grid
  int nx = 50, ny = 50, nb = 50;
  int test_nx = 111, test_ny = 111;
  // 3D Halton interior, face grid, Halton test set
  int interior_3d = 10000;
  int face_n = 20;
  int test_3d = 2000;

  std::optional<int> max_iters;
  std::optional<int> warmup_iters;
  std::string init = "scheme-i";
  std::string scheme = "gauss-newton";
  double update_tol = 1e-8;
  double divergence_factor = 1.5;
  double damping = 1.0;

  std::string lsq = "qr";
  double ridge = 0.0;
  std::optional<double> rank_tol;
  /// label:weight pairs, e.g. "interior-pde:0.01,momentum:0.01". Off by default.
  std::vector<std::pair<std::string, double>> block_weights;

  std::string out = "results.csv";
  int workers = 1;
  /// File prefix for binary dumps of each cell's first velocity (or coupled) system.
  std::string dump_system;

  /// key=value; lists are comma separated. Throws ConfigError on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Flat key=value file, '#' starts a comment.
  static ExperimentConfig from_file(const std::string& path);
  void validate() const;

  std::vector<std::string> methods() const;
  std::size_t cell_count() const;
  NonlinearConfig nonlinear_config(int dim) const;
  LsqOptions lsq_options() const;
  nlohmann::json to_json() const;
};

inline constexpr std::size_t kMaxSweepCells = 200;

/// Problem data for a benchmark on a collocation set.
VelocityData velocity_data_for(const BenchmarkCase& bc, const CollocationSet& colloc);
PressureData pressure_data_for(const BenchmarkCase& bc, const CollocationSet& colloc,
                               const Eigen::VectorXd& pin);
CoupledData coupled_data_for(const BenchmarkCase& bc, const CollocationSet& colloc,
                             const Eigen::VectorXd& pin);

/// Training and test points for a case under a config.
CollocationSet training_set(const BenchmarkCase& bc, const ExperimentConfig& cfg);
PointSet test_set(const BenchmarkCase& bc, const ExperimentConfig& cfg);

struct CellResult {
  std::string case_name;
  std::string method;
  double nu = 0.0;
  int m = 0;
  std::uint64_t seed = 0;
  double gamma = 0.0;
  Eigen::Index interior = 0;
  Eigen::Index boundary = 0;
  MetricsReport metrics;
  int iters = 0;
  std::string status = "ok";

  std::string key() const;
  std::string csv_row() const;
  nlohmann::json to_json() const;
};

/// Column header of the results CSV.
std::string csv_header();
std::string cell_key(const std::string& case_name, const std::string& method, double nu, int m,
                     std::uint64_t seed);

CellResult run_cell(const ExperimentConfig& cfg, const std::string& method, double nu, int m,
                    std::uint64_t seed);

/// Keys already present in a results CSV (empty if the file does not exist).
std::set<std::string> completed_keys(const std::string& csv_path);

struct ExperimentOutcome {
  std::vector<CellResult> results;
  std::size_t skipped = 0;
  int exit_code = 0;
};

/// Runs every (method, nu, M, seed) cell not already in the output CSV, appending rows as
/// they finish, and writes a JSON summary next to the CSV. Exit code 0 on success, 2 if any
/// nonlinear solve diverged, 1 if a cell failed.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg, std::ostream& log);

/// Path of the JSON summary written next to `csv_path`.
std::string summary_path(const std::string& csv_path);

}  // namespace divfree

#include "divfree/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "divfree/timer.hpp"

namespace divfree {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("bad number for '" + key + "': '" + v + "'");
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long d = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("bad integer for '" + key + "': '" + v + "'");
  }
}

template <class T, class Parse>
std::vector<T> parse_list(const std::string& key, const std::string& v, Parse parse) {
  std::vector<T> out;
  for (const auto& item : split(v, ',')) {
    if (item.empty()) throw ConfigError("empty entry in list for '" + key + "'");
    out.push_back(static_cast<T>(parse(key, item)));
  }
  if (out.empty()) throw ConfigError("empty list for '" + key + "'");
  return out;
}

}  // namespace

void ExperimentConfig::set(const std::string& raw_key, const std::string& raw_value) {
  std::string key = trim(raw_key);
  std::replace(key.begin(), key.end(), '-', '_');
  const std::string v = trim(raw_value);
  auto as_int = [&] { return static_cast<int>(parse_int(key, v)); };

  if (key == "case") case_name = v;
  else if (key == "nu") nus = parse_list<double>(key, v, parse_double);
  else if (key == "m") ms = parse_list<int>(key, v, parse_int);
  else if (key == "seed" || key == "seeds") seeds = parse_list<std::uint64_t>(key, v, parse_int);
  else if (key == "gamma") gamma = parse_double(key, v);
  else if (key == "method") method = v;
  else if (key == "nx") nx = as_int();
  else if (key == "ny") ny = as_int();
  else if (key == "nb") nb = as_int();
  else if (key == "test_nx") test_nx = as_int();
  else if (key == "test_ny") test_ny = as_int();
  else if (key == "interior") interior_3d = as_int();
  else if (key == "face_n") face_n = as_int();
  else if (key == "test_points") test_3d = as_int();
  else if (key == "max_iters") max_iters = as_int();
  else if (key == "warmup") warmup_iters = as_int();
  else if (key == "init") init = v;
  else if (key == "scheme") scheme = v;
  else if (key == "update_tol") update_tol = parse_double(key, v);
  else if (key == "divergence_factor") divergence_factor = parse_double(key, v);
  else if (key == "damping") damping = parse_double(key, v);
  else if (key == "lsq") lsq = v;
  else if (key == "ridge") ridge = parse_double(key, v);
  else if (key == "rank_tol") rank_tol = parse_double(key, v);
  else if (key == "block_weights") {
    block_weights.clear();
    if (!v.empty())
      for (const std::string& item : split(v, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ConfigError("block_weights expects label:weight, got '" + item + "'");
        block_weights.emplace_back(trim(item.substr(0, colon)), parse_double(key, trim(item.substr(colon + 1))));
      }
  }
  else if (key == "out") out = v;
  else if (key == "workers") workers = as_int();
  else if (key == "dump_system") dump_system = v;
  else throw ConfigError("unknown config key '" + raw_key + "'");
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    cfg.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

void ExperimentConfig::validate() const {
  try {
    canonical_case_name(case_name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (nus.empty() || ms.empty() || seeds.empty()) throw ConfigError("nu, m and seed lists must be nonempty");
  for (double nu : nus)
    if (!(nu > 0.0) || !std::isfinite(nu)) throw ConfigError("nu must be positive");
  for (int m : ms)
    if (m < 1) throw ConfigError("m must be >= 1");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be positive");
  if (method != "decoupled" && method != "coupled" && method != "both")
    throw ConfigError("method must be decoupled, coupled or both");
  if (nx < 2 || ny < 2 || nb < 2 || test_nx < 2 || test_ny < 2)
    throw ConfigError("2D point counts must be >= 2");
  if (interior_3d < 1 || face_n < 2 || test_3d < 1) throw ConfigError("3D point counts out of range");
  if (max_iters && *max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (warmup_iters && *warmup_iters < 0) throw ConfigError("warmup must be >= 0");
  if (lsq != "qr" && lsq != "svd") throw ConfigError("lsq must be qr or svd");
  if (ridge < 0.0) throw ConfigError("ridge must be >= 0");
  static const std::set<std::string> labels{"interior-pde", "boundary-value", "boundary-normal",
                                            "divergence", "boundary-flux", "boundary-curl",
                                            "pressure-gradient", "pin", "momentum", "boundary-velocity"};
  for (const auto& [label, w] : block_weights) {
    if (!labels.count(label)) throw ConfigError("unknown row block '" + label + "'");
    if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("block weights must be positive");
  }
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (out.empty()) throw ConfigError("out path must be set");
  try {
    parse_init_strategy(init);
    parse_scheme(scheme);
    nonlinear_config(2).validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (cell_count() > kMaxSweepCells)
    throw ConfigError("sweep has " + std::to_string(cell_count()) + " cells, limit is " +
                      std::to_string(kMaxSweepCells));
}

std::vector<std::string> ExperimentConfig::methods() const {
  if (method == "both") return {"decoupled", "coupled"};
  return {method};
}

std::size_t ExperimentConfig::cell_count() const {
  return methods().size() * nus.size() * ms.size() * seeds.size();
}

NonlinearConfig ExperimentConfig::nonlinear_config(int dim) const {
  NonlinearConfig c = NonlinearConfig::defaults_for(dim);
  if (max_iters) c.max_iters = *max_iters;
  if (warmup_iters) c.warmup_iters = *warmup_iters;
  c.init = parse_init_strategy(init);
  c.scheme = parse_scheme(scheme);
  c.update_tol = update_tol;
  c.divergence_factor = divergence_factor;
  c.damping = damping;
  c.lsq = lsq_options();
  return c;
}

LsqOptions ExperimentConfig::lsq_options() const {
  LsqOptions o;
  o.method = lsq == "svd" ? LsqMethod::SVD : LsqMethod::PivotedQR;
  o.ridge = ridge;
  o.rank_tol = rank_tol;
  o.block_weights = block_weights;
  return o;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j = {{"case", canonical_case_name(case_name)},
                      {"nu", nus},
                      {"m", ms},
                      {"seed", seeds},
                      {"gamma", gamma},
                      {"method", method},
                      {"nx", nx},
                      {"ny", ny},
                      {"nb", nb},
                      {"test_nx", test_nx},
                      {"test_ny", test_ny},
                      {"interior", interior_3d},
                      {"face_n", face_n},
                      {"test_points", test_3d},
                      {"init", init},
                      {"scheme", scheme},
                      {"update_tol", update_tol},
                      {"divergence_factor", divergence_factor},
                      {"damping", damping},
                      {"lsq", lsq},
                      {"ridge", ridge},
                      {"out", out},
                      {"workers", workers}};
  if (max_iters) j["max_iters"] = *max_iters;
  if (warmup_iters) j["warmup"] = *warmup_iters;
  if (rank_tol) j["rank_tol"] = *rank_tol;
  for (const auto& [label, w] : block_weights) j["block_weights"][label] = w;
  return j;
}

VelocityData velocity_data_for(const BenchmarkCase& bc, const CollocationSet& colloc) {
  VelocityData d;
  d.nu = bc.nu();
  d.curl_f = bc.curl_forcing_at(colloc.interior);
  const Eigen::Index J = colloc.boundary_count();
  if (bc.dim() == 2) {
    d.boundary.phi.resize(J);
    d.boundary.dphi_dn.resize(J);
    for (Eigen::Index j = 0; j < J; ++j) {
      const Eigen::VectorXd x = colloc.boundary.row(j).transpose();
      d.boundary.phi(j) = bc.stream(x);
      d.boundary.dphi_dn(j) = bc.stream(x, {1, 0, 0}) * colloc.normals(j, 0) +
                              bc.stream(x, {0, 1, 0}) * colloc.normals(j, 1);
    }
  } else {
    d.boundary.velocity = bc.velocity_at(colloc.boundary);
  }
  return d;
}

PressureData pressure_data_for(const BenchmarkCase& bc, const CollocationSet& colloc,
                               const Eigen::VectorXd& pin) {
  return PressureData{bc.nu(), bc.forcing_at(colloc.interior), bc.nonlinear(), pin};
}

CoupledData coupled_data_for(const BenchmarkCase& bc, const CollocationSet& colloc,
                             const Eigen::VectorXd& pin) {
  return CoupledData{bc.nu(), bc.forcing_at(colloc.interior), bc.velocity_at(colloc.boundary), pin};
}

CollocationSet training_set(const BenchmarkCase& bc, const ExperimentConfig& cfg) {
  if (bc.dim() == 2) return grid_collocation_2d(bc.domain(), cfg.nx, cfg.ny, cfg.nb);
  return halton_collocation_3d(bc.domain(), cfg.interior_3d, cfg.face_n, cfg.face_n, 1);
}

PointSet test_set(const BenchmarkCase& bc, const ExperimentConfig& cfg) {
  if (bc.dim() == 2) return uniform_grid_2d(bc.domain(), cfg.test_nx, cfg.test_ny);
  // Start after the training indices so the two sets are disjoint.
  return halton_points(3, cfg.test_3d, bc.domain(), 1 + static_cast<std::uint64_t>(cfg.interior_3d));
}

std::string csv_header() {
  return "case,method,nu,M,seed,gamma,I,J,error_u,error_p,error_div,iters,status,"
         "assemble_seconds,solve_seconds,pressure_seconds,seconds,rows,cols,p_rows,p_cols,rank";
}

std::string cell_key(const std::string& case_name, const std::string& method, double nu, int m,
                     std::uint64_t seed) {
  return case_name + "|" + method + "|" + fmt_double(nu) + "|" + std::to_string(m) + "|" +
         std::to_string(seed);
}

std::string CellResult::key() const { return cell_key(case_name, method, nu, m, seed); }

std::string CellResult::csv_row() const {
  std::ostringstream o;
  const auto& r = metrics;
  o << case_name << ',' << method << ',' << fmt_double(nu) << ',' << m << ',' << seed << ','
    << fmt_double(gamma) << ',' << interior << ',' << boundary << ',' << fmt_double(r.error_u) << ','
    << fmt_double(r.error_p) << ',' << fmt_double(r.error_div) << ',' << iters << ',' << status << ','
    << fmt_double(r.assemble_seconds) << ',' << fmt_double(r.solve_seconds) << ','
    << fmt_double(r.pressure_seconds) << ',' << fmt_double(r.total_seconds) << ','
    << r.velocity_dims.rows << ',' << r.velocity_dims.cols << ',' << r.pressure_dims.rows << ','
    << r.pressure_dims.cols << ',' << r.rank;
  return o.str();
}

nlohmann::json CellResult::to_json() const {
  nlohmann::json j = metrics.to_json();
  j["case"] = case_name;
  j["method"] = method;
  j["nu"] = nu;
  j["M"] = m;
  j["seed"] = seed;
  j["gamma"] = gamma;
  j["I"] = interior;
  j["J"] = boundary;
  j["iters"] = iters;
  j["status"] = status;
  return j;
}

namespace {

std::string dump_path(const ExperimentConfig& cfg, const CellResult& c) {
  return cfg.dump_system + "_" + c.case_name + "_" + c.method + "_nu" + fmt_double(c.nu) + "_M" +
         std::to_string(c.m) + "_s" + std::to_string(c.seed) + ".bin";
}

}  // namespace

CellResult run_cell(const ExperimentConfig& cfg, const std::string& method, double nu, int m,
                    std::uint64_t seed) {
  Stopwatch total;
  const BenchmarkCase bc = make_case(cfg.case_name, nu);
  const int d = bc.dim();
  const CollocationSet colloc = training_set(bc, cfg);
  const PointSet test = test_set(bc, cfg);
  const Basis basis{FeatureBank::create(d, m, cfg.gamma, seed), AffineMap::for_box(bc.domain())};
  const Eigen::VectorXd pin = bc.domain().center();
  const LsqOptions lsq = cfg.lsq_options();

  CellResult c;
  c.case_name = bc.name();
  c.method = method;
  c.nu = nu;
  c.m = m;
  c.seed = seed;
  c.gamma = cfg.gamma;
  c.interior = colloc.interior_count();
  c.boundary = colloc.boundary_count();

  if (method == "decoupled") {
    const VelocityData vdata = velocity_data_for(bc, colloc);
    const PressureData pdata = pressure_data_for(bc, colloc, pin);
    if (!cfg.dump_system.empty())
      dump_problem(assemble_stokes_velocity(
                       CollocationTables::build(basis, colloc, CollocationTables::Use::Stokes), vdata),
                   dump_path(cfg, c));
    std::unique_ptr<VelocityField> velocity;
    std::optional<PressureResult> pressure;
    SolveInfo vinfo;
    if (bc.nonlinear()) {
      NavierStokesResult r = solve_navier_stokes(basis, colloc, vdata, pdata, cfg.nonlinear_config(d));
      velocity = std::move(r.velocity);
      pressure.emplace(std::move(r.pressure));
      vinfo = r.velocity_info;
      c.iters = r.history.iterations();
      c.status = to_string(r.history.reason);
    } else {
      VelocityResult v = solve_stokes_velocity(basis, colloc, vdata, lsq);
      velocity = std::move(v.field);
      vinfo = v.info;
      pressure.emplace(recover_pressure(basis, colloc, pdata, *velocity, lsq));
    }
    c.metrics = evaluate_metrics(bc, *velocity, pressure->solution, test);
    c.metrics.assemble_seconds = vinfo.assemble_seconds;
    c.metrics.solve_seconds = vinfo.solve_seconds;
    c.metrics.pressure_seconds = pressure->info.assemble_seconds + pressure->info.solve_seconds;
    c.metrics.velocity_dims = {vinfo.rows, vinfo.cols};
    c.metrics.pressure_dims = {pressure->info.rows, pressure->info.cols};
    c.metrics.rank = vinfo.rank;
  } else if (method == "coupled") {
    const CoupledData data = coupled_data_for(bc, colloc, pin);
    if (!cfg.dump_system.empty())
      dump_problem(assemble_coupled(basis,
                                    CollocationTables::build(basis, colloc, CollocationTables::Use::Coupled),
                                    data),
                   dump_path(cfg, c));
    std::optional<CoupledResult> solved;
    if (bc.nonlinear()) {
      CoupledNavierStokesResult nr = solve_coupled_navier_stokes(basis, colloc, data, cfg.nonlinear_config(d));
      solved.emplace(std::move(nr.solution));
      c.iters = nr.history.iterations();
      c.status = to_string(nr.history.reason);
    } else {
      solved.emplace(solve_coupled_baseline(basis, colloc, data, lsq));
    }
    const CoupledResult& r = *solved;
    c.metrics = evaluate_metrics(bc, *r.velocity, r.pressure, test);
    c.metrics.assemble_seconds = r.info.assemble_seconds;
    c.metrics.solve_seconds = r.info.solve_seconds;
    c.metrics.velocity_dims = {r.info.rows, r.info.cols};
    c.metrics.rank = r.info.rank;
  } else {
    throw ConfigError("unknown method '" + method + "'");
  }
  c.metrics.total_seconds = total.seconds();
  return c;
}

std::set<std::string> completed_keys(const std::string& csv_path) {
  std::set<std::string> keys;
  std::ifstream in(csv_path);
  if (!in) return keys;
  std::string line;
  if (!std::getline(in, line)) return keys;
  const auto header = split(line, ',');
  auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError("existing output '" + csv_path + "' lacks column " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ic = col("case"), im = col("method"), in_ = col("nu"), iM = col("M"), is = col("seed");
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() < header.size()) continue;  // partial line from an interrupted write
    keys.insert(cell_key(f[ic], f[im], std::stod(f[in_]), std::stoi(f[iM]),
                         static_cast<std::uint64_t>(std::stoull(f[is]))));
  }
  return keys;
}

std::string summary_path(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".json");
  return p.string();
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  const std::string canon = canonical_case_name(cfg.case_name);

  struct Cell {
    std::string method;
    double nu;
    int m;
    std::uint64_t seed;
  };
  const std::set<std::string> done = completed_keys(cfg.out);
  std::vector<Cell> cells;
  ExperimentOutcome outcome;
  for (const auto& method : cfg.methods())
    for (double nu : cfg.nus)
      for (int m : cfg.ms)
        for (std::uint64_t seed : cfg.seeds) {
          if (done.count(cell_key(canon, method, nu, m, seed)))
            ++outcome.skipped;
          else
            cells.push_back({method, nu, m, seed});
        }

  if (const auto parent = std::filesystem::path(cfg.out).parent_path(); !parent.empty())
    std::filesystem::create_directories(parent);
  const bool fresh = !std::filesystem::exists(cfg.out) || std::filesystem::file_size(cfg.out) == 0;
  std::ofstream csv(cfg.out, std::ios::app);
  if (!csv) throw ConfigError("cannot write '" + cfg.out + "'");
  if (fresh) csv << csv_header() << '\n' << std::flush;

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  bool failed = false, diverged = false;
  std::vector<std::optional<CellResult>> results(cells.size());

  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& cell = cells[i];
      try {
        CellResult r = run_cell(cfg, cell.method, cell.nu, cell.m, cell.seed);
        std::lock_guard<std::mutex> lock(mu);
        csv << r.csv_row() << '\n' << std::flush;
        log << r.case_name << " " << r.method << " nu=" << fmt_double(r.nu) << " M=" << r.m
            << " seed=" << r.seed << ": error_u=" << r.metrics.error_u << " error_p=" << r.metrics.error_p
            << " error_div=" << r.metrics.error_div << " status=" << r.status << " ("
            << r.metrics.total_seconds << " s)\n";
        if (r.status == "diverged") diverged = true;
        results[i] = std::move(r);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        log << "cell " << cell_key(canon, cell.method, cell.nu, cell.m, cell.seed) << " failed: " << e.what()
            << '\n';
        failed = true;
      }
    }
  };
  const int nthreads = std::min<int>(cfg.workers, static_cast<int>(std::max<std::size_t>(cells.size(), 1)));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (auto& r : results)
    if (r) outcome.results.push_back(std::move(*r));

  nlohmann::json summary = {{"config", cfg.to_json()}, {"skipped", outcome.skipped}, {"cells", nlohmann::json::array()}};
  for (const auto& r : outcome.results) summary["cells"].push_back(r.to_json());
  std::ofstream js(summary_path(cfg.out));
  js << summary.dump(2) << '\n';

  outcome.exit_code = failed ? 1 : (diverged ? 2 : 0);
  return outcome;
}

}  // namespace divfree

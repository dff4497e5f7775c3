#include "fracphase/harness.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "fracphase/error.hpp"

namespace fracphase {

Field random_initial(const Grid2D& grid, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Field f(grid);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;  // [0, 1)
    f[i] = 0.5 * u - 0.25;
  }
  return f;
}

Field sine_initial(const Grid2D& grid) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return Field::sample(grid, [](double x, double y) { return std::sin(two_pi * x) * std::sin(two_pi * y); });
}

double manufactured_solution(double x, double y, double t) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return 0.25 * (1.0 + t * t * t) * std::sin(two_pi * x) * std::sin(two_pi * y);
}

double manufactured_caputo(double x, double y, double t, double alpha) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (t <= 0.0) return 0.0;
  return 0.25 * 6.0 * std::pow(t, 3.0 - alpha) / std::tgamma(4.0 - alpha) * std::sin(two_pi * x) *
         std::sin(two_pi * y);
}

double manufactured_source(double x, double y, double t, double alpha, double eps) {
  const double u = manufactured_solution(x, y, t);
  const double lap = -8.0 * std::numbers::pi * std::numbers::pi * u;
  return manufactured_caputo(x, y, t, alpha) - eps * eps * lap + u * u * u - u;
}

std::vector<double> compute_rates(std::span<const double> errors) {
  for (double e : errors)
    if (!(e > 0.0)) throw Error(ErrorCode::BadValue, "errors must be positive to compute rates");
  std::vector<double> rates;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) rates.push_back(std::log2(errors[i] / errors[i + 1]));
  return rates;
}

double field_error(const Field& u, const Field& ref) {
  require_same_grid(u, ref);
  return norm_l2(u - ref);
}

std::vector<ConvergenceRow> ConvergenceTable::select(double alpha, const std::string& scheme) const {
  std::vector<ConvergenceRow> out;
  for (const ConvergenceRow& r : rows)
    if (r.alpha == alpha && r.scheme == scheme) out.push_back(r);
  return out;
}

std::vector<double> default_gammas(double alpha, int count) {
  const double hi = 2.0 / alpha;
  std::vector<double> g(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) g[i] = count == 1 ? 1.0 : 1.0 + (hi - 1.0) * i / (count - 1);
  return g;
}

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, count));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

void fill_rates(std::vector<ConvergenceRow>& group) {
  for (std::size_t i = 0; i < group.size(); ++i)
    group[i].rate = i == 0 || !(group[i - 1].error > 0.0 && group[i].error > 0.0)
                        ? std::numeric_limits<double>::quiet_NaN()
                        : std::log2(group[i - 1].error / group[i].error);
}

int node_index(const TimeMesh& mesh, double t) {
  const double tau = mesh.tau();
  const long n = std::lround(t / tau);
  if (n < 0 || n > mesh.steps() || std::abs(n * tau - t) > 1e-9 * std::max(1.0, t))
    throw Error(ErrorCode::BadValue, "time " + std::to_string(t) + " is not a mesh node");
  return static_cast<int>(n);
}

// Steps needed to reach fraction * t_final with N steps over t_final.
int eval_steps(int steps, double fraction) {
  const double s = steps * fraction;
  const long n = std::lround(s);
  if (n < 1 || std::abs(s - n) > 1e-9) throw Error(ErrorCode::BadValue, "evaluation time is not a mesh node");
  return static_cast<int>(n);
}

RunConfig base_config(double alpha, double eps, int m, Scheme scheme, TimeMesh mesh, double fp_tol) {
  RunConfig c;
  c.alpha = alpha;
  c.eps = eps;
  c.grid = Grid2D(0.0, 1.0, m);
  c.mesh = std::move(mesh);
  c.scheme = scheme;
  c.fp_tol = fp_tol;
  return c;
}

Field final_state(const RunConfig& config, const Field& u0) {
  Trajectory traj = run(config, u0);
  return std::move(traj.states.back());
}

std::string describe_convergence(const ConvergenceOptions& o, const std::string& what) {
  const auto f = format_number;
  std::ostringstream os;
  os << "experiment = " << what << "\nalpha = " << f(o.alpha) << "\nM = " << o.m << "\nT = " << f(o.t_final)
     << "\neps = " << f(o.eps) << "\neval_time = " << f(o.eval_fraction * o.t_final) << "\nfp_tol = " << f(o.fp_tol);
  if (what == "example3")
    os << "\nreference_N = " << o.reference_steps << "\nreference_fp_tol = " << f(o.reference_fp_tol);
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

Example1Options Example1Options::fast(double alpha, std::uint64_t seed) {
  Example1Options o;
  o.alpha = alpha;
  o.seed = seed;
  o.m = 100;
  o.t_final = 5.0;
  o.snapshot_times = {5.0};
  return o;
}

Example1Result run_example1(const Example1Options& opts) {
  const int steps = static_cast<int>(std::lround(opts.t_final / opts.tau));
  RunConfig config = base_config(opts.alpha, opts.eps, opts.m, Scheme::SftrHalf,
                                 TimeMesh::uniform(opts.t_final, steps), opts.fp_tol);
  config.seed = opts.seed;
  const Field u0 = random_initial(config.grid, opts.seed);

  std::vector<int> snap_steps;
  for (double t : opts.snapshot_times)
    if (t <= opts.t_final + 1e-12) snap_steps.push_back(node_index(config.mesh, t));

  Example1Result result;
  result.config = config;
  EnergyMonitor monitor(config);
  // Keep snapshots as they pass; the trajectory itself is dropped at the end.
  auto observer = [&](const Trajectory& traj, int n) {
    monitor.observe(traj, n);
    for (int s : snap_steps)
      if (s == n) result.snapshots.push_back({traj.states[n], config.mesh.node(n)});
  };
  run(config, u0, observer);
  result.log = monitor.records();
  result.max_principle = max_principle_check(result.log);
  result.decay_violation = monitor.first_decay_violation();
  result.decay_slack = monitor.decay_slack();
  result.max_decay_residual = -std::numeric_limits<double>::infinity();
  for (const MonitorRecord& r : result.log)
    if (r.n >= 1) result.max_decay_residual = std::max(result.max_decay_residual, r.decay_residual);
  return result;
}

ConvergenceTable run_example2(const ConvergenceOptions& opts) {
  struct Cell {
    Scheme scheme;
    int steps;
    double error = 0.0;
  };
  std::vector<Cell> cells;
  for (Scheme s : opts.schemes)
    for (int n : opts.steps) cells.push_back({s, n});

  const Grid2D grid(0.0, 1.0, opts.m);
  const double t_eval = opts.eval_fraction * opts.t_final;
  const double alpha = opts.alpha, eps = opts.eps;
  const Field u0 = Field::sample(grid, [](double x, double y) { return manufactured_solution(x, y, 0.0); });
  const Field exact = Field::sample(grid, [t_eval](double x, double y) { return manufactured_solution(x, y, t_eval); });

  parallel_for(cells.size(), opts.jobs, [&](std::size_t i) {
    Cell& cell = cells[i];
    const int n_eval = eval_steps(cell.steps, opts.eval_fraction);
    RunConfig c = base_config(alpha, eps, opts.m, cell.scheme, TimeMesh::uniform(t_eval, n_eval), opts.fp_tol);
    c.source = [alpha, eps](double x, double y, double t) { return manufactured_source(x, y, t, alpha, eps); };
    cell.error = field_error(final_state(c, u0), exact);
  });

  ConvergenceTable table;
  table.description = describe_convergence(opts, "example2");
  for (Scheme s : opts.schemes) {
    std::vector<ConvergenceRow> group;
    for (const Cell& cell : cells)
      if (cell.scheme == s)
        group.push_back({alpha, std::string(to_string(s)), cell.steps, opts.t_final / cell.steps, cell.error, 0.0});
    fill_rates(group);
    table.rows.insert(table.rows.end(), group.begin(), group.end());
  }
  return table;
}

ConvergenceTable run_example3(const ConvergenceOptions& opts) {
  struct Cell {
    Scheme scheme;
    int steps;  // reference when steps == opts.reference_steps and is_ref
    bool is_ref;
    std::optional<Field> state;
  };
  std::vector<Cell> cells;
  for (Scheme s : opts.schemes) {
    cells.push_back({s, opts.reference_steps, true, std::nullopt});
    for (int n : opts.steps) cells.push_back({s, n, false, std::nullopt});
  }
  const Grid2D grid(0.0, 1.0, opts.m);
  const Field u0 = sine_initial(grid);
  const double t_eval = opts.eval_fraction * opts.t_final;

  parallel_for(cells.size(), opts.jobs, [&](std::size_t i) {
    Cell& cell = cells[i];
    const int n_eval = eval_steps(cell.steps, opts.eval_fraction);
    const double tol = cell.is_ref ? opts.reference_fp_tol : opts.fp_tol;
    RunConfig c = base_config(opts.alpha, opts.eps, opts.m, cell.scheme, TimeMesh::uniform(t_eval, n_eval), tol);
    cell.state = final_state(c, u0);
  });

  ConvergenceTable table;
  table.description = describe_convergence(opts, "example3");
  for (Scheme s : opts.schemes) {
    const Field* ref = nullptr;
    for (const Cell& cell : cells)
      if (cell.scheme == s && cell.is_ref) ref = &*cell.state;
    std::vector<ConvergenceRow> group;
    for (const Cell& cell : cells)
      if (cell.scheme == s && !cell.is_ref)
        group.push_back({opts.alpha, std::string(to_string(s)), cell.steps, opts.t_final / cell.steps,
                         field_error(*cell.state, *ref), 0.0});
    fill_rates(group);
    table.rows.insert(table.rows.end(), group.begin(), group.end());
  }
  return table;
}

Example4Result run_example4(const Example4Options& opts) {
  const std::vector<double> gammas = opts.gammas.empty() ? default_gammas(opts.alpha) : opts.gammas;
  struct Cell {
    Scheme scheme;
    double gamma;
    int steps;
    bool is_ref;
    std::optional<Field> state;
  };
  // Reference per (scheme, gamma); SFTR-1/2 uses the uniform mesh only.
  std::vector<Cell> cells;
  cells.push_back({Scheme::SftrHalf, 1.0, opts.reference_steps, true, std::nullopt});
  for (int n : opts.steps) cells.push_back({Scheme::SftrHalf, 1.0, n, false, std::nullopt});
  for (double g : gammas) {
    cells.push_back({Scheme::L21Sigma, g, opts.reference_steps, true, std::nullopt});
    for (int n : opts.steps) cells.push_back({Scheme::L21Sigma, g, n, false, std::nullopt});
  }
  const Grid2D grid(0.0, 1.0, opts.m);
  const Field u0 = sine_initial(grid);

  parallel_for(cells.size(), opts.jobs, [&](std::size_t i) {
    Cell& cell = cells[i];
    TimeMesh mesh = cell.gamma == 1.0 ? TimeMesh::uniform(opts.t_final, cell.steps)
                                      : TimeMesh::graded(opts.t_final, cell.steps, cell.gamma);
    RunConfig c = base_config(opts.alpha, opts.eps, opts.m, cell.scheme, std::move(mesh), opts.fp_tol);
    cell.state = final_state(c, u0);
  });

  auto error_of = [&](Scheme s, double g, int n) {
    const Field* ref = nullptr;
    const Field* u = nullptr;
    for (const Cell& cell : cells) {
      if (cell.scheme != s || cell.gamma != g) continue;
      if (cell.is_ref) ref = &*cell.state;
      else if (cell.steps == n) u = &*cell.state;
    }
    return field_error(*u, *ref);
  };

  Example4Result result;
  std::ostringstream os;
  os << "experiment = example4\nalpha = " << format_number(opts.alpha) << "\nM = " << opts.m
     << "\nT = " << format_number(opts.t_final) << "\neps = " << format_number(opts.eps)
     << "\nreference_N = " << opts.reference_steps << "\nfp_tol = " << format_number(opts.fp_tol);
  result.table.description = os.str();

  std::vector<ConvergenceRow> sftr, uniform, best;
  for (int n : opts.steps) {
    GammaSweep sweep;
    sweep.alpha = opts.alpha;
    sweep.n = n;
    sweep.gammas = gammas;
    sweep.min_error = std::numeric_limits<double>::infinity();
    for (double g : gammas) {
      const double e = error_of(Scheme::L21Sigma, g, n);
      sweep.errors.push_back(e);
      if (e < sweep.min_error) {
        sweep.min_error = e;
        sweep.argmin = g;
      }
    }
    sftr.push_back({opts.alpha, "sftr", n, opts.t_final / n, error_of(Scheme::SftrHalf, 1.0, n), 0.0});
    uniform.push_back({opts.alpha, "l21sigma_uniform", n, 1.0, error_of(Scheme::L21Sigma, gammas.front(), n), 0.0});
    best.push_back({opts.alpha, "l21sigma_min", n, sweep.argmin, sweep.min_error, 0.0});
    result.sweeps.push_back(std::move(sweep));
  }
  for (auto* group : {&sftr, &uniform, &best}) {
    fill_rates(*group);
    result.table.rows.insert(result.table.rows.end(), group->begin(), group->end());
  }
  return result;
}

// ---------------------------------------------------------------------------

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string describe(const RunConfig& c) {
  const auto f = format_number;
  std::ostringstream os;
  os << "alpha = " << f(c.alpha) << "\neps = " << f(c.eps) << "\nscheme = " << to_string(c.scheme) << "\na = " << f(c.grid.a())
     << "\nb = " << f(c.grid.b()) << "\nM = " << c.grid.m() << "\nT = " << f(c.mesh.t_final())
     << "\nN = " << c.mesh.steps() << "\nmesh = " << (c.mesh.is_uniform() ? "uniform" : "graded")
     << "\ngamma = " << f(c.mesh.gamma()) << "\nfp_tol = " << f(c.fp_tol) << "\nfp_max_iter = " << c.fp_max_iter
     << "\nsource = " << (c.source ? "manufactured" : "none") << "\nseed = ";
  if (c.seed) os << *c.seed;
  else os << "none";
  return os.str();
}

namespace {
void write_header(std::ostream& os, const std::string& header) {
  std::istringstream hs(header);
  for (std::string line; std::getline(hs, line);) os << (line.starts_with("#") ? "" : "# ") << line << '\n';
}
}  // namespace

void write_convergence_csv(const std::filesystem::path& path, const ConvergenceTable& table,
                           const std::string& header) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  write_header(os, header.empty() ? table.description : header);
  os << "alpha,scheme,N,tau_or_gamma,error,rate\n" << std::setprecision(17);
  for (const ConvergenceRow& r : table.rows)
    os << format_number(r.alpha) << ',' << r.scheme << ',' << r.n << ',' << format_number(r.tau_or_gamma) << ',' << r.error << ',' << r.rate << '\n';
  if (!os) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

void write_gamma_sweep_csv(const std::filesystem::path& path, std::span<const GammaSweep> sweeps,
                           const std::string& header) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  write_header(os, header);
  os << "alpha,gamma,error\n" << std::setprecision(17);
  for (const GammaSweep& s : sweeps)
    for (std::size_t i = 0; i < s.gammas.size(); ++i) os << format_number(s.alpha) << ',' << format_number(s.gammas[i]) << ',' << s.errors[i] << '\n';
  if (!os) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

std::string snapshot_filename(double alpha, double t) {
  std::ostringstream os;
  os << "snap_alpha" << alpha << "_t" << t << ".dat";
  return os.str();
}

}  // namespace fracphase

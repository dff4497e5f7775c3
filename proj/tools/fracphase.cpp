// fracphase: weights, single runs and the four reference experiments.
//
// Exit status: 0 success, 1 usage/config/IO error, 2 solver error,
// 3 a structure monitor (maximum principle or energy decay) failed.

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "fracphase/config.hpp"
#include "fracphase/energy.hpp"
#include "fracphase/error.hpp"
#include "fracphase/harness.hpp"
#include "fracphase/weights.hpp"

namespace fs = std::filesystem;
using namespace fracphase;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitSolver = 2;
constexpr int kExitMonitor = 3;

struct MonitorFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path output_dir(const std::string& flag, const std::optional<fs::path>& from_config) {
  fs::path dir = ".";
  if (from_config) dir = *from_config;
  if (const char* env = std::getenv("FRACPHASE_OUT"); env && *env) dir = env;
  if (!flag.empty()) dir = flag;
  fs::create_directories(dir);
  return dir;
}

std::string join_header(std::initializer_list<std::string> parts) {
  std::string out;
  for (const std::string& p : parts) {
    if (p.empty()) continue;
    if (!out.empty()) out += '\n';
    out += p;
  }
  return out;
}

std::string fmt(double v) { return format_number(v); }

void report_monitors(const MaxPrincipleReport* mp, std::optional<int> decay, double slack) {
  std::string failure;
  if (mp && !mp->passed)
    failure += "maximum principle violated at step " + std::to_string(*mp->first_violation) +
               " (max |U| = " + fmt(mp->max_abs) + ")";
  if (decay) {
    if (!failure.empty()) failure += "; ";
    failure += "energy decay residual above slack " + fmt(slack) + " at step " + std::to_string(*decay);
  }
  if (!failure.empty()) throw MonitorFailure(failure);
}

// ---------------------------------------------------------------------------

struct WeightsArgs {
  double alpha = 0.5;
  std::string kind = "sftr";
  long count = 10;
  std::string out;
};

void cmd_weights(const WeightsArgs& a) {
  if (a.count < 1) throw Error(ErrorCode::BadValue, "--count must be at least 1");
  const WeightSequence w = make_weights(parse_weight_kind(a.kind), a.alpha, a.count - 1);
  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw Error(ErrorCode::Io, "cannot open " + a.out + " for writing");
  }
  std::ostream& os = a.out.empty() ? std::cout : file;
  os << std::setprecision(17);
  for (double v : w.values()) os << v << '\n';
  if (!os) throw Error(ErrorCode::Io, "write failed");
}

// ---------------------------------------------------------------------------

struct RunArgs {
  std::string config;
  std::string ic;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void cmd_run(const RunArgs& a) {
  CliConfig cli = parse_config(fs::path(a.config));
  if (!a.ic.empty()) cli.ic = InitialCondition::parse(a.ic);
  if (a.seed) cli.run.seed = a.seed;
  RunConfig& config = cli.run;

  Field u0(config.grid);
  switch (cli.ic.kind) {
    case InitialCondition::Kind::Random:
      if (!config.seed) config.seed = 1;
      u0 = random_initial(config.grid, *config.seed);
      break;
    case InitialCondition::Kind::Sine:
      u0 = sine_initial(config.grid);
      break;
    case InitialCondition::Kind::File: {
      Snapshot s = read_snapshot(cli.ic.path);
      if (!(s.field.grid() == config.grid))
        throw Error(ErrorCode::GridMismatch, "initial snapshot grid differs from the configured grid");
      u0 = std::move(s.field);
      break;
    }
  }
  const fs::path dir = output_dir(a.out, cli.output_dir);
  const std::string header = join_header({"fracphase run", describe(config), "ic = " + cli.ic.to_string(),
                                          "snapshot_every = " + std::to_string(cli.snapshot_every)});

  EnergyMonitor monitor(config);
  const int last = config.mesh.steps();
  auto observer = [&](const Trajectory& traj, int n) {
    monitor.observe(traj, n);
    const bool due = n == last || (cli.snapshot_every > 0 && n % cli.snapshot_every == 0);
    if (due) {
      const double t = config.mesh.node(n);
      write_snapshot(dir / snapshot_filename(config.alpha, t), traj.states[n], t, header);
    }
  };
  const Trajectory traj = run(config, u0, observer);
  for (const std::string& w : traj.warnings) std::cerr << "warning: " << w << '\n';
  write_energy_csv(dir / "energy.csv", monitor.records(), header);

  // The maximum principle is only claimed for SFTR-1/2 from data in [-1, 1].
  std::optional<MaxPrincipleReport> mp;
  if (config.scheme == Scheme::SftrHalf && norm_inf(u0) <= 1.0) mp = max_principle_check(monitor.records());
  report_monitors(mp ? &*mp : nullptr, monitor.first_decay_violation(), monitor.decay_slack());
  std::cout << "wrote " << (dir / "energy.csv").string() << '\n';
}

// ---------------------------------------------------------------------------

struct Example1Args {
  double alpha = 0.6;
  std::uint64_t seed = 1;
  bool fast = false;
  std::optional<int> m;
  std::optional<double> t_final;
  std::string out;
};

void cmd_example1(const Example1Args& a) {
  Example1Options o = a.fast ? Example1Options::fast(a.alpha, a.seed) : Example1Options{};
  o.alpha = a.alpha;
  o.seed = a.seed;
  if (a.m) o.m = *a.m;
  if (a.t_final) {
    o.t_final = *a.t_final;
    std::erase_if(o.snapshot_times, [&](double t) { return t > o.t_final; });
    if (o.snapshot_times.empty() || o.snapshot_times.back() != o.t_final) o.snapshot_times.push_back(o.t_final);
  }
  const fs::path dir = output_dir(a.out, std::nullopt);
  const Example1Result r = run_example1(o);
  const std::string header =
      join_header({"fracphase example1", describe(r.config), "ic = random", std::string("fast = ") + (a.fast ? "1" : "0")});
  for (const Snapshot& s : r.snapshots) write_snapshot(dir / snapshot_filename(o.alpha, s.t), s.field, s.t, header);
  write_energy_csv(dir / "energy.csv", r.log, header);
  std::cout << "max |U^n| = " << fmt(r.max_principle.max_abs) << ", max decay residual = " << fmt(r.max_decay_residual)
            << " (slack " << fmt(r.decay_slack) << ")\n";
  report_monitors(&r.max_principle, r.decay_violation, r.decay_slack);
}

// ---------------------------------------------------------------------------

struct TableArgs {
  std::vector<double> alphas;
  std::optional<int> m;
  std::vector<int> steps;
  std::optional<int> reference_steps;
  unsigned jobs = 0;
  std::string out;
};

void print_table(const ConvergenceTable& t) {
  std::cout << std::left << std::setw(7) << "alpha" << std::setw(18) << "scheme" << std::setw(6) << "N"
            << std::setw(14) << "error" << "rate\n";
  for (const ConvergenceRow& r : t.rows) {
    std::cout << std::setw(7) << r.alpha << std::setw(18) << r.scheme << std::setw(6) << r.n << std::setw(14)
              << std::scientific << std::setprecision(4) << r.error << std::fixed << std::setprecision(2);
    if (std::isnan(r.rate)) std::cout << "-";
    else std::cout << r.rate;
    std::cout << std::defaultfloat << std::setprecision(6) << '\n';
  }
}

void cmd_convergence(const TableArgs& a, int example) {
  const std::vector<double> alphas = a.alphas.empty() ? std::vector<double>{0.3, 0.6, 0.9} : a.alphas;
  ConvergenceTable all;
  for (double alpha : alphas) {
    ConvergenceOptions o;
    o.alpha = alpha;
    o.jobs = a.jobs;
    if (a.m) o.m = *a.m;
    if (!a.steps.empty()) o.steps = a.steps;
    if (a.reference_steps) o.reference_steps = *a.reference_steps;
    ConvergenceTable t = example == 2 ? run_example2(o) : run_example3(o);
    all.rows.insert(all.rows.end(), t.rows.begin(), t.rows.end());
    all.description = t.description;
  }
  std::string desc = all.description;
  // Per-alpha line is replaced by the list actually run.
  std::string alist;
  for (double x : alphas) alist += (alist.empty() ? "" : " ") + fmt(x);
  desc = "alphas = " + alist + "\n" + desc.substr(desc.find('\n', desc.find("alpha =")) + 1);
  const fs::path dir = output_dir(a.out, std::nullopt);
  write_convergence_csv(dir / "convergence.csv", all, join_header({"fracphase example" + std::to_string(example), desc}));
  print_table(all);
}

struct Example4Args {
  std::vector<double> alphas;
  std::optional<int> m;
  std::vector<int> steps;
  std::optional<int> reference_steps;
  std::vector<double> gammas;
  int gamma_count = 17;
  unsigned jobs = 0;
  std::string out;
};

void cmd_example4(const Example4Args& a) {
  const std::vector<double> alphas = a.alphas.empty() ? std::vector<double>{0.2, 0.4, 0.6, 0.8} : a.alphas;
  ConvergenceTable all;
  std::map<int, std::vector<GammaSweep>> by_n;
  std::string desc;
  for (double alpha : alphas) {
    Example4Options o;
    o.alpha = alpha;
    o.jobs = a.jobs;
    if (a.m) o.m = *a.m;
    if (!a.steps.empty()) o.steps = a.steps;
    if (a.reference_steps) o.reference_steps = *a.reference_steps;
    o.gammas = a.gammas.empty() ? default_gammas(alpha, a.gamma_count) : a.gammas;
    Example4Result r = run_example4(o);
    all.rows.insert(all.rows.end(), r.table.rows.begin(), r.table.rows.end());
    desc = r.table.description;
    for (const GammaSweep& s : r.sweeps) by_n[s.n].push_back(s);
  }
  std::string alist;
  for (double x : alphas) alist += (alist.empty() ? "" : " ") + fmt(x);
  desc = "alphas = " + alist + "\n" + desc.substr(desc.find('\n', desc.find("alpha =")) + 1);
  const fs::path dir = output_dir(a.out, std::nullopt);
  const std::string header = join_header({"fracphase example4", desc});
  write_convergence_csv(dir / "convergence.csv", all, header);
  for (const auto& [n, sweeps] : by_n)
    write_gamma_sweep_csv(dir / ("gamma_sweep_N" + std::to_string(n) + ".csv"), sweeps,
                          join_header({header, "N = " + std::to_string(n)}));
  const auto& [n_max, sweeps_max] = *by_n.rbegin();
  write_gamma_sweep_csv(dir / "gamma_sweep.csv", sweeps_max, join_header({header, "N = " + std::to_string(n_max)}));
  print_table(all);
  for (const GammaSweep& s : sweeps_max)
    std::cout << "alpha " << s.alpha << ", N " << s.n << ": min error " << std::scientific << std::setprecision(4)
              << s.min_error << std::defaultfloat << std::setprecision(6) << " at gamma " << s.argmin << '\n';
}

// ---------------------------------------------------------------------------

struct RatesArgs {
  std::vector<double> errors;
  std::string csv;
};

void cmd_rates(const RatesArgs& a) {
  std::cout << std::setprecision(6);
  if (!a.csv.empty()) {
    // Recompute rates per (alpha, scheme) group of a convergence.csv.
    std::ifstream in(a.csv);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + a.csv);
    std::string line;
    bool header_seen = false;
    std::string group;
    std::vector<double> errs;
    auto flush = [&] {
      if (errs.size() < 2) return;
      std::cout << group;
      for (double r : compute_rates(errs)) std::cout << ' ' << r;
      std::cout << '\n';
    };
    for (int no = 1; std::getline(in, line); ++no) {
      if (line.empty() || line.front() == '#') continue;
      if (!header_seen) {
        if (line != "alpha,scheme,N,tau_or_gamma,error,rate")
          throw Error(ErrorCode::BadValue, a.csv + ":" + std::to_string(no) + ": unexpected header");
        header_seen = true;
        continue;
      }
      std::vector<std::string> f;
      std::stringstream ss(line);
      for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
      if (f.size() != 6) throw Error(ErrorCode::BadValue, a.csv + ":" + std::to_string(no) + ": expected 6 fields");
      const std::string g = f[0] + "," + f[1];
      if (g != group) {
        flush();
        group = g;
        errs.clear();
      }
      errs.push_back(std::stod(f[4]));
    }
    flush();
    return;
  }
  if (a.errors.size() < 2) throw Error(ErrorCode::BadValue, "need at least two errors");
  for (double r : compute_rates(a.errors)) std::cout << r << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-fractional Allen-Cahn solver"};
  app.require_subcommand(1);

  WeightsArgs wa;
  auto* weights = app.add_subcommand("weights", "Print convolution weights w_0..w_{count-1}");
  weights->add_option("--alpha", wa.alpha, "Fractional order in (0, 1]")->required();
  weights->add_option("--kind", wa.kind, "sftr | theta | vartheta | fbdf2")->capture_default_str();
  weights->add_option("--count", wa.count, "Number of weights")->capture_default_str();
  weights->add_option("--out", wa.out, "Output file (default stdout)");

  RunArgs ra;
  auto* runc = app.add_subcommand("run", "Solve one configured problem");
  runc->add_option("--config", ra.config, "Config file")->required()->check(CLI::ExistingFile);
  runc->add_option("--ic", ra.ic, "random | sine | file:PATH (overrides the config)");
  runc->add_option("--out", ra.out, "Output directory");
  runc->add_option("--seed", ra.seed, "Seed for the random initial condition");

  Example1Args e1;
  auto* ex1 = app.add_subcommand("example1", "Coarsening from random data: snapshots and energy.csv");
  ex1->add_option("--alpha", e1.alpha)->capture_default_str();
  ex1->add_option("--seed", e1.seed)->capture_default_str();
  ex1->add_flag("--fast", e1.fast, "Desk scale: M = 100, T = 5");
  ex1->add_option("--M", e1.m, "Grid points per side");
  ex1->add_option("--T", e1.t_final, "Final time");
  ex1->add_option("--out", e1.out, "Output directory");

  TableArgs e2, e3;
  auto* ex2 = app.add_subcommand("example2", "Manufactured solution: errors and rates at T/2");
  auto* ex3 = app.add_subcommand("example3", "Sine initial data: errors against a fine reference at T/2");
  for (auto [cmd, args] : {std::pair{ex2, &e2}, std::pair{ex3, &e3}}) {
    cmd->add_option("--alpha", args->alphas, "Fractional orders (default 0.3 0.6 0.9)");
    cmd->add_option("--M", args->m, "Grid points per side (default 200)");
    cmd->add_option("--steps", args->steps, "Step counts over [0, 1] (default 20 40 80 160)");
    cmd->add_option("--jobs", args->jobs, "Worker threads (0 = all cores)");
    cmd->add_option("--out", args->out, "Output directory");
  }
  ex3->add_option("--reference-steps", e3.reference_steps, "Reference step count (default 400)");

  Example4Args e4;
  auto* ex4 = app.add_subcommand("example4", "Graded-mesh L2-1sigma sweep against SFTR-1/2");
  ex4->add_option("--alpha", e4.alphas, "Fractional orders (default 0.2 0.4 0.6 0.8)");
  ex4->add_option("--M", e4.m, "Grid points per side (default 200)");
  ex4->add_option("--steps", e4.steps, "Step counts (default 32 64 128)");
  ex4->add_option("--reference-steps", e4.reference_steps, "Reference step count (default 400)");
  ex4->add_option("--gamma", e4.gammas, "Grading exponents (default: evenly over [1, 2/alpha])");
  ex4->add_option("--gamma-count", e4.gamma_count, "Number of default grading exponents")->capture_default_str();
  ex4->add_option("--jobs", e4.jobs, "Worker threads (0 = all cores)");
  ex4->add_option("--out", e4.out, "Output directory");

  RatesArgs rta;
  auto* rates = app.add_subcommand("rates", "Observed orders log2(e_i / e_{i+1})");
  rates->add_option("errors", rta.errors, "Errors at successively halved steps");
  rates->add_option("--csv", rta.csv, "Recompute from a convergence.csv")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*weights) cmd_weights(wa);
    else if (*runc) cmd_run(ra);
    else if (*ex1) cmd_example1(e1);
    else if (*ex2) cmd_convergence(e2, 2);
    else if (*ex3) cmd_convergence(e3, 3);
    else if (*ex4) cmd_example4(e4);
    else if (*rates) cmd_rates(rta);
  } catch (const MonitorFailure& e) {
    std::cerr << "fracphase: monitor: " << e.what() << '\n';
    return kExitMonitor;
  } catch (const Error& e) {
    std::cerr << "fracphase: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::BadValue:
      case ErrorCode::MissingKey:
      case ErrorCode::Io:
        return kExitUsage;
      default:
        return kExitSolver;
    }
  } catch (const std::exception& e) {
    std::cerr << "fracphase: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

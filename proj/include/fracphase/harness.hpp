#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fracphase/energy.hpp"
#include "fracphase/grid.hpp"
#include "fracphase/stepper.hpp"

namespace fracphase {

// ---------------------------------------------------------------------------
// Initial data and manufactured solution

/// 0.5 * U(0,1) - 0.25 at every node, from a seeded mt19937_64 stream
/// (53-bit mantissa draws, row-major order).
Field random_initial(const Grid2D& grid, std::uint64_t seed);

/// sin(2 pi x) sin(2 pi y)
Field sine_initial(const Grid2D& grid);

/// u = (1 + t^3) sin(2 pi x) sin(2 pi y) / 4
double manufactured_solution(double x, double y, double t);
/// Caputo derivative of the manufactured solution in t.
double manufactured_caputo(double x, double y, double t, double alpha);
/// s = D_t^alpha u - eps^2 Laplace u + u^3 - u for the manufactured u.
double manufactured_source(double x, double y, double t, double alpha, double eps);

// ---------------------------------------------------------------------------
// Error tables

/// rates[i] = log2(errors[i] / errors[i + 1]); throws on nonpositive input.
std::vector<double> compute_rates(std::span<const double> errors);

/// Discrete L2 norm of u - ref.
double field_error(const Field& u, const Field& ref);

struct ConvergenceRow {
  double alpha = 0.0;
  std::string scheme;  // "sftr", "fbdf2", "l21sigma_uniform", "l21sigma_min", ...
  int n = 0;
  double tau_or_gamma = 0.0;
  double error = 0.0;
  double rate = 0.0;  // NaN on the first row of a group
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  std::string description;

  std::vector<ConvergenceRow> select(double alpha, const std::string& scheme) const;
};

struct GammaSweep {
  double alpha = 0.0;
  int n = 0;
  std::vector<double> gammas;
  std::vector<double> errors;
  double argmin = 0.0;
  double min_error = 0.0;
};

/// n evenly spaced values covering [1, 2 / alpha].
std::vector<double> default_gammas(double alpha, int count = 17);

// ---------------------------------------------------------------------------
// Experiments. Defaults reproduce the published settings; every field may be
// overridden for desk-scale runs.

struct Example1Options {
  double alpha = 0.6;
  std::uint64_t seed = 1;
  int m = 200;
  double t_final = 20.0;
  double tau = 0.05;
  double eps = 0.01;
  double fp_tol = 1e-6;
  std::vector<double> snapshot_times{5.0, 10.0, 20.0};

  /// M = 100, T = 5.
  static Example1Options fast(double alpha, std::uint64_t seed);
};

struct Example1Result {
  RunConfig config;
  std::vector<MonitorRecord> log;
  std::vector<Snapshot> snapshots;
  MaxPrincipleReport max_principle;
  std::optional<int> decay_violation;
  double decay_slack = 0.0;
  double max_decay_residual = 0.0;
};

Example1Result run_example1(const Example1Options& opts);

struct ConvergenceOptions {
  double alpha = 0.6;
  int m = 200;
  double t_final = 1.0;
  double eps = 0.005;
  std::vector<int> steps{20, 40, 80, 160};
  std::vector<Scheme> schemes{Scheme::SftrHalf, Scheme::Fbdf2};
  /// Errors are taken at this fraction of t_final.
  double eval_fraction = 0.5;
  double fp_tol = 1e-6;
  /// Reference step count (Example 3 only).
  int reference_steps = 400;
  double reference_fp_tol = 1e-6;
  unsigned jobs = 0;  // 0 = hardware concurrency
};

/// Manufactured smooth solution: errors against the exact solution.
ConvergenceTable run_example2(const ConvergenceOptions& opts);
/// Unforced model from the sine initial condition: errors against each
/// scheme's own fine-step reference.
ConvergenceTable run_example3(const ConvergenceOptions& opts);

struct Example4Options {
  double alpha = 0.6;
  int m = 200;
  double t_final = 1.0;
  double eps = 0.01;
  std::vector<int> steps{32, 64, 128};
  int reference_steps = 400;
  std::vector<double> gammas;  // empty = default_gammas(alpha)
  double fp_tol = 1e-6;
  unsigned jobs = 0;
};

struct Example4Result {
  ConvergenceTable table;          // sftr, l21sigma_uniform, l21sigma_min rows
  std::vector<GammaSweep> sweeps;  // one per step count
};

Example4Result run_example4(const Example4Options& opts);

// ---------------------------------------------------------------------------
// Output

/// Shortest decimal text that reads back to the same double.
std::string format_number(double v);

/// `key = value` lines describing a run, for file headers.
std::string describe(const RunConfig& config);

void write_convergence_csv(const std::filesystem::path& path, const ConvergenceTable& table,
                           const std::string& header = {});
void write_gamma_sweep_csv(const std::filesystem::path& path, std::span<const GammaSweep> sweeps,
                           const std::string& header = {});
/// snap_alpha{A}_t{T}.dat
std::string snapshot_filename(double alpha, double t);

/// Runs fn(i) for i in [0, count) on up to `jobs` threads (0 = hardware
/// concurrency). Exceptions are rethrown on the calling thread.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn);

}  // namespace fracphase

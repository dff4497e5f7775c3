#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fracphase/grid.hpp"
#include "fracphase/weights.hpp"

namespace fracphase {

/// Partition 0 = t_0 < ... < t_N = T, either uniform (t_n = n T / N) or
/// graded (t_n = T (n / N)^gamma, gamma >= 1).
class TimeMesh {
 public:
  enum class Kind { Uniform, Graded };

  static TimeMesh uniform(double t_final, int steps);
  static TimeMesh graded(double t_final, int steps, double gamma);

  Kind kind() const noexcept { return kind_; }
  bool is_uniform() const noexcept { return kind_ == Kind::Uniform; }
  double t_final() const noexcept { return t_final_; }
  int steps() const noexcept { return steps_; }
  double gamma() const noexcept { return gamma_; }
  double node(int n) const { return nodes_.at(static_cast<std::size_t>(n)); }
  double step(int n) const { return node(n) - node(n - 1); }
  /// Uniform step T / N (uniform meshes only).
  double tau() const;
  const std::vector<double>& nodes() const noexcept { return nodes_; }

 private:
  TimeMesh(Kind kind, double t_final, int steps, double gamma);

  Kind kind_;
  double t_final_;
  int steps_;
  double gamma_;
  std::vector<double> nodes_;
};

enum class Scheme { SftrHalf, Fbdf2, L21Sigma };

std::string_view to_string(Scheme scheme);
Scheme parse_scheme(std::string_view name);

/// Manufactured source s(x, y, t) added to the right-hand side.
using SourceFn = std::function<double(double, double, double)>;

struct RunConfig {
  double alpha = 0.5;
  double eps = 0.01;
  Grid2D grid{0.0, 1.0, 16};
  TimeMesh mesh = TimeMesh::uniform(1.0, 10);
  Scheme scheme = Scheme::SftrHalf;
  double fp_tol = 1e-6;
  int fp_max_iter = 100;
  SourceFn source;
  std::optional<std::uint64_t> seed;

  /// Throws Error(BadValue) on any broken invariant.
  void validate() const;
};

/// U^0..U^n plus the fixed-point iteration count of every completed step
/// (fp_iters[0] is 0 for the initial state).
struct Trajectory {
  RunConfig config;
  std::vector<Field> states;
  std::vector<int> fp_iters;
  /// Non-fatal diagnostics, e.g. a time step above a sufficient bound.
  std::vector<std::string> warnings;
};

/// Convex-splitting bulk force 1/3 a^3 + 1/2 b^2 a + 1/6 b^3 - 1/2 (a + b).
double nonlinear_term(double a, double b);
Field nonlinear_term(const Field& un, const Field& unm1);

/// Double-well potential F(u) = (1 - u^2)^2 / 4.
double double_well(double u);

struct StepSizeBounds {
  double solvability;
  double max_principle;
};

/// Sufficient step-size limits for unique solvability and for the discrete
/// maximum principle of the SFTR-1/2 scheme.
StepSizeBounds step_size_bounds(double alpha, double eps, double h);

/// Lagged part tau^{-alpha} sum_{m=1}^{n} w_m (U^{n-m} - U^0) of the
/// SFTR-1/2 convolution. Needs U^0..U^{n-1}.
Field sftr_history(const WeightSequence& weights, const Trajectory& traj, int n);

/// Coefficients A_1..A_n (index k - 1) of the nonuniform L2-1sigma formula
///   D u(t_{n-1} + sigma tau_n) ~ sum_k A_k (u^k - u^{k-1}),  sigma = 1 - alpha/2.
std::vector<double> l21sigma_coefficients(const TimeMesh& mesh, double alpha, int n);

/// Advances one scheme by one step. Holds the weights, the spectral solver
/// and scratch storage; one instance per run.
class Stepper {
 public:
  explicit Stepper(const RunConfig& config);

  /// Computes U^n from traj.states[0..n-1]. `iterations` receives the number
  /// of fixed-point sweeps.
  Field step(const Trajectory& traj, int n, int* iterations = nullptr);

  const RunConfig& config() const noexcept { return config_; }
  /// Time at which the step-n equation is collocated (and the source sampled).
  double collocation_time(int n) const;
  /// Max-norm residual of the step-n equation for a candidate U^n.
  double residual(const Trajectory& traj, int n, const Field& un) const;

 private:
  struct Linearized;
  Linearized assemble(const Trajectory& traj, int n) const;

  RunConfig config_;
  WeightSequence weights_;
  HelmholtzSolver solver_;
};

using StepObserver = std::function<void(const Trajectory&, int n)>;

/// Runs the configured scheme from u0 over the whole mesh. The observer (if
/// any) is called once for n = 0 and after every completed step.
Trajectory run(const RunConfig& config, const Field& u0, const StepObserver& observer = {});

}  // namespace fracphase

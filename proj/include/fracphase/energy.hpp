#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fracphase/grid.hpp"
#include "fracphase/stepper.hpp"
#include "fracphase/weights.hpp"

namespace fracphase {

/// E_h = (eps^2 / 2) ||grad_h u||^2 + (1/4) ||u^2 - 1||^2
double discrete_energy(const Field& u, double eps);

/// V^{n-1/2} = eps^2 Delta_h (U^n + U^{n-1}) / 2 - f^{n-1,n}
Field variational_slope(const Field& un, const Field& unm1, double eps);

/// Compatible energy E_h^n + (tau^alpha / 2) sum_{s=1}^{n} vartheta_{n-s} ||V^{s-1/2}||^2,
/// recomputed from the stored trajectory (uniform mesh).
double compatible_energy(const Trajectory& traj, int n, const WeightSequence& vartheta, double eps);

/// Left-hand side of the one-step decay inequality
///   Ec^n - Ec^{n-1} + (tau^alpha / 2) vartheta_{n-1} ||V^{n-1/2}||^2  (<= 0),
/// recomputed from the stored trajectory.
double decay_residual(const Trajectory& traj, int n, const WeightSequence& vartheta, double eps);

struct MonitorRecord {
  int n = 0;
  double t = 0.0;
  double linf = 0.0;
  double energy = 0.0;
  /// NaN when the scheme has no compatible energy (non-SFTR runs).
  double compatible_energy = 0.0;
  /// NaN for n = 0 and for non-SFTR runs.
  double decay_residual = 0.0;
  int fp_iters = 0;
};

/// Incremental per-step monitor. Slope norms are cached as steps arrive; the
/// compatible energy is re-summed over the cache at each step.
class EnergyMonitor {
 public:
  explicit EnergyMonitor(const RunConfig& config);

  /// Records step n of traj (n = 0 first, then consecutive steps).
  void observe(const Trajectory& traj, int n);
  StepObserver observer();

  const std::vector<MonitorRecord>& records() const noexcept { return records_; }
  /// Compatible energy and decay checks apply (SFTR-1/2, uniform mesh).
  bool tracks_compatible_energy() const noexcept { return compatible_; }
  /// Allowance for inexact inner solves: 100 fp_tol max(1, tau^{-alpha}).
  double decay_slack() const noexcept { return slack_; }
  /// First step whose decay residual exceeds the slack, if any.
  std::optional<int> first_decay_violation() const;

 private:
  RunConfig config_;
  bool compatible_ = false;
  double slack_ = 0.0;
  double tau_alpha_ = 0.0;
  std::vector<double> vartheta_;
  std::vector<double> slope_sq_;
  std::vector<MonitorRecord> records_;
};

struct MaxPrincipleReport {
  bool passed = true;
  std::optional<int> first_violation;
  double max_abs = 0.0;
};

/// Flags the first state with ||U^n||_inf > 1 + tol.
MaxPrincipleReport max_principle_check(const Trajectory& traj, double tol = 1e-12);
MaxPrincipleReport max_principle_check(const std::vector<MonitorRecord>& log, double tol = 1e-12);

/// energy.csv: '#' header lines, then `n,t,linf,E_h,E_c,decay_residual,fp_iters`.
void write_energy_csv(const std::filesystem::path& path, const std::vector<MonitorRecord>& log,
                      const std::string& header = {});

}  // namespace fracphase

#include "fracphase/energy.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "fracphase/error.hpp"

namespace fracphase {

double discrete_energy(const Field& u, double eps) {
  double well = 0.0;
  for (double v : u.values()) {
    const double s = v * v - 1.0;
    well += s * s;
  }
  const double h = u.grid().h();
  return 0.5 * eps * eps * grad_norm_sq(u) + 0.25 * h * h * well;
}

Field variational_slope(const Field& un, const Field& unm1, double eps) {
  require_same_grid(un, unm1);
  Field mid = un + unm1;
  mid *= 0.5;
  Field out = laplacian(mid);
  out *= eps * eps;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= nonlinear_term(un[i], unm1[i]);
  return out;
}

namespace {

void require_steps(const Trajectory& traj, int n) {
  if (n < 0 || traj.states.size() < static_cast<std::size_t>(n) + 1)
    throw Error(ErrorCode::InsufficientHistory, "trajectory has no state " + std::to_string(n));
}

}  // namespace

double compatible_energy(const Trajectory& traj, int n, const WeightSequence& vartheta, double eps) {
  require_steps(traj, n);
  const double energy = discrete_energy(traj.states[n], eps);
  if (n == 0) return energy;
  if (vartheta.size() < static_cast<std::size_t>(n))
    throw Error(ErrorCode::LengthMismatch, "vartheta sequence too short");
  const double tau_alpha = std::pow(traj.config.mesh.tau(), traj.config.alpha);
  double acc = 0.0;
  for (int s = 1; s <= n; ++s) {
    const double v = norm_l2(variational_slope(traj.states[s], traj.states[s - 1], eps));
    acc += vartheta[n - s] * v * v;
  }
  return energy + 0.5 * tau_alpha * acc;
}

double decay_residual(const Trajectory& traj, int n, const WeightSequence& vartheta, double eps) {
  if (n < 1) throw Error(ErrorCode::BadValue, "decay residual needs n >= 1");
  require_steps(traj, n);
  const double tau_alpha = std::pow(traj.config.mesh.tau(), traj.config.alpha);
  const double v = norm_l2(variational_slope(traj.states[n], traj.states[n - 1], eps));
  return compatible_energy(traj, n, vartheta, eps) - compatible_energy(traj, n - 1, vartheta, eps) +
         0.5 * tau_alpha * vartheta[n - 1] * v * v;
}

// ---------------------------------------------------------------------------

EnergyMonitor::EnergyMonitor(const RunConfig& config) : config_(config) {
  compatible_ = config.scheme == Scheme::SftrHalf && config.mesh.is_uniform() && config.mesh.steps() > 0;
  if (compatible_) {
    const double tau = config.mesh.tau();
    tau_alpha_ = std::pow(tau, config.alpha);
    slack_ = 100.0 * config.fp_tol * std::max(1.0, std::pow(tau, -config.alpha));
    const WeightSequence w = vartheta_weights(config.alpha, config.mesh.steps());
    vartheta_.assign(w.values().begin(), w.values().end());
  }
}

void EnergyMonitor::observe(const Trajectory& traj, int n) {
  if (n != static_cast<int>(records_.size()))
    throw Error(ErrorCode::BadValue, "monitor must observe consecutive steps from 0");
  const Field& un = traj.states.at(static_cast<std::size_t>(n));
  MonitorRecord rec;
  rec.n = n;
  rec.t = config_.mesh.node(n);
  rec.linf = norm_inf(un);
  rec.energy = discrete_energy(un, config_.eps);
  rec.fp_iters = traj.fp_iters.at(static_cast<std::size_t>(n));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rec.compatible_energy = nan;
  rec.decay_residual = nan;
  if (compatible_) {
    if (n >= 1) {
      const double v = norm_l2(variational_slope(un, traj.states[n - 1], config_.eps));
      slope_sq_.push_back(v * v);
    }
    double acc = 0.0;
    for (int s = 1; s <= n; ++s) acc += vartheta_[n - s] * slope_sq_[s - 1];
    rec.compatible_energy = rec.energy + 0.5 * tau_alpha_ * acc;
    if (n >= 1)
      rec.decay_residual = rec.compatible_energy - records_.back().compatible_energy +
                           0.5 * tau_alpha_ * vartheta_[n - 1] * slope_sq_.back();
  }
  records_.push_back(rec);
}

StepObserver EnergyMonitor::observer() {
  return [this](const Trajectory& traj, int n) { observe(traj, n); };
}

std::optional<int> EnergyMonitor::first_decay_violation() const {
  if (!compatible_) return std::nullopt;
  for (const MonitorRecord& r : records_)
    if (r.n >= 1 && !(r.decay_residual <= slack_)) return r.n;
  return std::nullopt;
}

MaxPrincipleReport max_principle_check(const Trajectory& traj, double tol) {
  MaxPrincipleReport report;
  for (std::size_t n = 0; n < traj.states.size(); ++n) {
    const double m = norm_inf(traj.states[n]);
    report.max_abs = std::max(report.max_abs, m);
    if (m > 1.0 + tol && report.passed) {
      report.passed = false;
      report.first_violation = static_cast<int>(n);
    }
  }
  return report;
}

MaxPrincipleReport max_principle_check(const std::vector<MonitorRecord>& log, double tol) {
  MaxPrincipleReport report;
  for (const MonitorRecord& r : log) {
    report.max_abs = std::max(report.max_abs, r.linf);
    if (r.linf > 1.0 + tol && report.passed) {
      report.passed = false;
      report.first_violation = r.n;
    }
  }
  return report;
}

void write_energy_csv(const std::filesystem::path& path, const std::vector<MonitorRecord>& log,
                      const std::string& header) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  std::istringstream hs(header);
  for (std::string line; std::getline(hs, line);) os << (line.starts_with("#") ? "" : "# ") << line << '\n';
  os << "n,t,linf,E_h,E_c,decay_residual,fp_iters\n";
  os << std::setprecision(17);
  for (const MonitorRecord& r : log)
    os << r.n << ',' << r.t << ',' << r.linf << ',' << r.energy << ',' << r.compatible_energy << ','
       << r.decay_residual << ',' << r.fp_iters << '\n';
  if (!os) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace fracphase

#include "fracphase/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fracphase/error.hpp"

namespace fracphase {

// ---------------------------------------------------------------------------
// TimeMesh

TimeMesh::TimeMesh(Kind kind, double t_final, int steps, double gamma)
    : kind_(kind), t_final_(t_final), steps_(steps), gamma_(gamma) {
  if (!(t_final > 0.0)) throw Error(ErrorCode::BadValue, "final time must be positive");
  if (steps < 0) throw Error(ErrorCode::BadValue, "step count must be nonnegative");
  if (!(gamma >= 1.0)) throw Error(ErrorCode::BadValue, "grading exponent must be >= 1");
  nodes_.resize(static_cast<std::size_t>(steps) + 1);
  for (int n = 0; n <= steps; ++n) {
    const double s = steps == 0 ? 0.0 : static_cast<double>(n) / steps;
    nodes_[n] = kind == Kind::Uniform ? t_final * s : t_final * std::pow(s, gamma);
  }
  nodes_.back() = steps == 0 ? 0.0 : t_final;
}

TimeMesh TimeMesh::uniform(double t_final, int steps) { return {Kind::Uniform, t_final, steps, 1.0}; }

TimeMesh TimeMesh::graded(double t_final, int steps, double gamma) {
  return {Kind::Graded, t_final, steps, gamma};
}

double TimeMesh::tau() const {
  if (!is_uniform()) throw Error(ErrorCode::BadValue, "graded mesh has no uniform step");
  if (steps_ == 0) throw Error(ErrorCode::BadValue, "empty mesh has no step");
  return t_final_ / steps_;
}

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::SftrHalf: return "sftr";
    case Scheme::Fbdf2: return "fbdf2";
    case Scheme::L21Sigma: return "l21sigma";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "sftr" || s == "sftr_half" || s == "sftr-1/2") return Scheme::SftrHalf;
  if (s == "fbdf2" || s == "f-bdf2") return Scheme::Fbdf2;
  if (s == "l21sigma" || s == "l2-1sigma" || s == "l2_1sigma") return Scheme::L21Sigma;
  throw Error(ErrorCode::BadValue, "unknown scheme '" + std::string(name) + "'");
}

void RunConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::BadValue, what); };
  if (!(alpha > 0.0 && alpha <= 1.0)) bad("alpha must lie in (0, 1]");
  if (!(eps > 0.0)) bad("eps must be positive");
  if (!(fp_tol > 0.0)) bad("fp_tol must be positive");
  if (fp_max_iter < 1) bad("fp_max_iter must be at least 1");
  if (scheme != Scheme::L21Sigma && !mesh.is_uniform())
    bad(std::string(to_string(scheme)) + " requires a uniform time mesh");
}

// ---------------------------------------------------------------------------
// Pointwise pieces

double nonlinear_term(double a, double b) {
  return a * a * a / 3.0 + 0.5 * b * b * a + b * b * b / 6.0 - 0.5 * (a + b);
}

Field nonlinear_term(const Field& un, const Field& unm1) {
  require_same_grid(un, unm1);
  Field out(un.grid());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = nonlinear_term(un[i], unm1[i]);
  return out;
}

double double_well(double u) {
  const double s = 1.0 - u * u;
  return 0.25 * s * s;
}

StepSizeBounds step_size_bounds(double alpha, double eps, double h) {
  const double ratio = 2.0 * alpha / (alpha + 1.0);
  const double solvability = std::pow(2.0, 1.0 / alpha) * ratio;
  const double mp = std::pow(alpha * h * h / (2.0 * eps * eps), 1.0 / alpha) *
                    std::pow(ratio, (alpha + 1.0) / alpha);
  return {solvability, std::min(solvability, mp)};
}

namespace {

// out = sum_{j=1}^{n} coeff[j] (U^{n-j} - U^0)
void lagged_sum(std::span<const double> coeff, const std::vector<Field>& states, int n, Field& out) {
  std::fill(out.values().begin(), out.values().end(), 0.0);
  double total = 0.0;
  for (int j = 1; j <= n; ++j) {
    const double c = coeff[j];
    if (c == 0.0) continue;
    out.axpy(c, states[n - j]);
    total += c;
  }
  out.axpy(-total, states[0]);
}

void require_history(const Trajectory& traj, int n) {
  if (n < 1) throw StepError(ErrorCode::BadValue, n, "step index must be >= 1");
  if (traj.states.size() < static_cast<std::size_t>(n))
    throw StepError(ErrorCode::InsufficientHistory, n,
                    "need " + std::to_string(n) + " stored states, have " + std::to_string(traj.states.size()));
}

}  // namespace

Field sftr_history(const WeightSequence& weights, const Trajectory& traj, int n) {
  require_history(traj, n);
  if (weights.size() < static_cast<std::size_t>(n) + 1)
    throw Error(ErrorCode::LengthMismatch, "weight sequence shorter than step index");
  Field out(traj.states[0].grid());
  lagged_sum(weights.values(), traj.states, n, out);
  out *= std::pow(traj.config.mesh.tau(), -traj.config.alpha);
  return out;
}

// ---------------------------------------------------------------------------
// L2-1sigma coefficients

namespace {

// J(rho) = int_{-1}^{1} u (1 + rho u)^{-alpha} du, 0 <= rho < 1, alpha < 1.
double odd_moment(double alpha, double rho) {
  if (rho < 0.5) {
    // Odd terms of the binomial series; converges like rho^j.
    double coeff = -alpha;  // binom(-alpha, 1)
    double power = rho;
    double sum = 0.0;
    for (int j = 1; j < 400; j += 2) {
      const double term = coeff * power * 2.0 / (j + 2);
      sum += term;
      if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
      // advance binom(-alpha, j) -> binom(-alpha, j + 2)
      coeff *= (-alpha - j) / (j + 1.0) * (-alpha - j - 1.0) / (j + 2.0);
      power *= rho * rho;
    }
    return sum;
  }
  auto prim = [alpha](double v) {
    return std::pow(v, 2.0 - alpha) / (2.0 - alpha) - std::pow(v, 1.0 - alpha) / (1.0 - alpha);
  };
  return (prim(1.0 + rho) - prim(1.0 - rho)) / (rho * rho);
}

}  // namespace

std::vector<double> l21sigma_coefficients(const TimeMesh& mesh, double alpha, int n) {
  if (n < 1 || n > mesh.steps()) throw Error(ErrorCode::BadValue, "L2-1sigma step index out of range");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorCode::BadValue, "alpha must lie in (0, 1]");
  std::vector<double> coeff(static_cast<std::size_t>(n), 0.0);
  const double sigma = 1.0 - 0.5 * alpha;
  const double tau_n = mesh.step(n);
  if (alpha == 1.0) {
    coeff[n - 1] = 1.0 / tau_n;
    return coeff;
  }
  const double g2 = std::tgamma(2.0 - alpha);
  const double g1 = std::tgamma(1.0 - alpha);
  // a_k: integral of the kernel over [t_{k-1}, t_k]; b_k: its first odd moment
  // about the interval midpoint (times 2), both against the collocation point.
  std::vector<double> a(static_cast<std::size_t>(n) + 1, 0.0), b(a.size(), 0.0);
  const double t_prev = mesh.node(n - 1);
  for (int k = 1; k <= n - 1; ++k) {
    const double tk = mesh.step(k);
    const double r_right = (t_prev - mesh.node(k)) + sigma * tau_n;
    a[k] = std::pow(r_right, 1.0 - alpha) * std::expm1((1.0 - alpha) * std::log1p(tk / r_right)) / g2;
    const double r_mid = r_right + 0.5 * tk;
    const double rho = tk / (2.0 * r_mid);
    b[k] = -0.5 * tk * tk / g1 * std::pow(r_mid, -alpha) * odd_moment(alpha, rho);
  }
  const double a_last = std::pow(sigma * tau_n, 1.0 - alpha) / g2;
  for (int k = 1; k <= n - 1; ++k) {
    const double tk = mesh.step(k);
    double c = a[k] / tk - b[k] / ((tk + mesh.step(k + 1)) * tk);
    if (k >= 2) c += b[k - 1] / ((mesh.step(k - 1) + tk) * tk);
    coeff[k - 1] = c;
  }
  double last = a_last / tau_n;
  if (n >= 2) last += b[n - 1] / ((mesh.step(n - 1) + tau_n) * tau_n);
  coeff[n - 1] = last;
  return coeff;
}

// ---------------------------------------------------------------------------
// Stepper

// Step equation in the form
//   kappa X - d Delta_h X + g(X) = rhs,
// with g pointwise and depending on U^{n-1}:
//   SFTR-1/2, F-BDF2:  g(X) = X^3/3 + (U^{n-1})^2 X / 2
//   L2-1sigma:         g(X) = sigma f(X), with (1 - sigma) f(U^{n-1}) in rhs
struct Stepper::Linearized {
  double kappa;
  Field rhs;
};

namespace {

WeightSequence weights_for(const RunConfig& c) {
  const long n = std::max(c.mesh.steps(), 1);
  switch (c.scheme) {
    case Scheme::SftrHalf: return sftr_weights(c.alpha, n);
    case Scheme::Fbdf2: return fbdf2_weights(c.alpha, n);
    case Scheme::L21Sigma: return WeightSequence(c.alpha, WeightKind::SftrOmega, {});
  }
  throw Error(ErrorCode::BadValue, "unknown scheme");
}

double diffusion_for(const RunConfig& c) {
  const double e2 = c.eps * c.eps;
  return c.scheme == Scheme::L21Sigma ? e2 * (1.0 - 0.5 * c.alpha) : 0.5 * e2;
}

}  // namespace

Stepper::Stepper(const RunConfig& config)
    : config_((config.validate(), config)),
      weights_(weights_for(config)),
      solver_(config.grid, diffusion_for(config)) {}

double Stepper::collocation_time(int n) const {
  const TimeMesh& mesh = config_.mesh;
  if (config_.scheme == Scheme::L21Sigma) return mesh.node(n - 1) + (1.0 - 0.5 * config_.alpha) * mesh.step(n);
  return 0.5 * (mesh.node(n - 1) + mesh.node(n));
}

Stepper::Linearized Stepper::assemble(const Trajectory& traj, int n) const {
  require_history(traj, n);
  const RunConfig& c = config_;
  const Field& u0 = traj.states[0];
  const Field& prev = traj.states[n - 1];
  if (!(u0.grid() == c.grid)) throw StepError(ErrorCode::GridMismatch, n, "state grid differs from config grid");
  const double e2 = c.eps * c.eps;
  Field lap_prev = laplacian(prev);
  Field rhs(c.grid);
  double kappa = 0.0;

  if (c.scheme == Scheme::L21Sigma) {
    const double sigma = 1.0 - 0.5 * c.alpha;
    const std::vector<double> coeff = l21sigma_coefficients(c.mesh, c.alpha, n);
    const double lead = coeff[n - 1];
    // rhs = lead U^{n-1} - sum_{k<n} A_k (U^k - U^{k-1}) + (1 - sigma) (eps^2 Delta U^{n-1} - f(U^{n-1}))
    rhs.axpy(lead, prev);
    for (int k = 1; k <= n - 1; ++k) {
      rhs.axpy(-coeff[k - 1], traj.states[k]);
      rhs.axpy(coeff[k - 1], traj.states[k - 1]);
    }
    rhs.axpy(e2 * (1.0 - sigma), lap_prev);
    for (std::size_t i = 0; i < rhs.size(); ++i) {
      const double b = prev[i];
      rhs[i] -= (1.0 - sigma) * (b * b * b - b);
    }
    kappa = lead;
  } else {
    const double scale = std::pow(c.mesh.tau(), -c.alpha);
    // Lagged coefficients beta_j multiplying (U^{n-j} - U^0), j = 1..n.
    std::vector<double> beta(static_cast<std::size_t>(n) + 1, 0.0);
    double lead = 0.0;
    if (c.scheme == Scheme::SftrHalf) {
      lead = weights_[0];
      for (int j = 1; j <= n; ++j) beta[j] = weights_[j];
    } else {
      // average of the F-BDF2 convolutions at t_n and t_{n-1}
      lead = 0.5 * weights_[0];
      for (int j = 1; j <= n; ++j) beta[j] = 0.5 * (weights_[j] + weights_[j - 1]);
    }
    Field history(c.grid);
    lagged_sum(beta, traj.states, n, history);
    const double c0 = scale * lead;
    kappa = c0 - 0.5;
    rhs.axpy(c0, u0);
    rhs.axpy(-scale, history);
    rhs.axpy(0.5 * e2, lap_prev);
    for (std::size_t i = 0; i < rhs.size(); ++i) {
      const double b = prev[i];
      rhs[i] += 0.5 * b - b * b * b / 6.0;
    }
  }

  if (c.source) {
    const double t = collocation_time(n);
    const Grid2D& g = c.grid;
    for (int j = 0; j < g.m(); ++j)
      for (int k = 0; k < g.m(); ++k) rhs(j, k) += c.source(g.coord(j), g.coord(k), t);
  }
  return {kappa, std::move(rhs)};
}

namespace {

struct Nonlinearity {
  Scheme scheme;
  double sigma;

  double operator()(double x, double b) const {
    if (scheme == Scheme::L21Sigma) return sigma * (x * x * x - x);
    return x * x * x / 3.0 + 0.5 * b * b * x;
  }
};

}  // namespace

Field Stepper::step(const Trajectory& traj, int n, int* iterations) {
  const RunConfig& c = config_;
  Linearized lin = assemble(traj, n);
  if (!(lin.kappa > 0.0)) {
    std::ostringstream os;
    os << "implicit shift " << lin.kappa << " is not positive; reduce the time step";
    throw StepError(ErrorCode::NegativeShift, n, os.str());
  }
  const Field& prev = traj.states[n - 1];
  const Nonlinearity g{c.scheme, 1.0 - 0.5 * c.alpha};

  // Constant stabilisation S >= sup g' over the current amplitude keeps the
  // lagged map order preserving and contractive whenever kappa > 0.
  const double amp2 = norm_inf(prev) * norm_inf(prev);
  const double stab = c.scheme == Scheme::L21Sigma ? g.sigma * std::max(3.0 * amp2 - 1.0, 0.0) : 1.5 * amp2;

  Field x = prev;
  Field work(c.grid);
  Field next(c.grid);
  for (int it = 1; it <= c.fp_max_iter; ++it) {
    for (std::size_t i = 0; i < work.size(); ++i) work[i] = lin.rhs[i] + stab * x[i] - g(x[i], prev[i]);
    solver_.solve(lin.kappa + stab, work, next);
    double diff = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) diff = std::max(diff, std::abs(next[i] - x[i]));
    std::swap(x, next);
    if (!std::isfinite(diff)) break;
    if (diff <= c.fp_tol) {
      if (iterations) *iterations = it;
      return x;
    }
  }
  std::ostringstream os;
  os << "fixed-point iteration did not reach tolerance " << c.fp_tol << " within " << c.fp_max_iter
     << " sweeps";
  throw StepError(ErrorCode::NonConverged, n, os.str());
}

double Stepper::residual(const Trajectory& traj, int n, const Field& un) const {
  const Linearized lin = assemble(traj, n);
  const Field& prev = traj.states[n - 1];
  const Nonlinearity g{config_.scheme, 1.0 - 0.5 * config_.alpha};
  Field r = apply_helmholtz(lin.kappa, solver_.diffusion(), un);
  double worst = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i)
    worst = std::max(worst, std::abs(r[i] + g(un[i], prev[i]) - lin.rhs[i]));
  return worst;
}

// ---------------------------------------------------------------------------
// Driver

Trajectory run(const RunConfig& config, const Field& u0, const StepObserver& observer) {
  config.validate();
  if (!(u0.grid() == config.grid)) throw Error(ErrorCode::GridMismatch, "initial field grid differs from config grid");
  Trajectory traj{config, {}, {}, {}};
  if (config.scheme == Scheme::SftrHalf && config.mesh.steps() > 0) {
    const double tau = config.mesh.tau();
    const StepSizeBounds bounds = step_size_bounds(config.alpha, config.eps, config.grid.h());
    std::ostringstream os;
    if (!(tau < bounds.solvability))
      os << "tau=" << tau << " exceeds the unique-solvability bound " << bounds.solvability;
    else if (!(tau < bounds.max_principle))
      os << "tau=" << tau << " exceeds the sufficient maximum-principle bound " << bounds.max_principle;
    if (!os.str().empty()) traj.warnings.push_back(os.str());
  }
  traj.states.reserve(static_cast<std::size_t>(config.mesh.steps()) + 1);
  traj.states.push_back(u0);
  traj.fp_iters.push_back(0);
  if (observer) observer(traj, 0);
  if (config.mesh.steps() == 0) return traj;

  Stepper stepper(config);
  for (int n = 1; n <= config.mesh.steps(); ++n) {
    int iters = 0;
    Field un = stepper.step(traj, n, &iters);
    traj.states.push_back(std::move(un));
    traj.fp_iters.push_back(iters);
    if (observer) observer(traj, n);
  }
  return traj;
}

}  // namespace fracphase

#include "fracphase/weights.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fracphase/error.hpp"

namespace fracphase {

namespace {

void validate(double alpha, long n) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    std::ostringstream os;
    os << "fractional order must lie in (0, 1], got " << alpha;
    throw Error(ErrorCode::BadValue, os.str());
  }
  if (n < 0) throw Error(ErrorCode::BadValue, "weight count must be nonnegative");
}

long checked_steps(double tau, double t_end) {
  if (!(tau > 0.0) || !(t_end > 0.0)) throw Error(ErrorCode::BadValue, "tau and t_end must be positive");
  const double ratio = t_end / tau;
  const long steps = std::lround(ratio);
  if (steps < 1 || std::abs(ratio - static_cast<double>(steps)) > 1e-9 * ratio)
    throw Error(ErrorCode::BadValue, "t_end must be an integer multiple of tau");
  return steps;
}

}  // namespace

std::string_view to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::SftrOmega: return "sftr";
    case WeightKind::Theta: return "theta";
    case WeightKind::Vartheta: return "vartheta";
    case WeightKind::Fbdf2: return "fbdf2";
  }
  return "unknown";
}

WeightKind parse_weight_kind(std::string_view name) {
  if (name == "sftr" || name == "omega") return WeightKind::SftrOmega;
  if (name == "theta") return WeightKind::Theta;
  if (name == "vartheta") return WeightKind::Vartheta;
  if (name == "fbdf2") return WeightKind::Fbdf2;
  throw Error(ErrorCode::BadValue, "unknown weight kind '" + std::string(name) + "'");
}

WeightSequence::WeightSequence(double alpha, WeightKind kind, std::vector<double> values)
    : alpha_(alpha), kind_(kind), values_(std::move(values)) {}

WeightSequence sftr_weights(double alpha, long n) {
  validate(alpha, n);
  std::vector<double> w(static_cast<std::size_t>(n) + 1);
  const double base = 2.0 * alpha / (alpha + 1.0);
  w[0] = std::pow(base, alpha);
  if (n >= 1) w[1] = -alpha * std::pow(base, alpha + 1.0);
  const double lag2 = (alpha - 1.0) / (2.0 * alpha);
  for (long m = 2; m <= n; ++m) {
    const double md = static_cast<double>(m);
    w[m] = base / md * (((md - 1.0) / alpha - alpha) * w[m - 1] + lag2 * (md - 2.0) * w[m - 2]);
  }
  return {alpha, WeightKind::SftrOmega, std::move(w)};
}

WeightSequence theta_weights(double alpha, long n) {
  validate(alpha, n);
  std::vector<double> w(static_cast<std::size_t>(n) + 1);
  w[0] = std::pow((alpha + 1.0) / (2.0 * alpha), alpha);
  if (n >= 1) w[1] = (alpha - 1.0) * (2.0 * alpha + 1.0) / (alpha + 1.0) * w[0];
  const double base = 2.0 * alpha / (1.0 + alpha);
  const double c = (1.0 - alpha) / (2.0 * alpha);
  for (long m = 2; m <= n; ++m) {
    const double md = static_cast<double>(m);
    w[m] = base / md * (((md - 1.0) / alpha - c * (2.0 * alpha + 1.0)) * w[m - 1] + c * (3.0 - md) * w[m - 2]);
  }
  return {alpha, WeightKind::Theta, std::move(w)};
}

WeightSequence vartheta_weights(double alpha, long n) {
  const WeightSequence theta = theta_weights(alpha, n);
  std::vector<double> w(theta.size());
  double sum = 0.0;
  for (std::size_t m = 0; m < w.size(); ++m) {
    sum += theta[m];
    w[m] = sum;
  }
  return {alpha, WeightKind::Vartheta, std::move(w)};
}

WeightSequence fbdf2_weights(double alpha, long n) {
  validate(alpha, n);
  // Coefficients of p(xi)^alpha for p = 3/2 - 2 xi + xi^2/2, from p w' = alpha p' w:
  //   w_m = 1/(m p_0) sum_{k=1}^{min(m,2)} ((alpha + 1) k - m) p_k w_{m-k}.
  constexpr double p[3] = {1.5, -2.0, 0.5};
  std::vector<double> w(static_cast<std::size_t>(n) + 1);
  w[0] = std::pow(p[0], alpha);
  for (long m = 1; m <= n; ++m) {
    double acc = 0.0;
    for (long k = 1; k <= std::min(m, 2L); ++k)
      acc += ((alpha + 1.0) * static_cast<double>(k) - static_cast<double>(m)) * p[k] * w[m - k];
    w[m] = acc / (static_cast<double>(m) * p[0]);
  }
  return {alpha, WeightKind::Fbdf2, std::move(w)};
}

WeightSequence make_weights(WeightKind kind, double alpha, long n) {
  switch (kind) {
    case WeightKind::SftrOmega: return sftr_weights(alpha, n);
    case WeightKind::Theta: return theta_weights(alpha, n);
    case WeightKind::Vartheta: return vartheta_weights(alpha, n);
    case WeightKind::Fbdf2: return fbdf2_weights(alpha, n);
  }
  throw Error(ErrorCode::BadValue, "unknown weight kind");
}

std::vector<double> convolve_prefix(std::span<const double> a, std::span<const double> b,
                                    std::size_t n) {
  if (a.size() < n + 1 || b.size() < n + 1) {
    std::ostringstream os;
    os << "need " << n + 1 << " coefficients, got " << a.size() << " and " << b.size();
    throw Error(ErrorCode::LengthMismatch, os.str());
  }
  std::vector<double> c(n + 1, 0.0);
  for (std::size_t m = 0; m <= n; ++m) {
    double acc = 0.0;
    for (std::size_t s = 0; s <= m; ++s) acc += a[s] * b[m - s];
    c[m] = acc;
  }
  return c;
}

std::vector<double> convolve_prefix(const WeightSequence& a, const WeightSequence& b,
                                    std::size_t n) {
  if (a.alpha() != b.alpha())
    throw Error(ErrorCode::LengthMismatch, "weight sequences have different fractional orders");
  return convolve_prefix(a.values(), b.values(), n);
}

InvariantReport check_invariants(const WeightSequence& w) {
  InvariantReport report;
  const auto v = w.values();
  auto fail = [&](std::size_t m, const std::string& what) {
    if (report.ok) {
      report.ok = false;
      report.first_violation = m;
      report.message = what + " at m=" + std::to_string(m);
    }
  };
  // Signs are only judged up to the first underflowed magnitude.
  std::size_t limit = v.size();
  for (std::size_t m = 0; m < v.size(); ++m) {
    if (std::abs(v[m]) < 1e-300 && !(w.alpha() == 1.0)) {
      report.underflow = true;
      limit = m;
      break;
    }
  }

  switch (w.kind()) {
    case WeightKind::SftrOmega:
    case WeightKind::Theta: {
      if (w.alpha() == 1.0) break;  // degenerate (1, -1, 0, ...) and (1, 0, ...) limits
      double partial = 0.0;
      for (std::size_t m = 0; m < limit; ++m) {
        if (m == 0 && !(v[0] > 0.0)) fail(m, "leading weight not positive");
        if (m >= 1 && !(v[m] < 0.0)) fail(m, "tail weight not negative");
        if (w.kind() == WeightKind::SftrOmega && m >= 2 && !(v[m] > v[m - 1]))
          fail(m, "weights not increasing");
        partial += v[m];
        if (!(partial > 0.0)) fail(m, "partial sum not positive");
      }
      break;
    }
    case WeightKind::Vartheta: {
      if (w.alpha() == 1.0) break;  // identically one
      for (std::size_t m = 0; m < limit; ++m) {
        if (!(v[m] > 0.0)) fail(m, "weight not positive");
        if (m >= 1 && !(v[m] < v[m - 1])) fail(m, "weights not strictly decreasing");
      }
      break;
    }
    case WeightKind::Fbdf2:
      if (w.alpha() == 1.0) {
        constexpr double exact[3] = {1.5, -2.0, 0.5};
        for (std::size_t m = 0; m < v.size(); ++m)
          if (v[m] != (m < 3 ? exact[m] : 0.0)) fail(m, "alpha=1 coefficients differ from 3/2, -2, 1/2");
      }
      break;
  }
  return report;
}

std::vector<double> sftr_caputo_error_profile(double alpha, double tau, double t_end) {
  const long steps = checked_steps(tau, t_end);
  const WeightSequence w = sftr_weights(alpha, steps);
  const double scale = std::pow(tau, -alpha);
  const double gamma = std::tgamma(3.0 - alpha);
  auto phi = [tau](long k) { return std::pow(static_cast<double>(k) * tau, 2.0); };
  std::vector<double> errors(static_cast<std::size_t>(steps));
  for (long n = 1; n <= steps; ++n) {
    double acc = 0.0;
    for (long m = 0; m <= n; ++m) acc += w[m] * (phi(n - m) - phi(0));
    const double t_half = (static_cast<double>(n) - 0.5) * tau;
    const double exact = 2.0 * std::pow(t_half, 2.0 - alpha) / gamma;
    errors[n - 1] = std::abs(scale * acc - exact);
  }
  return errors;
}

double sftr_caputo_error(double alpha, double tau, double t_end) {
  return sftr_caputo_error_profile(alpha, tau, t_end).back();
}

double vartheta_integral_error(double alpha, double tau, double t_end) {
  const long steps = checked_steps(tau, t_end);
  const WeightSequence w = vartheta_weights(alpha, steps);
  double acc = 0.0;
  for (long m = 0; m <= steps; ++m) {
    const double t = static_cast<double>(steps - m) * tau;
    acc += w[m] * t * t;
  }
  const double t_half = t_end + 0.5 * tau;
  const double exact = 2.0 * std::pow(t_half, 2.0 + alpha) / std::tgamma(3.0 + alpha);
  return std::abs(std::pow(tau, alpha) * acc - exact);
}

}  // namespace fracphase

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fracphase {

/// Convolution-quadrature weight families.
///
///   SftrOmega  shifted fractional trapezoidal rule (shift 1/2) for the
///              Caputo derivative at half-integer nodes
///   Theta      coefficients of (1 - xi) / omega(xi)
///   Vartheta   coefficients of 1 / omega(xi), i.e. prefix sums of Theta
///   Fbdf2      coefficients of (3/2 - 2 xi + xi^2 / 2)^alpha
enum class WeightKind { SftrOmega, Theta, Vartheta, Fbdf2 };

std::string_view to_string(WeightKind kind);
WeightKind parse_weight_kind(std::string_view name);

/// Immutable finite prefix w_0..w_n of a weight family.
class WeightSequence {
 public:
  WeightSequence(double alpha, WeightKind kind, std::vector<double> values);

  double alpha() const noexcept { return alpha_; }
  WeightKind kind() const noexcept { return kind_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t m) const { return values_[m]; }

 private:
  double alpha_;
  WeightKind kind_;
  std::vector<double> values_;
};

// Each generator returns w_0..w_n (n + 1 values). alpha must lie in (0, 1]
// and n must be nonnegative; violations throw Error(BadValue).
WeightSequence sftr_weights(double alpha, long n);
WeightSequence theta_weights(double alpha, long n);
WeightSequence vartheta_weights(double alpha, long n);
WeightSequence fbdf2_weights(double alpha, long n);
WeightSequence make_weights(WeightKind kind, double alpha, long n);

/// Cauchy-product coefficients c_0..c_n of two sequences.
std::vector<double> convolve_prefix(std::span<const double> a, std::span<const double> b,
                                    std::size_t n);
/// Same, additionally requiring both sequences to share alpha.
std::vector<double> convolve_prefix(const WeightSequence& a, const WeightSequence& b,
                                    std::size_t n);

/// Outcome of checking the sign/monotonicity/partial-sum structure of a
/// family. `underflow` is set when some |w_m| < 1e-300, in which case signs
/// past that index are not judged.
struct InvariantReport {
  bool ok = true;
  bool underflow = false;
  std::optional<std::size_t> first_violation;
  std::string message;
};

InvariantReport check_invariants(const WeightSequence& w);

/// Error of the SFTR-1/2 Caputo approximation applied to phi(t) = t^2 on the
/// uniform mesh of step tau, measured at the last half-node t_end - tau/2
/// against 2 t^{2-alpha} / Gamma(3-alpha). t_end must be a multiple of tau.
double sftr_caputo_error(double alpha, double tau, double t_end);

/// Error of tau^alpha sum vartheta_m phi^{n-m} for phi(t) = t^2 against the
/// Riemann-Liouville integral 2 t^{2+alpha} / Gamma(3+alpha), measured at
/// t_end + tau/2 (the half-node after the last sample).
double vartheta_integral_error(double alpha, double tau, double t_end);

/// Pointwise errors of the SFTR-1/2 Caputo approximation of t^2 at every
/// half-node t_{n-1/2}, n = 1..N.
std::vector<double> sftr_caputo_error_profile(double alpha, double tau, double t_end);

}  // namespace fracphase

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cn_reference.hpp"
#include "fracphase/error.hpp"
#include "fracphase/harness.hpp"
#include "fracphase/stepper.hpp"

using namespace fracphase;

namespace {

Field random_field(const Grid2D& g, std::mt19937_64& rng, double amp = 1.0) {
  std::uniform_real_distribution<double> u(-amp, amp);
  Field f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = u(rng);
  return f;
}

RunConfig small_config(Scheme scheme, double alpha, int steps, double t_final = 0.5) {
  RunConfig c;
  c.alpha = alpha;
  c.eps = 0.1;
  c.grid = Grid2D(0.0, 1.0, 16);
  c.mesh = TimeMesh::uniform(t_final, steps);
  c.scheme = scheme;
  return c;
}

// Caputo derivative of t^p (p > 0) at t.
double caputo_power(double p, double alpha, double t) {
  return std::tgamma(p + 1.0) / std::tgamma(p + 1.0 - alpha) * std::pow(t, p - alpha);
}

// Max error of the L2-1sigma formula on phi over the mesh.
double l21sigma_error(const TimeMesh& mesh, double alpha, double p) {
  double worst = 0.0;
  for (int n = 1; n <= mesh.steps(); ++n) {
    const std::vector<double> a = l21sigma_coefficients(mesh, alpha, n);
    double approx = 0.0;
    for (int k = 1; k <= n; ++k) approx += a[k - 1] * (std::pow(mesh.node(k), p) - std::pow(mesh.node(k - 1), p));
    const double ts = mesh.node(n - 1) + (1.0 - 0.5 * alpha) * mesh.step(n);
    worst = std::max(worst, std::abs(approx - caputo_power(p, alpha, ts)));
  }
  return worst;
}

}  // namespace

TEST_CASE("time meshes") {
  const TimeMesh u = TimeMesh::uniform(2.0, 8);
  CHECK(u.node(0) == 0.0);
  CHECK(u.node(8) == 2.0);
  CHECK(u.tau() == 0.25);
  CHECK(u.node(3) == 0.75);
  const TimeMesh g = TimeMesh::graded(1.0, 4, 2.0);
  CHECK(g.node(1) == doctest::Approx(1.0 / 16));
  CHECK(g.node(4) == 1.0);
  for (int n = 1; n <= 4; ++n) CHECK(g.node(n) > g.node(n - 1));
  CHECK_THROWS_AS(g.tau(), Error);
  CHECK_THROWS_AS(TimeMesh::graded(1.0, 4, 0.5), Error);
  CHECK_THROWS_AS(TimeMesh::uniform(0.0, 4), Error);
  CHECK_THROWS_AS(TimeMesh::uniform(1.0, -1), Error);
}

TEST_CASE("nonlinear term") {
  CHECK(nonlinear_term(0.0, 0.0) == 0.0);
  CHECK(std::abs(nonlinear_term(1.0, 1.0)) <= 1e-15);
  CHECK(std::abs(nonlinear_term(-1.0, -1.0)) <= 1e-15);
  CHECK(nonlinear_term(1.0, -1.0) == doctest::Approx(2.0 / 3.0));
  for (double a : {-1.3, 0.2, 0.7}) CHECK(nonlinear_term(a, a) == doctest::Approx(a * a * a - a));

  const Grid2D g(0.0, 1.0, 4);
  std::mt19937_64 rng(1);
  const Field a = random_field(g, rng), b = random_field(g, rng);
  const Field f = nonlinear_term(a, b);
  for (std::size_t i = 0; i < f.size(); ++i)
    CHECK(f[i] == doctest::Approx(a[i] * a[i] * a[i] / 3 + 0.5 * b[i] * b[i] * a[i] + b[i] * b[i] * b[i] / 6 -
                                  0.5 * (a[i] + b[i])));
  CHECK_THROWS_AS(nonlinear_term(a, Field(Grid2D(0.0, 1.0, 5))), Error);
}

TEST_CASE("convex-splitting inequality on 10^6 random pairs") {
  std::mt19937_64 rng(20240501);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0.0;
  for (int i = 0; i < 1000000; ++i) {
    const double a = u(rng), b = u(rng);
    const double slack = (a - b) * nonlinear_term(a, b) - (double_well(a) - double_well(b));
    worst = std::min(worst, slack);
  }
  CHECK(worst >= -1e-12);
}

TEST_CASE("step size bounds") {
  CHECK(step_size_bounds(0.5, 0.01, 1.0 / 200).solvability == doctest::Approx(8.0 / 3.0));
  CHECK(step_size_bounds(1.0, 0.01, 1.0 / 200).solvability == doctest::Approx(2.0));
  const double mp = std::pow(0.5 * std::pow(1.0 / 200, 2) / (2e-4), 2) * std::pow(2.0 / 3.0, 3);
  CHECK(mp == doctest::Approx(1.157e-3).epsilon(1e-3));
  CHECK(step_size_bounds(0.5, 0.01, 1.0 / 200).max_principle == doctest::Approx(mp));
}

TEST_CASE("sftr history") {
  const Grid2D g(0.0, 1.0, 4);
  RunConfig c = small_config(Scheme::SftrHalf, 0.4, 5);
  c.grid = g;
  std::mt19937_64 rng(4);
  Trajectory traj{c, {}, {}, {}};
  const Field u0 = random_field(g, rng);
  SUBCASE("constant history") {
    traj.states = {u0, u0, u0};
    const WeightSequence w = sftr_weights(0.4, 5);
    for (int n : {1, 3}) {
      const Field h = sftr_history(w, traj, n);
      for (double v : h.values()) CHECK(std::abs(v) <= 1e-14);
    }
  }
  SUBCASE("matches a naive loop") {
    traj.states = {u0, random_field(g, rng), random_field(g, rng), random_field(g, rng)};
    const WeightSequence w = sftr_weights(0.4, 5);
    const int n = 4;  // uses U^0..U^3
    const Field h = sftr_history(w, traj, n);
    const double scale = std::pow(c.mesh.tau(), -0.4);
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) {
        double ref = 0.0;
        for (int m = 1; m <= n; ++m) ref += w[m] * (traj.states[n - m](j, k) - u0(j, k));
        CHECK(h(j, k) == doctest::Approx(scale * ref).epsilon(1e-14).scale(1e-14));
      }
  }
  SUBCASE("errors") {
    traj.states = {u0};
    CHECK_THROWS_AS(sftr_history(sftr_weights(0.4, 5), traj, 3), Error);
    traj.states = {u0, u0, u0};
    CHECK_THROWS_AS(sftr_history(sftr_weights(0.4, 1), traj, 3), Error);
  }
}

TEST_CASE("constant well minima are fixed points") {
  for (Scheme s : {Scheme::SftrHalf, Scheme::Fbdf2, Scheme::L21Sigma}) {
    for (double v : {1.0, -1.0}) {
      const RunConfig c = small_config(s, 0.6, 6);
      const Trajectory t = run(c, Field(c.grid, v));
      REQUIRE(t.states.size() == 7);
      for (const Field& f : t.states)
        for (double x : f.values()) CHECK(x == doctest::Approx(v).epsilon(1e-13));
    }
  }
  RunConfig graded = small_config(Scheme::L21Sigma, 0.999, 6);
  graded.mesh = TimeMesh::graded(0.5, 6, 2.0);
  for (const Field& f : run(graded, Field(graded.grid, 1.0)).states) CHECK(norm_inf(f - Field(graded.grid, 1.0)) <= 1e-13);
}

TEST_CASE("steps satisfy their equations by substitution") {
  std::mt19937_64 rng(12);
  for (Scheme s : {Scheme::SftrHalf, Scheme::Fbdf2, Scheme::L21Sigma}) {
    for (double alpha : {0.3, 0.7, 1.0}) {
      CAPTURE(to_string(s));
      CAPTURE(alpha);
      RunConfig c = small_config(s, alpha, 8);
      if (s == Scheme::L21Sigma) c.mesh = TimeMesh::graded(0.5, 8, 1.7);
      const Field u0 = random_field(c.grid, rng, 0.9);
      const Trajectory t = run(c, u0);
      Stepper st(c);
      const double bound = 10.0 * c.fp_tol * (s == Scheme::L21Sigma ? 1.0 / std::pow(c.mesh.step(1), alpha)
                                                                    : std::pow(c.mesh.tau(), -alpha));
      for (int n = 1; n <= 8; ++n) {
        CHECK(st.residual(t, n, t.states[n]) <= bound);
        CHECK(t.fp_iters[n] >= 1);
      }
      // A wrong candidate is visibly rejected.
      CHECK(st.residual(t, 3, t.states[1]) > bound);
    }
  }
}

TEST_CASE("L2-1sigma steps on spatially constant data") {
  // With no spatial variation each step is the scalar equation
  //   sum_k a_k (u_k - u_{k-1}) = -[sigma f(u_n) + (1 - sigma) f(u_{n-1})],  f(u) = u^3 - u.
  RunConfig c = small_config(Scheme::L21Sigma, 0.4, 5);
  c.mesh = TimeMesh::graded(0.5, 5, 2.0);
  c.fp_tol = 1e-13;
  const Trajectory t = run(c, Field(c.grid, 0.3));
  const double sigma = 0.8;
  auto f = [](double u) { return u * u * u - u; };
  for (int n = 1; n <= 5; ++n) {
    const std::vector<double> a = l21sigma_coefficients(c.mesh, 0.4, n);
    double lhs = 0.0;
    for (int k = 1; k <= n; ++k) lhs += a[k - 1] * (t.states[k][0] - t.states[k - 1][0]);
    const double un = t.states[n][0], um = t.states[n - 1][0];
    CHECK(std::abs(lhs + sigma * f(un) + (1 - sigma) * f(um)) <= 1e-11);
    CHECK(norm_inf(t.states[n] - Field(c.grid, un)) <= 1e-14);
  }
}

TEST_CASE("manufactured source is sampled at the collocation time") {
  RunConfig c = small_config(Scheme::SftrHalf, 0.5, 4);
  CHECK(Stepper(c).collocation_time(2) == doctest::Approx(0.1875));
  c.scheme = Scheme::L21Sigma;
  CHECK(Stepper(c).collocation_time(2) == doctest::Approx(0.125 + 0.75 * 0.125));
}

TEST_CASE("alpha = 1 matches an independent Crank-Nicolson solver") {
  RunConfig c = small_config(Scheme::SftrHalf, 1.0, 20, 0.2);
  c.eps = 0.05;
  c.fp_tol = 1e-10;
  std::mt19937_64 rng(99);
  const Field u0 = random_field(c.grid, rng, 0.8);
  const Trajectory t = run(c, u0);
  const auto ref = oracle::crank_nicolson({u0.values().begin(), u0.values().end()}, 16, 1.0, c.eps, 0.01, 20);
  double worst = 0.0;
  for (int n = 0; n <= 20; ++n)
    for (std::size_t i = 0; i < u0.size(); ++i) worst = std::max(worst, std::abs(t.states[n][i] - ref[n][i]));
  CHECK(worst <= 10 * c.fp_tol);
}

TEST_CASE("F-BDF2 history at alpha = 1 differentiates t exactly") {
  // Spatially constant phi(t) = t. Each BDF2 quotient is 1 from n = 2 on,
  // so their average is 1 from n = 3 on (n = 1 is the one-sided 3/2).
  const WeightSequence w = fbdf2_weights(1.0, 8);
  const double tau = 0.1;
  auto quotient = [&](int n) {
    double s = 0.0;
    for (int m = 0; m <= n; ++m) s += w[m] * ((n - m) * tau - 0.0);
    return s / tau;
  };
  CHECK(quotient(1) == doctest::Approx(1.5));
  for (int n = 2; n <= 8; ++n) CHECK(quotient(n) == doctest::Approx(1.0).epsilon(1e-14));
  for (int n = 3; n <= 8; ++n) CHECK(0.5 * (quotient(n) + quotient(n - 1)) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("L2-1sigma coefficients") {
  SUBCASE("exact on linear functions") {
    for (double alpha : {0.2, 0.5, 0.9}) {
      CHECK(l21sigma_error(TimeMesh::uniform(1.0, 20), alpha, 1.0) <= 1e-12);
      CHECK(l21sigma_error(TimeMesh::graded(1.0, 20, 2.5), alpha, 1.0) <= 1e-11);
    }
  }
  SUBCASE("exact on t^2, second order on t^3, uniform and graded") {
    for (double alpha : {0.2, 0.5, 0.8}) {
      for (double gamma : {1.0, 2.0}) {
        auto mesh = [&](int n) { return gamma == 1.0 ? TimeMesh::uniform(1.0, n) : TimeMesh::graded(1.0, n, gamma); };
        CAPTURE(alpha);
        CAPTURE(gamma);
        for (int n : {40, 80, 160}) CHECK(l21sigma_error(mesh(n), alpha, 2.0) <= 1e-13);
        const double e1 = l21sigma_error(mesh(40), alpha, 3.0);
        const double e2 = l21sigma_error(mesh(80), alpha, 3.0);
        const double e3 = l21sigma_error(mesh(160), alpha, 3.0);
        CHECK(std::log2(e1 / e2) >= 1.9);
        CHECK(std::log2(e2 / e3) >= 1.9);
      }
    }
  }
  SUBCASE("tiny graded steps stay accurate") {
    // gamma = 10 at alpha = 0.2 puts the first node near 1e-16.
    const TimeMesh m = TimeMesh::graded(1.0, 40, 10.0);
    CHECK(l21sigma_error(m, 0.2, 1.0) <= 1e-9);
  }
  SUBCASE("alpha = 1 is the difference quotient") {
    const TimeMesh m = TimeMesh::graded(1.0, 5, 2.0);
    const auto a = l21sigma_coefficients(m, 1.0, 4);
    CHECK(a[3] == doctest::Approx(1.0 / m.step(4)));
    CHECK(a[0] == 0.0);
  }
  CHECK_THROWS_AS(l21sigma_coefficients(TimeMesh::uniform(1.0, 4), 0.5, 5), Error);
}

TEST_CASE("run: bookkeeping, determinism and validation") {
  RunConfig c = small_config(Scheme::SftrHalf, 0.5, 0);
  const Field u0 = random_initial(c.grid, 5);
  const Trajectory t0 = run(c, u0);
  CHECK(t0.states.size() == 1);
  CHECK(t0.states[0] == u0);

  c.mesh = TimeMesh::uniform(0.5, 10);
  int calls = 0;
  const Trajectory a = run(c, u0, [&](const Trajectory& t, int n) {
    CHECK(static_cast<int>(t.states.size()) == n + 1);
    ++calls;
  });
  CHECK(calls == 11);
  const Trajectory b = run(c, u0);
  for (int n = 0; n <= 10; ++n) CHECK(a.states[n] == b.states[n]);
  CHECK(a.fp_iters == b.fp_iters);

  RunConfig bad = c;
  bad.mesh = TimeMesh::graded(0.5, 10, 2.0);
  CHECK_THROWS_AS(run(bad, u0), Error);
  bad.scheme = Scheme::Fbdf2;
  CHECK_THROWS_AS(run(bad, u0), Error);
  bad = c;
  bad.fp_tol = 0.0;
  CHECK_THROWS_AS(run(bad, u0), Error);
  bad = c;
  bad.alpha = 1.5;
  CHECK_THROWS_AS(run(bad, u0), Error);
  CHECK_THROWS_AS(run(c, Field(Grid2D(0.0, 1.0, 8))), Error);
}

TEST_CASE("solver errors carry the failing step") {
  RunConfig c = small_config(Scheme::SftrHalf, 0.5, 3);
  c.fp_max_iter = 1;
  c.fp_tol = 1e-14;
  const Field u0 = random_initial(c.grid, 8);
  try {
    run(c, u0);
    FAIL("expected NON_CONVERGED");
  } catch (const StepError& e) {
    CHECK(e.code() == ErrorCode::NonConverged);
    CHECK(e.step() == 1);
    CHECK(std::string(e.what()).find("NON_CONVERGED") != std::string::npos);
  }

  // tau far above the solvability bound makes the implicit shift negative.
  RunConfig big = small_config(Scheme::SftrHalf, 0.5, 1, 10.0);
  Trajectory t;
  try {
    t = run(big, u0);
    FAIL("expected NEGATIVE_SHIFT");
  } catch (const StepError& e) {
    CHECK(e.code() == ErrorCode::NegativeShift);
  }
  // Above the bounds but still solvable: a warning, not an error.
  RunConfig warn = small_config(Scheme::SftrHalf, 0.5, 2, 1.0);
  CHECK_FALSE(run(warn, u0).warnings.empty());
}

TEST_CASE("maximum principle from data in [-1, 1]") {
  RunConfig c = small_config(Scheme::SftrHalf, 0.6, 30, 3.0);
  c.eps = 0.05;
  const Field u0 = random_initial(c.grid, 17);
  const Trajectory t = run(c, u0);
  for (const Field& f : t.states) CHECK(norm_inf(f) <= 1.0 + 1e-12);
}

TEST_CASE("fixed-point tolerance barely moves Example 3 at N = 40") {
  RunConfig c;
  c.alpha = 0.6;
  c.eps = 0.005;
  c.grid = Grid2D(0.0, 1.0, 64);
  c.mesh = TimeMesh::uniform(1.0, 40);
  const Field u0 = sine_initial(c.grid);
  c.fp_tol = 1e-6;
  const double loose = norm_l2(run(c, u0).states.back());
  c.fp_tol = 1e-10;
  const double tight = norm_l2(run(c, u0).states.back());
  CHECK(std::abs(loose - tight) <= 1e-5);
}

TEST_CASE("scheme names") {
  CHECK(parse_scheme("SFTR_HALF") == Scheme::SftrHalf);
  CHECK(parse_scheme("F-BDF2") == Scheme::Fbdf2);
  CHECK(parse_scheme("L21SIGMA") == Scheme::L21Sigma);
  CHECK_THROWS_AS(parse_scheme("euler"), Error);
  CHECK(to_string(Scheme::L21Sigma) == "l21sigma");
}

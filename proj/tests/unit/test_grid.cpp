#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "fracphase/error.hpp"
#include "fracphase/grid.hpp"

using namespace fracphase;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

Field random_field(const Grid2D& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Field f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = u(rng);
  return f;
}

Field sine_mode(const Grid2D& g) {
  return Field::sample(g, [](double x, double y) { return std::sin(2 * pi * x) * std::sin(2 * pi * y); });
}

fs::path temp_path(const std::string& name) { return fs::temp_directory_path() / ("fracphase_test_" + name); }

}  // namespace

TEST_CASE("grid geometry") {
  const Grid2D g(0.0, 1.0, 8);
  CHECK(g.h() == 0.125);
  CHECK(g.size() == 64);
  CHECK(g.coord(0) == 0.125);
  CHECK(g.coord(7) == 1.0);
  CHECK_THROWS_AS(Grid2D(0.0, 1.0, 1), Error);
  CHECK_THROWS_AS(Grid2D(1.0, 1.0, 8), Error);
  CHECK_FALSE(Grid2D(0.0, 1.0, 8) == Grid2D(0.0, 2.0, 8));
}

TEST_CASE("laplacian") {
  const Grid2D g(0.0, 1.0, 16);
  SUBCASE("constant field") {
    const Field c(g, 3.7);
    const Field l = laplacian(c);
    for (double v : l.values()) CHECK(std::abs(v) <= 1e-10);
  }
  SUBCASE("sine eigenfield") {
    const Field s = sine_mode(g);
    const double h = g.h();
    const double lambda = -(8.0 / (h * h)) * std::pow(std::sin(pi * h), 2);
    const Field l = laplacian(s);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(l[i] - lambda * s[i]) <= 1e-9 * std::abs(lambda));
  }
  SUBCASE("spike, including periodic wrap") {
    for (auto [j, k] : {std::pair{5, 6}, std::pair{0, 0}, std::pair{15, 0}}) {
      Field u(g);
      u(j, k) = 1.0;
      const Field l = laplacian(u);
      const double ih2 = 1.0 / (g.h() * g.h());
      CHECK(l(j, k) == doctest::Approx(-4 * ih2));
      const int m = g.m();
      CHECK(l((j + 1) % m, k) == doctest::Approx(ih2));
      CHECK(l((j + m - 1) % m, k) == doctest::Approx(ih2));
      CHECK(l(j, (k + 1) % m) == doctest::Approx(ih2));
      CHECK(l(j, (k + m - 1) % m) == doctest::Approx(ih2));
      double total = 0.0;
      for (double v : l.values()) total += std::abs(v);
      CHECK(total == doctest::Approx(8 * ih2));
    }
  }
  SUBCASE("symmetry and conservation on random fields") {
    std::mt19937_64 rng(7);
    const Field ones(g, 1.0);
    for (int t = 0; t < 50; ++t) {
      const Field u = random_field(g, rng), v = random_field(g, rng);
      const double a = inner(laplacian(u), v), b = inner(u, laplacian(v));
      CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
      CHECK(std::abs(inner(laplacian(u), ones)) <= 1e-12 * norm_l2(laplacian(u)));
    }
  }
  SUBCASE("matches a naive double loop") {
    std::mt19937_64 rng(3);
    const Grid2D g2(-1.0, 2.0, 7);
    const Field u = random_field(g2, rng);
    const Field l = laplacian(u);
    const int m = g2.m();
    const double ih2 = 1.0 / (g2.h() * g2.h());
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k) {
        const double ref = (u((j + 1) % m, k) + u((j + m - 1) % m, k) + u(j, (k + 1) % m) + u(j, (k + m - 1) % m) -
                            4 * u(j, k)) * ih2;
        CHECK(l(j, k) == doctest::Approx(ref).epsilon(1e-13));
      }
  }
}

TEST_CASE("inner products and norms") {
  const Grid2D g(0.0, 1.0, 10);
  const Field ones(g, 1.0);
  CHECK(inner(ones, ones) == doctest::Approx(1.0));
  CHECK(inner(Field(Grid2D(0.0, 3.0, 10), 1.0), Field(Grid2D(0.0, 3.0, 10), 1.0)) == doctest::Approx(9.0));
  Field spike(g);
  spike(2, 3) = -3.0;
  CHECK(norm_inf(spike) == 3.0);
  CHECK(norm_l2(ones) == doctest::Approx(1.0));
  CHECK_THROWS_AS(inner(ones, Field(Grid2D(0.0, 1.0, 12), 1.0)), Error);

  std::mt19937_64 rng(11);
  for (int t = 0; t < 1000; ++t) {
    const Field u = random_field(g, rng), v = random_field(g, rng);
    CHECK(std::abs(inner(u, v)) <= norm_l2(u) * norm_l2(v) * (1 + 1e-14));
    CHECK(grad_norm_sq(u) >= 0.0);
  }
}

TEST_CASE("grad_norm_sq") {
  const Grid2D g(0.0, 1.0, 20);
  CHECK(std::abs(grad_norm_sq(Field(g, 2.0))) <= 1e-10);
  const Field s = sine_mode(g);
  const double h = g.h();
  const double expect = 8.0 / (h * h) * std::pow(std::sin(pi * h), 2) * std::pow(norm_l2(s), 2);
  CHECK(grad_norm_sq(s) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("field arithmetic") {
  const Grid2D g(0.0, 1.0, 4);
  Field a(g, 1.0), b(g, 2.0);
  CHECK((a + b)[5] == 3.0);
  CHECK((b - a)[5] == 1.0);
  CHECK((2.0 * b)[0] == 4.0);
  a.axpy(3.0, b);
  CHECK(a[7] == 7.0);
  CHECK_THROWS_AS(a += Field(Grid2D(0.0, 1.0, 5)), Error);
  CHECK_THROWS_AS(Field(g, std::vector<double>(3)), Error);
}

TEST_CASE("helmholtz solve") {
  const Grid2D g(0.0, 1.0, 32);
  const double eps = 0.05, d = eps * eps / 2.0;
  HelmholtzSolver solver(g, d);
  SUBCASE("constant") {
    const double c = 1.7;
    const Field u = solver.solve(c, Field(g, c));
    for (double v : u.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-13));
  }
  SUBCASE("sine mode") {
    const double c = 0.9, h = g.h();
    const Field s = sine_mode(g);
    const double mu = (8.0 / (h * h)) * std::pow(std::sin(pi * h), 2);
    const Field u = solver.solve(c, (c + d * mu) * s);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(u[i] - s[i]) <= 1e-13);
  }
  SUBCASE("round trip on random data") {
    std::mt19937_64 rng(5);
    for (double c : {1e-3, 0.5, 40.0}) {
      const Field rhs = random_field(g, rng);
      const Field u = solver.solve(c, rhs);
      const Field back = apply_helmholtz(c, d, u);
      CHECK(norm_l2(back - rhs) <= 1e-10 * norm_l2(rhs));
      CHECK(norm_l2(solve_helmholtz(c, d, rhs) - u) <= 1e-14 * norm_l2(u));
    }
  }
  SUBCASE("odd grid size and zero diffusion") {
    const Grid2D g5(0.0, 2.0, 5);
    std::mt19937_64 rng(9);
    const Field rhs = random_field(g5, rng);
    const Field u = solve_helmholtz(2.0, 0.3, rhs);
    CHECK(norm_l2(apply_helmholtz(2.0, 0.3, u) - rhs) <= 1e-12);
    const Field z = solve_helmholtz(4.0, 0.0, rhs);
    CHECK(norm_l2(4.0 * z - rhs) <= 1e-14);
  }
  SUBCASE("symbol") {
    const double h = g.h();
    CHECK(solver.symbol(0, 0) == 0.0);
    CHECK(solver.symbol(1, 0) == doctest::Approx(4 / (h * h) * std::pow(std::sin(pi / 32), 2)));
  }
  SUBCASE("nonpositive shift") {
    CHECK_THROWS_AS(solver.solve(0.0, Field(g, 1.0)), Error);
    CHECK_THROWS_AS(solver.solve(-1.0, Field(g, 1.0)), Error);
    CHECK_THROWS_AS(solver.solve(1.0, Field(Grid2D(0.0, 1.0, 8))), Error);
  }
  SUBCASE("move") {
    HelmholtzSolver moved = std::move(solver);
    CHECK(moved.solve(2.0, Field(g, 2.0))[0] == doctest::Approx(1.0));
  }
}

TEST_CASE("snapshot round trip") {
  const Grid2D g(-0.5, 1.5, 6);
  std::mt19937_64 rng(2);
  const Field u = random_field(g, rng);
  const fs::path p = temp_path("snap.dat");
  write_snapshot(p, u, 0.375, "alpha = 0.6\nseed = 3");
  const Snapshot s = read_snapshot(p);
  CHECK(s.t == 0.375);
  CHECK(s.field.grid() == g);
  CHECK(s.field == u);  // 17 significant digits round-trip exactly

  std::ifstream in(p);
  std::string first;
  std::getline(in, first);
  CHECK(first == "# alpha = 0.6");
  fs::remove(p);
}

TEST_CASE("snapshot reader errors") {
  const fs::path p = temp_path("bad.dat");
  auto write = [&](const std::string& text) {
    std::ofstream(p) << text;
  };
  write("2 0 1 0\n1 2\n3\n");
  CHECK_THROWS_AS(read_snapshot(p), Error);
  write("# c\n2 0 1 0\n1 2\n3 x\n");
  try {
    read_snapshot(p);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(":4") != std::string::npos);
  }
  write("2 0 1 0\n1 2\n3 4\n");
  CHECK(read_snapshot(p).field(1, 0) == 3.0);
  CHECK_THROWS_AS(read_snapshot(temp_path("missing.dat")), Error);
  fs::remove(p);
}

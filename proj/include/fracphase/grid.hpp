#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fracphase {

/// Uniform periodic M x M grid on [a, b]^2 with spacing h = (b - a) / M.
///
/// Grid points carry the indices 1..M of the discrete function space; index 0
/// aliases M and M + 1 aliases 1. Storage is 0-based, so storage index i holds
/// the node with coordinate a + (i + 1) h.
class Grid2D {
 public:
  Grid2D(double a, double b, int m);

  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  int m() const noexcept { return m_; }
  double h() const noexcept { return (b_ - a_) / m_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(m_) * m_; }
  /// Coordinate of storage index i (i in [0, M)).
  double coord(int i) const noexcept { return a_ + (i + 1) * h(); }

  friend bool operator==(const Grid2D&, const Grid2D&) = default;

 private:
  double a_;
  double b_;
  int m_;
};

/// Real grid function, row-major: value(j, k) sits at j * M + k, with j the
/// x-index and k the y-index.
class Field {
 public:
  explicit Field(const Grid2D& grid, double fill = 0.0);
  Field(const Grid2D& grid, std::vector<double> values);

  /// Samples fn(x, y) at every node.
  static Field sample(const Grid2D& grid, const std::function<double(double, double)>& fn);

  const Grid2D& grid() const noexcept { return grid_; }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator()(int j, int k) { return values_[index(j, k)]; }
  double operator()(int j, int k) const { return values_[index(j, k)]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);
  /// this += s * other
  Field& axpy(double s, const Field& other);

  friend Field operator+(Field lhs, const Field& rhs) { return lhs += rhs; }
  friend Field operator-(Field lhs, const Field& rhs) { return lhs -= rhs; }
  friend Field operator*(double s, Field f) { return f *= s; }
  friend bool operator==(const Field&, const Field&) = default;

 private:
  std::size_t index(int j, int k) const noexcept {
    return static_cast<std::size_t>(j) * grid_.m() + k;
  }

  Grid2D grid_;
  std::vector<double> values_;
};

/// Throws Error(GridMismatch) unless both fields live on the same grid.
void require_same_grid(const Field& u, const Field& v);

/// Five-point periodic Laplacian (delta_x^2 + delta_y^2) u.
Field laplacian(const Field& u);
void laplacian(const Field& u, Field& out);

/// h^2 sum u v
double inner(const Field& u, const Field& v);
double norm_l2(const Field& u);
double norm_inf(const Field& u);
/// ||grad_h u||^2 = -(laplacian(u), u) >= 0
double grad_norm_sq(const Field& u);

/// Solves (c I - d Delta_h) u = rhs on the periodic grid by diagonalising the
/// operator with the 2D real DFT. Plans are created once per instance.
class HelmholtzSolver {
 public:
  /// `diffusion` is the coefficient d >= 0 multiplying -Delta_h.
  HelmholtzSolver(const Grid2D& grid, double diffusion);
  ~HelmholtzSolver();
  HelmholtzSolver(HelmholtzSolver&&) noexcept;
  HelmholtzSolver& operator=(HelmholtzSolver&&) noexcept;
  HelmholtzSolver(const HelmholtzSolver&) = delete;
  HelmholtzSolver& operator=(const HelmholtzSolver&) = delete;

  const Grid2D& grid() const noexcept;
  double diffusion() const noexcept;

  /// c must be positive.
  Field solve(double c, const Field& rhs) const;
  void solve(double c, const Field& rhs, Field& out) const;

  /// Eigenvalue of -Delta_h for Fourier mode (p, q).
  double symbol(int p, int q) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot form of HelmholtzSolver::solve.
Field solve_helmholtz(double c, double diffusion, const Field& rhs);

/// (c I - d Delta_h) u, for residual checks.
Field apply_helmholtz(double c, double diffusion, const Field& u);

/// Snapshot file: optional '#' comment lines, then `M a b t`, then M rows of
/// M values (row j holds x-index j).
void write_snapshot(const std::filesystem::path& path, const Field& u, double t,
                    const std::string& header = {});

struct Snapshot {
  Field field;
  double t;
};

Snapshot read_snapshot(const std::filesystem::path& path);

}  // namespace fracphase

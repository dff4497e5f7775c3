#include "fracphase/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <sstream>

#include "fracphase/error.hpp"

namespace fracphase {

Grid2D::Grid2D(double a, double b, int m) : a_(a), b_(b), m_(m) {
  if (m < 2) throw Error(ErrorCode::BadValue, "grid needs at least 2 points per dimension");
  if (!(b > a)) throw Error(ErrorCode::BadValue, "grid endpoints must satisfy a < b");
}

Field::Field(const Grid2D& grid, double fill) : grid_(grid), values_(grid.size(), fill) {}

Field::Field(const Grid2D& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw Error(ErrorCode::GridMismatch, "value count does not match grid size");
}

Field Field::sample(const Grid2D& grid, const std::function<double(double, double)>& fn) {
  Field f(grid);
  const int m = grid.m();
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k) f(j, k) = fn(grid.coord(j), grid.coord(k));
  return f;
}

Field& Field::operator+=(const Field& other) {
  require_same_grid(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same_grid(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Field& Field::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

Field& Field::axpy(double s, const Field& other) {
  require_same_grid(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += s * other.values_[i];
  return *this;
}

void require_same_grid(const Field& u, const Field& v) {
  if (!(u.grid() == v.grid())) throw Error(ErrorCode::GridMismatch, "fields live on different grids");
}

void laplacian(const Field& u, Field& out) {
  require_same_grid(u, out);
  const int m = u.grid().m();
  const double inv_h2 = 1.0 / (u.grid().h() * u.grid().h());
  const auto in = u.values();
  auto res = out.values();
  for (int j = 0; j < m; ++j) {
    const double* row = in.data() + static_cast<std::size_t>(j) * m;
    const double* up = in.data() + static_cast<std::size_t>(j == 0 ? m - 1 : j - 1) * m;
    const double* down = in.data() + static_cast<std::size_t>(j == m - 1 ? 0 : j + 1) * m;
    double* dst = res.data() + static_cast<std::size_t>(j) * m;
    dst[0] = (up[0] + down[0] + row[m - 1] + row[1] - 4.0 * row[0]) * inv_h2;
    for (int k = 1; k < m - 1; ++k)
      dst[k] = (up[k] + down[k] + row[k - 1] + row[k + 1] - 4.0 * row[k]) * inv_h2;
    dst[m - 1] = (up[m - 1] + down[m - 1] + row[m - 2] + row[0] - 4.0 * row[m - 1]) * inv_h2;
  }
}

Field laplacian(const Field& u) {
  Field out(u.grid());
  laplacian(u, out);
  return out;
}

double inner(const Field& u, const Field& v) {
  require_same_grid(u, v);
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
  const double h = u.grid().h();
  return h * h * acc;
}

double norm_l2(const Field& u) { return std::sqrt(inner(u, u)); }

double norm_inf(const Field& u) {
  double mx = 0.0;
  for (double v : u.values()) mx = std::max(mx, std::abs(v));
  return mx;
}

double grad_norm_sq(const Field& u) { return -inner(laplacian(u), u); }

// ---------------------------------------------------------------------------
// Fourier-diagonal Helmholtz solve

namespace {
// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& fftw_planner_mutex() {
  static std::mutex mu;
  return mu;
}
}  // namespace

struct HelmholtzSolver::Impl {
  Grid2D grid;
  double diffusion;
  int m;
  int mc;  // complex columns, M/2 + 1
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::vector<double> symbol;  // -Delta_h eigenvalues on the half spectrum

  Impl(const Grid2D& g, double d) : grid(g), diffusion(d), m(g.m()), mc(g.m() / 2 + 1) {
    const std::size_t nreal = static_cast<std::size_t>(m) * m;
    const std::size_t ncplx = static_cast<std::size_t>(m) * mc;
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    real = fftw_alloc_real(nreal);
    spec = fftw_alloc_complex(ncplx);
    forward = fftw_plan_dft_r2c_2d(m, m, real, spec, FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r_2d(m, m, spec, real, FFTW_ESTIMATE);
    const double h = g.h();
    const double scale = 4.0 / (h * h);
    std::vector<double> s1(static_cast<std::size_t>(m));
    for (int p = 0; p < m; ++p) {
      const double s = std::sin(std::numbers::pi * p / m);
      s1[p] = s * s;
    }
    symbol.resize(ncplx);
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < mc; ++q) symbol[static_cast<std::size_t>(p) * mc + q] = scale * (s1[p] + s1[q]);
  }

  ~Impl() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
    fftw_free(real);
    fftw_free(spec);
  }
};

HelmholtzSolver::HelmholtzSolver(const Grid2D& grid, double diffusion) {
  if (!(diffusion >= 0.0)) throw Error(ErrorCode::BadValue, "diffusion coefficient must be nonnegative");
  impl_ = std::make_unique<Impl>(grid, diffusion);
}

HelmholtzSolver::~HelmholtzSolver() = default;
HelmholtzSolver::HelmholtzSolver(HelmholtzSolver&&) noexcept = default;
HelmholtzSolver& HelmholtzSolver::operator=(HelmholtzSolver&&) noexcept = default;

const Grid2D& HelmholtzSolver::grid() const noexcept { return impl_->grid; }
double HelmholtzSolver::diffusion() const noexcept { return impl_->diffusion; }

double HelmholtzSolver::symbol(int p, int q) const {
  const int m = impl_->m;
  const double h = impl_->grid.h();
  const double sp = std::sin(std::numbers::pi * p / m);
  const double sq = std::sin(std::numbers::pi * q / m);
  return 4.0 / (h * h) * (sp * sp + sq * sq);
}

void HelmholtzSolver::solve(double c, const Field& rhs, Field& out) const {
  if (!(c > 0.0)) throw Error(ErrorCode::BadValue, "Helmholtz shift must be positive");
  if (!(rhs.grid() == impl_->grid) || !(out.grid() == impl_->grid))
    throw Error(ErrorCode::GridMismatch, "field grid differs from solver grid");
  Impl& s = *impl_;
  const std::size_t nreal = rhs.size();
  std::copy(rhs.values().begin(), rhs.values().end(), s.real);
  fftw_execute(s.forward);
  const std::size_t ncplx = s.symbol.size();
  const double norm = 1.0 / static_cast<double>(nreal);
  for (std::size_t i = 0; i < ncplx; ++i) {
    const double scale = norm / (c + s.diffusion * s.symbol[i]);
    s.spec[i][0] *= scale;
    s.spec[i][1] *= scale;
  }
  fftw_execute(s.backward);
  std::copy(s.real, s.real + nreal, out.values().begin());
}

Field HelmholtzSolver::solve(double c, const Field& rhs) const {
  Field out(rhs.grid());
  solve(c, rhs, out);
  return out;
}

Field solve_helmholtz(double c, double diffusion, const Field& rhs) {
  return HelmholtzSolver(rhs.grid(), diffusion).solve(c, rhs);
}

Field apply_helmholtz(double c, double diffusion, const Field& u) {
  Field out = laplacian(u);
  out *= -diffusion;
  out.axpy(c, u);
  return out;
}

// ---------------------------------------------------------------------------
// Snapshot I/O

void write_snapshot(const std::filesystem::path& path, const Field& u, double t,
                    const std::string& header) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  std::istringstream hs(header);
  for (std::string line; std::getline(hs, line);) os << (line.starts_with("#") ? "" : "# ") << line << '\n';
  const Grid2D& g = u.grid();
  os << std::setprecision(17);
  os << g.m() << ' ' << g.a() << ' ' << g.b() << ' ' << t << '\n';
  for (int j = 0; j < g.m(); ++j) {
    for (int k = 0; k < g.m(); ++k) {
      if (k) os << ' ';
      os << u(j, k);
    }
    os << '\n';
  }
  if (!os) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string line;
  int lineno = 0;
  auto next_data_line = [&]() -> bool {
    while (std::getline(is, line)) {
      ++lineno;
      if (!line.empty() && line[0] != '#') return true;
    }
    return false;
  };
  auto bad = [&](const std::string& what) {
    return Error(ErrorCode::BadValue, path.string() + ":" + std::to_string(lineno) + ": " + what);
  };
  if (!next_data_line()) throw bad("missing `M a b t` header line");
  int m = 0;
  double a = 0, b = 0, t = 0;
  {
    std::istringstream ls(line);
    if (!(ls >> m >> a >> b >> t)) throw bad("malformed `M a b t` header line");
  }
  Field f(Grid2D(a, b, m));
  for (int j = 0; j < m; ++j) {
    if (!next_data_line()) throw bad("expected " + std::to_string(m) + " data rows");
    std::istringstream ls(line);
    for (int k = 0; k < m; ++k)
      if (!(ls >> f(j, k))) throw bad("expected " + std::to_string(m) + " values in row");
  }
  return {std::move(f), t};
}

}  // namespace fracphase

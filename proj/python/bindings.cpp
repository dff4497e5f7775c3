#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fracphase/config.hpp"
#include "fracphase/energy.hpp"
#include "fracphase/error.hpp"
#include "fracphase/harness.hpp"
#include "fracphase/weights.hpp"

namespace py = pybind11;
using namespace fracphase;

namespace {

py::array_t<double> to_numpy(std::span<const double> v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<double> field_to_numpy(const Field& f) {
  const auto m = static_cast<py::ssize_t>(f.grid().m());
  py::array_t<double> out({m, m});
  std::copy(f.values().begin(), f.values().end(), out.mutable_data());
  return out;
}

Field field_from_numpy(const Grid2D& grid, py::array_t<double, py::array::c_style | py::array::forcecast> a) {
  if (a.ndim() != 2 || a.shape(0) != grid.m() || a.shape(1) != grid.m())
    throw Error(ErrorCode::GridMismatch, "array shape does not match the grid");
  return Field(grid, std::vector<double>(a.data(), a.data() + a.size()));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Time-fractional Allen-Cahn solver core";

  py::register_exception<Error>(m, "FracphaseError", PyExc_RuntimeError);

  m.def(
      "weights",
      [](double alpha, const std::string& kind, long n) {
        return to_numpy(make_weights(parse_weight_kind(kind), alpha, n).values());
      },
      py::arg("alpha"), py::arg("kind") = "sftr", py::arg("n") = 10,
      "Weights w_0..w_n of kind sftr, theta, vartheta or fbdf2.");
  m.def(
      "convolve_prefix",
      [](std::vector<double> a, std::vector<double> b, std::size_t n) { return convolve_prefix(a, b, n); },
      py::arg("a"), py::arg("b"), py::arg("n"));
  m.def(
      "check_invariants",
      [](double alpha, const std::string& kind, long n) {
        const InvariantReport r = check_invariants(make_weights(parse_weight_kind(kind), alpha, n));
        return py::make_tuple(r.ok, r.message);
      },
      py::arg("alpha"), py::arg("kind"), py::arg("n"));
  m.def("sftr_caputo_error", &sftr_caputo_error, py::arg("alpha"), py::arg("tau"), py::arg("t_end"));
  m.def("vartheta_integral_error", &vartheta_integral_error, py::arg("alpha"), py::arg("tau"), py::arg("t_end"));

  m.def(
      "laplacian",
      [](py::array_t<double> u, double a, double b) {
        const Grid2D grid(a, b, static_cast<int>(u.shape(0)));
        return field_to_numpy(laplacian(field_from_numpy(grid, u)));
      },
      py::arg("u"), py::arg("a") = 0.0, py::arg("b") = 1.0);
  m.def(
      "solve_helmholtz",
      [](double c, double d, py::array_t<double> rhs, double a, double b) {
        const Grid2D grid(a, b, static_cast<int>(rhs.shape(0)));
        return field_to_numpy(solve_helmholtz(c, d, field_from_numpy(grid, rhs)));
      },
      py::arg("c"), py::arg("d"), py::arg("rhs"), py::arg("a") = 0.0, py::arg("b") = 1.0,
      "Solves (c - d Delta_h) u = rhs on the periodic grid.");
  m.def("nonlinear_term", py::overload_cast<double, double>(&nonlinear_term), py::arg("a"), py::arg("b"));

  m.def(
      "random_initial",
      [](int m, std::uint64_t seed) { return field_to_numpy(random_initial(Grid2D(0.0, 1.0, m), seed)); },
      py::arg("m"), py::arg("seed"));

  m.def(
      "solve",
      [](double alpha, double eps, int m, int n, double t_final, const std::string& scheme, const std::string& ic,
         std::uint64_t seed, double gamma, double fp_tol) {
        RunConfig c;
        c.alpha = alpha;
        c.eps = eps;
        c.grid = Grid2D(0.0, 1.0, m);
        c.mesh = gamma == 1.0 ? TimeMesh::uniform(t_final, n) : TimeMesh::graded(t_final, n, gamma);
        c.scheme = parse_scheme(scheme);
        c.fp_tol = fp_tol;
        Field u0 = ic == "sine" ? sine_initial(c.grid) : random_initial(c.grid, seed);
        if (ic == "random") c.seed = seed;
        else if (ic != "sine") throw Error(ErrorCode::BadValue, "ic must be random or sine");
        EnergyMonitor monitor(c);
        Trajectory traj;
        {
          py::gil_scoped_release release;
          traj = run(c, u0, monitor.observer());
        }
        py::dict out;
        out["final"] = field_to_numpy(traj.states.back());
        out["times"] = c.mesh.nodes();
        std::vector<double> linf, energy, compat, decay;
        for (const MonitorRecord& r : monitor.records()) {
          linf.push_back(r.linf);
          energy.push_back(r.energy);
          compat.push_back(r.compatible_energy);
          decay.push_back(r.decay_residual);
        }
        out["linf"] = linf;
        out["energy"] = energy;
        out["compatible_energy"] = compat;
        out["decay_residual"] = decay;
        out["fp_iters"] = traj.fp_iters;
        out["warnings"] = traj.warnings;
        return out;
      },
      py::arg("alpha"), py::arg("eps"), py::arg("m"), py::arg("n"), py::arg("t_final"), py::arg("scheme") = "sftr",
      py::arg("ic") = "random", py::arg("seed") = 1, py::arg("gamma") = 1.0, py::arg("fp_tol") = 1e-6,
      "Runs one solve and returns the final state with per-step monitor columns.");

  m.def("compute_rates", [](std::vector<double> e) { return compute_rates(e); }, py::arg("errors"));
  m.def(
      "read_snapshot",
      [](const std::filesystem::path& p) {
        Snapshot s = read_snapshot(p);
        return py::make_tuple(field_to_numpy(s.field), s.t, s.field.grid().a(), s.field.grid().b());
      },
      py::arg("path"));
  m.def(
      "parse_config",
      [](const std::filesystem::path& p) {
        const CliConfig c = parse_config(p);
        return describe(c.run);
      },
      py::arg("path"), "Parses and validates a config file; returns its effective settings as text.");
}

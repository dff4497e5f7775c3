#pragma once

// Independent Crank-Nicolson convex-splitting integrator for the classical
// (alpha = 1) Allen-Cahn equation:
//
//   (U^n - U^{n-1}) / tau = eps^2 Lap (U^n + U^{n-1}) / 2 - f(U^n, U^{n-1}),
//   f(a, b) = a^3/3 + b^2 a / 2 + b^3 / 6 - (a + b) / 2,
//
// solved per step by Newton's method with a dense LU factorization. Plain
// vectors and index arithmetic only; meant for grids up to about 20 x 20.

#include <vector>

namespace oracle {

std::vector<std::vector<double>> crank_nicolson(const std::vector<double>& u0, int m, double length, double eps,
                                                double tau, int steps, double newton_tol = 1e-14);

}  // namespace oracle

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "singheat/grid.hpp"
#include "singheat/weights.hpp"

namespace singheat {

/// Symmetric tridiagonal matrix (constant off-diagonal not assumed).
struct TridiagonalMatrix {
    std::vector<double> diag;
    std::vector<double> off;  // size n-1

    std::size_t size() const { return diag.size(); }

    void apply(std::span<const double> x, std::span<double> out) const;
    std::vector<double> apply(std::span<const double> x) const;
};

/// Discrete singular operator (A_h y)_i = -(y_{i+1}-2y_i+y_{i-1})/h^2 - mu y_i/x_i^2
/// with Dirichlet closure at both ends.
TridiagonalMatrix assemble_operator(double mu, const SpaceTimeGrid& grid);

/// Thomas factorization of a tridiagonal matrix (I or general), reusable solves.
class TridiagonalSolver {
public:
    explicit TridiagonalSolver(const TridiagonalMatrix& m);
    void solve(std::span<const double> rhs, std::span<double> out) const;
    std::vector<double> solve(std::span<const double> rhs) const;

private:
    std::vector<double> c_;  // eliminated superdiagonal
    std::vector<double> d_;  // pivots
    std::vector<double> lo_; // subdiagonal copy
};

/// Trapezoidal Volterra quadrature: per node i,
/// integral over s in [0, t_n] of a(t_n, s, x_i) w(s, x_i) ds.
/// Returns the zero vector when n = 0. `a` is any callable a(t, s, x).
template <typename Kernel>
std::vector<double> memory_quadrature(Kernel&& a, const Trajectory& w, std::size_t n,
                                      double dt, const std::vector<double>& xs) {
    const std::size_t nx = w.nx();
    std::vector<double> out(nx, 0.0);
    if (n == 0) return out;
    const double tn = static_cast<double>(n) * dt;
    for (std::size_t j = 0; j <= n; ++j) {
        const double quad = (j == 0 || j == n) ? 0.5 * dt : dt;
        const double sj = static_cast<double>(j) * dt;
        auto row = w.row(j);
        for (std::size_t i = 0; i < nx; ++i)
            out[i] += quad * a(tn, sj, xs[i]) * row[i];
    }
    return out;
}

std::vector<double> memory_quadrature(const MemoryKernel& kern, const Trajectory& w,
                                      std::size_t n, double dt,
                                      const std::vector<double>& xs);

/// Smallest eigenvalue of assemble_operator(mu, grid(nx)) by Sturm bisection.
/// Deterministic; independent of any start vector.
double spectral_bottom(double mu, std::size_t nx);

/// Ratio of the discrete Hardy functional:
///   (1/4 sum y_i^2/x_i^2 h) / (sum over cell edges of difference quotients^2 h).
/// Throws std::invalid_argument when y is identically zero.
double discrete_hardy_ratio(std::span<const double> y, const SpaceTimeGrid& grid);

}  // namespace singheat

#include "singheat/operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace singheat {

void TridiagonalMatrix::apply(std::span<const double> x, std::span<double> out) const {
    const std::size_t n = diag.size();
    for (std::size_t i = 0; i < n; ++i) {
        double v = diag[i] * x[i];
        if (i > 0) v += off[i - 1] * x[i - 1];
        if (i + 1 < n) v += off[i] * x[i + 1];
        out[i] = v;
    }
}

std::vector<double> TridiagonalMatrix::apply(std::span<const double> x) const {
    std::vector<double> out(diag.size());
    apply(x, out);
    return out;
}

TridiagonalMatrix assemble_operator(double mu, const SpaceTimeGrid& grid) {
    const std::size_t n = grid.nx();
    const double h = grid.h();
    TridiagonalMatrix m;
    m.diag.resize(n);
    m.off.assign(n - 1, -1.0 / (h * h));
    for (std::size_t i = 0; i < n; ++i) {
        const double x = grid.x(i);
        m.diag[i] = 2.0 / (h * h) - mu / (x * x);
    }
    return m;
}

TridiagonalSolver::TridiagonalSolver(const TridiagonalMatrix& m) {
    const std::size_t n = m.size();
    c_.assign(n, 0.0);
    d_.assign(n, 0.0);
    lo_.assign(n, 0.0);
    d_[0] = m.diag[0];
    for (std::size_t i = 1; i < n; ++i) {
        lo_[i] = m.off[i - 1];
        c_[i - 1] = m.off[i - 1];
        const double w = lo_[i] / d_[i - 1];
        d_[i] = m.diag[i] - w * c_[i - 1];
    }
    for (std::size_t i = 0; i < n; ++i)
        if (d_[i] == 0.0 || !std::isfinite(d_[i]))
            throw std::runtime_error("tridiagonal solve: singular pivot");
}

void TridiagonalSolver::solve(std::span<const double> rhs, std::span<double> out) const {
    const std::size_t n = d_.size();
    out[0] = rhs[0];
    for (std::size_t i = 1; i < n; ++i)
        out[i] = rhs[i] - (lo_[i] / d_[i - 1]) * out[i - 1];
    out[n - 1] /= d_[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        out[i] = (out[i] - c_[i] * out[i + 1]) / d_[i];
}

std::vector<double> TridiagonalSolver::solve(std::span<const double> rhs) const {
    std::vector<double> out(d_.size());
    solve(rhs, out);
    return out;
}

std::vector<double> memory_quadrature(const MemoryKernel& kern, const Trajectory& w,
                                      std::size_t n, double dt,
                                      const std::vector<double>& xs) {
    return memory_quadrature([&](double t, double, double) { return kern.value(t); }, w,
                             n, dt, xs);
}

namespace {

// Number of eigenvalues of the tridiagonal matrix strictly below x (Sturm count).
std::size_t sturm_count(const TridiagonalMatrix& m, double x) {
    const std::size_t n = m.size();
    std::size_t count = 0;
    double q = m.diag[0] - x;
    if (q < 0.0) ++count;
    for (std::size_t i = 1; i < n; ++i) {
        const double b2 = m.off[i - 1] * m.off[i - 1];
        if (q == 0.0) q = 1e-300;
        q = m.diag[i] - x - b2 / q;
        if (q < 0.0) ++count;
    }
    return count;
}

}  // namespace

double spectral_bottom(double mu, std::size_t nx) {
    if (nx < 3) throw std::invalid_argument("spectral_bottom: nx must be >= 3");
    SpaceTimeGrid grid(nx, 2, 1.0, Interval{0.25, 0.85}, Interval{0.3, 0.8});
    const TridiagonalMatrix m = assemble_operator(mu, grid);
    // Gershgorin bounds
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    const std::size_t n = m.size();
    for (std::size_t i = 0; i < n; ++i) {
        double r = 0.0;
        if (i > 0) r += std::abs(m.off[i - 1]);
        if (i + 1 < n) r += std::abs(m.off[i]);
        lo = std::min(lo, m.diag[i] - r);
        hi = std::max(hi, m.diag[i] + r);
    }
    const double scale = std::max({std::abs(lo), std::abs(hi), 1.0});
    const double tol = 1e-10 * scale;
    std::size_t iter = 0;
    const std::size_t cap = 200;
    while (hi - lo > tol) {
        if (++iter > cap)
            throw std::runtime_error("spectral_bottom: bisection failed to converge");
        const double mid = 0.5 * (lo + hi);
        if (sturm_count(m, mid) >= 1)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

double discrete_hardy_ratio(std::span<const double> y, const SpaceTimeGrid& grid) {
    const std::size_t n = grid.nx();
    const double h = grid.h();
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = grid.x(i);
        num += y[i] * y[i] / (x * x);
        const double prev = (i == 0) ? 0.0 : y[i - 1];
        const double dq = (y[i] - prev) / h;
        den += dq * dq;
    }
    const double dq_last = (0.0 - y[n - 1]) / h;
    den += dq_last * dq_last;
    num *= 0.25 * h;
    den *= h;
    if (den == 0.0)
        throw std::invalid_argument("discrete_hardy_ratio: y is identically zero");
    return num / den;
}

}  // namespace singheat

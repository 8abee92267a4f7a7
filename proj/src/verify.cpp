#include "singheat/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "singheat/logsum.hpp"
#include "singheat/operator.hpp"

namespace singheat {

namespace {

/// Squared difference quotients on the nx+1 cell edges of a space vector.
std::vector<double> edge_dq2(std::span<const double> z, double h) {
    const std::size_t n = z.size();
    std::vector<double> out(n + 1);
    for (std::size_t e = 0; e <= n; ++e) {
        const double a = (e == 0) ? 0.0 : z[e - 1];
        const double b = (e == n) ? 0.0 : z[e];
        const double dq = (b - a) / h;
        out[e] = dq * dq;
    }
    return out;
}

/// Nodal gradient-square as the average of adjacent edge values.
double node_dq2(const std::vector<double>& e2, std::size_t i) {
    return 0.5 * (e2[i] + e2[i + 1]);
}

}  // namespace

HpEstimate improved_hp_constant(double eta, const std::vector<std::vector<double>>& zs,
                                const SpaceTimeGrid& grid) {
    if (eta <= 0.0) throw std::invalid_argument("improved_hp_constant: eta must be > 0");
    const double h = grid.h();
    const std::size_t nx = grid.nx();
    HpEstimate est;
    std::size_t idx = 0;
    for (const auto& z : zs) {
        ++idx;
        if (z.size() != nx)
            throw std::invalid_argument("improved_hp_constant: sample size mismatch");
        bool all_zero = true;
        for (double v : z)
            if (v != 0.0) all_zero = false;
        if (all_zero)
            throw std::invalid_argument(
                "improved_hp_constant: test function is identically zero");
        const std::vector<double> e2 = edge_dq2(z, h);
        double num = 0.0, grad = 0.0, hardy = 0.0;
        for (std::size_t e = 0; e <= nx; ++e) {
            const double xl = (e == 0) ? 0.0 : grid.x(e - 1);
            const double xr = (e == nx) ? 1.0 : grid.x(e);
            const double xm = 0.5 * (xl + xr);
            num += std::pow(xm, eta) * e2[e] * h;
            grad += e2[e] * h;
        }
        for (std::size_t i = 0; i < nx; ++i)
            hardy += z[i] * z[i] / (grid.x(i) * grid.x(i)) * h;
        const double den = grad - 0.25 * hardy;
        if (den <= 0.0) {
            est.warnings.push_back("sample " + std::to_string(idx) +
                                   " excluded: non-positive Hardy defect");
            continue;
        }
        est.ratios.push_back(num / den);
        est.c_estimate = std::max(est.c_estimate, num / den);
    }
    return est;
}

InequalityReport carleman_ratio(const WeightParams& p, const Field* g,
                                std::span<const double> zT, const SpaceTimeGrid& grid,
                                const CarlemanOptions& opts) {
    if (!(opts.window_eps > 0.0 && opts.window_eps < 0.5))
        throw std::invalid_argument("carleman_ratio: window eps must lie in (0, 1/2)");
    const std::size_t nx = grid.nx();
    const std::size_t nt = grid.nt();
    const double h = grid.h();
    const double dt = grid.dt();
    const double s = p.s;

    const Trajectory z = adjoint_solve(g, zT, p.mu, grid);
    const std::vector<double> maskp = grid.omega_prime_mask();
    const std::vector<double> masko = grid.omega_mask();

    const std::size_t n_lo =
        static_cast<std::size_t>(std::ceil(opts.window_eps * static_cast<double>(nt)));
    const std::size_t n_hi = static_cast<std::size_t>(
        std::floor((1.0 - opts.window_eps) * static_cast<double>(nt)));

    LogSumExp lhs, rhs;
    const bool critical = p.mu == 0.25;

    if (!opts.modified) {
        for (std::size_t n = std::max<std::size_t>(n_lo, 1);
             n <= std::min<std::size_t>(n_hi, nt - 1); ++n) {
            const double t = grid.t(n);
            const double th = p.theta(t);
            const std::vector<double> e2 = edge_dq2(z.row(n), h);
            for (std::size_t i = 0; i < nx; ++i) {
                const double x = grid.x(i);
                const double zi = z.at(n, i);
                const double lphi = 2.0 * s * th * p.psi(x);
                const double lPhi = 2.0 * s * th * p.Psi(x);
                const double q = dt * h;
                double integrand = s * s * s * th * th * th * x * x * zi * zi +
                                   s * th * zi * zi / std::pow(x, p.gamma);
                if (critical) {
                    integrand += s * th * std::pow(x, p.eta) * node_dq2(e2, i);
                } else {
                    integrand += s * th * node_dq2(e2, i) + s * th * zi * zi / (x * x);
                }
                lhs.add(lphi, integrand * q);
                double robs = 0.0;
                if (g) robs += g->at(n, i) * g->at(n, i);
                robs += s * s * s * th * th * th * zi * zi * maskp[i];
                rhs.add(lPhi, robs * q);
            }
        }
    } else {
        // modified, non-exploding form with the nu weights
        const ExtremalWeights e0 = extremal_weights(p, 0.0);
        const ExtremalWeights e58 = extremal_weights(p, 5.0 * p.T / 8.0);
        double z0sq = 0.0;
        for (double v : z.row(0)) z0sq += v * v;
        lhs.add(2.0 * s * e0.hatphi, z0sq * h);
        for (std::size_t n = 0; n <= std::min<std::size_t>(n_hi, nt - 1); ++n) {
            const double t = grid.t(n);
            const double nu = p.nu(t);
            const double qt = (n == 0) ? 0.5 : 1.0;
            for (std::size_t i = 0; i < nx; ++i) {
                const double x = grid.x(i);
                const double zi = z.at(n, i);
                const double q = qt * dt * h;
                lhs.add(2.0 * s * nu * p.psi(x), nu * zi * zi * q);
                double robs = 0.0;
                if (g) robs += g->at(n, i) * g->at(n, i);
                robs += s * s * s * nu * nu * nu * zi * zi * masko[i];
                rhs.add(2.0 * s * nu * p.Psi(x), robs * q);
            }
        }
        // the rhs carries the gap factor e^{2s[hatphi(0) - checkphi(5T/8)]}
        const double gap = 2.0 * s * (e0.hatphi - e58.checkphi);
        InequalityReport rep;
        rep.lhs_log = lhs.log_value();
        rep.rhs_log = rhs.log_value() + gap;
        rep.ratio = (lhs.empty() && rhs.empty())
                        ? 0.0
                        : std::exp(rep.lhs_log - rep.rhs_log);
        rep.description = "modified Carleman (nu weights)";
        return rep;
    }

    InequalityReport rep;
    rep.lhs_log = lhs.log_value();
    rep.rhs_log = rhs.log_value();
    rep.ratio = (lhs.empty() && rhs.empty()) ? 0.0 : std::exp(rep.lhs_log - rep.rhs_log);
    rep.description = critical ? "Carleman functional, mu = 1/4 form"
                               : "Carleman functional, mu < 1/4 form";
    return rep;
}

InequalityReport caccioppoli_ratio(const Interval& omega_pp, const WeightParams& p,
                                   const Field* g, std::span<const double> zT,
                                   const SpaceTimeGrid& grid, double window_eps) {
    if (!(window_eps > 0.0 && window_eps < 0.5))
        throw std::invalid_argument("caccioppoli_ratio: window eps must lie in (0, 1/2)");
    if (!omega_pp.strictly_inside(grid.omega_prime()))
        throw std::invalid_argument(
            "caccioppoli_ratio: omega'' must have closure inside omega'");
    const std::size_t nx = grid.nx();
    const std::size_t nt = grid.nt();
    const double h = grid.h();
    const double dt = grid.dt();
    const double s = p.s;

    const Trajectory z = adjoint_solve(g, zT, p.mu, grid);
    const std::vector<double> maskpp = grid.indicator(omega_pp);
    const std::vector<double> maskp = grid.omega_prime_mask();

    const std::size_t n_lo =
        static_cast<std::size_t>(std::ceil(window_eps * static_cast<double>(nt)));
    const std::size_t n_hi = static_cast<std::size_t>(
        std::floor((1.0 - window_eps) * static_cast<double>(nt)));

    LogSumExp lhs, rhs;
    for (std::size_t n = std::max<std::size_t>(n_lo, 1);
         n <= std::min<std::size_t>(n_hi, nt - 1); ++n) {
        const double t = grid.t(n);
        const double th = p.theta(t);
        const std::vector<double> e2 = edge_dq2(z.row(n), h);
        for (std::size_t i = 0; i < nx; ++i) {
            const double x = grid.x(i);
            const double zi = z.at(n, i);
            const double lphi = 2.0 * s * th * p.psi(x);
            const double q = dt * h;
            if (maskpp[i] != 0.0) lhs.add(lphi, node_dq2(e2, i) * q);
            if (maskp[i] != 0.0) {
                double robs = s * s * th * th * zi * zi;
                if (g) robs += g->at(n, i) * g->at(n, i);
                rhs.add(lphi, robs * q);
            }
        }
    }
    InequalityReport rep;
    rep.lhs_log = lhs.log_value();
    rep.rhs_log = rhs.log_value();
    rep.ratio = (lhs.empty() && rhs.empty()) ? 0.0 : std::exp(rep.lhs_log - rep.rhs_log);
    rep.description = "Caccioppoli inequality";
    return rep;
}

const char* to_string(SpectralClass c) {
    switch (c) {
        case SpectralClass::bounded: return "bounded";
        case SpectralClass::collapsing: return "collapsing";
        default: return "indeterminate";
    }
}

SpectralScan supercritical_scan(const std::vector<double>& mu_list,
                                const std::vector<std::size_t>& nx_list) {
    if (nx_list.size() < 2)
        throw std::invalid_argument("supercritical_scan: need at least two nx values");
    for (std::size_t i = 1; i < nx_list.size(); ++i)
        if (nx_list[i] <= nx_list[i - 1])
            throw std::invalid_argument("supercritical_scan: nx_list must increase");
    SpectralScan scan;
    scan.nx_list = nx_list;
    for (double mu : mu_list) {
        SpectralScanRow row;
        row.mu = mu;
        for (std::size_t nx : nx_list) row.lambda_min.push_back(spectral_bottom(mu, nx));
        bool collapsing = true;
        for (std::size_t i = 1; i < row.lambda_min.size(); ++i) {
            const double prev = row.lambda_min[i - 1];
            const double cur = row.lambda_min[i];
            const double drop = (prev - cur) / std::abs(prev);
            if (!(cur < prev) || drop < 0.10) collapsing = false;
        }
        const double a = row.lambda_min[row.lambda_min.size() - 2];
        const double b = row.lambda_min.back();
        const bool bounded = std::abs(b - a) / std::abs(a) < 0.10;
        row.cls = collapsing ? SpectralClass::collapsing
                             : (bounded ? SpectralClass::bounded
                                        : SpectralClass::indeterminate);
        scan.rows.push_back(std::move(row));
    }
    return scan;
}

}  // namespace singheat

#include "singheat/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace singheat {

WeightValues evaluate_weights(const WeightParams& p, double t, double x) {
    if (!(t > 0.0 && t < p.T))
        throw std::domain_error("evaluate_weights: theta is undefined at t <= 0 or t >= T");
    if (x < 0.0 || x > 1.0)
        throw std::domain_error("evaluate_weights: x must lie in [0,1]");
    WeightValues w{};
    w.theta = p.theta(t);
    w.nu = p.nu(t);
    w.psi = p.psi(x);
    w.phi = w.theta * w.psi;
    w.Psi = p.Psi(x);
    w.Phi = w.theta * w.Psi;
    w.phi_tilde = w.nu * w.psi;
    w.Phi_tilde = w.nu * w.Psi;
    w.log_e2s_phi_tilde = 2.0 * p.s * w.phi_tilde;
    w.log_e2s_Phi_tilde = 2.0 * p.s * w.Phi_tilde;
    return w;
}

ExtremalWeights extremal_weights(const WeightParams& p, double t) {
    if (t < 0.0 || t > p.T)
        throw std::domain_error("extremal_weights: t must lie in [0,T]");
    const double nut = (t >= p.T) ? std::numeric_limits<double>::infinity()
                                  : p.nu(std::max(t, 0.0));
    ExtremalWeights e{};
    // psi = cfrak(x^2-d) is increasing on [0,1]; Psi is maximal where sigma is.
    e.hatphi = nut * p.cfrak * (1.0 - p.d);
    e.checkphi = -nut * p.cfrak * p.d;
    const double M = p.sigma.sigma_max();
    e.hatPhi = nut * (std::exp(p.rho * M) - std::exp(2.0 * p.rho * M));
    return e;
}

double extremal_grid_deviation(const WeightParams& p, double t, std::size_t n) {
    const ExtremalWeights closed = extremal_weights(p, t);
    const double nut = p.nu(std::max(t, 0.0));
    double max_phit = -std::numeric_limits<double>::infinity();
    double min_phit = std::numeric_limits<double>::infinity();
    double max_Phit = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= n; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(n);
        const double pt = nut * p.psi(x);
        const double Pt = nut * p.Psi(x);
        max_phit = std::max(max_phit, pt);
        min_phit = std::min(min_phit, pt);
        max_Phit = std::max(max_Phit, Pt);
    }
    auto rel = [](double a, double b) {
        return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
    };
    return std::max({rel(max_phit, closed.hatphi), rel(min_phit, closed.checkphi),
                     rel(max_Phit, closed.hatPhi)});
}

double memory_k_upper() { return std::log(4.0 / 3.0) / std::log(16.0 / 15.0) - 1.0; }

std::optional<std::pair<double, double>> cfrak_interval(double rho, double sigma_max,
                                                        double d) {
    const double X = std::exp(rho * sigma_max);
    const double lo = (X * X - 1.0) / (d - 1.0);
    const double hi = (16.0 / 15.0) * (X * X - X) / (d - 1.0);
    if (!(lo < hi)) return std::nullopt;
    return std::make_pair(lo, hi);
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

void push(ValidationReport& r, std::string name, bool ok, double margin,
          std::string detail) {
    r.checks.push_back({std::move(name), ok, margin, std::move(detail)});
}

}  // namespace

ValidationReport validate_params(const WeightParams& p) {
    ValidationReport r;

    const bool gamma_ok = p.gamma > 0.0 && p.gamma < 2.0;
    push(r, "gamma_range", gamma_ok, std::min(p.gamma, 2.0 - p.gamma),
         "gamma = " + fmt(p.gamma) + " must lie in (0,2)");

    const double k_expected = 1.0 + 2.0 / p.gamma;
    const double k_err = std::abs(p.k - k_expected);
    push(r, "k_gamma_consistency", gamma_ok && k_err <= 1e-12, 1e-12 - k_err,
         "k = " + fmt(p.k) + " vs 1 + 2/gamma = " + fmt(k_expected));

    push(r, "mu_le_quarter", p.mu <= 0.25, 0.25 - p.mu, "mu = " + fmt(p.mu));

    push(r, "d_gt_1", p.d > 1.0, p.d - 1.0,
         "d = " + fmt(p.d) + "; psi = cfrak(x^2-d) < 0 on [0,1] requires d > 1");

    push(r, "cfrak_positive", p.cfrak > 0.0, p.cfrak, "cfrak = " + fmt(p.cfrak));
    push(r, "rho_positive", p.rho > 0.0, p.rho, "rho = " + fmt(p.rho));
    push(r, "s_positive", p.s > 0.0, p.s, "s = " + fmt(p.s));
    push(r, "T_positive", p.T > 0.0, p.T, "T = " + fmt(p.T));
    push(r, "eta_positive", p.eta > 0.0, p.eta, "eta = " + fmt(p.eta));

    // sigma constraints, checked on samples
    {
        const std::size_t n = 200;
        bool boundary_ok = p.sigma.value(0.0) == 0.0 && p.sigma.value(1.0) == 0.0;
        bool positive_ok = true;
        bool deriv_ok = true;
        for (std::size_t i = 1; i < n; ++i) {
            const double x = static_cast<double>(i) / static_cast<double>(n);
            if (p.sigma.value(x) <= 0.0) positive_ok = false;
            if (!p.sigma.omega_tilde.contains(x) && p.sigma.deriv(x) == 0.0)
                deriv_ok = false;
        }
        if (p.sigma.deriv(0.0) == 0.0 || p.sigma.deriv(1.0) == 0.0) deriv_ok = false;
        push(r, "sigma_boundary", boundary_ok, 0.0, "sigma(0) = sigma(1) = 0");
        push(r, "sigma_positive", positive_ok, 0.0, "sigma > 0 on (0,1)");
        push(r, "sigma_x_nonzero_outside_omega_tilde", deriv_ok, 0.0,
             "sigma_x != 0 on [0,1] \\ omega_tilde");
        const bool half_in = p.sigma.omega_tilde.contains(0.5);
        push(r, "omega_tilde_contains_half", half_in,
             std::min(0.5 - p.sigma.omega_tilde.lo, p.sigma.omega_tilde.hi - 0.5),
             "omega_tilde = (" + fmt(p.sigma.omega_tilde.lo) + ", " +
                 fmt(p.sigma.omega_tilde.hi) + ")");
    }

    // cfrak >= (e^{2 rho M} - 1)/(d - 1), which forces phi <= Phi
    const double M = p.sigma.sigma_max();
    const double cfrak_lb = (std::exp(2.0 * p.rho * M) - 1.0) / (p.d - 1.0);
    push(r, "cfrak_lower_bound", p.cfrak >= cfrak_lb, p.cfrak - cfrak_lb,
         "cfrak = " + fmt(p.cfrak) + " vs (e^{2 rho |sigma|} - 1)/(d-1) = " + fmt(cfrak_lb));

    // phi <= Phi pointwise on a 200 x 200 validation grid
    {
        bool ok = true;
        double worst = std::numeric_limits<double>::infinity();
        const std::size_t n = 200;
        for (std::size_t it = 1; it < n && ok; ++it) {
            const double t = p.T * static_cast<double>(it) / static_cast<double>(n);
            const double th = p.theta(t);
            for (std::size_t ix = 0; ix <= n; ++ix) {
                const double x = static_cast<double>(ix) / static_cast<double>(n);
                const double gap = th * (p.Psi(x) - p.psi(x));
                worst = std::min(worst, gap);
                if (gap < 0.0) {
                    ok = false;
                    break;
                }
            }
        }
        push(r, "phi_le_Phi_grid", ok, worst, "min over grid of Phi - phi");
    }

    // closed-form extremals agree with grid extremization
    {
        double dev = 0.0;
        for (double t : {0.0, 0.25 * p.T, 0.5 * p.T, 0.7 * p.T, 0.9 * p.T})
            dev = std::max(dev, extremal_grid_deviation(p, t, 2000));
        push(r, "extremal_closed_forms", dev <= 1e-9, 1e-9 - dev,
             "max relative deviation = " + fmt(dev));
    }

    if (p.mode == WeightMode::memory) {
        push(r, "d_gt_3", p.d > 3.0, p.d - 3.0, "memory mode requires d > 3");

        const double k_hi = memory_k_upper();
        const bool k_ok = p.k > 2.0 && p.k < k_hi;
        push(r, "k_range_memory", k_ok, std::min(p.k - 2.0, k_hi - p.k),
             "k = " + fmt(p.k) + " must lie in (2, " + fmt(k_hi) + ")");

        const auto iv = cfrak_interval(p.rho, M, p.d);
        if (!iv) {
            push(r, "cfrak_interval_memory", false,
                 -std::numeric_limits<double>::infinity(),
                 "interval empty: requires e^{rho |sigma|} > 15 (rho |sigma| = " +
                     fmt(p.rho * M) + ")");
        } else {
            const bool inside = p.cfrak > iv->first && p.cfrak < iv->second;
            push(r, "cfrak_interval_memory", inside,
                 std::min(p.cfrak - iv->first, iv->second - p.cfrak),
                 "cfrak = " + fmt(p.cfrak) + " vs (" + fmt(iv->first) + ", " +
                     fmt(iv->second) + ")");
        }

        // gap condition 2 hatPhi(0) - checkphi(5T/8) < 0
        const ExtremalWeights e0 = extremal_weights(p, 0.0);
        const ExtremalWeights e58 = extremal_weights(p, 5.0 * p.T / 8.0);
        const double gap = 2.0 * e0.hatPhi - e58.checkphi;
        push(r, "gap_condition", gap < 0.0, -gap,
         "2 hatPhi(0) - checkphi(5T/8) = " + fmt(gap));
    }

    return r;
}

KernelAdmissibility kernel_admissibility(const MemoryKernel& kern, const WeightParams& p,
                                         const SpaceTimeGrid& grid) {
    KernelAdmissibility out{};
    const double sC0 = p.s * p.C0();
    if (kern.kind == MemoryKernel::Kind::constant) {
        // exponent s C0/(T-t)^k diverges as t -> T while |a| stays flat
        out.admissible = false;
        out.log_sup = std::numeric_limits<double>::infinity();
        return out;
    }
    if (kern.horizon != p.T || kern.k != p.k)
        throw std::invalid_argument(
            "kernel_admissibility: kernel horizon/exponent must match the weight "
            "parameters");
    // decay_exp: log|a| + s C0/(T-t)^k = log(amp) + (s C0 - M0)/(T-t)^k
    out.admissible = kern.M0 >= sC0;
    const double coeff = sC0 - kern.M0;
    if (coeff <= 0.0) {
        // decreasing toward T; sup over the grid t in [0, T) at t = 0
        out.log_sup = std::log(std::abs(kern.amplitude)) + coeff / std::pow(p.T, p.k);
    } else {
        // grows without bound; report the value at the last grid node before T
        const double t_last = grid.t(grid.nt() - 1);
        out.log_sup = std::log(std::abs(kern.amplitude)) +
                      coeff / std::pow(p.T - t_last, p.k);
    }
    return out;
}

}  // namespace singheat

#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "singheat/grid.hpp"

namespace singheat {

/// Closed-form auxiliary function sigma used in the nonsingular weight Psi.
/// Family `quadratic`: sigma(x) = amplitude * x(1-x), so sigma_x = amplitude*(1-2x)
/// vanishes only at x = 1/2; omega_tilde must straddle 1/2.
struct SigmaSpec {
    enum class Family { quadratic };

    Family family = Family::quadratic;
    double amplitude = 1.0;
    Interval omega_tilde{0.4, 0.7};

    double value(double x) const { return amplitude * x * (1.0 - x); }
    double deriv(double x) const { return amplitude * (1.0 - 2.0 * x); }
    double sigma_max() const { return amplitude / 4.0; }
};

enum class WeightMode { basic, memory };

/// All Carleman parameters and derived weight evaluations.
///
/// theta(t) = (t(T-t))^{-k},  psi = cfrak (x^2 - d),  phi = theta psi,
/// Psi = e^{rho sigma} - e^{2 rho |sigma|_inf},  Phi = theta Psi,
/// nu = theta frozen at theta(T/2) on [0, T/2]; tilde weights use nu.
struct WeightParams {
    double gamma = 1.0;
    double k = 3.0;
    double cfrak = 135.0;
    double d = 4.0;
    double rho = 12.0;
    double s = 1.0e-5;
    double T = 1.0;
    double mu = 0.2;
    double eta = 1.0;
    SigmaSpec sigma;
    WeightMode mode = WeightMode::basic;

    double theta(double t) const {
        return std::pow(1.0 / (t * (T - t)), k);
    }
    double nu(double t) const {
        return (t <= T / 2.0) ? theta(T / 2.0) : theta(t);
    }
    double psi(double x) const { return cfrak * (x * x - d); }
    double Psi(double x) const {
        return std::exp(rho * sigma.value(x)) - std::exp(2.0 * rho * sigma.sigma_max());
    }
    double phi(double t, double x) const { return theta(t) * psi(x); }
    double Phi(double t, double x) const { return theta(t) * Psi(x); }
    double phi_tilde(double t, double x) const { return nu(t) * psi(x); }
    double Phi_tilde(double t, double x) const { return nu(t) * Psi(x); }

    double C0() const { return std::pow(4.0, k) * cfrak * d / std::pow(T, k); }
};

/// Values of every weight at one (t, x); exponential weights only as logs.
struct WeightValues {
    double theta;
    double nu;
    double psi;
    double phi;
    double Psi;
    double Phi;
    double phi_tilde;
    double Phi_tilde;
    double log_e2s_phi_tilde;  // = 2 s phi_tilde
    double log_e2s_Phi_tilde;  // = 2 s Phi_tilde
};

WeightValues evaluate_weights(const WeightParams& p, double t, double x);

/// Extremal envelopes of the tilde weights at time t:
///   hatPhi = max_x Phi_tilde, hatphi = max_x phi_tilde, checkphi = min_x phi_tilde.
struct ExtremalWeights {
    double hatPhi;
    double hatphi;
    double checkphi;
};

ExtremalWeights extremal_weights(const WeightParams& p, double t);

/// Max relative deviation of the closed-form extremals from grid extremization
/// with `n` sample points in x (and implicit endpoints).
double extremal_grid_deviation(const WeightParams& p, double t, std::size_t n);

struct ConstraintCheck {
    std::string name;
    bool passed = false;
    double margin = 0.0;   // >= 0 means satisfied; sign convention per constraint
    std::string detail;
};

struct ValidationReport {
    std::vector<ConstraintCheck> checks;

    bool all_passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }
    const ConstraintCheck* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
    std::vector<std::string> failed_names() const {
        std::vector<std::string> out;
        for (const auto& c : checks)
            if (!c.passed) out.push_back(c.name);
        return out;
    }
};

/// Check every parameter constraint; failures are report entries, never throws.
ValidationReport validate_params(const WeightParams& p);

/// Admissible cfrak interval of the memory theorem,
/// ( (e^{2 rho M}-1)/(d-1), (16/15)(e^{2 rho M}-e^{rho M})/(d-1) ), M = sigma_max.
/// Empty when lo >= hi (iff e^{rho M} <= 15).
std::optional<std::pair<double, double>> cfrak_interval(double rho, double sigma_max,
                                                        double d);

/// Upper bound of the admissible k-range in memory mode: ln(4/3)/ln(16/15) - 1.
double memory_k_upper();

/// Volterra kernel a(t, s_hist, x). Closed-form families:
///   constant:  a = amplitude
///   decay_exp: a = amplitude * exp(-M0 / (horizon - t)^k)
struct MemoryKernel {
    enum class Kind { constant, decay_exp };

    Kind kind = Kind::decay_exp;
    double amplitude = 1.0;
    double M0 = 0.0;
    double horizon = 1.0;
    double k = 3.0;
    std::optional<bool> admissible;

    double value(double t) const {
        if (kind == Kind::constant) return amplitude;
        if (t >= horizon) return 0.0;
        return amplitude * std::exp(-M0 / std::pow(horizon - t, k));
    }

    /// Same kernel function rebased to a shifted time origin: with t = t0 + tau,
    /// (horizon - t) = (horizon - t0) - tau, so only the horizon changes.
    MemoryKernel rebased(double t0) const {
        MemoryKernel out = *this;
        out.horizon = horizon - t0;
        return out;
    }
};

struct KernelAdmissibility {
    bool admissible = false;
    double log_sup = 0.0;  // sup over the grid of log|a| + s C0/(T-t)^k
};

/// Decide the kernel condition e^{s C0/(T-t)^k} a in L^inf.
/// For the closed-form kinds the decision is exact: decay_exp is admissible
/// iff M0 >= s*C0 (bit-exact comparison); constant never is.
KernelAdmissibility kernel_admissibility(const MemoryKernel& kern, const WeightParams& p,
                                         const SpaceTimeGrid& grid);

}  // namespace singheat

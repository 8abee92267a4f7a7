#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "singheat/evolve.hpp"
#include "singheat/grid.hpp"
#include "singheat/weights.hpp"

namespace singheat {

/// One weighted-inequality evaluation; both sides kept as logs because the
/// Carleman weights span thousands of nats.
struct InequalityReport {
    double lhs_log = 0.0;
    double rhs_log = 0.0;
    double ratio = 0.0;  // exp(lhs_log - rhs_log); 0 when both sides vanish
    std::string description;
};

struct HpEstimate {
    double c_estimate = 0.0;           // max ratio over valid samples
    std::vector<double> ratios;        // one entry per accepted sample
    std::vector<std::string> warnings; // excluded samples
};

/// Lower bound on the constant of the improved Hardy-Poincare inequality
///   integral x^eta z_x^2 <= C integral (z_x^2 - z^2/(4x^2))
/// over the supplied test functions (grid samples, zero boundary values).
HpEstimate improved_hp_constant(double eta, const std::vector<std::vector<double>>& zs,
                                const SpaceTimeGrid& grid);

struct CarlemanOptions {
    double window_eps = 1.0 / 16.0;  // integrate over [eps T, (1-eps) T]
    bool modified = false;           // use the nu-weight, non-exploding form
};

/// Ratio of the Carleman functional to its observation right-hand side for the
/// adjoint solution driven by (g, zT). The mu < 1/4 and mu = 1/4 forms are
/// selected automatically from p.mu.
InequalityReport carleman_ratio(const WeightParams& p, const Field* g,
                                std::span<const double> zT, const SpaceTimeGrid& grid,
                                const CarlemanOptions& opts = {});

/// Caccioppoli inequality ratio with interior observation on omega' and
/// gradient energy on omega'' (closure inside omega').
InequalityReport caccioppoli_ratio(const Interval& omega_pp, const WeightParams& p,
                                   const Field* g, std::span<const double> zT,
                                   const SpaceTimeGrid& grid, double window_eps = 1.0 / 16.0);

enum class SpectralClass { bounded, collapsing, indeterminate };

struct SpectralScanRow {
    double mu = 0.0;
    std::vector<double> lambda_min;  // one per nx in nx_list
    SpectralClass cls = SpectralClass::indeterminate;
};

struct SpectralScan {
    std::vector<std::size_t> nx_list;
    std::vector<SpectralScanRow> rows;
};

const char* to_string(SpectralClass c);

/// Scan the spectral bottom over mu and nx; classify each mu as bounded
/// (variation < 10% across the top two nx) or collapsing (monotone decrease
/// of at least 10% per doubling).
SpectralScan supercritical_scan(const std::vector<double>& mu_list,
                                const std::vector<std::size_t>& nx_list);

}  // namespace singheat

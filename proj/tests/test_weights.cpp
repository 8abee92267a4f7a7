#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "singheat/weights.hpp"

using namespace singheat;

namespace {

WeightParams theory_params() {
    WeightParams p;
    p.gamma = 1.0;
    p.k = 3.0;
    p.cfrak = 135.0;
    p.d = 4.0;
    p.rho = 12.0;
    p.s = 1e-5;
    p.T = 1.0;
    p.mu = 0.2;
    p.mode = WeightMode::memory;
    return p;
}

SpaceTimeGrid small_grid() {
    return SpaceTimeGrid(20, 20, 1.0, Interval{0.3, 0.8}, Interval{0.4, 0.7});
}

}  // namespace

TEST_CASE("theta and nu at the reference points") {
    WeightParams p = theory_params();
    const WeightValues w_mid = evaluate_weights(p, 0.5, 0.5);
    CHECK(w_mid.theta == doctest::Approx(64.0).epsilon(1e-14));
    // nu frozen at theta(T/2) on [0, T/2]
    const WeightValues w_q = evaluate_weights(p, 0.25, 0.5);
    CHECK(w_q.nu == doctest::Approx(64.0).epsilon(1e-14));
    CHECK(w_q.theta > w_q.nu);
}

TEST_CASE("psi closed form") {
    WeightParams p = theory_params();
    p.cfrak = 2.0;
    p.d = 4.0;
    CHECK(evaluate_weights(p, 0.5, 1.0).psi == doctest::Approx(-6.0).epsilon(1e-15));
    CHECK(evaluate_weights(p, 0.5, 0.0).psi == doctest::Approx(-8.0).epsilon(1e-15));
}

TEST_CASE("Psi at the sigma maximum") {
    WeightParams p = theory_params();
    // sigma = x(1-x) peaks at 1/2 with value 1/4; rho*sigma = 3 there
    const double expected = std::exp(3.0) - std::exp(6.0);
    CHECK(evaluate_weights(p, 0.5, 0.5).Psi ==
          doctest::Approx(expected).epsilon(1e-14));
    CHECK(expected == doctest::Approx(-383.343256569547).epsilon(1e-12));
}

TEST_CASE("log-space contract") {
    WeightParams p = theory_params();
    const WeightValues w = evaluate_weights(p, 0.75, 0.25);
    CHECK(w.log_e2s_phi_tilde == doctest::Approx(2.0 * p.s * w.phi_tilde));
    CHECK(w.log_e2s_Phi_tilde == doctest::Approx(2.0 * p.s * w.Phi_tilde));
}

TEST_CASE("domain errors at the time endpoints") {
    WeightParams p = theory_params();
    CHECK_THROWS_AS(evaluate_weights(p, 0.0, 0.5), std::domain_error);
    CHECK_THROWS_AS(evaluate_weights(p, 1.0, 0.5), std::domain_error);
    CHECK_THROWS_AS(evaluate_weights(p, 0.5, 1.5), std::domain_error);
}

TEST_CASE("extremal weights: closed forms against grid extremization") {
    WeightParams p = theory_params();
    // checkphi(0) = -nu(0) cfrak d = -64*540
    const ExtremalWeights e0 = extremal_weights(p, 0.0);
    CHECK(e0.checkphi == doctest::Approx(-34560.0).epsilon(1e-13));
    const double hatPhi_expect = 64.0 * (std::exp(3.0) - std::exp(6.0));
    CHECK(e0.hatPhi == doctest::Approx(hatPhi_expect).epsilon(1e-13));
    // grid extremization oracle
    double grid_min = std::numeric_limits<double>::infinity();
    double grid_maxPhi = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 20000; ++i) {
        const double x = i / 20000.0;
        grid_min = std::min(grid_min, p.nu(0.0) * p.psi(x));
        grid_maxPhi = std::max(grid_maxPhi, p.nu(0.0) * p.Psi(x));
    }
    CHECK(e0.checkphi == doctest::Approx(grid_min).epsilon(1e-9));
    CHECK(e0.hatPhi == doctest::Approx(grid_maxPhi).epsilon(1e-9));
    CHECK(extremal_grid_deviation(p, 0.0, 5000) <= 1e-9);

    // nu constant on [0, T/2]
    const ExtremalWeights e_half = extremal_weights(p, 0.5);
    const ExtremalWeights e_quarter = extremal_weights(p, 0.25);
    CHECK(e_half.hatPhi == e_quarter.hatPhi);
    CHECK(e_half.checkphi == e_quarter.checkphi);
    CHECK(e_half.hatphi == e_quarter.hatphi);
}

TEST_CASE("validate_params: shipped theory-mode set passes with the quoted margin") {
    WeightParams p = theory_params();
    const ValidationReport r = validate_params(p);
    for (const auto& c : r.checks) {
        INFO(c.name, ": ", c.detail);
        CHECK(c.passed);
    }
    // gap margin against an independent scalar evaluation
    const double nu0 = std::pow(4.0, 3.0);
    const double theta58 = std::pow(1.0 / (0.625 * 0.375), 3.0);
    const double gap_oracle =
        2.0 * nu0 * (std::exp(3.0) - std::exp(6.0)) + theta58 * 135.0 * 4.0;
    const ConstraintCheck* gc = r.find("gap_condition");
    REQUIRE(gc != nullptr);
    CHECK(-gc->margin == doctest::Approx(gap_oracle).epsilon(1e-6));
    CHECK(gap_oracle < 0.0);
}

TEST_CASE("validate_params: single-constraint mutations fail by name") {
    SUBCASE("k = 2 violates the memory k-range") {
        WeightParams p = theory_params();
        p.gamma = 2.0;  // k = 1 + 2/gamma = 2
        p.k = 2.0;
        const ValidationReport r = validate_params(p);
        const ConstraintCheck* c = r.find("k_range_memory");
        REQUIRE(c != nullptr);
        CHECK_FALSE(c->passed);
    }
    SUBCASE("d = 3 violates d > 3") {
        WeightParams p = theory_params();
        p.d = 3.0;
        const ValidationReport r = validate_params(p);
        const ConstraintCheck* c = r.find("d_gt_3");
        REQUIRE(c != nullptr);
        CHECK_FALSE(c->passed);
    }
    SUBCASE("cfrak outside the admissible interval") {
        for (double cf : {134.0, 137.0}) {
            WeightParams p = theory_params();
            p.cfrak = cf;
            const ValidationReport r = validate_params(p);
            const ConstraintCheck* c = r.find("cfrak_interval_memory");
            REQUIRE(c != nullptr);
            CHECK_FALSE(c->passed);
        }
    }
    SUBCASE("rho = 4 empties the interval") {
        WeightParams p = theory_params();
        p.rho = 4.0;
        const ValidationReport r = validate_params(p);
        const ConstraintCheck* c = r.find("cfrak_interval_memory");
        REQUIRE(c != nullptr);
        CHECK_FALSE(c->passed);
    }
    SUBCASE("mu = 0.3 violates the Hardy bound") {
        WeightParams p = theory_params();
        p.mu = 0.3;
        const ValidationReport r = validate_params(p);
        const ConstraintCheck* c = r.find("mu_le_quarter");
        REQUIRE(c != nullptr);
        CHECK_FALSE(c->passed);
    }
}

TEST_CASE("cfrak_interval endpoints and emptiness") {
    const auto iv = cfrak_interval(12.0, 0.25, 4.0);
    REQUIRE(iv.has_value());
    const double X = std::exp(3.0);
    CHECK(iv->first == doctest::Approx((X * X - 1.0) / 3.0).epsilon(1e-14));
    CHECK(iv->second ==
          doctest::Approx((16.0 / 15.0) * (X * X - X) / 3.0).epsilon(1e-14));
    CHECK(iv->first == doctest::Approx(134.1429).epsilon(1e-4));
    CHECK(iv->second == doctest::Approx(136.2998).epsilon(1e-4));

    CHECK_FALSE(cfrak_interval(4.0, 0.25, 4.0).has_value());
}

TEST_CASE("cfrak_interval nonemptiness boundary is e^{rho M} = 15") {
    // bisection oracle on rho for the sign change of hi - lo
    const double M = 0.25;
    double lo = 4.0, hi = 16.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (cfrak_interval(mid, M, 4.0).has_value())
            hi = mid;
        else
            lo = mid;
    }
    const double rho_star = 0.5 * (lo + hi);
    CHECK(std::exp(rho_star * M) == doctest::Approx(15.0).epsilon(1e-8));
    // sweep straddling the boundary
    for (double rho = 5.0; rho <= 14.0; rho += 0.5) {
        const bool nonempty = cfrak_interval(rho, M, 4.0).has_value();
        CHECK(nonempty == (std::exp(rho * M) > 15.0));
    }
}

TEST_CASE("kernel admissibility") {
    const SpaceTimeGrid grid = small_grid();
    WeightParams p = theory_params();
    p.s = 1.0;
    CHECK(p.C0() == doctest::Approx(34560.0).epsilon(1e-14));

    SUBCASE("fast-decaying kernel accepted") {
        MemoryKernel k{MemoryKernel::Kind::decay_exp, 1.0, 40000.0, p.T, p.k, {}};
        const auto adm = kernel_admissibility(k, p, grid);
        CHECK(adm.admissible);
        CHECK(adm.log_sup < 0.0);
    }
    SUBCASE("constant kernel rejected with infinite sup") {
        MemoryKernel k{MemoryKernel::Kind::constant, 1.0, 0.0, p.T, p.k, {}};
        const auto adm = kernel_admissibility(k, p, grid);
        CHECK_FALSE(adm.admissible);
        CHECK(std::isinf(adm.log_sup));
    }
    SUBCASE("exact boundary M0 = s C0 accepted, exponents cancel") {
        MemoryKernel k{MemoryKernel::Kind::decay_exp, 1.0, p.s * p.C0(), p.T, p.k, {}};
        const auto adm = kernel_admissibility(k, p, grid);
        CHECK(adm.admissible);
        CHECK(adm.log_sup == 0.0);  // log(amplitude) with amplitude 1
    }
}

TEST_CASE("pointwise weight ordering on a validation grid") {
    WeightParams p = theory_params();
    const std::size_t n = 200;
    for (std::size_t it = 1; it < n; ++it) {
        const double t = p.T * it / static_cast<double>(n);
        for (std::size_t ix = 0; ix <= n; ++ix) {
            const double x = ix / static_cast<double>(n);
            CHECK(p.phi(t, x) <= p.Phi(t, x));
            CHECK(p.phi_tilde(t, x) <= p.Phi_tilde(t, x));
        }
    }
}

TEST_CASE("checkphi(5T/8) bounds phi_tilde from below on (0, 5T/8)") {
    WeightParams p = theory_params();
    const double bound = extremal_weights(p, 5.0 * p.T / 8.0).checkphi;
    for (int it = 1; it < 100; ++it) {
        const double t = 5.0 * p.T / 8.0 * it / 100.0;
        for (int ix = 0; ix <= 100; ++ix) {
            const double x = ix / 100.0;
            CHECK(bound <= p.phi_tilde(t, x) + 1e-9 * std::abs(bound));
        }
    }
}

TEST_CASE("nu is dominated by theta and continuous at T/2") {
    WeightParams p = theory_params();
    for (int it = 1; it < 64; ++it) {
        const double t = p.T * it / 64.0;
        CHECK(p.nu(t) <= p.theta(t) * (1.0 + 1e-14));
    }
    const double eps = 1e-9;
    CHECK(p.nu(p.T / 2.0 - eps) ==
          doctest::Approx(p.nu(p.T / 2.0 + eps)).epsilon(1e-6));
}

TEST_CASE("memory k-range upper endpoint") {
    CHECK(memory_k_upper() ==
          doctest::Approx(std::log(4.0 / 3.0) / std::log(16.0 / 15.0) - 1.0));
    CHECK(memory_k_upper() == doctest::Approx(3.4575).epsilon(1e-4));
}

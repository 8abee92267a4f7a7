#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "singheat/grid.hpp"
#include "singheat/operator.hpp"
#include "singheat/weights.hpp"

namespace singheat {

/// Space-time source/control field: same shape as a Trajectory (nt+1 rows).
using Field = Trajectory;

/// Forward problem data. `f` empty means zero source; kernel optional.
struct PdeProblem {
    double mu = 0.0;
    SpaceTimeGrid grid;
    std::vector<double> y0;
    std::optional<Field> f;
    std::optional<MemoryKernel> kernel;

    PdeProblem(double mu_, SpaceTimeGrid grid_, std::vector<double> y0_)
        : mu(mu_), grid(std::move(grid_)), y0(std::move(y0_)) {}

    double T() const { return grid.T(); }
};

/// Crank-Nicolson time stepper; each output step of size dt is taken as two
/// CN half steps of size dt/2 (the per-step map stays a symmetric rational
/// function of A, so discrete duality is exact).
class HeatStepper {
public:
    HeatStepper(double mu, const SpaceTimeGrid& grid);

    std::size_t nx() const { return nx_; }
    double dt() const { return dt_; }
    const TridiagonalMatrix& matrix() const { return A_; }

    /// (I + (dt/4) A)^{-1} v
    void apply_P(std::span<const double> v, std::span<double> out) const;
    /// half-step map C = (I + (dt/4)A)^{-1}(I - (dt/4)A)
    void apply_C(std::span<const double> v, std::span<double> out) const;
    /// full-step homogeneous map S = C^2
    void apply_S(std::span<const double> v, std::span<double> out) const;
    /// C(P(v))
    void apply_CP(std::span<const double> v, std::span<double> out) const;

    /// One output step with node sources f0 = f(t_n), f1 = f(t_{n+1}).
    void step(std::span<double> y, std::span<const double> f0,
              std::span<const double> f1) const;

private:
    std::size_t nx_;
    double dt_;
    TridiagonalMatrix A_;
    TridiagonalMatrix Mplus_;   // I + (dt/4) A
    TridiagonalMatrix Mminus_;  // I - (dt/4) A
    TridiagonalSolver solver_;
    mutable std::vector<double> tmp_a_, tmp_b_, tmp_c_;
};

struct ForwardResult {
    Trajectory y;
    bool blown_up = false;
    std::size_t blowup_step = 0;
    double max_abs = 0.0;
};

/// Forward solve of y_t - y_xx - mu y/x^2 = f + 1_omega u + memory, Dirichlet BCs.
/// The memory term is evaluated explicitly from already computed history.
/// Controls are masked to omega. Overflow ends the run with a blow-up report.
ForwardResult forward_solve(const PdeProblem& prob, const Field* u = nullptr);

/// Backward adjoint solve of -z_t - z_xx - mu z/x^2 = g from terminal data zT.
/// Exact discrete dual of forward_solve's homogeneous part.
Trajectory adjoint_solve(const Field* g, std::span<const double> zT, double mu,
                         const SpaceTimeGrid& grid);

struct EnergyReport {
    double lhs = 0.0;       // sup_n |y|^2 + sum of midpoint mu-norms^2 dt
    double rhs_data = 0.0;  // |y0|^2 + |f|^2_{L2(Q)}
    double ratio = 0.0;
    bool zero_data_violation = false;
};

/// Check the a-priori energy estimate on a trajectory produced with u = 0.
EnergyReport energy_check(const Trajectory& traj, const PdeProblem& prob);

}  // namespace singheat

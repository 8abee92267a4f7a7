#include "singheat/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace singheat {

namespace {

TridiagonalMatrix shifted(const TridiagonalMatrix& A, double scale) {
    TridiagonalMatrix m;
    const std::size_t n = A.size();
    m.diag.resize(n);
    m.off.resize(n - 1);
    for (std::size_t i = 0; i < n; ++i) m.diag[i] = 1.0 + scale * A.diag[i];
    for (std::size_t i = 0; i + 1 < n; ++i) m.off[i] = scale * A.off[i];
    return m;
}

constexpr double kBlowupThreshold = 1e100;

}  // namespace

HeatStepper::HeatStepper(double mu, const SpaceTimeGrid& grid)
    : nx_(grid.nx()),
      dt_(grid.dt()),
      A_(assemble_operator(mu, grid)),
      Mplus_(shifted(A_, dt_ / 4.0)),
      Mminus_(shifted(A_, -dt_ / 4.0)),
      solver_(Mplus_),
      tmp_a_(nx_),
      tmp_b_(nx_),
      tmp_c_(nx_) {}

void HeatStepper::apply_P(std::span<const double> v, std::span<double> out) const {
    solver_.solve(v, out);
}

void HeatStepper::apply_C(std::span<const double> v, std::span<double> out) const {
    Mminus_.apply(v, tmp_a_);
    solver_.solve(tmp_a_, out);
}

void HeatStepper::apply_S(std::span<const double> v, std::span<double> out) const {
    apply_C(v, tmp_b_);
    apply_C(tmp_b_, out);
}

void HeatStepper::apply_CP(std::span<const double> v, std::span<double> out) const {
    solver_.solve(v, tmp_c_);
    apply_C(tmp_c_, out);
}

void HeatStepper::step(std::span<double> y, std::span<const double> f0,
                       std::span<const double> f1) const {
    const double tau = dt_ / 2.0;
    std::vector<double> fmid(nx_), rhs(nx_);
    // first half step, source at t_n + dt/4
    for (std::size_t i = 0; i < nx_; ++i) fmid[i] = 0.75 * f0[i] + 0.25 * f1[i];
    Mminus_.apply(y, rhs);
    for (std::size_t i = 0; i < nx_; ++i) rhs[i] += tau * fmid[i];
    solver_.solve(rhs, y);
    // second half step, source at t_n + 3 dt/4
    for (std::size_t i = 0; i < nx_; ++i) fmid[i] = 0.25 * f0[i] + 0.75 * f1[i];
    Mminus_.apply(y, rhs);
    for (std::size_t i = 0; i < nx_; ++i) rhs[i] += tau * fmid[i];
    solver_.solve(rhs, y);
}

ForwardResult forward_solve(const PdeProblem& prob, const Field* u) {
    const SpaceTimeGrid& g = prob.grid;
    const std::size_t nx = g.nx();
    const std::size_t nt = g.nt();
    if (prob.y0.size() != nx)
        throw std::invalid_argument("forward_solve: y0 size mismatch");

    HeatStepper st(prob.mu, g);
    const std::vector<double> mask = g.omega_mask();
    const std::vector<double> xs = g.nodes();

    ForwardResult res;
    res.y = Trajectory(g, "state y");
    std::copy(prob.y0.begin(), prob.y0.end(), res.y.row(0).begin());

    std::vector<double> f0(nx), f1(nx), y(prob.y0);
    for (std::size_t n = 0; n < nt; ++n) {
        std::fill(f0.begin(), f0.end(), 0.0);
        std::fill(f1.begin(), f1.end(), 0.0);
        if (prob.f) {
            auto a = prob.f->row(n);
            auto b = prob.f->row(n + 1);
            for (std::size_t i = 0; i < nx; ++i) {
                f0[i] += a[i];
                f1[i] += b[i];
            }
        }
        if (u) {
            auto a = u->row(n);
            auto b = u->row(n + 1);
            for (std::size_t i = 0; i < nx; ++i) {
                f0[i] += mask[i] * a[i];
                f1[i] += mask[i] * b[i];
            }
        }
        if (prob.kernel) {
            // lagged memory: integral over [0, t_n] of a(t_n, s, x) y(s, x) ds,
            // held constant across the step
            std::vector<double> mem =
                memory_quadrature(*prob.kernel, res.y, n, g.dt(), xs);
            for (std::size_t i = 0; i < nx; ++i) {
                f0[i] += mem[i];
                f1[i] += mem[i];
            }
        }
        st.step(y, f0, f1);
        double m = 0.0;
        bool finite = true;
        for (double v : y) {
            if (!std::isfinite(v)) finite = false;
            m = std::max(m, std::abs(v));
        }
        res.max_abs = std::max(res.max_abs, m);
        if (!finite || m > kBlowupThreshold) {
            res.blown_up = true;
            res.blowup_step = n + 1;
            return res;
        }
        std::copy(y.begin(), y.end(), res.y.row(n + 1).begin());
    }
    return res;
}

Trajectory adjoint_solve(const Field* g, std::span<const double> zT, double mu,
                         const SpaceTimeGrid& grid) {
    const std::size_t nx = grid.nx();
    const std::size_t nt = grid.nt();
    if (zT.size() != nx) throw std::invalid_argument("adjoint_solve: zT size mismatch");

    HeatStepper st(mu, grid);
    Trajectory z(grid, "adjoint z");
    std::copy(zT.begin(), zT.end(), z.row(nt).begin());

    std::vector<double> cur(zT.begin(), zT.end());
    std::vector<double> g0(nx, 0.0), g1(nx, 0.0);
    for (std::size_t n = nt; n-- > 0;) {
        // backward step from t_{n+1} to t_n; time-reversed sources
        if (g) {
            auto a = g->row(n + 1);
            auto b = g->row(n);
            for (std::size_t i = 0; i < nx; ++i) {
                g0[i] = a[i];
                g1[i] = b[i];
            }
        }
        st.step(cur, g0, g1);
        for (double v : cur)
            if (!std::isfinite(v))
                throw std::runtime_error("adjoint_solve: overflow in backward sweep");
        std::copy(cur.begin(), cur.end(), z.row(n).begin());
    }
    return z;
}

EnergyReport energy_check(const Trajectory& traj, const PdeProblem& prob) {
    const SpaceTimeGrid& g = prob.grid;
    const std::size_t nx = g.nx();
    const std::size_t nt = g.nt();
    const double h = g.h();
    const double dt = g.dt();

    EnergyReport rep;
    double sup = 0.0;
    for (std::size_t n = 0; n <= nt; ++n) {
        double s = 0.0;
        for (double v : traj.row(n)) s += v * v;
        sup = std::max(sup, s * h);
    }
    // mu-norms at time midpoints (the discrete energy identity of the scheme)
    double mun = 0.0;
    std::vector<double> mid(nx);
    for (std::size_t n = 0; n < nt; ++n) {
        auto a = traj.row(n);
        auto b = traj.row(n + 1);
        for (std::size_t i = 0; i < nx; ++i) mid[i] = 0.5 * (a[i] + b[i]);
        double grad = 0.0, hardy = 0.0;
        for (std::size_t i = 0; i < nx; ++i) {
            const double prev = (i == 0) ? 0.0 : mid[i - 1];
            const double dq = (mid[i] - prev) / h;
            grad += dq * dq;
            const double x = g.x(i);
            hardy += mid[i] * mid[i] / (x * x);
        }
        const double dq_last = (0.0 - mid[nx - 1]) / h;
        grad += dq_last * dq_last;
        mun += (grad - prob.mu * hardy) * h * dt;
    }
    rep.lhs = sup + mun;

    double y0n = 0.0;
    for (double v : prob.y0) y0n += v * v;
    double fn = 0.0;
    if (prob.f) fn = l2_norm_qt(*prob.f, dt, h);
    rep.rhs_data = y0n * h + fn * fn;
    if (rep.rhs_data > 0.0) {
        rep.ratio = rep.lhs / rep.rhs_data;
    } else {
        rep.ratio = 0.0;
        rep.zero_data_violation = rep.lhs > 1e-12;
    }
    return rep;
}

}  // namespace singheat

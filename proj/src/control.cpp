#include "singheat/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "singheat/logsum.hpp"

namespace singheat {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// log of rho(t_n, x_i) = s^3 nu^3 e^{2 s Phi_tilde} for the paper observation
/// weight; -inf at t = T where the exponential wins over nu^3.
double log_paper_rho(const WeightParams& p, double t, double x) {
    if (t >= p.T) return -std::numeric_limits<double>::infinity();
    const double nu = p.nu(t);
    return 3.0 * std::log(p.s * nu) + 2.0 * p.s * nu * p.Psi(x);
}

struct ObservationField {
    std::vector<double> rho;  // (nt+1) x nx, normalized so max = 1
};

ObservationField build_rho(const PdeProblem& prob, const HumOptions& opts) {
    const SpaceTimeGrid& g = prob.grid;
    const std::size_t nx = g.nx();
    const std::size_t nt = g.nt();
    ObservationField f;
    f.rho.assign((nt + 1) * nx, 1.0);
    if (opts.weight_mode == ObservationWeight::uniform) return f;
    if (!opts.weights)
        throw std::invalid_argument("penalized_hum: paper weights requested but no "
                                    "WeightParams supplied");
    const WeightParams& p = *opts.weights;
    std::vector<double> lg((nt + 1) * nx);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n <= nt; ++n)
        for (std::size_t i = 0; i < nx; ++i) {
            const double v = log_paper_rho(p, g.t(n), g.x(i));
            lg[n * nx + i] = v;
            mx = std::max(mx, v);
        }
    for (std::size_t j = 0; j < lg.size(); ++j)
        f.rho[j] = std::exp(lg[j] - mx);  // underflow to 0 is fine
    return f;
}

/// Adjoint rows z^j = S^{nt-j} zT, homogeneous backward sweep.
void free_adjoint_rows(const HeatStepper& st, std::span<const double> zT,
                       Trajectory& z) {
    const std::size_t nt = z.nt();
    std::copy(zT.begin(), zT.end(), z.row(nt).begin());
    std::vector<double> cur(zT.begin(), zT.end()), nxt(cur.size());
    for (std::size_t j = nt; j-- > 0;) {
        st.apply_S(cur, nxt);
        std::copy(nxt.begin(), nxt.end(), z.row(j).begin());
        cur.swap(nxt);
    }
}

/// Exact transpose of the control-to-terminal-state map applied to zT,
/// expressed as per-node observation fields:
///   xi^j = tau (0.75 CP + 0.25 P) z^{j+1}  (j <= nt-1)
///        + tau (0.25 CP + 0.75 P) z^j      (j >= 1),   tau = dt/2.
void observation_fields(const HeatStepper& st, const Trajectory& z, Field& xi) {
    const std::size_t nt = z.nt();
    const std::size_t nx = z.nx();
    const double tau = st.dt() / 2.0;
    std::vector<double> cp(nx), pp(nx);
    for (std::size_t j = 0; j <= nt; ++j) {
        auto out = xi.row(j);
        std::fill(out.begin(), out.end(), 0.0);
        if (j <= nt - 1) {
            st.apply_CP(z.row(j + 1), cp);
            st.apply_P(z.row(j + 1), pp);
            for (std::size_t i = 0; i < nx; ++i)
                out[i] += tau * (0.75 * cp[i] + 0.25 * pp[i]);
        }
        if (j >= 1) {
            st.apply_CP(z.row(j), cp);
            st.apply_P(z.row(j), pp);
            for (std::size_t i = 0; i < nx; ++i)
                out[i] += tau * (0.25 * cp[i] + 0.75 * pp[i]);
        }
    }
}

/// Forward sweep of the controlled terminal state for a pure source field.
std::vector<double> source_to_terminal(const HeatStepper& st, const Field& F) {
    const std::size_t nt = F.nt();
    const std::size_t nx = F.nx();
    std::vector<double> y(nx, 0.0);
    for (std::size_t n = 0; n < nt; ++n) st.step(y, F.row(n), F.row(n + 1));
    return y;
}

}  // namespace

ControlResult penalized_hum(const PdeProblem& prob, const HumOptions& opts) {
    if (opts.epsilon <= 0.0)
        throw std::invalid_argument("penalized_hum: epsilon must be positive");
    if (prob.kernel)
        throw std::invalid_argument(
            "penalized_hum: memory must be folded into the source by the caller");
    const SpaceTimeGrid& g = prob.grid;
    const std::size_t nx = g.nx();
    const std::size_t nt = g.nt();
    const double h = g.h();
    const double dt = g.dt();

    HeatStepper st(prob.mu, g);
    const std::vector<double> mask = g.omega_mask();
    const ObservationField obs = build_rho(prob, opts);

    // D_j = rho_j 1_omega / (dt w_j), trapezoid w
    auto dweight = [&](std::size_t n, std::size_t i) {
        const double w = (n == 0 || n == nt) ? 0.5 : 1.0;
        return obs.rho[n * nx + i] * mask[i] / (dt * w);
    };

    Trajectory z(g, "adjoint");
    Field xi(g, "obs");
    Field u(g, "control u");
    auto apply_lambda = [&](std::span<const double> zT, std::span<double> out) {
        free_adjoint_rows(st, zT, z);
        observation_fields(st, z, xi);
        for (std::size_t n = 0; n <= nt; ++n) {
            auto r = u.row(n);
            auto s = xi.row(n);
            for (std::size_t i = 0; i < nx; ++i) r[i] = dweight(n, i) * s[i];
        }
        const std::vector<double> yT = source_to_terminal(st, u);
        std::copy(yT.begin(), yT.end(), out.begin());
    };

    ControlResult res;
    res.initial_norm = l2_norm(prob.y0, h);

    // free terminal state
    ForwardResult freef = forward_solve(prob, nullptr);
    if (freef.blown_up)
        throw std::runtime_error("penalized_hum: free dynamics blew up at step " +
                                 std::to_string(freef.blowup_step));
    std::vector<double> rhs(nx);
    {
        auto yT = freef.y.row(nt);
        for (std::size_t i = 0; i < nx; ++i) rhs[i] = -yT[i];
    }

    // CG on (Lambda + eps I) zT = -y_f(T)
    std::vector<double> zT(nx, 0.0), r(rhs), p(rhs), Ap(nx);
    double rs = dot(r, r);
    const double n0 = std::sqrt(rs);
    std::size_t it = 0;
    std::vector<double> hist;
    bool stagnated = false;
    if (n0 > 0.0) {
        while (std::sqrt(rs) > opts.cg_tol * n0 && it < opts.cg_max) {
            apply_lambda(p, Ap);
            for (std::size_t i = 0; i < nx; ++i) Ap[i] += opts.epsilon * p[i];
            const double pAp = dot(p, Ap);
            if (pAp <= 0.0) {
                stagnated = true;
                break;
            }
            const double al = rs / pAp;
            for (std::size_t i = 0; i < nx; ++i) {
                zT[i] += al * p[i];
                r[i] -= al * Ap[i];
            }
            const double rsn = dot(r, r);
            const double beta = rsn / rs;
            for (std::size_t i = 0; i < nx; ++i) p[i] = r[i] + beta * p[i];
            rs = rsn;
            ++it;
            hist.push_back(std::sqrt(rs));
            if (hist.size() > 50) {
                const double then = hist[hist.size() - 51];
                if (hist.back() > then * (1.0 - 1e-12)) {
                    stagnated = true;
                    break;
                }
            }
        }
    }
    res.cg_iterations = it;
    res.residual = (n0 > 0.0) ? std::sqrt(rs) / n0 : 0.0;
    if (stagnated || (n0 > 0.0 && std::sqrt(rs) > opts.cg_tol * n0)) {
        res.converged = false;
        res.message = stagnated ? "CG stagnation (residual reduction < 1e-12 per 50 steps)"
                                : "CG iteration cap reached";
    }

    // control and controlled trajectory through the same discrete maps
    free_adjoint_rows(st, zT, z);
    observation_fields(st, z, xi);
    res.u = Field(g, "control u");
    for (std::size_t n = 0; n <= nt; ++n) {
        auto r2 = res.u.row(n);
        auto s2 = xi.row(n);
        for (std::size_t i = 0; i < nx; ++i) r2[i] = dweight(n, i) * s2[i];
    }
    ForwardResult ctrl = forward_solve(prob, &res.u);
    if (ctrl.blown_up)
        throw std::runtime_error("penalized_hum: controlled dynamics blew up");
    res.y = std::move(ctrl.y);
    res.terminal_norm = l2_norm(res.y.row(nt), h);

    // functional value: uniform -> plain L2 cost; paper -> log-space J
    LogSumExp cost;
    for (std::size_t n = 0; n < nt; ++n) {  // window excludes t = T
        const double w = (n == 0) ? 0.5 : 1.0;
        for (std::size_t i = 0; i < nx; ++i) {
            const double q = w * dt * h;
            const double yv = res.y.at(n, i);
            const double uv = res.u.at(n, i);
            if (opts.weight_mode == ObservationWeight::uniform) {
                cost.add(0.0, q * (yv * yv + uv * uv));
            } else {
                const WeightParams& pw = *opts.weights;
                const double t = g.t(n);
                const double lw = -2.0 * pw.s * pw.Phi_tilde(t, g.x(i));
                const double nu = pw.nu(t);
                cost.add(lw, q * yv * yv);
                cost.add(lw - 3.0 * std::log(pw.s * nu), q * uv * uv);
            }
        }
    }
    res.weighted_cost_log = cost.log_value();
    return res;
}

// ---------------------------------------------------------------------------
// weighted variational control (space-time normal system)
// ---------------------------------------------------------------------------

namespace {

using real_t = long double;

struct DenseLU {
    std::size_t n = 0;
    std::vector<real_t> a;      // row-major, factored in place
    std::vector<std::size_t> piv;

    void factor(std::vector<real_t> m, std::size_t dim) {
        n = dim;
        a = std::move(m);
        piv.resize(n);
        for (std::size_t i = 0; i < n; ++i) piv[i] = i;
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t pr = k;
            real_t best = std::abs(a[k * n + k]);
            for (std::size_t i = k + 1; i < n; ++i) {
                const real_t v = std::abs(a[i * n + k]);
                if (v > best) {
                    best = v;
                    pr = i;
                }
            }
            if (best == 0.0)
                throw std::runtime_error("variational solve: singular diagonal block");
            if (pr != k) {
                for (std::size_t j = 0; j < n; ++j)
                    std::swap(a[k * n + j], a[pr * n + j]);
                std::swap(piv[k], piv[pr]);
            }
            const real_t pivot = a[k * n + k];
            for (std::size_t i = k + 1; i < n; ++i) {
                const real_t f = a[i * n + k] / pivot;
                a[i * n + k] = f;
                for (std::size_t j = k + 1; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
            }
        }
    }

    void solve(const real_t* b, real_t* out) const {
        std::vector<real_t> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = b[piv[i]];
        for (std::size_t i = 1; i < n; ++i)
            for (std::size_t j = 0; j < i; ++j) y[i] -= a[i * n + j] * y[j];
        for (std::size_t i = n; i-- > 0;) {
            for (std::size_t j = i + 1; j < n; ++j) y[i] -= a[i * n + j] * y[j];
            y[i] /= a[i * n + i];
        }
        for (std::size_t i = 0; i < n; ++i) out[i] = y[i];
    }
};

std::vector<real_t> mat_mul(const std::vector<real_t>& A, const std::vector<real_t>& B,
                            std::size_t n) {
    std::vector<real_t> C(n * n, 0.0L);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            const real_t aik = A[i * n + k];
            if (aik == 0.0L) continue;
            for (std::size_t j = 0; j < n; ++j) C[i * n + j] += aik * B[k * n + j];
        }
    return C;
}

// C = A^T diag(w) B
std::vector<real_t> mat_T_diag_mul(const std::vector<real_t>& A,
                                   const std::vector<real_t>& w,
                                   const std::vector<real_t>& B, std::size_t n) {
    std::vector<real_t> C(n * n, 0.0L);
    for (std::size_t k = 0; k < n; ++k) {
        const real_t wk = w[k];
        if (wk == 0.0L) continue;
        for (std::size_t i = 0; i < n; ++i) {
            const real_t aki = A[k * n + i];
            if (aki == 0.0L) continue;
            const real_t f = wk * aki;
            for (std::size_t j = 0; j < n; ++j) C[i * n + j] += f * B[k * n + j];
        }
    }
    return C;
}

void block_apply(const std::vector<real_t>& M, const real_t* v, real_t* out,
                 std::size_t n, bool transpose = false, bool accumulate = false) {
    for (std::size_t i = 0; i < n; ++i) {
        real_t s = accumulate ? out[i] : 0.0L;
        for (std::size_t j = 0; j < n; ++j)
            s += (transpose ? M[j * n + i] : M[i * n + j]) * v[j];
        out[i] = s;
    }
}

}  // namespace

double suggest_variational_s(const WeightParams& p, const SpaceTimeGrid& grid,
                             double target_nats) {
    const std::size_t nt = grid.nt();
    const double dt = grid.dt();
    const double Psimax = std::exp(p.rho * p.sigma.sigma_max()) -
                          std::exp(2.0 * p.rho * p.sigma.sigma_max());
    double J = 0.0;
    for (std::size_t n = 0; n < nt; ++n) {
        const double cn = p.nu(static_cast<double>(n) * dt) * Psimax;
        const double ch = p.nu((static_cast<double>(n) + 0.5) * dt) * Psimax;
        J = std::max(J, std::abs(ch - cn));
        if (n + 1 < nt)
            J = std::max(J, std::abs(ch - p.nu(static_cast<double>(n + 1) * dt) * Psimax));
    }
    if (J <= 0.0) return p.s;
    return target_nats / J;
}

ControlResult weighted_variational_control(const PdeProblem& prob, const WeightParams& p,
                                           const VariationalOptions& opts) {
    const SpaceTimeGrid& g = prob.grid;
    const std::size_t nx = g.nx();
    const std::size_t nt = g.nt();
    if (nt * nx > 20000)
        throw std::invalid_argument(
            "weighted_variational_control: nt*nx exceeds the tractable cap 20000");
    if (prob.kernel)
        throw std::invalid_argument(
            "weighted_variational_control: memory must be folded into the source");
    const double h = g.h();
    const double dt = g.dt();
    const double s = p.s;

    // per-level conjugation scalars c(t) = nu(t) * max Psi
    const double M = p.sigma.sigma_max();
    const double Psimax = std::exp(p.rho * M) - std::exp(2.0 * p.rho * M);
    std::vector<double> cn(nt), ch(nt), nun(nt);
    for (std::size_t n = 0; n < nt; ++n) {
        nun[n] = p.nu(static_cast<double>(n) * dt);
        cn[n] = nun[n] * Psimax;
        ch[n] = p.nu((static_cast<double>(n) + 0.5) * dt) * Psimax;
    }

    // feasibility: local jump exponents and rhs scaling exponents
    double jump = 0.0;
    for (std::size_t n = 0; n < nt; ++n) {
        jump = std::max(jump, std::abs(s * (ch[n] - cn[n])));
        if (n + 1 < nt) jump = std::max(jump, std::abs(s * (ch[n] - cn[n + 1])));
    }
    if (jump > opts.cap_nats) {
        std::ostringstream os;
        os << "weighted_variational_control: weight dynamic range infeasible "
              "(local jump "
           << jump << " nats exceeds cap " << opts.cap_nats
           << "); reduce s (suggested s <= "
           << s * opts.cap_nats / jump << ") or coarsen the grid";
        throw InfeasibleWeightsError(os.str());
    }
    for (std::size_t n = 0; n < nt; ++n)
        if (std::abs(s * cn[n]) > 690.0) {
            bool has_data = n == 0;
            if (prob.f) {
                for (double v : prob.f->row(n))
                    if (v != 0.0) has_data = true;
            }
            if (has_data)
                throw InfeasibleWeightsError(
                    "weighted_variational_control: rhs scaling e^{-s c(t)} overflows; "
                    "reduce s or coarsen the grid");
        }

    // dense long-double blocks
    const std::vector<double> mask = g.omega_mask();
    std::vector<real_t> Amat(nx * nx, 0.0L);
    for (std::size_t i = 0; i < nx; ++i) {
        const real_t x = static_cast<real_t>(g.x(i));
        Amat[i * nx + i] = 2.0L / (static_cast<real_t>(h) * h) -
                           static_cast<real_t>(prob.mu) / (x * x);
        if (i > 0) Amat[i * nx + i - 1] = -1.0L / (static_cast<real_t>(h) * h);
        if (i + 1 < nx) Amat[i * nx + i + 1] = -1.0L / (static_cast<real_t>(h) * h);
    }
    std::vector<real_t> Dblk(nx * nx), Oblk(nx * nx);
    for (std::size_t i = 0; i < nx * nx; ++i) {
        Dblk[i] = Amat[i] / 2.0L;
        Oblk[i] = Amat[i] / 2.0L;
    }
    for (std::size_t i = 0; i < nx; ++i) {
        Dblk[i * nx + i] += 1.0L / static_cast<real_t>(dt);
        Oblk[i * nx + i] -= 1.0L / static_cast<real_t>(dt);
    }

    // half-node weights What_n(i) = exp(2 s nu(t_{n+1/2}) (Psi(x_i) - Psimax))
    std::vector<real_t> What(nt * nx), Om2(nt * nx);
    std::vector<real_t> ea(nt), eb(nt, 0.0L);
    for (std::size_t n = 0; n < nt; ++n) {
        const double nuh = p.nu((static_cast<double>(n) + 0.5) * dt);
        ea[n] = std::exp(static_cast<real_t>(s * (ch[n] - cn[n])));
        if (n + 1 < nt) eb[n] = std::exp(static_cast<real_t>(s * (ch[n] - cn[n + 1])));
        for (std::size_t i = 0; i < nx; ++i) {
            const double Psix = p.Psi(g.x(i));
            What[n * nx + i] =
                std::exp(static_cast<real_t>(2.0 * s * nuh * (Psix - Psimax)));
            Om2[n * nx + i] = mask[i] == 0.0
                                  ? 0.0L
                                  : std::pow(static_cast<real_t>(s * nun[n]), 3.0L) *
                                        std::exp(static_cast<real_t>(
                                            2.0 * s * nun[n] * (Psix - Psimax)));
        }
    }

    // block tridiagonal M: MD[n] diag blocks, MUp[n] super blocks (n, n+1)
    const real_t qscale = static_cast<real_t>(dt) * static_cast<real_t>(h);
    std::vector<std::vector<real_t>> MD(nt), MUp(nt > 0 ? nt - 1 : 0);
    for (std::size_t n = 0; n < nt; ++n) {
        std::vector<real_t> w(nx);
        for (std::size_t i = 0; i < nx; ++i) w[i] = ea[n] * ea[n] * What[n * nx + i];
        MD[n] = mat_T_diag_mul(Dblk, w, Dblk, nx);
        if (n > 0) {
            for (std::size_t i = 0; i < nx; ++i)
                w[i] = eb[n - 1] * eb[n - 1] * What[(n - 1) * nx + i];
            auto extra = mat_T_diag_mul(Oblk, w, Oblk, nx);
            for (std::size_t i = 0; i < nx * nx; ++i) MD[n][i] += extra[i];
        }
        for (std::size_t i = 0; i < nx; ++i) MD[n][i * nx + i] += Om2[n * nx + i];
        for (std::size_t i = 0; i < nx * nx; ++i) MD[n][i] *= qscale;
        if (n + 1 < nt) {
            for (std::size_t i = 0; i < nx; ++i)
                w[i] = ea[n] * eb[n] * What[n * nx + i];
            MUp[n] = mat_T_diag_mul(Dblk, w, Oblk, nx);
            for (std::size_t i = 0; i < nx * nx; ++i) MUp[n][i] *= qscale;
        }
    }

    // rhs: l_m = dt h f_m + h y0 [m = 0], scaled by e^{-s c_m}
    std::vector<real_t> rhs(nt * nx, 0.0L);
    for (std::size_t n = 0; n < nt; ++n) {
        const real_t sc = std::exp(static_cast<real_t>(-s * cn[n]));
        for (std::size_t i = 0; i < nx; ++i) {
            real_t v = 0.0L;
            if (prob.f) v += static_cast<real_t>(prob.f->at(n, i)) * qscale;
            if (n == 0)
                v += static_cast<real_t>(prob.y0[i]) * static_cast<real_t>(h);
            rhs[n * nx + i] = sc * v;
        }
    }

    // block-Thomas LDL^T factorization (preconditioner and direct fallback)
    std::vector<DenseLU> Dlu(nt);
    std::vector<std::vector<real_t>> Lfac(nt > 0 ? nt - 1 : 0);
    {
        std::vector<real_t> cur = MD[0];
        Dlu[0].factor(cur, nx);
        for (std::size_t n = 1; n < nt; ++n) {
            // L_n = MUp_{n-1}^T * D_{n-1}^{-1}: solve D^T X = MUp then transpose;
            // D symmetric here so solve column-wise against MUp columns
            std::vector<real_t> Ln(nx * nx);
            std::vector<real_t> col(nx), sol(nx);
            for (std::size_t j = 0; j < nx; ++j) {
                for (std::size_t i = 0; i < nx; ++i) col[i] = MUp[n - 1][i * nx + j];
                Dlu[n - 1].solve(col.data(), sol.data());
                for (std::size_t i = 0; i < nx; ++i) Ln[j * nx + i] = sol[i];
            }
            Lfac[n - 1] = Ln;
            // D_n = MD_n - L_n * MUp_{n-1}
            std::vector<real_t> prod = mat_mul(Ln, MUp[n - 1], nx);
            std::vector<real_t> cur2 = MD[n];
            for (std::size_t i = 0; i < nx * nx; ++i) cur2[i] -= prod[i];
            Dlu[n].factor(cur2, nx);
        }
    }
    auto precond = [&](const std::vector<real_t>& b, std::vector<real_t>& out) {
        std::vector<real_t> tmp(b);
        std::vector<real_t> lv(nx);
        for (std::size_t n = 1; n < nt; ++n) {
            block_apply(Lfac[n - 1], tmp.data() + (n - 1) * nx, lv.data(), nx);
            for (std::size_t i = 0; i < nx; ++i) tmp[n * nx + i] -= lv[i];
        }
        out.assign(nt * nx, 0.0L);
        Dlu[nt - 1].solve(tmp.data() + (nt - 1) * nx, out.data() + (nt - 1) * nx);
        std::vector<real_t> uv(nx);
        for (std::size_t n = nt - 1; n-- > 0;) {
            block_apply(MUp[n], out.data() + (n + 1) * nx, uv.data(), nx);
            for (std::size_t i = 0; i < nx; ++i) uv[i] = tmp[n * nx + i] - uv[i];
            Dlu[n].solve(uv.data(), out.data() + n * nx);
        }
    };
    auto mop = [&](const std::vector<real_t>& v, std::vector<real_t>& out) {
        out.assign(nt * nx, 0.0L);
        for (std::size_t n = 0; n < nt; ++n) {
            block_apply(MD[n], v.data() + n * nx, out.data() + n * nx, nx, false, true);
            if (n + 1 < nt)
                block_apply(MUp[n], v.data() + (n + 1) * nx, out.data() + n * nx, nx,
                            false, true);
            if (n > 0)
                block_apply(MUp[n - 1], v.data() + (n - 1) * nx, out.data() + n * nx, nx,
                            true, true);
        }
    };

    // preconditioned CG
    std::vector<real_t> zh(nt * nx, 0.0L), r(rhs), zv, pv, Ap;
    real_t bnorm = 0.0L;
    for (real_t v : rhs) bnorm += v * v;
    bnorm = std::sqrt(bnorm);
    std::size_t it = 0;
    bool converged = true;
    std::string message;
    if (bnorm > 0.0L) {
        precond(r, zv);
        pv = zv;
        real_t rz = 0.0L;
        for (std::size_t i = 0; i < r.size(); ++i) rz += r[i] * zv[i];
        real_t rn = bnorm;
        while (rn > static_cast<real_t>(opts.cg_tol) * bnorm && it < opts.cg_max) {
            mop(pv, Ap);
            real_t pAp = 0.0L;
            for (std::size_t i = 0; i < pv.size(); ++i) pAp += pv[i] * Ap[i];
            if (pAp <= 0.0L) {
                converged = false;
                message = "CG breakdown (non-positive curvature)";
                break;
            }
            const real_t al = rz / pAp;
            for (std::size_t i = 0; i < zh.size(); ++i) {
                zh[i] += al * pv[i];
                r[i] -= al * Ap[i];
            }
            precond(r, zv);
            real_t rzn = 0.0L;
            for (std::size_t i = 0; i < r.size(); ++i) rzn += r[i] * zv[i];
            const real_t beta = rzn / rz;
            for (std::size_t i = 0; i < pv.size(); ++i) pv[i] = zv[i] + beta * pv[i];
            rz = rzn;
            rn = 0.0L;
            for (real_t v : r) rn += v * v;
            rn = std::sqrt(rn);
            ++it;
        }
        if (rn > static_cast<real_t>(opts.cg_tol) * bnorm && converged) {
            converged = false;
            message = "CG iteration cap reached";
        }
    }

    // reconstruction
    ControlResult res;
    res.cg_iterations = it;
    res.converged = converged;
    res.message = message;
    res.initial_norm = l2_norm(prob.y0, h);
    {
        real_t rn = 0.0L;
        for (real_t v : r) rn += v * v;
        res.residual = bnorm > 0.0L ? static_cast<double>(std::sqrt(rn) / bnorm) : 0.0;
    }

    res.y = Trajectory(g, "variational state (half-node rows)");
    res.u = Field(g, "variational control");
    std::vector<real_t> Btz(nx), tmp(nx);
    std::vector<std::vector<real_t>> ybar(nt, std::vector<real_t>(nx));
    for (std::size_t n = 0; n < nt; ++n) {
        block_apply(Dblk, zh.data() + n * nx, Btz.data(), nx);
        for (std::size_t i = 0; i < nx; ++i) Btz[i] *= ea[n];
        if (n + 1 < nt) {
            block_apply(Oblk, zh.data() + (n + 1) * nx, tmp.data(), nx);
            for (std::size_t i = 0; i < nx; ++i) Btz[i] += eb[n] * tmp[i];
        }
        const real_t sch = std::exp(static_cast<real_t>(s * ch[n]));
        for (std::size_t i = 0; i < nx; ++i) {
            ybar[n][i] = sch * What[n * nx + i] * Btz[i];
            res.y.at(n, i) = static_cast<double>(ybar[n][i]);
        }
        const real_t scn = std::exp(static_cast<real_t>(s * cn[n]));
        for (std::size_t i = 0; i < nx; ++i)
            res.u.at(n, i) = static_cast<double>(-scn * Om2[n * nx + i] *
                                                 zh[n * nx + i]);
    }
    // row nt: terminal row, weight vanishes at t = T
    res.terminal_norm = l2_norm(res.y.row(nt - 1), h);

    // dynamics residual on rows 1..nt-1 and the initial-condition row
    double rsum = 0.0, fsum = 0.0, usum = 0.0;
    std::vector<real_t> Ay(nx);
    for (std::size_t m = 1; m < nt; ++m) {
        std::vector<real_t> avg(nx);
        for (std::size_t i = 0; i < nx; ++i)
            avg[i] = (ybar[m][i] + ybar[m - 1][i]) / 2.0L;
        block_apply(Amat, avg.data(), Ay.data(), nx);
        for (std::size_t i = 0; i < nx; ++i) {
            real_t rr = (ybar[m][i] - ybar[m - 1][i]) / static_cast<real_t>(dt) + Ay[i];
            rr -= static_cast<real_t>(res.u.at(m, i));
            if (prob.f) rr -= static_cast<real_t>(prob.f->at(m, i));
            rsum += static_cast<double>(rr * rr);
        }
    }
    for (std::size_t n = 0; n < nt; ++n)
        for (std::size_t i = 0; i < nx; ++i) {
            const double uv = res.u.at(n, i);
            usum += uv * uv;
            if (prob.f) {
                const double fv = prob.f->at(n, i);
                fsum += fv * fv;
            }
        }
    const double rnorm = std::sqrt(rsum * dt * h);
    const double scale = std::sqrt(fsum * dt * h) + std::sqrt(usum * dt * h);
    res.dynamics_residual_rel = scale > 0.0 ? rnorm / scale : rnorm;
    {
        std::vector<real_t> ic(nx);
        block_apply(Amat, ybar[0].data(), ic.data(), nx);
        double s2 = 0.0;
        for (std::size_t i = 0; i < nx; ++i) {
            real_t rr = ybar[0][i] / static_cast<real_t>(dt) + ic[i] / 2.0L -
                        static_cast<real_t>(res.u.at(0, i)) -
                        static_cast<real_t>(prob.y0[i]) / static_cast<real_t>(dt);
            if (prob.f) rr -= static_cast<real_t>(prob.f->at(0, i));
            s2 += static_cast<double>(rr * rr);
        }
        res.ic_residual = std::sqrt(s2 * dt * h);
    }

    // weighted cost J = a(z,z) = l(z) in the scaled variables
    {
        real_t lz = 0.0L;
        for (std::size_t i = 0; i < rhs.size(); ++i) lz += rhs[i] * zh[i];
        res.weighted_cost_log = lz > 0.0L ? static_cast<double>(std::log(lz))
                                          : -std::numeric_limits<double>::infinity();
    }
    return res;
}

// ---------------------------------------------------------------------------
// memory fixed point and the two-phase strategy
// ---------------------------------------------------------------------------

namespace {

/// Normalized X_s diff weights on the window t <= T - dt:
/// Wd(n,i) = exp(-s (Phi_tilde(t_n, x_i) - min over window)).
std::vector<double> diff_weights(const WeightParams& p, const SpaceTimeGrid& g) {
    const std::size_t nx = g.nx();
    const std::size_t nt = g.nt();
    std::vector<double> lw(nt * nx);
    double mn = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < nt; ++n)
        for (std::size_t i = 0; i < nx; ++i) {
            const double v = p.Phi_tilde(g.t(n), g.x(i));
            lw[n * nx + i] = v;
            mn = std::min(mn, v);
        }
    std::vector<double> w(nt * nx);
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = std::exp(-p.s * (lw[j] - mn));
    return w;
}

double weighted_diff(const std::vector<double>& wd, const Trajectory& a,
                     const Trajectory& b, const SpaceTimeGrid& g) {
    const std::size_t nx = g.nx();
    const std::size_t nt = g.nt();
    double s = 0.0;
    for (std::size_t n = 0; n < nt; ++n) {
        const double q = (n == 0) ? 0.5 : 1.0;
        auto ra = a.row(n);
        auto rb = b.row(n);
        for (std::size_t i = 0; i < nx; ++i) {
            const double d = wd[n * nx + i] * (ra[i] - rb[i]);
            s += q * d * d;
        }
    }
    return std::sqrt(s * g.dt() * g.h());
}

/// Interpolate half-node rows of the variational reconstruction to time nodes
/// so the Volterra quadrature can consume them.
Trajectory half_to_nodes(const Trajectory& half, const std::vector<double>& y0,
                         const SpaceTimeGrid& g) {
    Trajectory out(g, half.label() + " (node interp)");
    const std::size_t nx = g.nx();
    const std::size_t nt = g.nt();
    for (std::size_t i = 0; i < nx; ++i) out.at(0, i) = y0[i];
    for (std::size_t n = 1; n < nt; ++n)
        for (std::size_t i = 0; i < nx; ++i)
            out.at(n, i) = 0.5 * (half.at(n - 1, i) + half.at(n, i));
    for (std::size_t i = 0; i < nx; ++i) out.at(nt, i) = 0.0;
    return out;
}

}  // namespace

std::pair<ControlResult, FixedPointReport> memory_fixed_point(
    const PdeProblem& prob, const WeightParams& p, const FixedPointOptions& opts) {
    if (!prob.kernel)
        throw std::invalid_argument("memory_fixed_point: problem has no kernel");
    const KernelAdmissibility adm = kernel_admissibility(*prob.kernel, p, prob.grid);
    if (!adm.admissible)
        throw std::invalid_argument(
            "memory_fixed_point: kernel fails the admissibility condition");

    const SpaceTimeGrid& g = prob.grid;
    const std::size_t nx = g.nx();
    const std::size_t nt = g.nt();
    const std::vector<double> xs = g.nodes();
    const std::vector<double> wd = diff_weights(p, g);

    PdeProblem inner(prob.mu, g, prob.y0);  // kernel-free, source folded per iterate
    FixedPointReport rep;
    Trajectory w(g, "picard iterate");  // w^0 = 0
    ControlResult last;
    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        Field f(g, "folded source");
        for (std::size_t n = 0; n <= nt; ++n) {
            std::vector<double> mem = memory_quadrature(*prob.kernel, w, n, g.dt(), xs);
            auto r = f.row(n);
            for (std::size_t i = 0; i < nx; ++i) r[i] = mem[i];
            if (prob.f) {
                auto pf = prob.f->row(n);
                for (std::size_t i = 0; i < nx; ++i) r[i] += pf[i];
            }
        }
        inner.f = std::move(f);
        ControlResult res = (opts.method == ControlMethod::hum)
                                ? penalized_hum(inner, opts.hum)
                                : weighted_variational_control(inner, p,
                                                               opts.variational);
        Trajectory next = (opts.method == ControlMethod::hum)
                              ? res.y
                              : half_to_nodes(res.y, prob.y0, g);
        const double d = weighted_diff(wd, next, w, g);
        rep.diffs.push_back(d);
        rep.iterations = it + 1;
        double wn = 0.0;
        {
            Trajectory zero(g, "zero");
            wn = weighted_diff(wd, next, zero, g);
        }
        rep.R_bound = std::max(rep.R_bound, wn);
        w = std::move(next);
        last = std::move(res);
        if (d <= opts.tol) {
            rep.converged = true;
            break;
        }
    }
    for (std::size_t i = 2; i < rep.diffs.size(); ++i)
        if (rep.diffs[i] > rep.diffs[i - 1]) rep.diffs_monotone_after_first = false;
    if (opts.method == ControlMethod::hum) last.y = w;
    return {std::move(last), rep};
}

ControlResult two_phase_control(const std::vector<double>& y0, const PdeProblem& prob,
                                const WeightParams& p, std::optional<double> t0,
                                const FixedPointOptions& opts,
                                FixedPointReport* report) {
    const SpaceTimeGrid& g = prob.grid;
    const double T = g.T();
    const double t0v = t0.value_or(T / 4.0);
    if (!(t0v > 0.0 && t0v < T / 2.0))
        throw std::invalid_argument("two_phase_control: t0 must lie in (0, T/2)");
    if (!prob.kernel)
        throw std::invalid_argument("two_phase_control: problem has no kernel");

    const std::size_t nt = g.nt();
    std::size_t n0 = static_cast<std::size_t>(std::llround(t0v / g.dt()));
    n0 = std::max<std::size_t>(n0, 2);
    if (static_cast<double>(n0) * g.dt() >= T / 2.0)
        throw std::invalid_argument("two_phase_control: t0 too close to T/2 for this grid");
    const double t0g = static_cast<double>(n0) * g.dt();

    // phase 1: free evolution with memory on [0, t0]
    SpaceTimeGrid g1(g.nx(), n0, t0g, g.omega(), g.omega_prime());
    PdeProblem p1(prob.mu, g1, y0);
    p1.kernel = prob.kernel;  // same global horizon; local time equals global time here
    ForwardResult ph1 = forward_solve(p1, nullptr);
    if (ph1.blown_up)
        throw std::runtime_error("two_phase_control: phase-1 dynamics blew up");
    std::vector<double> wt(ph1.y.row(n0).begin(), ph1.y.row(n0).end());

    // phase 2: controlled memory problem on [t0, T], memory restarted at t0
    const double T2 = T - t0g;
    SpaceTimeGrid g2(g.nx(), nt - n0, T2, g.omega(), g.omega_prime());
    PdeProblem p2(prob.mu, g2, wt);
    p2.kernel = prob.kernel->rebased(t0g);
    WeightParams pw2 = p;
    pw2.T = T2;
    pw2.s = p.s * std::pow(T2 / T, p.k);  // keeps s*C0 invariant
    auto [res2, rep2] = memory_fixed_point(p2, pw2, opts);
    if (report) *report = rep2;

    ControlResult out;
    out.initial_norm = l2_norm(y0, g.h());
    out.cg_iterations = res2.cg_iterations;
    out.residual = res2.residual;
    out.converged = res2.converged && rep2.converged;
    out.message = res2.message;
    out.weighted_cost_log = res2.weighted_cost_log;
    out.y = Trajectory(g, "two-phase state");
    out.u = Field(g, "two-phase control");
    for (std::size_t n = 0; n <= n0; ++n)
        for (std::size_t i = 0; i < g.nx(); ++i) out.y.at(n, i) = ph1.y.at(n, i);
    const Trajectory y2 = (opts.method == ControlMethod::hum)
                              ? res2.y
                              : half_to_nodes(res2.y, wt, g2);
    for (std::size_t n = 1; n <= nt - n0; ++n)
        for (std::size_t i = 0; i < g.nx(); ++i) {
            out.y.at(n0 + n, i) = y2.at(n, i);
            out.u.at(n0 + n, i) = res2.u.at(n, i);
        }
    out.terminal_norm = l2_norm(out.y.row(nt), g.h());
    return out;
}

bool verify_null(const ControlResult& res, double rel_tol) {
    if (res.initial_norm > 0.0) return res.terminal_norm <= rel_tol * res.initial_norm;
    return res.terminal_norm <= rel_tol;
}

}  // namespace singheat

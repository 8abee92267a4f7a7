#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace singheat {

/// Open subinterval of (0,1).
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double x) const { return x > lo && x < hi; }
    bool strictly_inside(const Interval& outer) const {
        return outer.lo < lo && hi < outer.hi;
    }
};

/// Uniform space-time grid on Q = (0,T) x (0,1).
///
/// Interior space nodes x_i = i*h, i = 1..nx, h = 1/(nx+1); the singular
/// point x = 0 is never a node. Time nodes t_n = n*dt, dt = T/nt.
class SpaceTimeGrid {
public:
    SpaceTimeGrid(std::size_t nx, std::size_t nt, double T,
                  Interval omega, Interval omega_prime)
        : nx_(nx), nt_(nt), T_(T), omega_(omega), omega_prime_(omega_prime) {
        if (nx < 3) throw std::invalid_argument("grid: nx must be >= 3");
        if (nt < 2) throw std::invalid_argument("grid: nt must be >= 2");
        if (T <= 0.0) throw std::invalid_argument("grid: T must be positive");
        if (!(0.0 < omega.lo && omega.lo < omega.hi && omega.hi < 1.0))
            throw std::invalid_argument("grid: omega must satisfy 0 < alpha < beta < 1");
        if (!(0.0 < omega_prime.lo && omega_prime.lo < omega_prime.hi && omega_prime.hi < 1.0))
            throw std::invalid_argument("grid: omega' must satisfy 0 < alpha' < beta' < 1");
        if (!omega_prime.strictly_inside(omega))
            throw std::invalid_argument("grid: closure of omega' must lie inside omega");
        h_ = 1.0 / static_cast<double>(nx + 1);
        dt_ = T / static_cast<double>(nt);
    }

    std::size_t nx() const { return nx_; }
    std::size_t nt() const { return nt_; }
    double T() const { return T_; }
    double h() const { return h_; }
    double dt() const { return dt_; }
    const Interval& omega() const { return omega_; }
    const Interval& omega_prime() const { return omega_prime_; }

    double x(std::size_t i) const { return h_ * static_cast<double>(i + 1); }
    double t(std::size_t n) const { return dt_ * static_cast<double>(n); }

    std::vector<double> nodes() const {
        std::vector<double> xs(nx_);
        for (std::size_t i = 0; i < nx_; ++i) xs[i] = x(i);
        return xs;
    }

    std::vector<double> indicator(const Interval& iv) const {
        std::vector<double> m(nx_, 0.0);
        for (std::size_t i = 0; i < nx_; ++i)
            if (iv.contains(x(i))) m[i] = 1.0;
        return m;
    }
    std::vector<double> omega_mask() const { return indicator(omega_); }
    std::vector<double> omega_prime_mask() const { return indicator(omega_prime_); }

private:
    std::size_t nx_;
    std::size_t nt_;
    double T_;
    Interval omega_;
    Interval omega_prime_;
    double h_ = 0.0;
    double dt_ = 0.0;
};

/// Space-time field with one row per time node (nt+1 rows, nx columns).
/// Boundary values at x = 0, 1 are implicit zeros (Dirichlet).
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(const SpaceTimeGrid& grid, std::string label)
        : nx_(grid.nx()), nt_(grid.nt()), label_(std::move(label)),
          values_((grid.nt() + 1) * grid.nx(), 0.0) {}

    std::size_t nx() const { return nx_; }
    std::size_t nt() const { return nt_; }
    const std::string& label() const { return label_; }

    std::span<double> row(std::size_t n) {
        return {values_.data() + n * nx_, nx_};
    }
    std::span<const double> row(std::size_t n) const {
        return {values_.data() + n * nx_, nx_};
    }
    double& at(std::size_t n, std::size_t i) { return values_[n * nx_ + i]; }
    double at(std::size_t n, std::size_t i) const { return values_[n * nx_ + i]; }

    std::vector<double>& data() { return values_; }
    const std::vector<double>& data() const { return values_; }

private:
    std::size_t nx_ = 0;
    std::size_t nt_ = 0;
    std::string label_;
    std::vector<double> values_;
};

/// Discrete L2(0,1) norm of a space vector: sqrt(h * sum v_i^2).
double l2_norm(std::span<const double> v, double h);

/// Discrete L2(Q) norm of a trajectory with trapezoid weights in time.
double l2_norm_qt(const Trajectory& traj, double dt, double h);

}  // namespace singheat

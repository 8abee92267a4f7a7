#include "singheat/grid.hpp"

#include <cmath>

namespace singheat {

double l2_norm(std::span<const double> v, double h) {
    double s = 0.0;
    for (double vi : v) s += vi * vi;
    return std::sqrt(s * h);
}

double l2_norm_qt(const Trajectory& traj, double dt, double h) {
    double s = 0.0;
    const std::size_t nt = traj.nt();
    for (std::size_t n = 0; n <= nt; ++n) {
        const double w = (n == 0 || n == nt) ? 0.5 : 1.0;
        double rs = 0.0;
        for (double v : traj.row(n)) rs += v * v;
        s += w * rs;
    }
    return std::sqrt(s * dt * h);
}

}  // namespace singheat

#pragma once

#include <cmath>
#include <limits>

namespace singheat {

/// Streaming log-sum-exp accumulator for sums of c_i * exp(e_i) with c_i >= 0.
///
/// Keeps the running maximum exponent and a rescaled mantissa so weighted
/// integrals whose weights span thousands of nats stay representable.
class LogSumExp {
public:
    void add(double log_weight, double coeff) {
        if (coeff <= 0.0 || (std::isinf(log_weight) && log_weight < 0.0)) return;
        const double e = log_weight + std::log(coeff);
        add_log(e);
    }

    void add_log(double e) {
        if (std::isnan(e)) return;
        if (e == -std::numeric_limits<double>::infinity()) return;
        if (empty_) {
            max_ = e;
            sum_ = 1.0;
            empty_ = false;
            return;
        }
        if (e <= max_) {
            sum_ += std::exp(e - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - e) + 1.0;
            max_ = e;
        }
    }

    bool empty() const { return empty_; }

    /// log of the accumulated sum; -inf when nothing was added.
    double log_value() const {
        if (empty_) return -std::numeric_limits<double>::infinity();
        return max_ + std::log(sum_);
    }

private:
    bool empty_ = true;
    double max_ = 0.0;
    double sum_ = 0.0;
};

}  // namespace singheat

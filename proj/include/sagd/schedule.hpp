#pragma once

#include "sagd/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace sagd {

/// Discrete variance schedule plus a continuous beta(t) for the ODE limit.
///
/// Arrays are indexed by step t in [1, T]; alpha_bar(0) == 1 by convention.
/// Invariants checked at construction: alpha_bar strictly decreasing, sigma
/// strictly increasing, beta_tilde(1) == 0, sigma^2 == 1 - alpha_bar exactly.
class DiffusionSchedule {
public:
    DiffusionSchedule(std::vector<double> beta, double beta_min_c = 0.1, double beta_max_c = 20.0)
        : beta_(std::move(beta)), beta_min_c_(beta_min_c), beta_max_c_(beta_max_c) {
        const long T = static_cast<long>(beta_.size());
        if (T < 1) throw std::invalid_argument("DiffusionSchedule: T must be >= 1");
        alpha_.resize(T);
        alpha_bar_.resize(T);
        sigma_.resize(T);
        beta_tilde_.resize(T);
        double prod = 1.0;
        for (long i = 0; i < T; ++i) {
            if (!(beta_[i] > 0.0 && beta_[i] < 1.0))
                throw std::invalid_argument("DiffusionSchedule: beta out of (0,1)");
            alpha_[i] = 1.0 - beta_[i];
            double prev_bar = prod;
            prod *= alpha_[i];
            alpha_bar_[i] = prod;
            sigma_[i] = std::sqrt(1.0 - prod);
            beta_tilde_[i] = (1.0 - prev_bar) / (1.0 - prod) * beta_[i];
        }
        for (long i = 1; i < T; ++i) {
            if (!(alpha_bar_[i] < alpha_bar_[i - 1]) || !(sigma_[i] > sigma_[i - 1]))
                throw degenerate_error("DiffusionSchedule: schedule not strictly monotone");
        }
    }

    long steps() const { return static_cast<long>(beta_.size()); }

    double beta(long t) const { return beta_[check(t) - 1]; }
    double alpha(long t) const { return alpha_[check(t) - 1]; }
    double alpha_bar(long t) const {
        if (t == 0) return 1.0;
        return alpha_bar_[check(t) - 1];
    }
    double sigma(long t) const {
        if (t == 0) return 0.0;
        return sigma_[check(t) - 1];
    }
    double beta_tilde(long t) const { return beta_tilde_[check(t) - 1]; }

    // Continuous-time VP coefficients: beta(t) linear in t on [0,1],
    // alpha_bar(t) = exp(-int_0^t beta), sigma(t)^2 = 1 - alpha_bar(t).
    double beta_min_continuous() const { return beta_min_c_; }
    double beta_max_continuous() const { return beta_max_c_; }
    double beta_continuous(double t) const { return beta_min_c_ + (beta_max_c_ - beta_min_c_) * t; }
    double alpha_bar_continuous(double t) const {
        double integral = beta_min_c_ * t + 0.5 * (beta_max_c_ - beta_min_c_) * t * t;
        return std::exp(-integral);
    }
    double sigma_continuous(double t) const { return std::sqrt(1.0 - alpha_bar_continuous(t)); }

private:
    long check(long t) const {
        if (t < 1 || t > steps())
            throw std::invalid_argument("DiffusionSchedule: step index out of [1, T]");
        return t;
    }

    std::vector<double> beta_, alpha_, alpha_bar_, sigma_, beta_tilde_;
    double beta_min_c_, beta_max_c_;
};

/// Linear beta schedule from beta_start to beta_end over T steps.
inline DiffusionSchedule make_schedule(long T, double beta_start = 1e-4, double beta_end = 0.02,
                                       double beta_min_c = 0.1, double beta_max_c = 20.0) {
    if (T < 1) throw std::invalid_argument("make_schedule: T must be >= 1");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
        throw std::invalid_argument("make_schedule: need 0 < beta_start <= beta_end < 1");
    std::vector<double> beta(T);
    for (long i = 0; i < T; ++i) {
        double frac = T > 1 ? static_cast<double>(i) / static_cast<double>(T - 1) : 0.0;
        beta[i] = beta_start + (beta_end - beta_start) * frac;
    }
    return DiffusionSchedule(std::move(beta), beta_min_c, beta_max_c);
}

} // namespace sagd

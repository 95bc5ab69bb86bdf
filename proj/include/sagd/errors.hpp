#pragma once

#include <stdexcept>
#include <string>

namespace sagd {

/// Degenerate numerical object: all-zero weight, rank-zero covariance,
/// division by a vanished schedule coefficient, non-SPD smoothed density.
class degenerate_error : public std::runtime_error {
public:
    explicit degenerate_error(const std::string& what) : std::runtime_error(what) {}
};

/// Two internal computation routes that must agree did not.
class consistency_error : public std::runtime_error {
public:
    explicit consistency_error(const std::string& what) : std::runtime_error(what) {}
};

/// ODE/sampler state escaped the sane range; carries the offending step.
class divergence_error : public std::runtime_error {
public:
    divergence_error(const std::string& what, long step)
        : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

} // namespace sagd

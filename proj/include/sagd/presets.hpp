#pragma once

#include "sagd/gaussian_mixture.hpp"
#include "sagd/spectral.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace sagd {

/// Fixed 3-component 2D mixture used by the flow and score-check runs.
inline GaussianMixture three_mode_2d() {
    std::vector<double> w = {0.35, 0.35, 0.30};
    std::vector<Eigen::VectorXd> means(3, Eigen::VectorXd(2));
    means[0] << -2.5, -1.5;
    means[1] << 2.5, -1.0;
    means[2] << 0.0, 2.5;
    std::vector<Eigen::MatrixXd> covs(3, Eigen::MatrixXd(2, 2));
    covs[0] << 0.35, 0.10, 0.10, 0.30;
    covs[1] << 0.40, -0.12, -0.12, 0.25;
    covs[2] << 0.30, 0.05, 0.05, 0.40;
    return GaussianMixture(std::move(w), std::move(means), std::move(covs));
}

/// Balanced two-component 1D mixture for quadrature oracles.
inline GaussianMixture two_mode_1d() {
    std::vector<double> w = {0.5, 0.5};
    std::vector<Eigen::VectorXd> means(2, Eigen::VectorXd(1));
    means[0] << -1.5;
    means[1] << 2.0;
    std::vector<Eigen::MatrixXd> covs(2, Eigen::MatrixXd(1, 1));
    covs[0] << 0.5;
    covs[1] << 0.8;
    return GaussianMixture(std::move(w), std::move(means), std::move(covs));
}

/// Unit-determinant 2D covariance with eigenvalues (e^tilt, e^-tilt) in a
/// 45-degree rotated eigenbasis. tilt = 0 gives the identity.
inline AnisotropicCovariance tilted_cov_2d(double tilt) {
    const double c = std::sqrt(0.5);
    Eigen::MatrixXd basis(2, 2);
    basis << c, -c, c, c;
    Eigen::VectorXd evals(2);
    evals << std::exp(tilt), std::exp(-tilt);
    return AnisotropicCovariance::explicit_basis(basis, evals);
}

inline constexpr double kDefaultTilt = 0.5;

/// Named 2D covariance presets for the CLI and the acceptance runs.
inline AnisotropicCovariance covariance_preset_2d(const std::string& name,
                                                  double tilt = kDefaultTilt) {
    if (name == "iso") return AnisotropicCovariance::identity(2);
    if (name == "tilt_plus") return tilted_cov_2d(tilt);
    if (name == "tilt_minus") return tilted_cov_2d(-tilt);
    if (name == "rank_deficient") {
        Eigen::VectorXd evals(2);
        evals << 1.0, 0.0;
        return AnisotropicCovariance::explicit_basis(Eigen::MatrixXd::Identity(2, 2), evals);
    }
    throw std::invalid_argument("unknown covariance preset: " + name);
}

} // namespace sagd

#pragma once

#include "sagd/errors.hpp"
#include "sagd/schedule.hpp"
#include "sagd/spectral.hpp"
#include "sagd/tensor_field.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sagd {

struct ForwardDraw {
    TensorField x_t;
    TensorField eps; // the drawn shaped noise, the training target
};

/// x_t = sqrt(alpha_bar_t) x0 + sigma_t eps,  eps ~ N(0, Sigma_w).
inline ForwardDraw forward_sample(const TensorField& x0, long t, const DiffusionSchedule& sched,
                                  const AnisotropicCovariance& cov, std::uint64_t seed) {
    if (cov.is_fourier()) {
        if (!x0.is_image() || x0.height() != cov.height() || x0.width() != cov.width())
            throw std::invalid_argument("forward_sample: field/covariance shape mismatch");
    } else if (x0.is_image() || x0.sample_size() != cov.dim()) {
        throw std::invalid_argument("forward_sample: vector/covariance dim mismatch");
    }
    TensorField eps = cov.sample(x0.batch(), x0.channels(), seed, NoiseMode::raw);
    TensorField x_t = lincomb(std::sqrt(sched.alpha_bar(t)), x0, sched.sigma(t), eps);
    return {std::move(x_t), std::move(eps)};
}

/// Score estimate from an epsilon prediction:
///   s = -(1/sigma_t) pinv(Sigma_w) eps_hat.
/// With singular Sigma_w this is the score projected onto range(Sigma_w).
inline TensorField score_from_eps(const TensorField& eps_hat, long t,
                                  const DiffusionSchedule& sched, const AnisotropicCovariance& cov,
                                  double zero_tol_rel = 1e-12) {
    double s = sched.sigma(t);
    if (s == 0.0) throw degenerate_error("score_from_eps: sigma_t is zero");
    return scaled(-1.0 / s, cov.apply_pinv(eps_hat, zero_tol_rel));
}

/// Inverse of score_from_eps on range(Sigma_w): eps = -sigma_t Sigma_w s.
inline TensorField eps_from_score(const TensorField& score, long t,
                                  const DiffusionSchedule& sched,
                                  const AnisotropicCovariance& cov) {
    return scaled(-sched.sigma(t), cov.apply(score));
}

/// x0_hat = (x_t - sigma_t eps_hat) / sqrt(alpha_bar_t).
inline TensorField x0_from_eps(const TensorField& x_t, const TensorField& eps_hat, long t,
                               const DiffusionSchedule& sched) {
    check_same_shape(x_t, eps_hat, "x0_from_eps");
    double ab = sched.alpha_bar(t);
    if (ab <= 0.0) throw degenerate_error("x0_from_eps: alpha_bar vanished");
    return scaled(1.0 / std::sqrt(ab), lincomb(1.0, x_t, -sched.sigma(t), eps_hat));
}

struct PosteriorParams {
    TensorField mean;
    double beta_tilde;
};

/// Parameters of q(x_{t-1} | x_t, x0) = N(mu_tilde, beta_tilde * Sigma_w).
inline PosteriorParams posterior_params(const TensorField& x_t, const TensorField& x0, long t,
                                        const DiffusionSchedule& sched) {
    check_same_shape(x_t, x0, "posterior_params");
    double a = sched.alpha(t);
    double ab = sched.alpha_bar(t);
    double coeff = (1.0 - a) / (1.0 - ab);
    // mu = (x_t - coeff * (x_t - sqrt(ab) x0)) / sqrt(a)
    TensorField mean =
        scaled(1.0 / std::sqrt(a), lincomb(1.0 - coeff, x_t, coeff * std::sqrt(ab), x0));
    return {std::move(mean), sched.beta_tilde(t)};
}

/// Deterministic DDIM update (eta = 0):
///   x_{t_prev} = sqrt(alpha_bar_{t_prev}) x0_hat + sqrt(1 - alpha_bar_{t_prev}) eps_hat.
/// Sigma_w enters only through eps_hat; t_prev may be 0 (returns x0_hat).
inline TensorField ddim_step(const TensorField& x_t, const TensorField& eps_hat, long t,
                             long t_prev, const DiffusionSchedule& sched) {
    if (t_prev >= t) throw std::invalid_argument("ddim_step: t_prev must be < t");
    if (t_prev < 0) throw std::invalid_argument("ddim_step: t_prev must be >= 0");
    TensorField x0_hat = x0_from_eps(x_t, eps_hat, t, sched);
    double ab_prev = sched.alpha_bar(t_prev);
    return lincomb(std::sqrt(ab_prev), x0_hat, std::sqrt(1.0 - ab_prev), eps_hat);
}

/// Ancestral step: posterior mean at x0_hat plus sqrt(beta_tilde_t) times a
/// fresh N(0, Sigma_w) draw. Noise-free at t = 1 (beta_tilde_1 == 0).
inline TensorField ddpm_step(const TensorField& x_t, const TensorField& eps_hat, long t,
                             const DiffusionSchedule& sched, const AnisotropicCovariance& cov,
                             std::uint64_t seed) {
    TensorField x0_hat = x0_from_eps(x_t, eps_hat, t, sched);
    PosteriorParams post = posterior_params(x_t, x0_hat, t, sched);
    if (t == 1 || post.beta_tilde == 0.0) return std::move(post.mean);
    TensorField noise = cov.sample(x_t.batch(), x_t.channels(), seed, NoiseMode::raw);
    return lincomb(1.0, post.mean, std::sqrt(post.beta_tilde), noise);
}

/// Per-bin variance of x_t | x0 under a per-step weight schedule:
///   sum_s (beta_s * prod_{k=s+1}^t alpha_k) |w_s|^2.
/// All weights must live on the same grid; weights.size() == t.
inline std::vector<double> timevarying_marginal_cov(const DiffusionSchedule& sched,
                                                    const std::vector<SpectralWeight>& weights) {
    if (weights.empty()) throw std::invalid_argument("timevarying_marginal_cov: no weights");
    const long t = static_cast<long>(weights.size());
    if (t > sched.steps())
        throw std::invalid_argument("timevarying_marginal_cov: more weights than steps");
    const long h = weights[0].grid.height, w = weights[0].grid.width;
    for (const auto& wt : weights)
        if (wt.grid.height != h || wt.grid.width != w)
            throw std::invalid_argument("timevarying_marginal_cov: grid mismatch");
    std::vector<double> var(static_cast<std::size_t>(h * w), 0.0);
    for (long s = 1; s <= t; ++s) {
        double tail = 1.0;
        for (long k = s + 1; k <= t; ++k) tail *= sched.alpha(k);
        double scale = sched.beta(s) * tail;
        const auto& vals = weights[s - 1].values;
        for (std::size_t i = 0; i < var.size(); ++i) var[i] += scale * vals[i] * vals[i];
    }
    return var;
}

} // namespace sagd

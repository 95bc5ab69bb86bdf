#pragma once

#include "sagd/errors.hpp"
#include "sagd/rng.hpp"
#include "sagd/schedule.hpp"
#include "sagd/spectral.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace sagd {

/// Finite Gaussian mixture with closed-form density, score and smoothing.
/// Covariances must be SPD; solves go through cached Cholesky factors and
/// responsibilities through log-sum-exp.
class GaussianMixture {
public:
    GaussianMixture(std::vector<double> weights, std::vector<Eigen::VectorXd> means,
                    std::vector<Eigen::MatrixXd> covariances)
        : weights_(std::move(weights)), means_(std::move(means)), covs_(std::move(covariances)) {
        const std::size_t K = weights_.size();
        if (K == 0 || means_.size() != K || covs_.size() != K)
            throw std::invalid_argument("GaussianMixture: component count mismatch");
        double sum = 0.0;
        for (double w : weights_) {
            if (!(w > 0.0)) throw std::invalid_argument("GaussianMixture: weights must be > 0");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("GaussianMixture: weights must sum to 1");
        const long d = means_[0].size();
        llts_.resize(K);
        log_norms_.resize(K);
        for (std::size_t k = 0; k < K; ++k) {
            if (means_[k].size() != d || covs_[k].rows() != d || covs_[k].cols() != d)
                throw std::invalid_argument("GaussianMixture: dimension mismatch");
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covs_[k]);
            if (es.eigenvalues().minCoeff() <= 0.0)
                throw std::invalid_argument("GaussianMixture: covariance not SPD");
            llts_[k].compute(covs_[k]);
            double log_det = 0.0;
            for (long i = 0; i < d; ++i) log_det += 2.0 * std::log(llts_[k].matrixL()(i, i));
            log_norms_[k] = -0.5 * (d * std::log(2.0 * M_PI) + log_det);
        }
    }

    long dim() const { return means_[0].size(); }
    long components() const { return static_cast<long>(weights_.size()); }
    const std::vector<double>& weights() const { return weights_; }
    const Eigen::VectorXd& mean(long k) const { return means_[k]; }
    const Eigen::MatrixXd& covariance(long k) const { return covs_[k]; }

    double log_density(const Eigen::VectorXd& x) const {
        std::vector<double> lp(weights_.size());
        component_log_joint(x, lp);
        return log_sum_exp(lp);
    }

    /// grad_x log density; responsibilities weight the Gaussian scores.
    Eigen::VectorXd score(const Eigen::VectorXd& x) const {
        std::vector<double> lp(weights_.size());
        component_log_joint(x, lp);
        double lse = log_sum_exp(lp);
        Eigen::VectorXd s = Eigen::VectorXd::Zero(dim());
        for (std::size_t k = 0; k < weights_.size(); ++k) {
            double r = std::exp(lp[k] - lse);
            s.noalias() -= r * llts_[k].solve(x - means_[k]);
        }
        return s;
    }

    /// Columnwise score of a batch of points (d x N).
    Eigen::MatrixXd score_batch(const Eigen::MatrixXd& pts) const {
        Eigen::MatrixXd out(pts.rows(), pts.cols());
        for (long j = 0; j < pts.cols(); ++j) out.col(j) = score(pts.col(j));
        return out;
    }

    /// Posterior component probabilities r_k(x).
    Eigen::VectorXd responsibilities(const Eigen::VectorXd& x) const {
        std::vector<double> lp(weights_.size());
        component_log_joint(x, lp);
        double lse = log_sum_exp(lp);
        Eigen::VectorXd r(components());
        for (long k = 0; k < components(); ++k) r[k] = std::exp(lp[k] - lse);
        return r;
    }

    Eigen::MatrixXd sample(long n, std::uint64_t seed) const {
        Eigen::MatrixXd out(dim(), n);
        for (long j = 0; j < n; ++j) {
            GaussianStream rng(derive_stream(seed, static_cast<std::uint64_t>(j), 0));
            double u = rng.next_uniform();
            long k = 0;
            double acc = weights_[0];
            while (k + 1 < components() && u > acc) acc += weights_[++k];
            Eigen::VectorXd xi(dim());
            rng.fill_gaussian(xi.data(), dim());
            out.col(j) = means_[k] + llts_[k].matrixL() * xi;
        }
        return out;
    }

    Eigen::MatrixXd component_solve(long k, const Eigen::VectorXd& v) const {
        return llts_[k].solve(v);
    }

private:
    void component_log_joint(const Eigen::VectorXd& x, std::vector<double>& lp) const {
        for (std::size_t k = 0; k < weights_.size(); ++k) {
            Eigen::VectorXd diff = x - means_[k];
            double quad = diff.dot(llts_[k].solve(diff));
            lp[k] = std::log(weights_[k]) + log_norms_[k] - 0.5 * quad;
        }
    }

    static double log_sum_exp(const std::vector<double>& v) {
        double m = v[0];
        for (double x : v) m = std::max(m, x);
        double s = 0.0;
        for (double x : v) s += std::exp(x - m);
        return m + std::log(s);
    }

    std::vector<double> weights_;
    std::vector<Eigen::VectorXd> means_;
    std::vector<Eigen::MatrixXd> covs_;
    std::vector<Eigen::LLT<Eigen::MatrixXd>> llts_;
    std::vector<double> log_norms_;
};

inline double gm_log_density(const GaussianMixture& gm, const Eigen::VectorXd& x) {
    return gm.log_density(x);
}

inline Eigen::VectorXd gm_score(const GaussianMixture& gm, const Eigen::VectorXd& x) {
    return gm.score(x);
}

namespace detail {
inline Eigen::MatrixXd explicit_cov_dense(const AnisotropicCovariance& cov, long dim) {
    if (cov.is_fourier())
        throw std::invalid_argument("gaussian mixture smoothing needs an explicit-basis covariance");
    if (cov.dim() != dim) throw std::invalid_argument("covariance/mixture dimension mismatch");
    return cov.dense();
}
} // namespace detail

/// Marginal of sqrt(ab) x0 + sqrt(sigma2) eps, eps ~ N(0, Sigma_w):
/// component means scale by sqrt(ab), covariances become ab*C_k + sigma2*Sigma_w.
inline GaussianMixture gm_smoothed_at(const GaussianMixture& gm, double alpha_bar, double sigma2,
                                      const AnisotropicCovariance& cov) {
    Eigen::MatrixXd sigma_w = detail::explicit_cov_dense(cov, gm.dim());
    std::vector<double> w = gm.weights();
    std::vector<Eigen::VectorXd> means(gm.components());
    std::vector<Eigen::MatrixXd> covs(gm.components());
    double root = std::sqrt(alpha_bar);
    for (long k = 0; k < gm.components(); ++k) {
        means[k] = root * gm.mean(k);
        covs[k] = alpha_bar * gm.covariance(k) + sigma2 * sigma_w;
    }
    try {
        return GaussianMixture(std::move(w), std::move(means), std::move(covs));
    } catch (const std::invalid_argument&) {
        throw degenerate_error("gm_smoothed: smoothed covariance not positive definite");
    }
}

inline GaussianMixture gm_smoothed(const GaussianMixture& gm, long t,
                                   const DiffusionSchedule& sched,
                                   const AnisotropicCovariance& cov) {
    double s = sched.sigma(t);
    return gm_smoothed_at(gm, sched.alpha_bar(t), s * s, cov);
}

inline Eigen::VectorXd gm_smoothed_score_at(const GaussianMixture& gm, double alpha_bar,
                                            double sigma2, const AnisotropicCovariance& cov,
                                            const Eigen::VectorXd& x) {
    return gm_smoothed_at(gm, alpha_bar, sigma2, cov).score(x);
}

inline Eigen::VectorXd gm_smoothed_score(const GaussianMixture& gm, long t,
                                         const DiffusionSchedule& sched,
                                         const AnisotropicCovariance& cov,
                                         const Eigen::VectorXd& x) {
    return gm_smoothed(gm, t, sched, cov).score(x);
}

struct PosteriorMeanRoutes {
    Eigen::VectorXd closed_form;
    Eigen::VectorXd tweedie;
};

/// E[x0 | x_t] computed two independent ways: the closed-form mixture
/// posterior, and the Tweedie identity E[x0|z] = z + sigma_tilde^2 Sigma_w
/// grad log p_t(z) with z = x_t / sqrt(alpha_bar).
inline PosteriorMeanRoutes gm_posterior_mean_routes(const GaussianMixture& gm,
                                                    const Eigen::VectorXd& x_t, double alpha_bar,
                                                    double sigma2,
                                                    const AnisotropicCovariance& cov) {
    if (!cov.full_rank())
        throw degenerate_error("gm_posterior_mean_x0: Sigma_w must be positive definite");
    Eigen::MatrixXd sigma_w = detail::explicit_cov_dense(cov, gm.dim());
    const double root = std::sqrt(alpha_bar);

    // Closed form: responsibilities under the smoothed mixture, then the
    // linear-Gaussian posterior mean per component.
    GaussianMixture smoothed = gm_smoothed_at(gm, alpha_bar, sigma2, cov);
    Eigen::VectorXd r = smoothed.responsibilities(x_t);
    Eigen::VectorXd closed = Eigen::VectorXd::Zero(gm.dim());
    for (long k = 0; k < gm.components(); ++k) {
        Eigen::VectorXd innov = smoothed.component_solve(k, x_t - root * gm.mean(k));
        closed += r[k] * (gm.mean(k) + root * gm.covariance(k) * innov);
    }

    // Tweedie route in the z = x_t / sqrt(alpha_bar) variable.
    double sigma_tilde2 = sigma2 / alpha_bar;
    Eigen::VectorXd z = x_t / root;
    std::vector<double> w = gm.weights();
    std::vector<Eigen::VectorXd> means(gm.components());
    std::vector<Eigen::MatrixXd> covs(gm.components());
    for (long k = 0; k < gm.components(); ++k) {
        means[k] = gm.mean(k);
        covs[k] = gm.covariance(k) + sigma_tilde2 * sigma_w;
    }
    GaussianMixture z_law(std::move(w), std::move(means), std::move(covs));
    Eigen::VectorXd tweedie = z + sigma_tilde2 * (sigma_w * z_law.score(z));
    return {std::move(closed), std::move(tweedie)};
}

/// The closed-form E[x0 | x_t]; the two routes are cross-checked internally
/// and a disagreement beyond 1e-6 raises consistency_error.
inline Eigen::VectorXd gm_posterior_mean_x0_at(const GaussianMixture& gm,
                                               const Eigen::VectorXd& x_t, double alpha_bar,
                                               double sigma2, const AnisotropicCovariance& cov) {
    PosteriorMeanRoutes routes = gm_posterior_mean_routes(gm, x_t, alpha_bar, sigma2, cov);
    double rel = (routes.closed_form - routes.tweedie).norm() /
                 std::max(1.0, routes.closed_form.norm());
    if (rel > 1e-6)
        throw consistency_error("gm_posterior_mean_x0: closed-form and Tweedie routes disagree");
    return routes.closed_form;
}

inline Eigen::VectorXd gm_posterior_mean_x0(const GaussianMixture& gm, const Eigen::VectorXd& x_t,
                                            long t, const DiffusionSchedule& sched,
                                            const AnisotropicCovariance& cov) {
    double s = sched.sigma(t);
    return gm_posterior_mean_x0_at(gm, x_t, sched.alpha_bar(t), s * s, cov);
}

/// eps*(x_t, t) = (x_t - sqrt(alpha_bar) E[x0|x_t]) / sigma_t, the optimal
/// predictor for the shaped-noise regression loss.
inline Eigen::VectorXd optimal_eps_predictor_at(const GaussianMixture& gm,
                                                const Eigen::VectorXd& x_t, double alpha_bar,
                                                double sigma2, const AnisotropicCovariance& cov) {
    if (!(sigma2 > 0.0)) throw degenerate_error("optimal_eps_predictor: sigma is zero");
    Eigen::VectorXd post = gm_posterior_mean_x0_at(gm, x_t, alpha_bar, sigma2, cov);
    return (x_t - std::sqrt(alpha_bar) * post) / std::sqrt(sigma2);
}

inline Eigen::VectorXd optimal_eps_predictor(const GaussianMixture& gm, const Eigen::VectorXd& x_t,
                                             long t, const DiffusionSchedule& sched,
                                             const AnisotropicCovariance& cov) {
    double s = sched.sigma(t);
    return optimal_eps_predictor_at(gm, x_t, sched.alpha_bar(t), s * s, cov);
}

} // namespace sagd

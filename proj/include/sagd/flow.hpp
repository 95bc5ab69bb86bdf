#pragma once

#include "sagd/diffusion.hpp"
#include "sagd/errors.hpp"
#include "sagd/gaussian_mixture.hpp"
#include "sagd/schedule.hpp"
#include "sagd/spectral.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace sagd {

/// N particles in R^dim at a common time t in [0,1]; states are columns.
struct ParticleEnsemble {
    Eigen::MatrixXd states;
    double time = 1.0;

    long count() const { return states.cols(); }
    long dim() const { return states.rows(); }
};

/// Snapshots of an ensemble along a flow, times strictly decreasing.
struct FlowTrajectory {
    std::vector<double> times;
    std::vector<Eigen::MatrixXd> snapshots;
};

/// Columnwise score evaluator: (d x N points, t) -> d x N scores.
using BatchedScoreFn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&, double)>;
using BetaFn = std::function<double(double)>;

enum class Integrator { euler, heun };

/// Probability-flow drift dx/dt = -1/2 beta(t) x - 1/2 beta(t) Sigma_w s(x,t).
inline Eigen::VectorXd pf_ode_drift(const Eigen::VectorXd& x, double t,
                                    const BatchedScoreFn& score_fn,
                                    const AnisotropicCovariance& cov, const BetaFn& beta_fn) {
    Eigen::MatrixXd s = score_fn(x, t);
    if (!s.allFinite()) throw degenerate_error("pf_ode_drift: non-finite score");
    double b = beta_fn(t);
    return -0.5 * b * x - 0.5 * b * cov.apply(Eigen::MatrixXd(s)).col(0);
}

namespace detail {
inline Eigen::MatrixXd ensemble_drift(const Eigen::MatrixXd& x, double t,
                                      const BatchedScoreFn& score_fn,
                                      const AnisotropicCovariance& cov, const BetaFn& beta_fn) {
    Eigen::MatrixXd s = score_fn(x, t);
    if (!s.allFinite()) throw degenerate_error("integrate_flow: non-finite score");
    double b = beta_fn(t);
    return -0.5 * b * x - 0.5 * b * cov.apply(s);
}
} // namespace detail

/// Integrate the probability-flow ODE from t = ensemble.time down to t_min,
/// recording `snapshots` equally spaced states (endpoints included).
/// Deterministic; throws divergence_error if any coordinate passes 1e6.
inline FlowTrajectory integrate_flow(const ParticleEnsemble& prior, const BatchedScoreFn& score_fn,
                                     const AnisotropicCovariance& cov, const BetaFn& beta_fn,
                                     long steps, long snapshots,
                                     Integrator integrator = Integrator::heun,
                                     double t_min = 1e-3) {
    if (snapshots < 2 || steps < snapshots)
        throw std::invalid_argument("integrate_flow: need steps >= snapshots >= 2");
    if (!(t_min > 0.0) || !(t_min < prior.time))
        throw std::invalid_argument("integrate_flow: t_min out of range");

    const double h = (t_min - prior.time) / static_cast<double>(steps); // negative
    Eigen::MatrixXd x = prior.states;
    double t = prior.time;

    FlowTrajectory traj;
    auto record = [&](double time, const Eigen::MatrixXd& state) {
        traj.times.push_back(time);
        traj.snapshots.push_back(state);
    };
    std::vector<long> marks(snapshots);
    for (long j = 0; j < snapshots; ++j)
        marks[j] = (j * steps + (snapshots - 1) / 2) / (snapshots - 1);
    marks.front() = 0;
    marks.back() = steps;

    long next_mark = 0;
    for (long step = 0; step <= steps; ++step) {
        if (next_mark < snapshots && step == marks[next_mark]) {
            record(t, x);
            ++next_mark;
        }
        if (step == steps) break;
        Eigen::MatrixXd k1 = detail::ensemble_drift(x, t, score_fn, cov, beta_fn);
        if (integrator == Integrator::euler) {
            x += h * k1;
        } else {
            Eigen::MatrixXd k2 =
                detail::ensemble_drift(x + h * k1, t + h, score_fn, cov, beta_fn);
            x += (h / 2.0) * (k1 + k2);
        }
        t = prior.time + (step + 1) * h;
        if (x.cwiseAbs().maxCoeff() > 1e6)
            throw divergence_error("integrate_flow: ensemble diverged", step + 1);
    }
    return traj;
}

/// Smoothed-score evaluator for a Gaussian-mixture target under continuous
/// VP coefficients; one smoothed mixture per call, shared across the batch.
inline BatchedScoreFn make_gm_score_fn(GaussianMixture gm, AnisotropicCovariance cov,
                                       double beta_min, double beta_max) {
    return [gm = std::move(gm), cov = std::move(cov), beta_min,
            beta_max](const Eigen::MatrixXd& pts, double t) -> Eigen::MatrixXd {
        double integral = beta_min * t + 0.5 * (beta_max - beta_min) * t * t;
        double ab = std::exp(-integral);
        double s2 = 1.0 - ab;
        GaussianMixture smoothed = gm_smoothed_at(gm, ab, s2, cov);
        return smoothed.score_batch(pts);
    };
}

inline BatchedScoreFn make_gm_score_fn(GaussianMixture gm, AnisotropicCovariance cov,
                                       const DiffusionSchedule& sched) {
    return make_gm_score_fn(std::move(gm), std::move(cov), sched.beta_min_continuous(),
                            sched.beta_max_continuous());
}

enum class SamplerKind { ddim, ddpm };

/// Epsilon predictor over fields: (x_t, t) -> eps_hat.
using EpsPredictor = std::function<TensorField(const TensorField&, long)>;

/// Reverse sampling from x_T ~ N(0, sigma_T^2 Sigma_w).
///
/// ddim: deterministic updates over the strided timestep subsequence
/// T, T-stride, ..., then 0. ddpm: ancestral steps over every timestep
/// (stride must be 1), with Sigma_w-shaped injected noise.
///
/// When Sigma_w is rank-deficient, predictions are projected onto
/// range(Sigma_w) before each update, so iterates never acquire content in
/// the omitted bands (the initial draw has none either).
inline TensorField reverse_sample(const EpsPredictor& eps_predictor,
                                  const DiffusionSchedule& sched,
                                  const AnisotropicCovariance& cov, long n, long stride,
                                  std::uint64_t seed, SamplerKind mode, long channels = 1) {
    if (n < 1 || stride < 1) throw std::invalid_argument("reverse_sample: bad n or stride");
    if (mode == SamplerKind::ddpm && stride != 1)
        throw std::invalid_argument("reverse_sample: ddpm mode requires stride == 1");
    const long T = sched.steps();

    TensorField x = scaled(sched.sigma(T), cov.sample(n, channels, seed, NoiseMode::raw));
    const bool singular = !cov.full_rank();
    AnisotropicCovariance projector = singular ? cov.support_projector() : cov;

    auto predict = [&](const TensorField& xt, long t) {
        TensorField eps = eps_predictor(xt, t);
        if (!eps.all_finite())
            throw divergence_error("reverse_sample: predictor returned non-finite values", t);
        if (singular) eps = projector.apply(eps);
        return eps;
    };

    long t = T;
    while (t > 0) {
        long t_prev = std::max<long>(t - stride, 0);
        TensorField eps = predict(x, t);
        if (mode == SamplerKind::ddim) {
            x = ddim_step(x, eps, t, t_prev, sched);
        } else {
            x = ddpm_step(x, eps, t, sched, cov,
                          mix64(seed ^ (0xA0761D6478BD642FULL + static_cast<std::uint64_t>(t))));
        }
        t = t_prev;
    }
    return x;
}

struct VectorFieldGrid {
    Eigen::MatrixXd points;  // d x (nx*ny)
    Eigen::MatrixXd vectors; // d x (nx*ny)
    long nx = 0, ny = 0;
};

/// Evaluate a score field on a regular 2D grid (row-major over y then x).
inline VectorFieldGrid score_field_grid(const BatchedScoreFn& score_fn, double x_lo, double x_hi,
                                        double y_lo, double y_hi, long nx, long ny, double t) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("score_field_grid: bad resolution");
    VectorFieldGrid g;
    g.nx = nx;
    g.ny = ny;
    g.points.resize(2, nx * ny);
    long idx = 0;
    for (long iy = 0; iy < ny; ++iy) {
        for (long ix = 0; ix < nx; ++ix, ++idx) {
            double fx = nx > 1 ? static_cast<double>(ix) / (nx - 1) : 0.5;
            double fy = ny > 1 ? static_cast<double>(iy) / (ny - 1) : 0.5;
            g.points(0, idx) = x_lo + (x_hi - x_lo) * fx;
            g.points(1, idx) = y_lo + (y_hi - y_lo) * fy;
        }
    }
    g.vectors = score_fn(g.points, t);
    return g;
}

} // namespace sagd

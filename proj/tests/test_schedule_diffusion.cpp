#include <catch2/catch_amalgamated.hpp>

#include "sagd/diffusion.hpp"
#include "sagd/presets.hpp"
#include "sagd/schedule.hpp"

#include <cmath>

using namespace sagd;

TEST_CASE("single-step schedule") {
    DiffusionSchedule s = make_schedule(1, 0.5, 0.5);
    REQUIRE(s.alpha_bar(1) == Catch::Approx(0.5));
    REQUIRE(s.sigma(1) == Catch::Approx(std::sqrt(0.5)));
    REQUIRE(s.beta_tilde(1) == 0.0);
    REQUIRE(s.alpha_bar(0) == 1.0);
    REQUIRE(s.sigma(0) == 0.0);
}

TEST_CASE("default schedule matches the cumulative-product oracle") {
    const long T = 1000;
    DiffusionSchedule s = make_schedule(T, 1e-4, 0.02);
    // independent product oracle
    long double prod = 1.0L;
    for (long i = 0; i < T; ++i) {
        long double beta = 1e-4L + (0.02L - 1e-4L) * i / (T - 1);
        prod *= (1.0L - beta);
    }
    REQUIRE(s.alpha_bar(T) == Catch::Approx(static_cast<double>(prod)).epsilon(1e-12));
    REQUIRE(s.alpha_bar(T) < 1e-4); // near-pure noise
    REQUIRE(s.alpha_bar(T) == Catch::Approx(4.04e-5).epsilon(0.01));
    REQUIRE(s.beta_tilde(1) == 0.0);

    for (long t = 2; t <= T; ++t) {
        REQUIRE(s.alpha_bar(t) < s.alpha_bar(t - 1));
        REQUIRE(s.sigma(t) > s.sigma(t - 1));
        REQUIRE(s.sigma(t) * s.sigma(t) == Catch::Approx(1.0 - s.alpha_bar(t)).epsilon(1e-14));
    }

    REQUIRE_THROWS_AS(make_schedule(0, 1e-4, 0.02), std::invalid_argument);
    REQUIRE_THROWS_AS(make_schedule(10, 0.0, 0.02), std::invalid_argument);
    REQUIRE_THROWS_AS(make_schedule(10, 0.03, 0.02), std::invalid_argument);
    REQUIRE_THROWS_AS(make_schedule(10, 1e-4, 1.0), std::invalid_argument);
}

TEST_CASE("forward sample satisfies the reparameterization identity") {
    DiffusionSchedule sched = make_schedule(100, 1e-3, 0.05);
    FrequencyGrid g = build_frequency_grid(8, 8);
    AnisotropicCovariance cov = make_covariance(power_law_weight(g, 0.3));
    TensorField x0 = TensorField::images(3, 1, 8, 8);
    GaussianStream rng(1);
    rng.fill_gaussian(x0.data.data(), static_cast<long>(x0.data.size()));

    long t = 40;
    ForwardDraw draw = forward_sample(x0, t, sched, cov, 7);
    TensorField reconstructed =
        lincomb(std::sqrt(sched.alpha_bar(t)), x0, sched.sigma(t), draw.eps);
    REQUIRE(max_abs_diff(draw.x_t, reconstructed) == 0.0);

    // x0_from_eps with the drawn noise recovers x0 exactly
    TensorField x0_hat = x0_from_eps(draw.x_t, draw.eps, t, sched);
    REQUIRE(max_abs_diff(x0_hat, x0) < 1e-6);

    TensorField wrong = TensorField::images(3, 1, 4, 4);
    REQUIRE_THROWS_AS(forward_sample(wrong, t, sched, cov, 7), std::invalid_argument);
}

TEST_CASE("forward marginal covariance tracks sigma_t^2 Sigma_w") {
    DiffusionSchedule sched = make_schedule(10, 0.01, 0.2);
    Eigen::VectorXd evals(2);
    evals << 2.0, 0.5;
    AnisotropicCovariance cov =
        AnisotropicCovariance::explicit_basis(Eigen::MatrixXd::Identity(2, 2), evals);
    TensorField x0 = TensorField::vectors(20000, 2); // x0 = 0
    long t = 6;
    ForwardDraw draw = forward_sample(x0, t, sched, cov, 33);
    Eigen::MatrixXd m = draw.x_t.as_matrix();
    Eigen::MatrixXd emp = (m * m.transpose()) / 20000.0;
    double s2 = sched.sigma(t) * sched.sigma(t);
    REQUIRE(emp(0, 0) == Catch::Approx(s2 * 2.0).epsilon(0.06));
    REQUIRE(emp(1, 1) == Catch::Approx(s2 * 0.5).epsilon(0.06));
    REQUIRE(std::abs(emp(0, 1)) < 0.05);
}

TEST_CASE("small-noise limit keeps x_t near x0") {
    DiffusionSchedule sched = make_schedule(1000, 1e-6, 1e-5);
    AnisotropicCovariance cov = AnisotropicCovariance::fourier_identity(8, 8);
    TensorField x0 = TensorField::images(1, 1, 8, 8);
    for (auto& v : x0.data) v = 1.0;
    ForwardDraw draw = forward_sample(x0, 1, sched, cov, 2);
    REQUIRE(l2_norm(lincomb(1.0, draw.x_t, -1.0, x0)) / l2_norm(x0) < 3.0 * sched.sigma(1));
}

TEST_CASE("score conversion arithmetic") {
    DiffusionSchedule sched = make_schedule(10, 0.25, 0.25); // sigma known per step
    Eigen::VectorXd evals(2);
    evals << 4.0, 1.0;
    AnisotropicCovariance cov =
        AnisotropicCovariance::explicit_basis(Eigen::MatrixXd::Identity(2, 2), evals);

    // find t with sigma == 0.5: alpha_bar = 0.75^t, want 1 - ab = 0.25 -> t = 1
    REQUIRE(sched.sigma(1) == Catch::Approx(0.5));
    TensorField eps = TensorField::vectors(1, 2);
    eps.data = {2.0, 3.0};
    TensorField score = score_from_eps(eps, 1, sched, cov);
    REQUIRE(score.data[0] == Catch::Approx(-1.0));
    REQUIRE(score.data[1] == Catch::Approx(-6.0));

    // identity covariance: score = -eps / sigma
    AnisotropicCovariance ident = AnisotropicCovariance::identity(2);
    TensorField s2 = score_from_eps(eps, 1, sched, ident);
    REQUIRE(s2.data[0] == Catch::Approx(-4.0));
    REQUIRE(s2.data[1] == Catch::Approx(-6.0));

    // round trip through eps_from_score is the identity under full rank
    TensorField back = eps_from_score(score, 1, sched, cov);
    REQUIRE(max_abs_diff(back, eps) < 1e-12);

    TensorField zero = TensorField::vectors(1, 2);
    REQUIRE(max_abs_diff(eps_from_score(zero, 1, sched, cov), zero) == 0.0);
}

TEST_CASE("projected round trip under singular covariance") {
    DiffusionSchedule sched = make_schedule(10, 0.1, 0.1);
    FrequencyGrid g = build_frequency_grid(8, 8);
    AnisotropicCovariance cov =
        make_covariance(two_band_weight(g, 1.0, {0.0, 0.3}, 1.0, {0.6, 1.0}));
    TensorField eps = TensorField::images(1, 1, 8, 8);
    GaussianStream rng(3);
    rng.fill_gaussian(eps.data.data(), 64);

    TensorField projected = cov.support_projector().apply(eps);
    TensorField roundtrip = eps_from_score(score_from_eps(eps, 5, sched, cov), 5, sched, cov);
    REQUIRE(max_abs_diff(roundtrip, projected) < 1e-10);
}

TEST_CASE("x0 estimate algebra") {
    DiffusionSchedule sched = make_schedule(50, 1e-3, 0.04);
    TensorField x_t = TensorField::vectors(1, 2);
    x_t.data = {1.0, -2.0};
    TensorField zero = TensorField::vectors(1, 2);
    TensorField xhat = x0_from_eps(x_t, zero, 7, sched);
    double root = std::sqrt(sched.alpha_bar(7));
    REQUIRE(xhat.data[0] == Catch::Approx(1.0 / root));
    REQUIRE(xhat.data[1] == Catch::Approx(-2.0 / root));
}

TEST_CASE("posterior parameters") {
    DiffusionSchedule sched = make_schedule(100, 1e-3, 0.05);
    TensorField x_t = TensorField::vectors(1, 2), x0 = TensorField::vectors(1, 2);
    x_t.data = {0.7, -0.4};
    x0.data = {0.2, 0.1};

    SECTION("t=1 anchors exactly on x0") {
        PosteriorParams p = posterior_params(x_t, x0, 1, sched);
        REQUIRE(p.beta_tilde == 0.0);
        REQUIRE(max_abs_diff(p.mean, x0) < 1e-12);
    }

    SECTION("matches the standard two-coefficient form") {
        long t = 40;
        PosteriorParams p = posterior_params(x_t, x0, t, sched);
        double ab = sched.alpha_bar(t), ab_prev = sched.alpha_bar(t - 1);
        double beta = sched.beta(t), alpha = sched.alpha(t);
        double c0 = std::sqrt(ab_prev) * beta / (1.0 - ab);
        double ct = std::sqrt(alpha) * (1.0 - ab_prev) / (1.0 - ab);
        for (int i = 0; i < 2; ++i)
            REQUIRE(p.mean.data[i] ==
                    Catch::Approx(c0 * x0.data[i] + ct * x_t.data[i]).epsilon(1e-12));
        REQUIRE(p.beta_tilde ==
                Catch::Approx((1.0 - ab_prev) / (1.0 - ab) * beta).epsilon(1e-14));
    }
}

TEST_CASE("posterior against a 1D grid-Bayes oracle") {
    DiffusionSchedule sched = make_schedule(20, 0.01, 0.15);
    const double lambda = 1.7; // 1D "covariance"
    long t = 9;
    double x_t = 0.55, x0 = -0.3;
    double ab = sched.alpha_bar(t), ab_prev = sched.alpha_bar(t - 1);
    double alpha = sched.alpha(t), beta = sched.beta(t);

    // brute force: q(x_{t-1} | x_t, x0) ~ q(x_t | x_{t-1}) q(x_{t-1} | x0)
    const long n = 40001;
    const double lo = -8.0, hi = 8.0, h = (hi - lo) / (n - 1);
    long double z = 0.0L, m1 = 0.0L, m2 = 0.0L;
    for (long i = 0; i < n; ++i) {
        double u = lo + i * h;
        double log_fwd = -0.5 * (x_t - std::sqrt(alpha) * u) * (x_t - std::sqrt(alpha) * u) /
                         (beta * lambda);
        double log_marg = -0.5 * (u - std::sqrt(ab_prev) * x0) * (u - std::sqrt(ab_prev) * x0) /
                          ((1.0 - ab_prev) * lambda);
        long double wgt = std::exp(log_fwd + log_marg);
        z += wgt;
        m1 += wgt * u;
        m2 += wgt * u * u;
    }
    double oracle_mean = static_cast<double>(m1 / z);
    double oracle_var = static_cast<double>(m2 / z) - oracle_mean * oracle_mean;

    TensorField xt_f = TensorField::vectors(1, 1), x0_f = TensorField::vectors(1, 1);
    xt_f.data = {x_t};
    x0_f.data = {x0};
    PosteriorParams p = posterior_params(xt_f, x0_f, t, sched);
    REQUIRE(p.mean.data[0] == Catch::Approx(oracle_mean).margin(1e-3));
    REQUIRE(p.beta_tilde * lambda == Catch::Approx(oracle_var).margin(1e-3));
}

TEST_CASE("ddim steps") {
    DiffusionSchedule sched = make_schedule(100, 1e-3, 0.03);
    AnisotropicCovariance cov = AnisotropicCovariance::identity(2);
    TensorField x0 = TensorField::vectors(2, 2);
    x0.data = {0.4, -0.9, 1.2, 0.3};

    SECTION("exact epsilon rollout reconstructs x0") {
        long T = 100;
        ForwardDraw draw = forward_sample(x0, T, sched, cov, 11);
        TensorField x = draw.x_t;
        for (long t = T; t > 0; t -= 5) x = ddim_step(x, draw.eps, t, std::max<long>(t - 5, 0), sched);
        REQUIRE(l2_norm(lincomb(1.0, x, -1.0, x0)) / l2_norm(x0) < 1e-5);
    }

    SECTION("argument validation") {
        TensorField eps = TensorField::vectors(2, 2);
        REQUIRE_THROWS_AS(ddim_step(x0, eps, 5, 5, sched), std::invalid_argument);
        REQUIRE_THROWS_AS(ddim_step(x0, eps, 5, -1, sched), std::invalid_argument);
    }
}

TEST_CASE("ddpm step t=1 is deterministic and residual covariance is shaped") {
    DiffusionSchedule sched = make_schedule(30, 0.01, 0.2);
    Eigen::VectorXd evals(2);
    evals << 2.5, 0.6;
    AnisotropicCovariance cov =
        AnisotropicCovariance::explicit_basis(Eigen::MatrixXd::Identity(2, 2), evals);

    TensorField x_t = TensorField::vectors(1, 2), eps = TensorField::vectors(1, 2);
    x_t.data = {0.8, -0.1};
    eps.data = {0.3, 0.2};

    TensorField out1 = ddpm_step(x_t, eps, 1, sched, cov, 5);
    TensorField out2 = ddpm_step(x_t, eps, 1, sched, cov, 99);
    REQUIRE(max_abs_diff(out1, out2) == 0.0); // no noise at t=1

    long t = 20;
    const long N = 20000;
    TensorField xt_batch = TensorField::vectors(N, 2);
    TensorField eps_batch = TensorField::vectors(N, 2);
    for (long i = 0; i < N; ++i) {
        xt_batch.sample(i)[0] = 0.8;
        xt_batch.sample(i)[1] = -0.1;
        eps_batch.sample(i)[0] = 0.3;
        eps_batch.sample(i)[1] = 0.2;
    }
    TensorField out = ddpm_step(xt_batch, eps_batch, t, sched, cov, 123);
    TensorField x0_hat = x0_from_eps(xt_batch, eps_batch, t, sched);
    PosteriorParams post = posterior_params(xt_batch, x0_hat, t, sched);
    Eigen::MatrixXd resid = out.as_matrix() - post.mean.as_matrix();
    Eigen::MatrixXd emp = (resid * resid.transpose()) / static_cast<double>(N);
    REQUIRE(emp(0, 0) == Catch::Approx(post.beta_tilde * 2.5).epsilon(0.05));
    REQUIRE(emp(1, 1) == Catch::Approx(post.beta_tilde * 0.6).epsilon(0.05));
}

TEST_CASE("time-varying marginal covariance") {
    // T=2 hand case: beta = (0.5, 0.5), |w_1|^2 = 1, |w_2|^2 = 4 at one bin
    DiffusionSchedule sched({0.5, 0.5});
    FrequencyGrid g = build_frequency_grid(1, 1);
    SpectralWeight w1 = power_law_weight(g, 0.0);
    SpectralWeight w2 = w1;
    w2.values[0] = 2.0;
    auto var = timevarying_marginal_cov(sched, {w1, w2});
    REQUIRE(var[0] == Catch::Approx(0.5 * 0.5 * 1.0 + 0.5 * 4.0).epsilon(1e-14)); // 2.25

    // constant weights reduce to sigma_t^2 |w|^2
    DiffusionSchedule s2 = make_schedule(5, 0.05, 0.2);
    FrequencyGrid g8 = build_frequency_grid(8, 8);
    SpectralWeight w = power_law_weight(g8, 0.4);
    auto var2 = timevarying_marginal_cov(s2, {w, w, w});
    double s_t2 = 1.0 - s2.alpha_bar(3);
    for (long i = 0; i < g8.bins(); ++i)
        REQUIRE(var2[i] == Catch::Approx(s_t2 * w.values[i] * w.values[i]).epsilon(1e-12));

    SpectralWeight mismatched = power_law_weight(build_frequency_grid(4, 4), 0.4);
    REQUIRE_THROWS_AS(timevarying_marginal_cov(s2, {w, mismatched}), std::invalid_argument);
}

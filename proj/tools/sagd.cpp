// Command-line surface: wires the library into reproducible runs.
// Subcommands: noise | rapsd | flow | score-check | train-toy | omit.
// Every run echoes its fully resolved configuration into the output
// directory; rerunning from the echo reproduces the outputs bit for bit.
// Exit status: 0 success, 1 check/run failure, 2 usage error.

#include <CLI11.hpp>

#include "sagd/sagd.hpp"

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace sagd;

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out_dir;
    std::uint64_t seed_flag = 0;
    bool seed_given = false;
};

RunConfig build_config(const CommonArgs& args) {
    RunConfig cfg =
        args.config_path.empty() ? RunConfig() : RunConfig::from_file(args.config_path);
    for (const auto& s : args.sets) cfg.apply_set(s);
    if (args.seed_given) cfg.set("seed", std::to_string(args.seed_flag));
    return cfg;
}

NoiseMode parse_mode(const std::string& mode) {
    if (mode == "raw") return NoiseMode::raw;
    if (mode == "per_sample_std") return NoiseMode::per_sample_std;
    if (mode == "energy_calibrated") return NoiseMode::energy_calibrated;
    throw std::invalid_argument("config: unknown noise mode '" + mode + "'");
}

struct WeightChoice {
    SpectralWeight weight;
    std::string op;
    double band_a = 0.0, band_b = 1.0; // for band energy reporting
};

WeightChoice weight_from_config(const RunConfig& cfg, const FrequencyGrid& grid) {
    WeightChoice out;
    out.op = cfg.get_string("operator", "plw");
    if (out.op == "plw") {
        double alpha = cfg.get_double("alpha", 0.5);
        double floor = cfg.get_double("floor", kDefaultPowerLawFloor);
        out.weight = power_law_weight(grid, alpha, floor);
    } else if (out.op == "bpm") {
        out.band_a = cfg.get_double("a", 0.4);
        out.band_b = cfg.get_double("b", 0.5);
        out.weight = band_pass_weight(grid, out.band_a, out.band_b);
    } else if (out.op == "two_band") {
        double gl = cfg.get_double("gamma_l", 1.0);
        double gh = cfg.get_double("gamma_h", 1.0);
        double al = cfg.get_double("a_l", 0.0), bl = cfg.get_double("b_l", 0.4);
        double ah = cfg.get_double("a_h", 0.5), bh = cfg.get_double("b_h", 1.0);
        out.weight = two_band_weight(grid, gl, {al, bl}, gh, {ah, bh});
        out.band_a = bl;
        out.band_b = ah;
    } else {
        throw std::invalid_argument("config: unknown operator '" + out.op + "'");
    }
    return out;
}

void write_rapsd_csv(const fs::path& out, const RadialSpectrum& spec) {
    CsvWriter csv((out / "rapsd.csv").string(), {"bin_center", "mean_power", "count"});
    for (std::size_t i = 0; i < spec.bin_center.size(); ++i)
        csv.row({spec.bin_center[i], spec.mean_power[i], spec.count[i]});
}

int cmd_noise(const RunConfig& cfg, const fs::path& out) {
    cfg.restrict_keys({"operator", "alpha", "floor", "a", "b", "a_l", "b_l", "a_h", "b_h",
                       "gamma_l", "gamma_h", "height", "width", "batch", "channels", "mode",
                       "bins", "d_lo", "d_hi", "seed"});
    long h = cfg.get_long("height", 16);
    long w = cfg.get_long("width", 16);
    long batch = cfg.get_long("batch", 1024);
    long channels = cfg.get_long("channels", 1);
    NoiseMode mode = parse_mode(cfg.get_string("mode", "raw"));
    std::uint64_t seed = cfg.get_u64("seed", 0);
    int bins = static_cast<int>(cfg.get_long("bins", 24));
    double d_lo = cfg.get_double("d_lo", 0.1);
    double d_hi = cfg.get_double("d_hi", 0.8);

    FrequencyGrid grid = build_frequency_grid(h, w);
    WeightChoice choice = weight_from_config(cfg, grid);
    AnisotropicCovariance cov = make_covariance(choice.weight);
    TensorField samples = cov.sample(batch, channels, seed, mode);
    write_tensor((out / "samples.tf").string(), samples);

    RadialSpectrum spec = rapsd(samples, bins);
    write_rapsd_csv(out, spec);

    CsvWriter summary((out / "summary.csv").string(), {"metric", "value"});
    SlopeFit fit = fit_loglog_slope(spec, d_lo, d_hi);
    summary.row({std::string("rapsd_slope"), fit.slope});
    summary.row({std::string("rapsd_intercept"), fit.intercept});
    summary.row({std::string("rapsd_bins_used"), fit.bins_used});
    summary.row({std::string("energy_calibration"), energy_calibration(choice.weight)});
    if (choice.op != "plw") {
        double in_band = band_energy(samples, choice.band_a, choice.band_b);
        double total = band_energy(samples, 0.0, 1.0);
        summary.row({std::string("in_band_energy"), in_band});
        summary.row({std::string("out_of_band_energy"), total - in_band});
    }
    cfg.echo(out);
    return 0;
}

int cmd_rapsd(const RunConfig& cfg, const fs::path& out) {
    cfg.restrict_keys({"input", "bins", "d_lo", "d_hi", "seed"});
    std::string input = cfg.get_string("input", "");
    if (input.empty()) throw std::invalid_argument("config: rapsd requires input=<tensor file>");
    int bins = static_cast<int>(cfg.get_long("bins", 24));
    double d_lo = cfg.get_double("d_lo", 0.1);
    double d_hi = cfg.get_double("d_hi", 0.8);

    TensorField fields = read_tensor(input).as_field();
    if (!fields.is_image())
        throw std::invalid_argument("rapsd: input tensor must be (batch, channels, h, w)");
    RadialSpectrum spec = rapsd(fields, bins);
    write_rapsd_csv(out, spec);
    CsvWriter summary((out / "summary.csv").string(), {"metric", "value"});
    SlopeFit fit = fit_loglog_slope(spec, d_lo, d_hi);
    summary.row({std::string("rapsd_slope"), fit.slope});
    summary.row({std::string("rapsd_intercept"), fit.intercept});
    cfg.echo(out);
    return 0;
}

GaussianMixture preset_from_config(const RunConfig& cfg) {
    std::string preset = cfg.get_string("preset", "three_mode_2d");
    if (preset == "three_mode_2d") return three_mode_2d();
    if (preset == "two_mode_1d") return two_mode_1d();
    throw std::invalid_argument("config: unknown preset '" + preset + "'");
}

int cmd_flow(const RunConfig& cfg, const fs::path& out) {
    cfg.restrict_keys({"preset", "cov", "tilt", "particles", "steps", "snapshots", "integrator",
                       "t_min", "beta_min", "beta_max", "seed", "svg", "reference_samples"});
    GaussianMixture gm = preset_from_config(cfg);
    double tilt = cfg.get_double("tilt", kDefaultTilt);
    AnisotropicCovariance cov = covariance_preset_2d(cfg.get_string("cov", "iso"), tilt);
    long particles = cfg.get_long("particles", 4096);
    long steps = cfg.get_long("steps", 500);
    long snapshots = cfg.get_long("snapshots", 5);
    std::string integrator_name = cfg.get_string("integrator", "heun");
    Integrator integrator;
    if (integrator_name == "heun") integrator = Integrator::heun;
    else if (integrator_name == "euler") integrator = Integrator::euler;
    else throw std::invalid_argument("config: unknown integrator '" + integrator_name + "'");
    double t_min = cfg.get_double("t_min", 1e-3);
    double beta_min = cfg.get_double("beta_min", 0.1);
    double beta_max = cfg.get_double("beta_max", 20.0);
    std::uint64_t seed = cfg.get_u64("seed", 0);
    bool svg = cfg.get_bool("svg", false);
    long reference = cfg.get_long("reference_samples", 4096);

    double integral = beta_min + 0.5 * (beta_max - beta_min);
    double ab1 = std::exp(-integral);
    ParticleEnsemble prior;
    prior.states = gm_smoothed_at(gm, ab1, 1.0 - ab1, cov).sample(particles, seed);
    prior.time = 1.0;

    BatchedScoreFn score_fn = make_gm_score_fn(gm, cov, beta_min, beta_max);
    BetaFn beta_fn = [beta_min, beta_max](double t) {
        return beta_min + (beta_max - beta_min) * t;
    };
    FlowTrajectory traj =
        integrate_flow(prior, score_fn, cov, beta_fn, steps, snapshots, integrator, t_min);

    std::vector<std::string> header = {"snapshot_index", "t", "particle_id"};
    for (long i = 0; i < gm.dim(); ++i) header.push_back("x_" + std::to_string(i));
    CsvWriter csv((out / "trajectory.csv").string(), header);
    for (std::size_t s = 0; s < traj.snapshots.size(); ++s) {
        for (long j = 0; j < traj.snapshots[s].cols(); ++j) {
            std::vector<CsvCell> row = {static_cast<long>(s), traj.times[s], j};
            for (long i = 0; i < gm.dim(); ++i) row.push_back(traj.snapshots[s](i, j));
            csv.row(row);
        }
    }

    CsvWriter summary((out / "summary.csv").string(), {"metric", "value"});
    if (reference > 0) {
        Eigen::MatrixXd target = gm.sample(reference, mix64(seed ^ 0x7A46E7ULL));
        summary.row({std::string("terminal_energy_distance"),
                     energy_distance(traj.snapshots.back(), target)});
    }
    summary.row({std::string("snapshot_count"), static_cast<long>(traj.snapshots.size())});

    if (svg) {
        SvgPanels panels((out / "flow.svg").string(), static_cast<long>(traj.snapshots.size()),
                         -5.0, 5.0);
        Eigen::MatrixXd target = gm.sample(1024, mix64(seed ^ 0x7A46E8ULL));
        for (std::size_t s = 0; s < traj.snapshots.size(); ++s) {
            panels.scatter(static_cast<long>(s), target, "#bbbbbb", 1.0);
            panels.scatter(static_cast<long>(s), traj.snapshots[s], "#1f77b4", 1.2);
            panels.label(static_cast<long>(s), "t=" + csv_number(traj.times[s]).substr(0, 6));
        }
    }
    cfg.echo(out);
    return 0;
}

int cmd_score_check(const RunConfig& cfg, const fs::path& out) {
    cfg.restrict_keys({"preset", "cov", "tilt", "T", "beta_start", "beta_end", "points", "seed",
                       "grid_lo", "grid_hi", "grid_n"});
    GaussianMixture gm = preset_from_config(cfg);
    double tilt = cfg.get_double("tilt", kDefaultTilt);
    AnisotropicCovariance cov = covariance_preset_2d(cfg.get_string("cov", "iso"), tilt);
    long T = cfg.get_long("T", 1000);
    double beta_start = cfg.get_double("beta_start", 1e-4);
    double beta_end = cfg.get_double("beta_end", 0.02);
    long points = cfg.get_long("points", 100);
    std::uint64_t seed = cfg.get_u64("seed", 0);
    double grid_lo = cfg.get_double("grid_lo", -3.1);
    double grid_hi = cfg.get_double("grid_hi", 3.3);
    long grid_n = cfg.get_long("grid_n", 5);

    DiffusionSchedule sched = make_schedule(T, beta_start, beta_end);
    const bool singular = !cov.full_rank();
    bool any_fail = false;
    CsvWriter report((out / "report.csv").string(), {"check", "status", "value", "tolerance"});
    auto emit = [&](const std::string& name, bool pass, double value, double tol) {
        report.row({name, std::string(pass ? "pass" : "fail"), value, tol});
        if (!pass) any_fail = true;
    };

    { // finite differences of the target log-density against the score
        Eigen::MatrixXd pts = gm.sample(points, mix64(seed ^ 0xFD5ULL));
        ScoreCheckResult fd = finite_diff_score_check(
            [&gm](const Eigen::VectorXd& x) { return gm.log_density(x); },
            [&gm](const Eigen::VectorXd& x) { return gm.score(x); }, pts);
        emit("finite_diff_score", fd.max_abs_error < 1e-6, fd.max_abs_error, 1e-6);
    }

    if (singular) {
        report.row({std::string("score_eps_identity"), std::string("skipped-degenerate"), 0.0,
                    1e-6});
        report.row({std::string("tweedie_identity"), std::string("skipped-degenerate"), 0.0,
                    1e-8});
    } else {
        GaussianStream rng(mix64(seed ^ 0x5C04EULL));
        double worst_eps = 0.0, worst_tweedie = 0.0;
        for (long k = 0; k < points; ++k) {
            long t = 1 + static_cast<long>(rng.next_bits() % static_cast<std::uint64_t>(T));
            Eigen::VectorXd x0 = gm.sample(1, rng.next_bits()).col(0);
            Eigen::VectorXd xi(gm.dim());
            rng.fill_gaussian(xi.data(), gm.dim());
            Eigen::VectorXd x_t = std::sqrt(sched.alpha_bar(t)) * x0 +
                                  sched.sigma(t) * cov.apply_sqrt(Eigen::MatrixXd(xi)).col(0);

            Eigen::VectorXd eps_star = optimal_eps_predictor(gm, x_t, t, sched, cov);
            Eigen::VectorXd converted =
                -(1.0 / sched.sigma(t)) * cov.apply_pinv(Eigen::MatrixXd(eps_star)).col(0);
            Eigen::VectorXd analytic = gm_smoothed_score(gm, t, sched, cov, x_t);
            worst_eps = std::max(worst_eps, (converted - analytic).norm() /
                                                std::max(analytic.norm(), 1e-12));

            auto routes = gm_posterior_mean_routes(gm, x_t, sched.alpha_bar(t),
                                                   sched.sigma(t) * sched.sigma(t), cov);
            worst_tweedie =
                std::max(worst_tweedie, (routes.closed_form - routes.tweedie).norm() /
                                            std::max(1.0, routes.closed_form.norm()));
        }
        emit("score_eps_identity", worst_eps < 1e-6, worst_eps, 1e-6);
        emit("tweedie_identity", worst_tweedie < 1e-8, worst_tweedie, 1e-8);
    }

    { // t -> 0: smoothed score approaches the data score on a fixed grid
        std::vector<double> sigmas = {0.3, 0.1, 0.03, 0.01};
        std::vector<double> errs;
        for (double s : sigmas) {
            double ab = 1.0 - s * s;
            GaussianMixture smoothed = gm_smoothed_at(gm, ab, s * s, cov);
            double worst = 0.0;
            for (long iy = 0; iy < grid_n; ++iy) {
                for (long ix = 0; ix < grid_n; ++ix) {
                    Eigen::VectorXd x(2);
                    x << grid_lo + (grid_hi - grid_lo) * ix / std::max<long>(grid_n - 1, 1),
                        grid_lo + (grid_hi - grid_lo) * iy / std::max<long>(grid_n - 1, 1);
                    Eigen::VectorXd ref = gm.score(x);
                    if (ref.norm() < 0.05) continue; // skip near-critical points
                    worst = std::max(worst, (smoothed.score(x) - ref).norm() / ref.norm());
                }
            }
            errs.push_back(worst);
            char label[48];
            std::snprintf(label, sizeof label, "t0_sweep_sigma_%g", s);
            report.row({std::string(label), std::string("info"), worst, 0.0});
        }
        bool monotone = true;
        for (std::size_t i = 1; i < errs.size(); ++i) monotone &= errs[i] < errs[i - 1];
        emit("t0_sweep_monotone", monotone, monotone ? 1.0 : 0.0, 1.0);
        emit("t0_sweep_final", errs.back() < 1e-2, errs.back(), 1e-2);
    }

    cfg.echo(out);
    return any_fail ? 1 : 0;
}

int cmd_train_toy(const RunConfig& cfg, const fs::path& out) {
    cfg.restrict_keys({"data", "cov", "tilt", "operator", "alpha", "floor", "a", "b", "a_l", "b_l",
                       "a_h", "b_h", "gamma_l", "gamma_h", "height", "width", "steps", "batch",
                       "lr", "lr_floor", "momentum", "embed", "hidden", "T", "beta_start",
                       "beta_end", "seed", "test_points"});
    std::string data = cfg.get_string("data", "gaussian");
    long T = cfg.get_long("T", 1000);
    DiffusionSchedule sched =
        make_schedule(T, cfg.get_double("beta_start", 1e-4), cfg.get_double("beta_end", 0.02));

    TrainConfig train;
    train.steps = cfg.get_long("steps", 20000);
    train.batch = cfg.get_long("batch", 256);
    train.learning_rate = cfg.get_double("lr", 3e-3);
    train.lr_final_fraction = cfg.get_double("lr_floor", 0.15);
    train.momentum = cfg.get_double("momentum", 0.9);
    train.time_embed = cfg.get_long("embed", 32);
    train.hidden = cfg.get_long_list("hidden", {224, 224});
    train.seed = cfg.get_u64("seed", 0);

    DataSampler sampler;
    AnisotropicCovariance cov = AnisotropicCovariance::identity(2);
    GaussianMixture data_gm({1.0}, {Eigen::Vector2d(0.4, -0.2)},
                            {(Eigen::Matrix2d() << 1.0, 0.3, 0.3, 0.7).finished()});
    Eigen::VectorXd const_value = (Eigen::Vector2d() << 0.7, -0.3).finished();
    if (data == "gaussian") {
        sampler = gaussian_sampler(data_gm.mean(0), data_gm.covariance(0));
        cov = covariance_preset_2d(cfg.get_string("cov", "iso"), cfg.get_double("tilt", kDefaultTilt));
    } else if (data == "constant") {
        sampler = constant_sampler(const_value);
        cov = covariance_preset_2d(cfg.get_string("cov", "iso"), cfg.get_double("tilt", kDefaultTilt));
    } else if (data == "shapes") {
        long h = cfg.get_long("height", 16), w = cfg.get_long("width", 16);
        sampler = shape_sampler(h, w);
        cov = make_covariance(weight_from_config(cfg, build_frequency_grid(h, w)).weight);
    } else {
        throw std::invalid_argument("config: unknown data '" + data + "'");
    }

    TrainResult result = train_eps_predictor(sampler, sched, cov, train);

    CsvWriter loss((out / "loss.csv").string(), {"step", "loss"});
    for (std::size_t i = 0; i < result.loss_trace.size(); ++i)
        loss.row({static_cast<long>(i), result.loss_trace[i]});
    save_dense_net(out / "checkpoint", result.net);

    CsvWriter summary((out / "summary.csv").string(), {"metric", "value"});
    double tail = 0.0;
    long tail_n = std::min<std::size_t>(100, result.loss_trace.size());
    for (long i = 0; i < tail_n; ++i)
        tail += result.loss_trace[result.loss_trace.size() - 1 - i];
    summary.row({std::string("final_loss"), tail / tail_n});

    { // gradient check on a probe batch
        long d = result.net.data_dim();
        TensorField probe = sampler(8, mix64(train.seed ^ 0x9affULL));
        std::vector<long> ts(8, T / 2);
        Eigen::MatrixXd input = result.net.assemble_input(probe.as_matrix(), ts);
        Eigen::MatrixXd target = Eigen::MatrixXd::Zero(d, 8);
        summary.row({std::string("gradient_check_max_rel_error"),
                     gradient_check(result.net, input, target, 500)});
    }

    if (data == "gaussian" || data == "constant") {
        long test_points = cfg.get_long("test_points", 500);
        GaussianStream rng(mix64(train.seed ^ 0x7E57ULL));
        double num = 0.0, den = 0.0;
        for (long k = 0; k < test_points; ++k) {
            long t = 1 + static_cast<long>(rng.next_bits() % static_cast<std::uint64_t>(T));
            TensorField x0f = sampler(1, rng.next_bits());
            Eigen::VectorXd x0 = x0f.as_matrix().col(0);
            Eigen::VectorXd xi(2);
            rng.fill_gaussian(xi.data(), 2);
            Eigen::VectorXd eps = cov.apply_sqrt(Eigen::MatrixXd(xi)).col(0);
            Eigen::VectorXd x_t = std::sqrt(sched.alpha_bar(t)) * x0 + sched.sigma(t) * eps;
            Eigen::VectorXd oracle =
                data == "gaussian"
                    ? optimal_eps_predictor(data_gm, x_t, t, sched, cov)
                    : Eigen::VectorXd((x_t - std::sqrt(sched.alpha_bar(t)) * const_value) /
                                      sched.sigma(t));
            std::vector<long> ts = {t};
            Eigen::VectorXd pred = result.net.predict(x_t, ts).col(0);
            num += (pred - oracle).squaredNorm();
            den += oracle.squaredNorm();
        }
        summary.row({std::string("oracle_rel_error"), std::sqrt(num / den)});
    }
    cfg.echo(out);
    return 0;
}

int cmd_omit(const RunConfig& cfg, const fs::path& out) {
    cfg.restrict_keys({"height", "width", "a_c", "b_c", "gamma_c", "data", "pgm_path", "steps",
                       "batch", "lr", "lr_floor", "momentum", "embed", "hidden", "T", "beta_start",
                       "beta_end", "seed", "eval_samples", "clean_samples", "sample_stride"});
    long h = cfg.get_long("height", 16), w = cfg.get_long("width", 16);
    double a_c = cfg.get_double("a_c", 0.4), b_c = cfg.get_double("b_c", 0.5);
    long T = cfg.get_long("T", 1000);
    DiffusionSchedule sched =
        make_schedule(T, cfg.get_double("beta_start", 1e-4), cfg.get_double("beta_end", 0.02));

    TrainConfig train;
    train.steps = cfg.get_long("steps", 20000);
    train.batch = cfg.get_long("batch", 32);
    train.learning_rate = cfg.get_double("lr", 1e-3);
    train.lr_final_fraction = cfg.get_double("lr_floor", 0.15);
    train.momentum = cfg.get_double("momentum", 0.9);
    train.time_embed = cfg.get_long("embed", 32);
    train.hidden = cfg.get_long_list("hidden", {256, 256});
    train.seed = cfg.get_u64("seed", 0);

    OmissionOptions opts;
    opts.gamma_c = cfg.get_double("gamma_c", 1.0);
    opts.eval_samples = cfg.get_long("eval_samples", 256);
    opts.clean_samples = cfg.get_long("clean_samples", 2048);
    opts.sample_stride = cfg.get_long("sample_stride", 20);

    DataSampler clean;
    std::string data = cfg.get_string("data", "shapes");
    if (data == "shapes") {
        clean = shape_sampler(h, w);
    } else if (data == "pgm") {
        std::string path = cfg.get_string("pgm_path", "");
        if (path.empty()) throw std::invalid_argument("config: data=pgm requires pgm_path");
        TensorField image = read_pgm(path);
        if (image.height() != h || image.width() != w)
            throw std::invalid_argument("config: pgm dimensions do not match height/width");
        clean = [image](long count, std::uint64_t) {
            TensorField batch = TensorField::images(count, 1, image.height(), image.width());
            for (long b = 0; b < count; ++b)
                std::copy(image.data.begin(), image.data.end(), batch.sample(b));
            return batch;
        };
    } else {
        throw std::invalid_argument("config: unknown data '" + data + "'");
    }

    OmissionReport report = omission_experiment(clean, h, w, {a_c, b_c}, sched, train, opts);

    CsvWriter csv((out / "report.csv").string(),
                  {"band_a", "band_b", "gamma_c", "clean_band_energy", "corrupted_band_energy",
                   "baseline_band_energy", "sagd_band_energy", "baseline_out_of_band_distance",
                   "sagd_out_of_band_distance", "sagd_score_null_component",
                   "baseline_final_loss", "sagd_final_loss"});
    csv.row({report.band_a, report.band_b, report.gamma_c, report.clean_band_energy,
             report.corrupted_band_energy, report.baseline_band_energy, report.sagd_band_energy,
             report.baseline_out_of_band_distance, report.sagd_out_of_band_distance,
             report.sagd_score_null_component, report.baseline_final_loss,
             report.sagd_final_loss});
    cfg.echo(out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectrally anisotropic Gaussian diffusion toolbox"};
    app.require_subcommand(1);

    struct Sub {
        std::string name;
        std::string description;
        int (*run)(const RunConfig&, const fs::path&);
    };
    const std::vector<Sub> subs = {
        {"noise", "sample shaped noise and its radial spectrum", cmd_noise},
        {"rapsd", "radially averaged power spectrum of a tensor file", cmd_rapsd},
        {"flow", "probability-flow transport of a particle ensemble", cmd_flow},
        {"score-check", "score/Tweedie/limit identity checks", cmd_score_check},
        {"train-toy", "train the toy epsilon-predictor", cmd_train_toy},
        {"omit", "selective-omission experiment", cmd_omit},
    };

    std::vector<CommonArgs> args(subs.size());
    std::vector<const Sub*> chosen;
    for (std::size_t i = 0; i < subs.size(); ++i) {
        CLI::App* sc = app.add_subcommand(subs[i].name, subs[i].description);
        sc->add_option("--config", args[i].config_path, "config file (key=value lines)");
        sc->add_option("--set", args[i].sets, "override: key=value (repeatable)");
        sc->add_option("--out", args[i].out_dir, "output directory")->required();
        sc->add_option("--seed", args[i].seed_flag, "seed override")
            ->each([&args, i](const std::string&) { args[i].seed_given = true; });
        sc->callback([&chosen, &subs, i]() { chosen.push_back(&subs[i]); });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    const Sub* sub = chosen.front();
    std::size_t idx = static_cast<std::size_t>(sub - subs.data());
    try {
        RunConfig cfg = build_config(args[idx]);
        fs::path out(args[idx].out_dir);
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec) throw std::runtime_error("cannot create output directory " + out.string());
        int rc = sub->run(cfg, out);
        return rc;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

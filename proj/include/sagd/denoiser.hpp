#pragma once

#include "sagd/diffusion.hpp"
#include "sagd/errors.hpp"
#include "sagd/rng.hpp"
#include "sagd/schedule.hpp"
#include "sagd/spectral.hpp"
#include "sagd/tensor_field.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace sagd {

struct TrainConfig {
    long steps = 20000;
    long batch = 64;
    double learning_rate = 1e-3;
    double lr_final_fraction = 0.05; // cosine decay floor; 1 => constant lr
    double momentum = 0.9;           // 0 => plain SGD
    std::uint64_t seed = 1;
    long time_embed = 32; // even
    std::vector<long> hidden = {128, 128};

    void validate() const {
        if (steps < 1 || batch < 1 || !(learning_rate > 0.0) || momentum < 0.0 ||
            !(lr_final_fraction > 0.0) || lr_final_fraction > 1.0 || time_embed < 2 ||
            time_embed % 2 != 0 || hidden.empty())
            throw std::invalid_argument("TrainConfig: nonpositive or malformed hyperparameter");
        for (long hdim : hidden)
            if (hdim < 1) throw std::invalid_argument("TrainConfig: nonpositive hidden width");
    }
};

/// Fully connected epsilon-predictor: input is the flattened noisy sample
/// concatenated with a sinusoidal embedding of the timestep; hidden layers
/// use SiLU (smooth, so finite-difference gradient checks are clean); the
/// output layer is linear with the data dimension.
class DenseNet {
public:
    enum class Activation { silu, identity };

    DenseNet(long data_dim, long time_embed, const std::vector<long>& hidden, std::uint64_t seed,
             Activation act = Activation::silu, long max_step = 1000)
        : data_dim_(data_dim), time_embed_(time_embed), max_step_(max_step), act_(act) {
        if (data_dim < 1 || time_embed < 2 || time_embed % 2 != 0 || max_step < 1)
            throw std::invalid_argument("DenseNet: bad dimensions");
        std::vector<long> widths;
        widths.push_back(data_dim + time_embed);
        for (long hdim : hidden) widths.push_back(hdim);
        widths.push_back(data_dim);
        GaussianStream rng(mix64(seed ^ 0x8E51ECAB01CULL));
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            Eigen::MatrixXd w(widths[l + 1], widths[l]);
            double scale = 1.0 / std::sqrt(static_cast<double>(widths[l]));
            for (long i = 0; i < w.size(); ++i) w.data()[i] = scale * rng.next_gaussian();
            weights_.push_back(std::move(w));
            biases_.push_back(Eigen::VectorXd::Zero(widths[l + 1]));
        }
    }

    long data_dim() const { return data_dim_; }
    long time_embed_dim() const { return time_embed_; }
    long max_step() const { return max_step_; }
    long layer_count() const { return static_cast<long>(weights_.size()); }
    const Eigen::MatrixXd& weight(long l) const { return weights_[l]; }
    const Eigen::VectorXd& bias(long l) const { return biases_[l]; }
    Eigen::MatrixXd& weight(long l) { return weights_[l]; }
    Eigen::VectorXd& bias(long l) { return biases_[l]; }

    /// Sinusoidal embedding of u = t / max_step, frequencies geometric from
    /// pi to 512 pi.
    static Eigen::VectorXd time_embedding(long t, long max_step, long size) {
        Eigen::VectorXd e(size);
        long half = size / 2;
        double u = static_cast<double>(t) / static_cast<double>(max_step);
        for (long j = 0; j < half; ++j) {
            double freq =
                M_PI * std::exp(std::log(512.0) * static_cast<double>(j) / std::max<long>(half - 1, 1));
            e[2 * j] = std::sin(freq * u);
            e[2 * j + 1] = std::cos(freq * u);
        }
        return e;
    }

    /// Stack [x; embed(t_i)] columnwise.
    Eigen::MatrixXd assemble_input(const Eigen::MatrixXd& x, const std::vector<long>& ts) const {
        if (x.rows() != data_dim_ || x.cols() != static_cast<long>(ts.size()))
            throw std::invalid_argument("DenseNet: input shape mismatch");
        Eigen::MatrixXd in(data_dim_ + time_embed_, x.cols());
        in.topRows(data_dim_) = x;
        for (long j = 0; j < x.cols(); ++j)
            in.col(j).tail(time_embed_) = time_embedding(ts[j], max_step_, time_embed_);
        return in;
    }

    struct Cache {
        Eigen::MatrixXd input;
        std::vector<Eigen::MatrixXd> pre;  // pre-activations per layer
        std::vector<Eigen::MatrixXd> post; // activations per layer
    };

    Eigen::MatrixXd forward(const Eigen::MatrixXd& input, Cache* cache = nullptr) const {
        Eigen::MatrixXd a = input;
        if (cache) {
            cache->input = input;
            cache->pre.clear();
            cache->post.clear();
        }
        for (long l = 0; l < layer_count(); ++l) {
            Eigen::MatrixXd z = (weights_[l] * a).colwise() + biases_[l];
            if (l + 1 < layer_count()) {
                a = activate(z);
            } else {
                a = z;
            }
            if (cache) {
                cache->pre.push_back(std::move(z));
                cache->post.push_back(a);
            }
        }
        return a;
    }

    Eigen::MatrixXd predict(const Eigen::MatrixXd& x, const std::vector<long>& ts) const {
        return forward(assemble_input(x, ts));
    }

    struct Gradients {
        std::vector<Eigen::MatrixXd> w;
        std::vector<Eigen::VectorXd> b;
    };

    /// Backpropagate dL/d(output); returns parameter gradients.
    Gradients backward(const Cache& cache, const Eigen::MatrixXd& dout) const {
        Gradients g;
        g.w.resize(layer_count());
        g.b.resize(layer_count());
        Eigen::MatrixXd delta = dout;
        for (long l = layer_count() - 1; l >= 0; --l) {
            if (l + 1 < layer_count()) delta = delta.cwiseProduct(activate_grad(cache.pre[l]));
            const Eigen::MatrixXd& below = l == 0 ? cache.input : cache.post[l - 1];
            g.w[l] = delta * below.transpose();
            g.b[l] = delta.rowwise().sum();
            if (l > 0) delta = weights_[l].transpose() * delta;
        }
        return g;
    }

    long parameter_count() const {
        long n = 0;
        for (long l = 0; l < layer_count(); ++l) n += weights_[l].size() + biases_[l].size();
        return n;
    }

    double* parameter(long index) {
        for (long l = 0; l < layer_count(); ++l) {
            if (index < weights_[l].size()) return weights_[l].data() + index;
            index -= weights_[l].size();
            if (index < biases_[l].size()) return biases_[l].data() + index;
            index -= biases_[l].size();
        }
        throw std::invalid_argument("DenseNet::parameter: index out of range");
    }

    static double gradient_entry(const Gradients& g, long index) {
        for (std::size_t l = 0; l < g.w.size(); ++l) {
            if (index < g.w[l].size()) return g.w[l].data()[index];
            index -= g.w[l].size();
            if (index < g.b[l].size()) return g.b[l].data()[index];
            index -= g.b[l].size();
        }
        throw std::invalid_argument("DenseNet::gradient_entry: index out of range");
    }

private:
    Eigen::MatrixXd activate(const Eigen::MatrixXd& z) const {
        if (act_ == Activation::identity) return z;
        return z.array() / (1.0 + (-z.array()).exp()); // SiLU: z * sigmoid(z)
    }

    Eigen::MatrixXd activate_grad(const Eigen::MatrixXd& z) const {
        if (act_ == Activation::identity) return Eigen::MatrixXd::Ones(z.rows(), z.cols());
        Eigen::ArrayXXd sig = 1.0 / (1.0 + (-z.array()).exp());
        return sig * (1.0 + z.array() * (1.0 - sig));
    }

    long data_dim_;
    long time_embed_;
    long max_step_;
    Activation act_;
    std::vector<Eigen::MatrixXd> weights_;
    std::vector<Eigen::VectorXd> biases_;
};

/// Mean-squared epsilon regression loss and its output gradient.
inline double eps_loss(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target,
                       Eigen::MatrixXd* dout = nullptr) {
    const double scale = 1.0 / static_cast<double>(prediction.size());
    Eigen::MatrixXd diff = prediction - target;
    if (dout) *dout = 2.0 * scale * diff;
    return diff.squaredNorm() * scale;
}

/// Compare analytic gradients against central finite differences on up to
/// `max_params` randomly chosen parameters. Returns the max relative error.
inline double gradient_check(DenseNet& net, const Eigen::MatrixXd& input,
                             const Eigen::MatrixXd& target, long max_params = 1000,
                             double h = 1e-5) {
    DenseNet::Cache cache;
    Eigen::MatrixXd dout;
    Eigen::MatrixXd out = net.forward(input, &cache);
    eps_loss(out, target, &dout);
    DenseNet::Gradients grads = net.backward(cache, dout);

    GaussianStream rng(0xC0FFEE123ULL);
    const long total = net.parameter_count();
    const long checks = std::min(max_params, total);
    double worst = 0.0;
    for (long k = 0; k < checks; ++k) {
        long idx = static_cast<long>(rng.next_bits() % static_cast<std::uint64_t>(total));
        double analytic = DenseNet::gradient_entry(grads, idx);
        double* p = net.parameter(idx);
        double saved = *p;
        *p = saved + h;
        double lp = eps_loss(net.forward(input), target);
        *p = saved - h;
        double lm = eps_loss(net.forward(input), target);
        *p = saved;
        double fd = (lp - lm) / (2.0 * h);
        double err = std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-6});
        worst = std::max(worst, err);
    }
    return worst;
}

/// Batch source of clean samples: (count, seed) -> TensorField.
using DataSampler = std::function<TensorField(long, std::uint64_t)>;

struct TrainResult {
    DenseNet net;
    std::vector<double> loss_trace;
};

/// Minimize E || eps_w - net(x_t, t) ||^2 over uniformly sampled timesteps,
/// with x_t = sqrt(alpha_bar_t) x0 + sigma_t eps_w and eps_w ~ N(0, Sigma_w).
/// Momentum SGD; deterministic given config.seed.
inline TrainResult train_eps_predictor(const DataSampler& dataset, const DiffusionSchedule& sched,
                                       const AnisotropicCovariance& cov,
                                       const TrainConfig& config) {
    config.validate();
    TensorField probe = dataset(1, derive_stream(config.seed, 0, 7));
    const long d = probe.sample_size();
    const long channels = probe.channels();

    DenseNet net(d, config.time_embed, config.hidden, config.seed,
                 DenseNet::Activation::silu, sched.steps());
    DenseNet::Gradients velocity;
    velocity.w.resize(net.layer_count());
    velocity.b.resize(net.layer_count());
    for (long l = 0; l < net.layer_count(); ++l) {
        velocity.w[l] = Eigen::MatrixXd::Zero(net.weight(l).rows(), net.weight(l).cols());
        velocity.b[l] = Eigen::VectorXd::Zero(net.bias(l).size());
    }

    std::vector<double> trace;
    trace.reserve(config.steps);
    const long T = sched.steps();
    std::vector<long> ts(config.batch);
    for (long step = 0; step < config.steps; ++step) {
        TensorField x0 = dataset(config.batch, derive_stream(config.seed, step, 1));
        if (x0.batch() != config.batch || x0.sample_size() != d)
            throw std::invalid_argument("train_eps_predictor: dataset shape changed");
        TensorField eps =
            cov.sample(config.batch, channels, derive_stream(config.seed, step, 2), NoiseMode::raw);

        GaussianStream trng(derive_stream(config.seed, step, 3));
        for (long i = 0; i < config.batch; ++i)
            ts[i] = 1 + static_cast<long>(trng.next_bits() % static_cast<std::uint64_t>(T));

        Eigen::MatrixXd x_t(d, config.batch);
        auto x0m = x0.as_matrix();
        auto epsm = eps.as_matrix();
        for (long i = 0; i < config.batch; ++i)
            x_t.col(i) =
                std::sqrt(sched.alpha_bar(ts[i])) * x0m.col(i) + sched.sigma(ts[i]) * epsm.col(i);

        DenseNet::Cache cache;
        Eigen::MatrixXd out = net.forward(net.assemble_input(x_t, ts), &cache);
        Eigen::MatrixXd dout;
        double loss = eps_loss(out, epsm, &dout);
        if (!std::isfinite(loss))
            throw divergence_error("train_eps_predictor: non-finite loss", step);
        trace.push_back(loss);

        DenseNet::Gradients g = net.backward(cache, dout);
        double decay = 0.5 * (1.0 + std::cos(M_PI * step / config.steps));
        double lr = config.learning_rate *
                    (config.lr_final_fraction + (1.0 - config.lr_final_fraction) * decay);
        for (long l = 0; l < net.layer_count(); ++l) {
            velocity.w[l] = config.momentum * velocity.w[l] - lr * g.w[l];
            velocity.b[l] = config.momentum * velocity.b[l] - lr * g.b[l];
            net.weight(l) += velocity.w[l];
            net.bias(l) += velocity.b[l];
        }
    }
    return {std::move(net), std::move(trace)};
}

/// Field-level epsilon predictor backed by a trained net (for reverse_sample).
inline std::function<TensorField(const TensorField&, long)> net_eps_predictor(
    const DenseNet& net) {
    return [&net](const TensorField& x_t, long t) {
        std::vector<long> ts(x_t.batch(), t);
        Eigen::MatrixXd out = net.predict(x_t.as_matrix(), ts);
        TensorField eps(x_t.shape);
        eps.as_matrix() = out;
        return eps;
    };
}

} // namespace sagd

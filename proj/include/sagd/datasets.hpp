#pragma once

#include "sagd/fft.hpp"
#include "sagd/gaussian_mixture.hpp"
#include "sagd/rng.hpp"
#include "sagd/spectral.hpp"
#include "sagd/tensor_field.hpp"

#include <cmath>
#include <complex>
#include <vector>

namespace sagd {

/// Procedural band-limited shape fields for the image-scale toys.
///
/// Each sample is a superposition of 2..4 anti-aliased discs and 1..2
/// oriented bars with random signs, then spectrally conditioned: a mild
/// high-frequency boost (d + 0.05)^0.35 followed by a hard cutoff at
/// d = 0.85, so the fields carry measurable energy across low and mid bands
/// while staying band-limited. Finally each field is normalized to spatial
/// standard deviation 0.5. Fully determined by (seed, sample index).
inline TensorField shape_fields(long count, long height, long width, std::uint64_t seed) {
    if (count < 1 || height < 1 || width < 1)
        throw std::invalid_argument("shape_fields: bad dimensions");
    TensorField out = TensorField::images(count, 1, height, width);
    FrequencyGrid grid = build_frequency_grid(height, width);
    const long n = height * width;
    std::vector<std::complex<double>> buf(n);

    for (long s = 0; s < count; ++s) {
        GaussianStream rng(derive_stream(seed, static_cast<std::uint64_t>(s), 0));
        auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * rng.next_uniform(); };
        double* field = out.plane(s, 0);

        long discs = 2 + static_cast<long>(rng.next_bits() % 3);
        for (long k = 0; k < discs; ++k) {
            double cx = uniform(1.0, width - 1.0);
            double cy = uniform(1.0, height - 1.0);
            double radius = uniform(1.5, 0.28 * std::min(height, width));
            double amp = (rng.next_bits() & 1 ? 1.0 : -1.0) * uniform(0.4, 1.0);
            for (long y = 0; y < height; ++y) {
                for (long x = 0; x < width; ++x) {
                    double r = std::hypot(x - cx, y - cy);
                    double edge = std::clamp(radius - r + 0.5, 0.0, 1.0); // 1px soft edge
                    field[y * width + x] += amp * edge;
                }
            }
        }
        long bars = 1 + static_cast<long>(rng.next_bits() % 2);
        for (long k = 0; k < bars; ++k) {
            double cx = uniform(1.0, width - 1.0);
            double cy = uniform(1.0, height - 1.0);
            double angle = uniform(0.0, M_PI);
            double len = uniform(0.3, 0.6) * std::min(height, width);
            double thick = uniform(0.6, 1.4);
            double amp = (rng.next_bits() & 1 ? 1.0 : -1.0) * uniform(0.4, 1.0);
            double ca = std::cos(angle), sa = std::sin(angle);
            for (long y = 0; y < height; ++y) {
                for (long x = 0; x < width; ++x) {
                    double u = (x - cx) * ca + (y - cy) * sa;
                    double v = -(x - cx) * sa + (y - cy) * ca;
                    double along = std::clamp(0.5 * len - std::abs(u) + 0.5, 0.0, 1.0);
                    double across = std::clamp(thick - std::abs(v) + 0.5, 0.0, 1.0);
                    field[y * width + x] += amp * along * across;
                }
            }
        }

        // Spectral conditioning: mild high boost, band limit, renormalize.
        for (long i = 0; i < n; ++i) buf[i] = field[i];
        Dft2::forward(buf.data(), height, width);
        for (long i = 0; i < n; ++i) {
            double d = grid.norm_radius[i];
            double shaping = std::pow(d + 0.05, 0.35);
            if (d > 0.85) shaping = 0.0;
            buf[i] *= shaping;
        }
        Dft2::inverse(buf.data(), height, width);
        double mean = 0.0;
        for (long i = 0; i < n; ++i) {
            field[i] = buf[i].real();
            mean += field[i];
        }
        mean /= n;
        double var = 0.0;
        for (long i = 0; i < n; ++i) var += (field[i] - mean) * (field[i] - mean);
        var /= n;
        double scale = 0.5 / (std::sqrt(var) + 1e-8);
        for (long i = 0; i < n; ++i) field[i] = (field[i] - mean) * scale;
    }
    return out;
}

/// Clean x0 sampler over shape fields, compatible with train_eps_predictor.
inline std::function<TensorField(long, std::uint64_t)> shape_sampler(long height, long width) {
    return [height, width](long count, std::uint64_t seed) {
        return shape_fields(count, height, width, seed);
    };
}

/// Gaussian x0 sampler (single-component mixture) over (batch, dim) vectors.
inline std::function<TensorField(long, std::uint64_t)> gaussian_sampler(Eigen::VectorXd mean,
                                                                        Eigen::MatrixXd cov) {
    GaussianMixture gm({1.0}, {std::move(mean)}, {std::move(cov)});
    return [gm](long count, std::uint64_t seed) {
        return TensorField::from_matrix(gm.sample(count, seed));
    };
}

/// Constant x0 sampler (zero-variance data).
inline std::function<TensorField(long, std::uint64_t)> constant_sampler(Eigen::VectorXd value) {
    return [value](long count, std::uint64_t) {
        Eigen::MatrixXd m = value.replicate(1, count);
        return TensorField::from_matrix(m);
    };
}

} // namespace sagd

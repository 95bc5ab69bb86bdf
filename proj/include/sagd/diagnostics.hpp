#pragma once

#include "sagd/fft.hpp"
#include "sagd/rng.hpp"
#include "sagd/spectral.hpp"
#include "sagd/tensor_field.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace sagd {

/// Radially averaged power spectral density over normalized radius d.
struct RadialSpectrum {
    std::vector<double> bin_center; // mean d of contributing bins
    std::vector<double> mean_power;
    std::vector<long> count; // frequency bins per radial bin (0 => bin absent)
};

/// RAPSD of a batch of fields: unitary per-bin power, averaged over batch and
/// channels, then over equal-width radial bins in d. The DC bin is excluded.
/// Powers are averaged before any log is taken.
inline RadialSpectrum rapsd(const TensorField& fields, int bins) {
    if (bins < 4) throw std::invalid_argument("rapsd: need at least 4 bins");
    if (!fields.is_image()) throw std::invalid_argument("rapsd: image fields required");
    if (fields.batch() < 1) throw std::invalid_argument("rapsd: empty batch");
    const long h = fields.height(), w = fields.width(), n = h * w;
    FrequencyGrid grid = build_frequency_grid(h, w);

    std::vector<double> power(n, 0.0);
    std::vector<std::complex<double>> buf(n);
    long planes = 0;
    for (long b = 0; b < fields.batch(); ++b) {
        for (long c = 0; c < fields.channels(); ++c) {
            unitary_dft(fields.plane(b, c), h, w, buf.data());
            for (long i = 0; i < n; ++i) power[i] += std::norm(buf[i]);
            ++planes;
        }
    }

    std::vector<double> sum(bins, 0.0), dsum(bins, 0.0);
    std::vector<long> count(bins, 0);
    for (long i = 0; i < n; ++i) {
        double d = grid.norm_radius[i];
        if (grid.radius[i] == 0.0) continue; // DC
        int bin = std::min(bins - 1, static_cast<int>(d * bins));
        sum[bin] += power[i] / planes;
        dsum[bin] += d;
        ++count[bin];
    }

    RadialSpectrum out;
    for (int bin = 0; bin < bins; ++bin) {
        if (count[bin] == 0) continue;
        out.bin_center.push_back(dsum[bin] / count[bin]);
        out.mean_power.push_back(sum[bin] / count[bin]);
        out.count.push_back(count[bin]);
    }
    return out;
}

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    long bins_used = 0;
    long bins_excluded = 0; // nonpositive-power bins dropped from the fit
};

/// OLS fit of log(power) against log(d) over bin centers in [d_lo, d_hi].
inline SlopeFit fit_loglog_slope(const RadialSpectrum& spec, double d_lo, double d_hi) {
    std::vector<double> xs, ys;
    long excluded = 0;
    for (std::size_t i = 0; i < spec.bin_center.size(); ++i) {
        double d = spec.bin_center[i];
        if (d < d_lo || d > d_hi) continue;
        if (!(spec.mean_power[i] > 0.0)) {
            ++excluded;
            continue;
        }
        xs.push_back(std::log(d));
        ys.push_back(std::log(spec.mean_power[i]));
    }
    if (xs.size() < 3)
        throw std::invalid_argument("fit_loglog_slope: fewer than 3 usable bins in range");
    double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    SlopeFit fit;
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / n;
    fit.bins_used = static_cast<long>(xs.size());
    fit.bins_excluded = excluded;
    return fit;
}

/// Mean (over samples and channels) Fourier power inside a <= d <= b.
/// Equals sum_f |X_f|^2 / (H W) over the band with the unnormalized DFT,
/// so the full band recovers the spatial sum of squares (Parseval).
inline double band_energy(const TensorField& fields, double a, double b) {
    if (!(a >= 0.0) || !(b <= 1.0) || a > b) throw std::invalid_argument("band_energy: bad band");
    if (!fields.is_image()) throw std::invalid_argument("band_energy: image fields required");
    const long h = fields.height(), w = fields.width(), n = h * w;
    FrequencyGrid grid = build_frequency_grid(h, w);
    std::vector<std::complex<double>> buf(n);
    double total = 0.0;
    long planes = 0;
    for (long bidx = 0; bidx < fields.batch(); ++bidx) {
        for (long c = 0; c < fields.channels(); ++c) {
            unitary_dft(fields.plane(bidx, c), h, w, buf.data());
            for (long i = 0; i < n; ++i) {
                double d = grid.norm_radius[i];
                if (d >= a && d <= b) total += std::norm(buf[i]);
            }
            ++planes;
        }
    }
    return total / planes;
}

struct FourierCovStats {
    std::vector<double> variance;  // per frequency bin
    double max_offdiag_correlation = 0.0;
    long pairs_checked = 0;
};

/// Per-bin empirical variance of unitary Fourier coefficients, plus the
/// largest |correlation| over a random subset of bin pairs (at most 10^4;
/// forming the full bin-pair covariance would be quadratic in H*W).
/// Correlations use the Hermitian pairing E[(X_i - m_i) conj(X_j - m_j)].
inline FourierCovStats empirical_fourier_cov(const TensorField& fields, long max_pairs = 10000) {
    if (!fields.is_image())
        throw std::invalid_argument("empirical_fourier_cov: image fields required");
    const long N = fields.batch() * fields.channels();
    if (N < 100) throw std::invalid_argument("empirical_fourier_cov: need at least 100 samples");
    const long h = fields.height(), w = fields.width(), n = h * w;

    long pairs = std::min(max_pairs, n * (n - 1) / 2);
    std::vector<std::pair<long, long>> idx(pairs);
    GaussianStream rng(0x5AFDC0FFEEULL); // fixed: pair choice is part of the statistic
    for (auto& p : idx) {
        long i = static_cast<long>(rng.next_bits() % static_cast<std::uint64_t>(n));
        long j = static_cast<long>(rng.next_bits() % static_cast<std::uint64_t>(n));
        if (i == j) j = (j + 1) % n;
        p = {i, j};
    }

    std::vector<std::complex<double>> mean(n, 0.0), buf(n);
    std::vector<double> abs2(n, 0.0);
    std::vector<std::complex<double>> cross(pairs, 0.0);
    for (long b = 0; b < fields.batch(); ++b) {
        for (long c = 0; c < fields.channels(); ++c) {
            unitary_dft(fields.plane(b, c), h, w, buf.data());
            for (long i = 0; i < n; ++i) {
                mean[i] += buf[i];
                abs2[i] += std::norm(buf[i]);
            }
            for (long p = 0; p < pairs; ++p)
                cross[p] += buf[idx[p].first] * std::conj(buf[idx[p].second]);
        }
    }

    FourierCovStats out;
    out.variance.resize(n);
    for (long i = 0; i < n; ++i) {
        mean[i] /= static_cast<double>(N);
        out.variance[i] = abs2[i] / N - std::norm(mean[i]);
    }
    out.pairs_checked = pairs;
    for (long p = 0; p < pairs; ++p) {
        long i = idx[p].first, j = idx[p].second;
        double denom = std::sqrt(out.variance[i] * out.variance[j]);
        if (!(denom > 0.0)) continue;
        std::complex<double> cov = cross[p] / static_cast<double>(N) - mean[i] * std::conj(mean[j]);
        out.max_offdiag_correlation = std::max(out.max_offdiag_correlation, std::abs(cov) / denom);
    }
    return out;
}

/// Energy distance between two columnwise sample sets, V-statistic form:
///   2 E||A - B|| - E||A - A'|| - E||B - B'||.
/// Nonnegative by construction and exactly zero when the multisets coincide.
inline double energy_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.cols() == 0 || b.cols() == 0) throw std::invalid_argument("energy_distance: empty set");
    if (a.rows() != b.rows()) throw std::invalid_argument("energy_distance: dim mismatch");
    const long n = a.cols(), m = b.cols();
    double cross = 0.0;
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < m; ++j) cross += (a.col(i) - b.col(j)).norm();
    double within_a = 0.0;
    for (long i = 0; i < n; ++i)
        for (long j = i + 1; j < n; ++j) within_a += (a.col(i) - a.col(j)).norm();
    double within_b = 0.0;
    for (long i = 0; i < m; ++i)
        for (long j = i + 1; j < m; ++j) within_b += (b.col(i) - b.col(j)).norm();
    return 2.0 * cross / (static_cast<double>(n) * m) -
           2.0 * within_a / (static_cast<double>(n) * n) -
           2.0 * within_b / (static_cast<double>(m) * m);
}

inline double energy_distance(const TensorField& a, const TensorField& b) {
    if (a.sample_size() != b.sample_size())
        throw std::invalid_argument("energy_distance: dim mismatch");
    return energy_distance(Eigen::MatrixXd(a.as_matrix()), Eigen::MatrixXd(b.as_matrix()));
}

struct ScoreCheckResult {
    double max_abs_error = 0.0;
    double max_rel_error = 0.0;
};

/// Central finite differences of log_density against the analytic score at
/// the given points (columns).
template <typename LogDensityFn, typename ScoreFn>
ScoreCheckResult finite_diff_score_check(LogDensityFn&& log_density, ScoreFn&& score,
                                         const Eigen::MatrixXd& points, double h = 1e-5) {
    ScoreCheckResult res;
    for (long j = 0; j < points.cols(); ++j) {
        Eigen::VectorXd x = points.col(j);
        Eigen::VectorXd analytic = score(x);
        for (long i = 0; i < x.size(); ++i) {
            Eigen::VectorXd xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            double fd = (log_density(xp) - log_density(xm)) / (2.0 * h);
            double err = std::abs(fd - analytic[i]);
            res.max_abs_error = std::max(res.max_abs_error, err);
            res.max_rel_error =
                std::max(res.max_rel_error, err / std::max(1.0, std::abs(analytic[i])));
        }
    }
    return res;
}

} // namespace sagd

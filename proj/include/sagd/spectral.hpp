#pragma once

#include "sagd/errors.hpp"
#include "sagd/fft.hpp"
#include "sagd/rng.hpp"
#include "sagd/tensor_field.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sagd {

/// DFT frequency for index k of an n-point axis, in cycles/pixel.
/// Standard DFT ordering: 0, 1/n, ..., then the negative half; DC at k=0.
inline double dft_frequency(long k, long n) {
    return (k <= (n - 1) / 2) ? static_cast<double>(k) / n
                              : static_cast<double>(k - n) / n;
}

/// Per-bin frequency coordinates of an h x w grid: axis frequencies in
/// [-1/2, 1/2), the radial frequency r, and the radius normalized by the
/// grid maximum (d in [0,1], used for band cutoffs).
struct FrequencyGrid {
    long height = 0;
    long width = 0;
    std::vector<double> fx;          // width entries
    std::vector<double> fy;          // height entries
    std::vector<double> radius;      // h*w, row-major
    std::vector<double> norm_radius; // radius / max_radius (0 on a 1x1 grid)
    double max_radius = 0.0;

    long bins() const { return height * width; }
};

inline FrequencyGrid build_frequency_grid(long height, long width) {
    if (height < 1 || width < 1)
        throw std::invalid_argument("build_frequency_grid: dimensions must be >= 1");
    FrequencyGrid g;
    g.height = height;
    g.width = width;
    g.fx.resize(width);
    g.fy.resize(height);
    for (long k = 0; k < width; ++k) g.fx[k] = dft_frequency(k, width);
    for (long k = 0; k < height; ++k) g.fy[k] = dft_frequency(k, height);
    g.radius.resize(height * width);
    for (long y = 0; y < height; ++y)
        for (long x = 0; x < width; ++x)
            g.radius[y * width + x] = std::hypot(g.fx[x], g.fy[y]);
    g.max_radius = *std::max_element(g.radius.begin(), g.radius.end());
    g.norm_radius.resize(g.radius.size());
    for (std::size_t i = 0; i < g.radius.size(); ++i)
        g.norm_radius[i] = g.max_radius > 0.0 ? g.radius[i] / g.max_radius : 0.0;
    return g;
}

/// Nonnegative per-frequency amplitude weight w(f). Real values keep the
/// Hermitian symmetry of real-signal spectra, so shaped noise stays real.
struct SpectralWeight {
    FrequencyGrid grid;
    std::vector<double> values;

    long bins() const { return grid.bins(); }
};

inline constexpr double kDefaultPowerLawFloor = 1e-10;

/// w_alpha(f) = (r(f) + floor)^alpha. alpha=0 recovers white noise; the
/// floor keeps the DC bin finite for negative alpha.
inline SpectralWeight power_law_weight(const FrequencyGrid& grid, double alpha,
                                       double floor = kDefaultPowerLawFloor) {
    if (!(floor > 0.0)) throw std::invalid_argument("power_law_weight: floor must be > 0");
    SpectralWeight w;
    w.grid = grid;
    w.values.resize(grid.bins());
    for (long i = 0; i < grid.bins(); ++i)
        w.values[i] = std::pow(grid.radius[i] + floor, alpha);
    return w;
}

/// Binary mask, 1 where a <= d(f) <= b (d = radius normalized to [0,1]).
/// Both ends closed, so adjacent bands share their boundary shell.
inline SpectralWeight band_pass_weight(const FrequencyGrid& grid, double a, double b) {
    if (!(a >= 0.0) || !(b <= 1.0) || a > b)
        throw std::invalid_argument("band_pass_weight: need 0 <= a <= b <= 1");
    SpectralWeight w;
    w.grid = grid;
    w.values.resize(grid.bins());
    for (long i = 0; i < grid.bins(); ++i) {
        double d = grid.norm_radius[i];
        w.values[i] = (d >= a && d <= b) ? 1.0 : 0.0;
    }
    return w;
}

/// gamma_l * M_[band_l] + gamma_h * M_[band_h]. With band_l = [0, c] and
/// band_h = [c', 1], c < c', the open gap (c, c') is left unsupported
/// (selective omission).
inline SpectralWeight two_band_weight(const FrequencyGrid& grid, double gamma_l,
                                      std::pair<double, double> band_l, double gamma_h,
                                      std::pair<double, double> band_h) {
    if (gamma_l < 0.0 || gamma_h < 0.0)
        throw std::invalid_argument("two_band_weight: gammas must be >= 0");
    SpectralWeight low = band_pass_weight(grid, band_l.first, band_l.second);
    SpectralWeight high = band_pass_weight(grid, band_h.first, band_h.second);
    SpectralWeight w;
    w.grid = grid;
    w.values.resize(grid.bins());
    for (long i = 0; i < grid.bins(); ++i)
        w.values[i] = gamma_l * low.values[i] + gamma_h * high.values[i];
    return w;
}

/// Energy-preserving scalar C = ((1/(H*W)) * sum |w|^2)^(-1/2); multiplying
/// shaped noise by C keeps its expected total energy at the white-noise level.
inline double energy_calibration(const SpectralWeight& weight) {
    double sum = 0.0;
    for (double v : weight.values) sum += v * v;
    if (sum == 0.0) throw degenerate_error("energy_calibration: all-zero weight");
    return 1.0 / std::sqrt(sum / static_cast<double>(weight.bins()));
}

enum class NoiseMode {
    raw,             // Cov = Sigma_w exactly
    per_sample_std,  // divide each sample plane by (its spatial std + 1e-8)
    energy_calibrated // multiply by the scalar C from energy_calibration
};

/// Covariance of shaped noise, held as eigenbasis + eigenvalues.
///
/// Two representations:
///  - fourier(H, W): matrix-free; the eigenbasis is the 2D DFT and the
///    eigenvalues are |w(f)|^2 per bin. Applications go FFT -> multiply ->
///    inverse FFT.
///  - explicit orthonormal basis U with eigenvalues, for low-dimensional
///    toys; Sigma = U diag(lambda) U^T.
class AnisotropicCovariance {
public:
    static AnisotropicCovariance fourier(const SpectralWeight& weight) {
        AnisotropicCovariance c;
        c.fourier_ = true;
        c.height_ = weight.grid.height;
        c.width_ = weight.grid.width;
        c.eigenvalues_.resize(weight.bins());
        for (long i = 0; i < weight.bins(); ++i)
            c.eigenvalues_[i] = weight.values[i] * weight.values[i];
        return c;
    }

    static AnisotropicCovariance fourier_identity(long height, long width) {
        return fourier(power_law_weight(build_frequency_grid(height, width), 0.0));
    }

    static AnisotropicCovariance explicit_basis(Eigen::MatrixXd basis,
                                                Eigen::VectorXd eigenvalues) {
        if (basis.rows() != basis.cols() || basis.rows() != eigenvalues.size())
            throw std::invalid_argument("AnisotropicCovariance: basis/eigenvalue size mismatch");
        double ortho_err =
            (basis.transpose() * basis - Eigen::MatrixXd::Identity(basis.rows(), basis.cols()))
                .cwiseAbs()
                .maxCoeff();
        if (ortho_err > 1e-10)
            throw std::invalid_argument("AnisotropicCovariance: basis not orthonormal");
        if ((eigenvalues.array() < 0.0).any())
            throw std::invalid_argument("AnisotropicCovariance: negative eigenvalue");
        AnisotropicCovariance c;
        c.fourier_ = false;
        c.basis_ = std::move(basis);
        c.evec_ = std::move(eigenvalues);
        return c;
    }

    static AnisotropicCovariance identity(long dim) {
        return explicit_basis(Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Ones(dim));
    }

    bool is_fourier() const { return fourier_; }
    long height() const { return height_; }
    long width() const { return width_; }
    long dim() const {
        return fourier_ ? height_ * width_ : basis_.rows();
    }

    double eigenvalue(long i) const { return fourier_ ? eigenvalues_[i] : evec_[i]; }
    double max_eigenvalue() const {
        double m = 0.0;
        for (long i = 0; i < dim(); ++i) m = std::max(m, eigenvalue(i));
        return m;
    }

    const Eigen::MatrixXd& basis() const { return basis_; }
    Eigen::VectorXd eigenvalue_vector() const {
        if (!fourier_) return evec_;
        return Eigen::Map<const Eigen::VectorXd>(eigenvalues_.data(), dim());
    }

    /// Dense Sigma = U diag(lambda) U^T (explicit basis only).
    Eigen::MatrixXd dense() const {
        if (fourier_)
            throw std::invalid_argument("AnisotropicCovariance::dense: fourier case is matrix-free");
        return basis_ * evec_.asDiagonal() * basis_.transpose();
    }

    /// Sigma x.
    TensorField apply(const TensorField& x) const { return apply_fn(x, Coef::cov); }
    /// T_w x (one factor of the covariance square root).
    TensorField apply_sqrt(const TensorField& x) const { return apply_fn(x, Coef::sqrt); }
    /// Moore-Penrose pseudoinverse: 1/lambda where lambda > tol * max, else 0.
    TensorField apply_pinv(const TensorField& x, double zero_tol_rel = 1e-12) const {
        if (zero_tol_rel < 0.0) throw std::invalid_argument("apply_pinv: negative tolerance");
        if (max_eigenvalue() == 0.0)
            throw degenerate_error("apply_pinv: all eigenvalues zero");
        return apply_fn(x, Coef::pinv, zero_tol_rel);
    }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& cols) const { return apply_mat(cols, Coef::cov); }
    Eigen::MatrixXd apply_sqrt(const Eigen::MatrixXd& cols) const {
        return apply_mat(cols, Coef::sqrt);
    }
    Eigen::MatrixXd apply_pinv(const Eigen::MatrixXd& cols, double zero_tol_rel = 1e-12) const {
        if (zero_tol_rel < 0.0) throw std::invalid_argument("apply_pinv: negative tolerance");
        if (max_eigenvalue() == 0.0)
            throw degenerate_error("apply_pinv: all eigenvalues zero");
        return apply_mat(cols, Coef::pinv, zero_tol_rel);
    }

    /// Orthogonal projector onto range(Sigma_w): eigenvalues mapped to {0,1}.
    AnisotropicCovariance support_projector(double zero_tol_rel = 1e-12) const {
        if (zero_tol_rel < 0.0) throw std::invalid_argument("support_projector: negative tolerance");
        double lmax = max_eigenvalue();
        if (lmax == 0.0) throw degenerate_error("support_projector: all eigenvalues zero");
        AnisotropicCovariance p(*this);
        const double cut = zero_tol_rel * lmax;
        if (fourier_) {
            for (double& v : p.eigenvalues_) v = v > cut ? 1.0 : 0.0;
        } else {
            for (long i = 0; i < p.evec_.size(); ++i) p.evec_[i] = p.evec_[i] > cut ? 1.0 : 0.0;
        }
        return p;
    }

    bool full_rank(double zero_tol_rel = 1e-12) const {
        double cut = zero_tol_rel * max_eigenvalue();
        for (long i = 0; i < dim(); ++i)
            if (!(eigenvalue(i) > cut)) return false;
        return true;
    }

    /// Draw N(0, Sigma_w) samples. The Fourier case returns (batch, channels,
    /// H, W) fields built by the FFT pipeline (white noise -> weight ->
    /// inverse FFT, real part); channels are independent. The explicit case
    /// returns (batch, dim) vectors and requires channels == 1.
    ///
    /// The random stream is derived per (sample, channel), so results do not
    /// depend on batch chunking.
    TensorField sample(long batch, long channels, std::uint64_t seed,
                       NoiseMode mode = NoiseMode::raw) const {
        if (batch < 1 || channels < 1)
            throw std::invalid_argument("sample: batch and channels must be >= 1");
        double calibration = 1.0;
        if (mode == NoiseMode::energy_calibrated) {
            if (!fourier_)
                throw std::invalid_argument(
                    "sample: energy_calibrated requires a weight-derived (fourier) covariance");
            double sum = 0.0;
            for (double v : eigenvalues_) sum += v;
            if (sum == 0.0) throw degenerate_error("sample: all-zero covariance");
            calibration = 1.0 / std::sqrt(sum / static_cast<double>(dim()));
        }

        if (fourier_) {
            TensorField out = TensorField::images(batch, channels, height_, width_);
            const long n = height_ * width_;
            std::vector<double> white(n);
            std::vector<double> amp(n);
            for (long i = 0; i < n; ++i) amp[i] = std::sqrt(eigenvalues_[i]);
            for (long b = 0; b < batch; ++b) {
                for (long c = 0; c < channels; ++c) {
                    GaussianStream rng(derive_stream(seed, static_cast<std::uint64_t>(b),
                                                     static_cast<std::uint64_t>(c)));
                    rng.fill_gaussian(white.data(), n);
                    shape_plane(white.data(), amp.data(), out.plane(b, c));
                    finalize_plane(out.plane(b, c), n, mode, calibration);
                }
            }
            return out;
        }

        if (channels != 1)
            throw std::invalid_argument("sample: explicit-basis covariance supports channels == 1");
        const long d = dim();
        TensorField out = TensorField::vectors(batch, d);
        Eigen::VectorXd xi(d);
        Eigen::VectorXd sq = evec_.array().sqrt();
        for (long b = 0; b < batch; ++b) {
            GaussianStream rng(derive_stream(seed, static_cast<std::uint64_t>(b), 0));
            rng.fill_gaussian(xi.data(), d);
            Eigen::Map<Eigen::VectorXd> row(out.sample(b), d);
            row = basis_ * (sq.cwiseProduct(xi));
            finalize_plane(out.sample(b), d, mode, calibration);
        }
        return out;
    }

private:
    enum class Coef { cov, sqrt, pinv };

    double coef(double lambda, Coef kind, double tol_cut) const {
        switch (kind) {
            case Coef::cov: return lambda;
            case Coef::sqrt: return std::sqrt(lambda);
            case Coef::pinv: return lambda > tol_cut ? 1.0 / lambda : 0.0;
        }
        return 0.0;
    }

    TensorField apply_fn(const TensorField& x, Coef kind, double zero_tol_rel = 0.0) const {
        const double tol_cut = zero_tol_rel * max_eigenvalue();
        if (fourier_) {
            if (!x.is_image() || x.height() != height_ || x.width() != width_)
                throw std::invalid_argument("AnisotropicCovariance::apply: field/grid mismatch");
            TensorField out(x.shape);
            const long n = height_ * width_;
            std::vector<double> coefs(n);
            for (long i = 0; i < n; ++i) coefs[i] = coef(eigenvalues_[i], kind, tol_cut);
            std::vector<std::complex<double>> buf(n);
            for (long b = 0; b < x.batch(); ++b) {
                for (long c = 0; c < x.channels(); ++c) {
                    const double* in = x.plane(b, c);
                    for (long i = 0; i < n; ++i) buf[i] = in[i];
                    Dft2::forward(buf.data(), height_, width_);
                    for (long i = 0; i < n; ++i) buf[i] *= coefs[i];
                    Dft2::inverse(buf.data(), height_, width_);
                    double* dst = out.plane(b, c);
                    for (long i = 0; i < n; ++i) dst[i] = buf[i].real();
                }
            }
            return out;
        }
        if (x.is_image() || x.sample_size() != dim())
            throw std::invalid_argument("AnisotropicCovariance::apply: vector/dim mismatch");
        TensorField out(x.shape);
        out.as_matrix() = apply_mat(x.as_matrix(), kind, zero_tol_rel);
        return out;
    }

    Eigen::MatrixXd apply_mat(const Eigen::MatrixXd& cols, Coef kind,
                              double zero_tol_rel = 0.0) const {
        if (fourier_)
            throw std::invalid_argument("AnisotropicCovariance: matrix apply needs explicit basis");
        if (cols.rows() != dim())
            throw std::invalid_argument("AnisotropicCovariance::apply: vector/dim mismatch");
        const double tol_cut = zero_tol_rel * max_eigenvalue();
        Eigen::VectorXd c(dim());
        for (long i = 0; i < dim(); ++i) c[i] = coef(evec_[i], kind, tol_cut);
        return basis_ * (c.asDiagonal() * (basis_.transpose() * cols));
    }

    // white (spatial) -> FFT -> * w -> inverse FFT -> real part.
    void shape_plane(const double* white, const double* amplitude, double* out) const {
        const long n = height_ * width_;
        std::vector<std::complex<double>> buf(n);
        for (long i = 0; i < n; ++i) buf[i] = white[i];
        Dft2::forward(buf.data(), height_, width_);
        for (long i = 0; i < n; ++i) buf[i] *= amplitude[i];
        Dft2::inverse(buf.data(), height_, width_);
        double resid = 0.0;
        for (long i = 0; i < n; ++i) resid = std::max(resid, std::abs(buf[i].imag()));
        double scale = 0.0;
        for (long i = 0; i < n; ++i) scale = std::max(scale, std::abs(buf[i].real()));
        if (resid > 1e-6 * std::max(1.0, scale))
            throw consistency_error("sample: non-real shaped noise (weight not symmetric?)");
        for (long i = 0; i < n; ++i) out[i] = buf[i].real();
    }

    static void finalize_plane(double* plane, long n, NoiseMode mode, double calibration) {
        if (mode == NoiseMode::raw) return;
        if (mode == NoiseMode::energy_calibrated) {
            for (long i = 0; i < n; ++i) plane[i] *= calibration;
            return;
        }
        double mean = 0.0;
        for (long i = 0; i < n; ++i) mean += plane[i];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (long i = 0; i < n; ++i) var += (plane[i] - mean) * (plane[i] - mean);
        var /= static_cast<double>(n);
        double inv = 1.0 / (std::sqrt(var) + 1e-8);
        for (long i = 0; i < n; ++i) plane[i] *= inv;
    }

    bool fourier_ = false;
    long height_ = 0;
    long width_ = 0;
    std::vector<double> eigenvalues_; // fourier case, |w|^2 per bin
    Eigen::MatrixXd basis_;           // explicit case
    Eigen::VectorXd evec_;            // explicit case
};

inline AnisotropicCovariance make_covariance(const SpectralWeight& weight) {
    return AnisotropicCovariance::fourier(weight);
}

inline TensorField sample_shaped_noise(const AnisotropicCovariance& cov, long batch, long channels,
                                       std::uint64_t seed, NoiseMode mode = NoiseMode::raw) {
    return cov.sample(batch, channels, seed, mode);
}

} // namespace sagd

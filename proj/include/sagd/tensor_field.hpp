#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace sagd {

/// Batched real field. Shape is (batch, channels, height, width) for images
/// and noise fields, or (batch, dim) for vector toys. Data is row-major,
/// one sample contiguous after the next.
struct TensorField {
    std::vector<long> shape;
    std::vector<double> data;

    TensorField() = default;
    explicit TensorField(std::vector<long> s) : shape(std::move(s)) {
        for (long d : shape)
            if (d <= 0) throw std::invalid_argument("TensorField: nonpositive dimension");
        if (shape.size() != 2 && shape.size() != 4)
            throw std::invalid_argument("TensorField: rank must be 2 (batch,dim) or 4 (batch,c,h,w)");
        data.assign(static_cast<std::size_t>(total_size()), 0.0);
    }

    static TensorField vectors(long batch, long dim) { return TensorField({batch, dim}); }
    static TensorField images(long batch, long channels, long h, long w) {
        return TensorField({batch, channels, h, w});
    }

    bool is_image() const { return shape.size() == 4; }
    long batch() const { return shape[0]; }
    long channels() const { return is_image() ? shape[1] : 1; }
    long height() const { return is_image() ? shape[2] : 1; }
    long width() const { return is_image() ? shape[3] : 1; }
    /// Per-sample flattened length (all non-batch dims).
    long sample_size() const {
        long p = 1;
        for (std::size_t i = 1; i < shape.size(); ++i) p *= shape[i];
        return p;
    }
    long total_size() const { return batch() * sample_size(); }

    double* sample(long b) { return data.data() + b * sample_size(); }
    const double* sample(long b) const { return data.data() + b * sample_size(); }
    double* plane(long b, long c) { return sample(b) + c * height() * width(); }
    const double* plane(long b, long c) const { return sample(b) + c * height() * width(); }

    bool same_shape(const TensorField& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    /// View as (sample_size x batch) matrix; column b is sample b.
    Eigen::Map<Eigen::MatrixXd> as_matrix() {
        return {data.data(), sample_size(), batch()};
    }
    Eigen::Map<const Eigen::MatrixXd> as_matrix() const {
        return {data.data(), sample_size(), batch()};
    }

    static TensorField from_matrix(const Eigen::MatrixXd& cols) {
        TensorField f({cols.cols() > 0 ? cols.cols() : 1, cols.rows()});
        f.as_matrix() = cols;
        return f;
    }
};

inline void check_same_shape(const TensorField& a, const TensorField& b, const char* where) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(where) + ": shape mismatch");
}

/// out = ca*a + cb*b, elementwise.
inline TensorField lincomb(double ca, const TensorField& a, double cb, const TensorField& b) {
    check_same_shape(a, b, "lincomb");
    TensorField out(a.shape);
    for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = ca * a.data[i] + cb * b.data[i];
    return out;
}

inline TensorField scaled(double c, const TensorField& a) {
    TensorField out(a.shape);
    for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = c * a.data[i];
    return out;
}

inline double max_abs_diff(const TensorField& a, const TensorField& b) {
    check_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

inline double l2_norm(const TensorField& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return std::sqrt(s);
}

} // namespace sagd

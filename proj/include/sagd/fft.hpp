#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace sagd {

// Thin wrapper around FFTW complex-to-complex 2D transforms.
// Plans are cached per (h, w, direction) and created with FFTW_UNALIGNED so
// they can execute on plain std::vector storage. Plan creation is guarded by
// a mutex (the FFTW planner is not thread-safe); fftw_execute_dft on private
// buffers is.
class Dft2 {
public:
    /// In-place unnormalized forward DFT of an h x w row-major buffer.
    static void forward(std::complex<double>* buf, long h, long w) {
        execute(buf, h, w, FFTW_FORWARD);
    }

    /// In-place inverse DFT, scaled by 1/(h*w) so inverse(forward(x)) == x.
    static void inverse(std::complex<double>* buf, long h, long w) {
        execute(buf, h, w, FFTW_BACKWARD);
        const double scale = 1.0 / static_cast<double>(h * w);
        for (long i = 0; i < h * w; ++i) buf[i] *= scale;
    }

private:
    static void execute(std::complex<double>* buf, long h, long w, int sign) {
        fftw_plan plan = get_plan(h, w, sign);
        auto* raw = reinterpret_cast<fftw_complex*>(buf);
        fftw_execute_dft(plan, raw, raw);
    }

    static fftw_plan get_plan(long h, long w, int sign) {
        static std::map<std::tuple<long, long, int>, fftw_plan> cache;
        static std::mutex mtx;
        std::lock_guard<std::mutex> lock(mtx);
        auto key = std::make_tuple(h, w, sign);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        std::vector<std::complex<double>> scratch(static_cast<std::size_t>(h * w));
        auto* raw = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w), raw, raw,
                                          sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        cache.emplace(key, plan);
        return plan;
    }
};

/// Unitary forward DFT of a real h x w plane, into a caller buffer.
inline void unitary_dft(const double* plane, long h, long w, std::complex<double>* out) {
    const long n = h * w;
    for (long i = 0; i < n; ++i) out[i] = plane[i];
    Dft2::forward(out, h, w);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (long i = 0; i < n; ++i) out[i] *= scale;
}

} // namespace sagd

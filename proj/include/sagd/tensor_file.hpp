#pragma once

#include "sagd/tensor_field.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sagd {

// "SAGD-TF v1" tensor file:
//   magic 'S' 'A' 'G' 'D' | version u8 = 1 | dtype u8 = 0 (float32)
//   | ndim u8 | ndim x u32 little-endian dims | row-major float32 payload.
// Little-endian throughout; payload length must equal product(dims) * 4.

namespace detail {
inline void put_u32_le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF),
                          static_cast<unsigned char>((v >> 24) & 0xFF)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32_le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline bool host_is_little_endian() {
    const std::uint32_t probe = 1;
    unsigned char first;
    std::memcpy(&first, &probe, 1);
    return first == 1;
}
} // namespace detail

inline void write_tensor(const std::string& path, const std::vector<long>& dims,
                         const std::vector<float>& payload) {
    long total = 1;
    for (long d : dims) {
        if (d <= 0) throw std::invalid_argument("write_tensor: nonpositive dim");
        total *= d;
    }
    if (total != static_cast<long>(payload.size()))
        throw std::invalid_argument("write_tensor: payload/dims mismatch");
    if (dims.size() > 255) throw std::invalid_argument("write_tensor: too many dims");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_tensor: cannot open " + path);
    const char magic[4] = {'S', 'A', 'G', 'D'};
    os.write(magic, 4);
    char header[3] = {1, 0, static_cast<char>(dims.size())};
    os.write(header, 3);
    for (long d : dims) detail::put_u32_le(os, static_cast<std::uint32_t>(d));
    if (detail::host_is_little_endian()) {
        os.write(reinterpret_cast<const char*>(payload.data()),
                 static_cast<std::streamsize>(payload.size() * 4));
    } else {
        for (float f : payload) {
            std::uint32_t bits;
            std::memcpy(&bits, &f, 4);
            detail::put_u32_le(os, bits);
        }
    }
    if (!os) throw std::runtime_error("write_tensor: write failed for " + path);
}

inline void write_tensor(const std::string& path, const TensorField& field) {
    std::vector<float> payload(field.data.size());
    for (std::size_t i = 0; i < payload.size(); ++i)
        payload[i] = static_cast<float>(field.data[i]);
    write_tensor(path, field.shape, payload);
}

struct TensorData {
    std::vector<long> dims;
    std::vector<float> payload;

    TensorField as_field() const {
        TensorField f(dims);
        for (std::size_t i = 0; i < payload.size(); ++i) f.data[i] = payload[i];
        return f;
    }
};

inline TensorData read_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_tensor: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || magic[0] != 'S' || magic[1] != 'A' || magic[2] != 'G' || magic[3] != 'D')
        throw std::runtime_error("read_tensor: bad magic in " + path);
    char header[3];
    is.read(header, 3);
    if (!is || header[0] != 1) throw std::runtime_error("read_tensor: unsupported version");
    if (header[1] != 0) throw std::runtime_error("read_tensor: unsupported dtype");
    int ndim = static_cast<unsigned char>(header[2]);
    TensorData out;
    long total = 1;
    for (int i = 0; i < ndim; ++i) {
        long d = static_cast<long>(detail::get_u32_le(is));
        out.dims.push_back(d);
        total *= d;
    }
    if (!is) throw std::runtime_error("read_tensor: truncated header");
    out.payload.resize(static_cast<std::size_t>(total));
    if (detail::host_is_little_endian()) {
        is.read(reinterpret_cast<char*>(out.payload.data()),
                static_cast<std::streamsize>(total * 4));
    } else {
        for (long i = 0; i < total; ++i) {
            std::uint32_t bits = detail::get_u32_le(is);
            std::memcpy(&out.payload[i], &bits, 4);
        }
    }
    if (!is) throw std::runtime_error("read_tensor: truncated payload");
    return out;
}

} // namespace sagd

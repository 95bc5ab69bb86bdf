#pragma once

#include "sagd/tensor_field.hpp"

#include <fstream>
#include <stdexcept>
#include <string>

namespace sagd {

/// Read an 8-bit binary PGM (P5). Pixel values map to [-1, 1] via
/// v / 127.5 - 1. Returns a (1, 1, h, w) field.
inline TensorField read_pgm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_pgm: cannot open " + path);

    auto next_token = [&is]() {
        std::string tok;
        while (is >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(is, rest);
                continue;
            }
            return tok;
        }
        throw std::runtime_error("read_pgm: truncated header");
    };

    if (next_token() != "P5") throw std::runtime_error("read_pgm: not a P5 file");
    long w = std::stol(next_token());
    long h = std::stol(next_token());
    long maxval = std::stol(next_token());
    if (w < 1 || h < 1) throw std::runtime_error("read_pgm: bad dimensions");
    if (maxval != 255) throw std::runtime_error("read_pgm: only 8-bit (maxval 255) supported");
    is.get(); // single whitespace before payload

    TensorField out = TensorField::images(1, 1, h, w);
    std::vector<unsigned char> raw(static_cast<std::size_t>(h * w));
    is.read(reinterpret_cast<char*>(raw.data()), h * w);
    if (!is) throw std::runtime_error("read_pgm: truncated payload");
    for (long i = 0; i < h * w; ++i) out.data[i] = raw[i] / 127.5 - 1.0;
    return out;
}

} // namespace sagd

#pragma once

#include "sagd/csv.hpp"
#include "sagd/denoiser.hpp"
#include "sagd/tensor_file.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace sagd {

/// Checkpoint = params.tf (all parameters as one 1-D float32 tensor) plus
/// manifest.csv describing layer shapes and offsets into the flat payload.
/// The first manifest row is a meta entry carrying (time_embed, max_step).
inline void save_dense_net(const std::filesystem::path& dir, const DenseNet& net) {
    std::filesystem::create_directories(dir);
    std::vector<float> flat;
    CsvWriter manifest((dir / "manifest.csv").string(),
                       {"layer", "kind", "rows", "cols", "offset"});
    manifest.row({-1L, std::string("meta"), net.time_embed_dim(), net.max_step(), 0L});
    for (long l = 0; l < net.layer_count(); ++l) {
        const Eigen::MatrixXd& w = net.weight(l);
        manifest.row({l, std::string("weight"), w.rows(), w.cols(),
                      static_cast<long>(flat.size())});
        for (long i = 0; i < w.size(); ++i) flat.push_back(static_cast<float>(w.data()[i]));
        const Eigen::VectorXd& b = net.bias(l);
        manifest.row({l, std::string("bias"), b.size(), 1L, static_cast<long>(flat.size())});
        for (long i = 0; i < b.size(); ++i) flat.push_back(static_cast<float>(b[i]));
    }
    write_tensor((dir / "params.tf").string(), {static_cast<long>(flat.size())}, flat);
}

inline DenseNet load_dense_net(const std::filesystem::path& dir) {
    auto rows = read_csv((dir / "manifest.csv").string());
    TensorData params = read_tensor((dir / "params.tf").string());
    if (rows.size() < 4 || rows[0].size() != 5 || rows[1][1] != "meta")
        throw std::runtime_error("load_dense_net: malformed manifest");
    long time_embed = std::stol(rows[1][2]);
    long max_step = std::stol(rows[1][3]);

    struct Entry {
        long layer, rows, cols, offset;
        bool is_weight;
    };
    std::vector<Entry> entries;
    for (std::size_t i = 2; i < rows.size(); ++i)
        entries.push_back({std::stol(rows[i][0]), std::stol(rows[i][2]), std::stol(rows[i][3]),
                           std::stol(rows[i][4]), rows[i][1] == "weight"});

    const long layer_total = static_cast<long>(entries.size() / 2);
    std::vector<long> hidden;
    long out_dim = 0;
    for (const auto& e : entries) {
        if (!e.is_weight) continue;
        out_dim = e.rows;
        if (e.layer + 1 < layer_total) hidden.push_back(e.rows);
    }
    DenseNet net(out_dim, time_embed, hidden, 0, DenseNet::Activation::silu, max_step);
    for (const auto& e : entries) {
        if (e.is_weight) {
            Eigen::MatrixXd& w = net.weight(e.layer);
            if (w.rows() != e.rows || w.cols() != e.cols)
                throw std::runtime_error("load_dense_net: shape mismatch in manifest");
            for (long i = 0; i < w.size(); ++i) w.data()[i] = params.payload[e.offset + i];
        } else {
            Eigen::VectorXd& b = net.bias(e.layer);
            if (b.size() != e.rows) throw std::runtime_error("load_dense_net: bias mismatch");
            for (long i = 0; i < b.size(); ++i) b[i] = params.payload[e.offset + i];
        }
    }
    return net;
}

} // namespace sagd

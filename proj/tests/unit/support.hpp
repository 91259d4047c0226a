#pragma once

// Small fixtures shared by the unit tests.

#include <filesystem>
#include <string>

#include "snnw/part_network.hpp"
#include "snnw/rng.hpp"

namespace test_support {

inline snnw::PartNetworkSpec tiny_spec(std::uint32_t side = 16, std::uint32_t channels = 3) {
    snnw::PartNetworkSpec s;
    s.input_rows = s.input_cols = side;
    s.channels = channels;
    s.conv_blocks = {{2, 3}};
    s.dense_widths = {2};
    s.dropout_rate = 0.0;
    return s;
}

/// Network whose output ignores the input: always present or always absent.
inline snnw::TrainedPartNetwork constant_network(const snnw::PartId& part, bool present, std::uint32_t side = 16) {
    auto net = snnw::build_network(tiny_spec(side), part, 1);
    auto& last = net.net.dense_layers.back();
    for (auto& w : last.weights.data()) w = 0.0f;
    last.bias[snnw::class_index(snnw::Label::present)] = present ? 10.0f : -10.0f;
    last.bias[snnw::class_index(snnw::Label::absent)] = present ? -10.0f : 10.0f;
    return net;
}

inline snnw::Image random_image(std::size_t rows, std::size_t cols, std::size_t channels, snnw::Rng& rng) {
    snnw::Image img(snnw::Shape{rows, cols, channels});
    for (auto& v : img.data()) v = static_cast<float>(rng.uniform());
    return img;
}

/// n_pos present and n_neg absent random side x side samples.
inline std::vector<snnw::Sample> tiny_set(const snnw::PartId& part, std::size_t n_pos, std::size_t n_neg,
                                          std::uint32_t side = 16, std::uint64_t seed = 3) {
    snnw::Rng rng(seed);
    std::vector<snnw::Sample> out;
    for (std::size_t i = 0; i < n_pos + n_neg; ++i) {
        const bool pos = i < n_pos;
        out.push_back({random_image(side, side, 3, rng), pos ? snnw::Label::present : snnw::Label::absent, part,
                       "o" + std::to_string(i), 0});
    }
    return out;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("snnw-test-" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace test_support

#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "snnw/nn/tensor.hpp"

namespace snnw {

/// Name of one weapon component, e.g. "barrel".
class PartId {
public:
    PartId() = default;
    explicit PartId(std::string name) : name_(std::move(name)) {
        if (name_.empty()) throw std::invalid_argument("part id must be nonempty");
    }

    const std::string& name() const noexcept { return name_; }

    friend auto operator<=>(const PartId&, const PartId&) = default;
    friend bool operator==(const PartId&, const PartId&) = default;

private:
    std::string name_;
};

/// stock, magazine, barrel, receiver.
inline std::vector<PartId> default_parts() {
    return {PartId("stock"), PartId("magazine"), PartId("barrel"), PartId("receiver")};
}

enum class Label : std::uint8_t { absent = 0, present = 1 };

inline std::size_t class_index(Label l) { return static_cast<std::size_t>(l); }

inline bool valid_label(Label l) { return l == Label::absent || l == Label::present; }

/// Image tensors are (H, W, C) with values in [0, 1].
using Image = Tensor<float>;

struct Sample {
    Image image;
    Label label = Label::absent;
    PartId part;
    std::string origin;
    std::uint32_t variant = 0;  // 0 for the source rendering, k for the k-th augmented copy
};

}  // namespace snnw

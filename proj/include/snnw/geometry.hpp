#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace snnw {

/// Axis-aligned pixel box, origin top-left. Covers columns [x, x+w) and rows
/// [y, y+h), i.e. the inclusive pixel range x..x+w-1.
struct BoundingBox {
    std::int64_t x = 0;
    std::int64_t y = 0;
    std::int64_t w = 0;
    std::int64_t h = 0;

    std::int64_t right() const noexcept { return x + w; }
    std::int64_t bottom() const noexcept { return y + h; }
    std::int64_t area() const noexcept { return w * h; }
    bool valid() const noexcept { return w > 0 && h > 0; }

    static BoundingBox from_extent(std::int64_t x0, std::int64_t y0, std::int64_t x1, std::int64_t y1) {
        return {x0, y0, x1 - x0, y1 - y0};
    }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

inline std::string to_string(const BoundingBox& b) {
    return "(" + std::to_string(b.x) + "," + std::to_string(b.y) + "," + std::to_string(b.w) + "," +
           std::to_string(b.h) + ")";
}

/// Smallest box containing both.
inline BoundingBox union_extent(const BoundingBox& a, const BoundingBox& b) {
    return BoundingBox::from_extent(std::min(a.x, b.x), std::min(a.y, b.y), std::max(a.right(), b.right()),
                                    std::max(a.bottom(), b.bottom()));
}

/// Positive-area overlap.
inline bool intersects(const BoundingBox& a, const BoundingBox& b) {
    return a.x < b.right() && b.x < a.right() && a.y < b.bottom() && b.y < a.bottom();
}

inline std::optional<BoundingBox> intersection(const BoundingBox& a, const BoundingBox& b) {
    if (!intersects(a, b)) return std::nullopt;
    return BoundingBox::from_extent(std::max(a.x, b.x), std::max(a.y, b.y), std::min(a.right(), b.right()),
                                    std::min(a.bottom(), b.bottom()));
}

/// Clamps to [0,width) x [0,height); nullopt when nothing remains.
inline std::optional<BoundingBox> clamp_to(const BoundingBox& b, std::int64_t width, std::int64_t height) {
    return intersection(b, BoundingBox{0, 0, width, height});
}

}  // namespace snnw

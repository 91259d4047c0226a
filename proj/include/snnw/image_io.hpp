#pragma once

#include <array>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "snnw/geometry.hpp"
#include "snnw/sample.hpp"

namespace snnw {

class ImageIoError : public std::runtime_error {
public:
    enum class Kind { unreadable, unsupported, write_failed };

    ImageIoError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Decodes PNG (8/16-bit gray, gray+alpha, RGB, RGBA, palette) or binary
/// PPM/PGM into an (H,W,C) tensor scaled to [0,1]. Colour images yield three
/// channels and grayscale one; alpha is dropped.
Image load_image(const std::filesystem::path& path);

/// Encodes an (H,W,1) or (H,W,3) image as 8-bit PNG; values are clamped to
/// [0,1] and rounded to the nearest of 256 levels.
void save_png(const Image& image, const std::filesystem::path& path);

using Rgb = std::array<float, 3>;

/// Draws a rectangle outline of `thickness` pixels, clipped to the image.
void draw_box(Image& image, const BoundingBox& box, const Rgb& colour, int thickness = 2);

/// Grayscale-to-RGB copy (three channels are returned unchanged).
Image to_rgb(const Image& image);

/// Copies the (rows, cols) window at (x, y).
Image crop(const Image& image, std::size_t x, std::size_t y, std::size_t cols, std::size_t rows);

}  // namespace snnw

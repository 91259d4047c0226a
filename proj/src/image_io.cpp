#include "snnw/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

namespace snnw {
namespace {

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageIoError(ImageIoError::Kind::unreadable, "cannot open image '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Image decode_png(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
        throw ImageIoError(ImageIoError::Kind::unreadable, "cannot decode PNG '" + path.string() + "': " + img.message);
    }
    const bool colour = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
    img.format = colour ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, pixels.data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        throw ImageIoError(ImageIoError::Kind::unreadable, "cannot decode PNG '" + path.string() + "': " + msg);
    }
    const std::size_t channels = colour ? 3 : 1;
    Image out({img.height, img.width, channels});
    for (std::size_t i = 0; i < pixels.size(); ++i) out[i] = static_cast<float>(pixels[i]) / 255.0f;
    return out;
}

// Binary PNM: P5 (gray) or P6 (RGB), maxval up to 65535.
Image decode_pnm(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
    std::size_t pos = 2;
    auto fail = [&](const std::string& why) {
        return ImageIoError(ImageIoError::Kind::unreadable, "cannot decode PNM '" + path.string() + "': " + why);
    };
    auto next_int = [&]() -> std::size_t {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        std::size_t v = 0;
        bool any = false;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos++] - '0');
            any = true;
        }
        if (!any) throw fail("malformed header");
        return v;
    };
    const std::size_t channels = bytes[1] == '6' ? 3 : 1;
    const auto width = next_int(), height = next_int(), maxval = next_int();
    ++pos;  // single whitespace before the raster
    if (width == 0 || height == 0 || maxval == 0 || maxval > 65535) throw fail("bad dimensions or maxval");
    const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
    const std::size_t n = width * height * channels;
    if (bytes.size() < pos + n * sample_bytes) throw fail("truncated raster");
    Image out({height, width, channels});
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t v = sample_bytes == 1 ? bytes[pos + i]
                                                : (std::size_t{bytes[pos + 2 * i]} << 8) | bytes[pos + 2 * i + 1];
        out[i] = static_cast<float>(static_cast<double>(v) / static_cast<double>(maxval));
    }
    return out;
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
    const auto bytes = read_all(path);
    static constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) return decode_png(bytes, path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) return decode_pnm(bytes, path);
    throw ImageIoError(ImageIoError::Kind::unsupported,
                       "unsupported image format '" + path.string() + "' (PNG or binary PPM/PGM expected)");
}

void save_png(const Image& image, const std::filesystem::path& path) {
    if (image.rank() != 3 || (image.dim(2) != 1 && image.dim(2) != 3)) {
        throw ImageIoError(ImageIoError::Kind::write_failed, "save_png needs an (H,W,1) or (H,W,3) image, got " +
                                                                 to_string(image.shape()));
    }
    std::vector<std::uint8_t> pixels(image.size());
    for (std::size_t i = 0; i < image.size(); ++i) {
        const float v = std::clamp(image[i], 0.0f, 1.0f);
        pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.dim(1));
    img.height = static_cast<png_uint_32>(image.dim(0));
    img.format = image.dim(2) == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&img, path.c_str(), 0, pixels.data(), 0, nullptr)) {
        throw ImageIoError(ImageIoError::Kind::write_failed, "cannot write PNG '" + path.string() + "': " + img.message);
    }
}

void draw_box(Image& image, const BoundingBox& box, const Rgb& colour, int thickness) {
    const auto H = static_cast<std::int64_t>(image.dim(0)), W = static_cast<std::int64_t>(image.dim(1));
    const auto C = image.dim(2);
    auto paint = [&](std::int64_t r, std::int64_t c) {
        if (r < 0 || c < 0 || r >= H || c >= W) return;
        for (std::size_t k = 0; k < C; ++k) {
            image(static_cast<std::size_t>(r), static_cast<std::size_t>(c), k) = C == 3 ? colour[k] : colour[1];
        }
    };
    for (int t = 0; t < thickness; ++t) {
        for (auto c = box.x; c < box.right(); ++c) {
            paint(box.y + t, c);
            paint(box.bottom() - 1 - t, c);
        }
        for (auto r = box.y; r < box.bottom(); ++r) {
            paint(r, box.x + t);
            paint(r, box.right() - 1 - t);
        }
    }
}

Image to_rgb(const Image& image) {
    if (image.dim(2) == 3) return image;
    Image out({image.dim(0), image.dim(1), 3});
    for (std::size_t i = 0; i < image.dim(0) * image.dim(1); ++i) {
        for (std::size_t k = 0; k < 3; ++k) out[3 * i + k] = image[i * image.dim(2)];
    }
    return out;
}

Image crop(const Image& image, std::size_t x, std::size_t y, std::size_t cols, std::size_t rows) {
    const auto C = image.dim(2);
    if (y + rows > image.dim(0) || x + cols > image.dim(1)) {
        throw ShapeError("crop window exceeds image " + to_string(image.shape()));
    }
    Image out({rows, cols, C});
    for (std::size_t r = 0; r < rows; ++r) {
        const float* src = &image(y + r, x, 0);
        std::copy_n(src, cols * C, &out(r, 0, 0));
    }
    return out;
}

}  // namespace snnw

#include "snnw/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>

#include "snnw/image_io.hpp"

namespace snnw {

DatasetSplit split_dataset(std::vector<Sample> samples, const SplitSizes& sizes, std::uint64_t seed) {
    const std::size_t n = samples.size();
    if (sizes.train < 0 || sizes.val < 0 || sizes.test < 0) throw std::invalid_argument("split sizes must be non-negative");

    std::size_t want[3];
    const double total = sizes.train + sizes.val + sizes.test;
    const bool proportions = sizes.train <= 1.0 && sizes.val <= 1.0 && sizes.test <= 1.0 && std::abs(total - 1.0) < 1e-9;
    if (proportions) {
        want[1] = static_cast<std::size_t>(std::floor(sizes.val * static_cast<double>(n)));
        want[2] = static_cast<std::size_t>(std::floor(sizes.test * static_cast<double>(n)));
        want[0] = n - want[1] - want[2];
    } else {
        const double parts[3] = {sizes.train, sizes.val, sizes.test};
        for (int i = 0; i < 3; ++i) {
            if (parts[i] != std::floor(parts[i])) {
                throw std::invalid_argument("split sizes must be whole counts or proportions summing to 1");
            }
            want[i] = static_cast<std::size_t>(parts[i]);
        }
        if (want[0] + want[1] + want[2] > n) {
            throw std::invalid_argument("split requests " + std::to_string(want[0] + want[1] + want[2]) +
                                        " samples but only " + std::to_string(n) + " are available");
        }
    }

    // Group by origin in first-seen order so the shuffle alone decides placement.
    std::vector<std::vector<std::size_t>> groups;
    std::map<std::string, std::size_t> group_of;
    for (std::size_t i = 0; i < n; ++i) {
        auto [it, inserted] = group_of.emplace(samples[i].origin, groups.size());
        if (inserted) groups.emplace_back();
        groups[it->second].push_back(i);
    }
    Rng rng(seed);
    rng.shuffle(groups.begin(), groups.end());

    DatasetSplit out;
    std::vector<Sample>* dest[3] = {&out.train, &out.val, &out.test};
    std::vector<bool> used(groups.size(), false);
    for (int s = 0; s < 3; ++s) {
        std::size_t remaining = want[s];
        for (std::size_t g = 0; g < groups.size() && remaining > 0; ++g) {
            if (used[g] || groups[g].size() > remaining) continue;
            used[g] = true;
            remaining -= groups[g].size();
            for (auto idx : groups[g]) dest[s]->push_back(std::move(samples[idx]));
        }
        if (remaining != 0) {
            throw std::invalid_argument("origin groups cannot fill split " + std::to_string(s) + " exactly (" +
                                        std::to_string(remaining) + " short)");
        }
    }
    return out;
}

void AugmentSpec::validate() const {
    if (!(rotation_deg >= 0.0) || !(shear >= 0.0) || !(scale >= 0.0 && scale < 1.0)) {
        throw std::invalid_argument("augmentation ranges must be non-negative half-widths (scale below 1)");
    }
}

Image affine_transform(const Image& image, const AffineParams& params) {
    if (image.rank() != 3) throw ShapeError("affine_transform expects (H,W,C), got " + to_string(image.shape()));
    const auto H = image.dim(0), W = image.dim(1), C = image.dim(2);
    const double th = params.rotation_deg * std::numbers::pi / 180.0;
    const double c = std::cos(th), s = std::sin(th);
    // A = R * Shear * Scale
    const double a00 = params.scale * c, a01 = params.scale * (c * params.shear - s);
    const double a10 = params.scale * s, a11 = params.scale * (s * params.shear + c);
    const double det = a00 * a11 - a01 * a10;
    if (std::abs(det) < 1e-12) throw std::invalid_argument("affine_transform: singular transform");
    const double i00 = a11 / det, i01 = -a01 / det, i10 = -a10 / det, i11 = a00 / det;
    const double cx = (static_cast<double>(W) - 1.0) / 2.0, cy = (static_cast<double>(H) - 1.0) / 2.0;

    Image out(image.shape());
    const auto max_x = static_cast<std::int64_t>(W) - 1, max_y = static_cast<std::int64_t>(H) - 1;
    for (std::size_t r = 0; r < H; ++r) {
        for (std::size_t q = 0; q < W; ++q) {
            const double dx = static_cast<double>(q) - cx, dy = static_cast<double>(r) - cy;
            const double sx = i00 * dx + i01 * dy + cx;
            const double sy = i10 * dx + i11 * dy + cy;
            const double fx0 = std::floor(sx), fy0 = std::floor(sy);
            const double fx = sx - fx0, fy = sy - fy0;
            const auto x0 = std::clamp<std::int64_t>(static_cast<std::int64_t>(fx0), 0, max_x);
            const auto y0 = std::clamp<std::int64_t>(static_cast<std::int64_t>(fy0), 0, max_y);
            const auto x1 = std::clamp<std::int64_t>(static_cast<std::int64_t>(fx0) + 1, 0, max_x);
            const auto y1 = std::clamp<std::int64_t>(static_cast<std::int64_t>(fy0) + 1, 0, max_y);
            for (std::size_t k = 0; k < C; ++k) {
                const double v00 = image(y0, x0, k), v01 = image(y0, x1, k);
                const double v10 = image(y1, x0, k), v11 = image(y1, x1, k);
                const double top = v00 + fx * (v01 - v00);
                const double bot = v10 + fx * (v11 - v10);
                out(r, q, k) = static_cast<float>(top + fy * (bot - top));
            }
        }
    }
    return out;
}

std::vector<Sample> augment_sample(const Sample& s, const AugmentSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::vector<Sample> out;
    out.reserve(spec.copies);
    for (std::uint32_t k = 1; k <= spec.copies; ++k) {
        AffineParams p{rng.uniform(-spec.rotation_deg, spec.rotation_deg), rng.uniform(-spec.shear, spec.shear),
                       rng.uniform(1.0 - spec.scale, 1.0 + spec.scale)};
        out.push_back({affine_transform(s.image, p), s.label, s.part, s.origin, k});
    }
    return out;
}

std::vector<Sample> augment_dataset(const std::vector<Sample>& samples, const AugmentSpec& spec) {
    std::vector<Sample> out = samples;
    out.reserve(samples.size() * (1 + spec.copies));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        AugmentSpec per = spec;
        per.seed = derive_seed(spec.seed, samples[i].origin, i);
        for (auto& copy : augment_sample(samples[i], per)) out.push_back(std::move(copy));
    }
    return out;
}

std::vector<BoundingBox> place_negative_crops(std::size_t width, std::size_t height, std::size_t count, Rng& rng,
                                              const std::vector<BoundingBox>& exclusion_boxes) {
    if (width < kWindowSize || height < kWindowSize) {
        throw std::invalid_argument("negative source " + std::to_string(width) + "x" + std::to_string(height) +
                                    " is smaller than a 200x200 crop");
    }
    const std::size_t max_attempts = 1000 * std::max<std::size_t>(count, 1);
    std::vector<BoundingBox> out;
    std::size_t attempts = 0;
    while (out.size() < count) {
        if (attempts++ >= max_attempts) {
            throw std::runtime_error("no valid negative crop placement after " + std::to_string(max_attempts) +
                                     " draws");
        }
        const BoundingBox cand{static_cast<std::int64_t>(rng.below(width - kWindowSize + 1)),
                               static_cast<std::int64_t>(rng.below(height - kWindowSize + 1)),
                               static_cast<std::int64_t>(kWindowSize), static_cast<std::int64_t>(kWindowSize)};
        const bool clear = std::none_of(exclusion_boxes.begin(), exclusion_boxes.end(),
                                        [&](const BoundingBox& b) { return intersects(cand, b); });
        if (clear) out.push_back(cand);
    }
    return out;
}

std::vector<Sample> extract_negative_crops(const Image& source, std::size_t count, Rng& rng,
                                           const std::vector<BoundingBox>& exclusion_boxes, const PartId& part,
                                           const std::string& origin) {
    const auto boxes = place_negative_crops(source.dim(1), source.dim(0), count, rng, exclusion_boxes);
    std::vector<Sample> out;
    std::uint32_t k = 0;
    for (const auto& b : boxes) {
        out.push_back({crop(source, static_cast<std::size_t>(b.x), static_cast<std::size_t>(b.y), kWindowSize,
                            kWindowSize),
                       Label::absent, part, origin, k++});
    }
    return out;
}

}  // namespace snnw

#pragma once

#include <cstdint>
#include <vector>

#include "snnw/geometry.hpp"
#include "snnw/rng.hpp"
#include "snnw/sample.hpp"

namespace snnw {

inline constexpr std::size_t kWindowSize = 200;

struct DatasetSplit {
    std::vector<Sample> train;
    std::vector<Sample> val;
    std::vector<Sample> test;
};

/// Either absolute counts (e.g. 2000/400/100) or proportions summing to 1.
struct SplitSizes {
    double train = 0.8;
    double val = 0.16;
    double test = 0.04;
};

/// Deterministic shuffle under `seed`, then origin groups are packed
/// first-fit into train, val, test. Counts smaller than the sample total
/// leave the remainder unused; proportions assign every sample with the
/// rounding remainder going to train. Throws when more samples are requested
/// than exist or when origin groups cannot fill the sizes exactly.
DatasetSplit split_dataset(std::vector<Sample> samples, const SplitSizes& sizes, std::uint64_t seed);

struct AugmentSpec {
    double rotation_deg = 15.0;  // uniform in [-r, r]
    double shear = 0.15;         // horizontal shear factor, uniform in [-s, s]
    double scale = 0.1;          // uniform in [1 - s, 1 + s]
    std::uint32_t copies = 3;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Affine parameters of one augmented copy.
struct AffineParams {
    double rotation_deg = 0.0;
    double shear = 0.0;
    double scale = 1.0;
};

/// Rotation o shear o scale about the image centre, bilinear sampling with
/// edge pixels replicated. Output keeps the input geometry.
Image affine_transform(const Image& image, const AffineParams& params);

/// `spec.copies` transformed copies of `s`; label, part and origin carry over.
std::vector<Sample> augment_sample(const Sample& s, const AugmentSpec& spec);

/// Originals followed by their copies; copy streams are derived per index.
std::vector<Sample> augment_dataset(const std::vector<Sample>& samples, const AugmentSpec& spec);

/// Top-left corners of `count` uniformly placed 200x200 windows inside a
/// (width x height) source avoiding every exclusion box. Throws after 1000
/// rejected draws per requested crop.
std::vector<BoundingBox> place_negative_crops(std::size_t width, std::size_t height, std::size_t count, Rng& rng,
                                              const std::vector<BoundingBox>& exclusion_boxes);

/// `count` uniformly placed 200x200 crops whose rectangles avoid every
/// exclusion box, labelled absent, all sharing `origin`.
std::vector<Sample> extract_negative_crops(const Image& source, std::size_t count, Rng& rng,
                                           const std::vector<BoundingBox>& exclusion_boxes,
                                           const PartId& part = PartId("negative"),
                                           const std::string& origin = "negative-source");

}  // namespace snnw

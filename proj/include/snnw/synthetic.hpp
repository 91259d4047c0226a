#pragma once

// Synthetic stand-in for the firearm photo corpus: each part is a textured,
// coloured polygon ("glyph"); scenes compose the four glyphs into a rifle-like
// arrangement on a filtered-noise background, optionally rotated, scaled,
// shifted, or with parts removed or occluded.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "snnw/geometry.hpp"
#include "snnw/image_io.hpp"
#include "snnw/rng.hpp"
#include "snnw/sample.hpp"

namespace snnw {

using Point = std::array<double, 2>;

struct GlyphStyle {
    double hue_deg = 0.0;
    double saturation = 0.8;
    double value = 0.9;
    double stripe_period = 14.0;  // pixels at scale 1
    double stripe_angle_deg = 0.0;
    double stripe_contrast = 0.3;
};

/// Polygon in local coordinates (pixels at scale 1, centred on the origin,
/// x along the rifle axis).
struct Glyph {
    std::string name;
    std::vector<Point> outline;
    GlyphStyle style;
};

/// Shipped glyph for the four default parts; other labels get a glyph derived
/// deterministically from the name.
Glyph part_glyph(const PartId& part);

struct Pose {
    double cx = 0.0;
    double cy = 0.0;
    double rotation_deg = 0.0;
    double scale = 1.0;
};

/// Outline vertices mapped into canvas coordinates.
std::vector<Point> transformed_outline(const Glyph& glyph, const Pose& pose);

/// Pixel box containing the transformed outline (unclipped, rounded outward).
BoundingBox outline_extent(const Glyph& glyph, const Pose& pose);

/// Binary coverage mask (row-major, canvas sized) of pixels whose centres
/// fall inside the transformed outline.
std::vector<std::uint8_t> glyph_mask(const Glyph& glyph, const Pose& pose, std::size_t width, std::size_t height);

/// Paints the glyph onto an (H,W,3) canvas. Returns the tight box of painted
/// pixels, or nullopt when nothing landed on the canvas.
std::optional<BoundingBox> render_glyph(Image& canvas, const Glyph& glyph, const Pose& pose);

Rgb hsv_to_rgb(double hue_deg, double saturation, double value);

/// Gaussian-filtered uniform noise around a gray level, concrete-like.
struct BackgroundSpec {
    double mean = 0.5;
    double amplitude = 0.35;  // uniform noise half-width before filtering
    double blur_sigma = 1.2;
    double tint = 0.03;       // per-image random channel offset half-width

    friend bool operator==(const BackgroundSpec&, const BackgroundSpec&) = default;
};

Image make_background(std::size_t width, std::size_t height, const BackgroundSpec& spec, Rng& rng,
                      std::size_t channels = 3);

/// Random star-shaped polygon whose colour keeps clear of every default part
/// hue (and `avoid`), used as a non-part distractor.
Glyph random_distractor(Rng& rng, const std::vector<double>& avoid_hues = {});

struct PartDatasetOptions {
    std::size_t channels = 3;
    double distractor_fraction = 0.6;  // share of negatives (and positives) carrying distractors
    double min_scale = 0.8;
    double max_scale = 1.1;
    double min_visible = 0.8;  // fraction of the glyph extent kept inside the window
    BackgroundSpec background{};
};

/// n_pos windows showing the part's glyph at a random pose and n_neg pure
/// negatives (background, optionally non-part distractors). Every sample has
/// its own origin.
std::vector<Sample> generate_part_dataset(const PartId& part, std::size_t n_pos, std::size_t n_neg,
                                          std::uint64_t seed, const PartDatasetOptions& options = {});

struct PlacedPart {
    PartId part;
    Pose pose;
    bool occluded = false;
};

struct SceneSpec {
    std::size_t width = 640;
    std::size_t height = 440;
    BackgroundSpec background{};
    std::vector<PlacedPart> parts;
    std::size_t distractors = 0;

    /// Throws when a box would leave the canvas entirely or the canvas is empty.
    void validate() const;
};

struct GroundTruthBox {
    std::string part;  // a part name, or "composite"
    BoundingBox box;
    bool visible = true;

    friend bool operator==(const GroundTruthBox&, const GroundTruthBox&) = default;
};

struct Scene {
    Image image;
    std::vector<GroundTruthBox> part_boxes;  // one per placed part, in placement order
    std::optional<BoundingBox> composite;    // union of visible part boxes

    /// Part boxes followed by the composite entry when present.
    std::vector<GroundTruthBox> all_boxes() const;
};

inline constexpr const char* kCompositeLabel = "composite";

/// Composites the non-occluded glyphs in placement order. Visible boxes come
/// from the painted pixels; occluded parts report their clipped outline box
/// flagged hidden.
Scene generate_scene(const SceneSpec& spec, std::uint64_t seed);

/// Whole-weapon pose plus the ablations applied to it.
struct RifleLayout {
    double cx = 320.0;
    double cy = 220.0;
    double rotation_deg = 0.0;
    double scale = 1.0;
    std::vector<PartId> removed;
    std::vector<PartId> occluded;
};

/// Places the four default parts in rifle arrangement (stock, receiver,
/// magazine under the receiver, barrel) around (cx, cy).
SceneSpec rifle_scene(const RifleLayout& layout, std::size_t width = 640, std::size_t height = 440);

/// Canvas and pose ranges of the generated scene suites.
struct SuiteOptions {
    std::size_t width = 640;
    std::size_t height = 360;
    double max_rotation_deg = 15.0;
    double min_scale = 0.9;
    double max_scale = 1.0;
};

/// Scene suites used by synth/evaluate: rigid = random rotation, scale and
/// location of the whole rifle; ablative = rigid plus removed or occluded
/// parts (one of every seven leaves a single part); background = no parts.
std::vector<SceneSpec> rigid_scene_specs(std::size_t count, std::uint64_t seed, const SuiteOptions& options = {});
std::vector<SceneSpec> ablative_scene_specs(std::size_t count, std::uint64_t seed, const SuiteOptions& options = {});
std::vector<SceneSpec> background_scene_specs(std::size_t count, const SuiteOptions& options = {});

}  // namespace snnw

#include "snnw/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "snnw/dataset.hpp"

namespace snnw {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Part hues sit 90 degrees apart; distractors stay 20 degrees clear of them.
constexpr double kHueClearance = 20.0;

const std::vector<Glyph>& shipped_glyphs() {
    static const std::vector<Glyph> glyphs = {
        {"stock", {{-75, -30}, {75, -25}, {75, 25}, {-50, 60}, {-75, 60}}, {0.0, 0.8, 0.9, 14.0, 90.0, 0.3}},
        {"magazine", {{-25, -65}, {25, -65}, {35, 65}, {-10, 65}}, {270.0, 0.7, 0.9, 10.0, 90.0, 0.35}},
        {"barrel", {{-90, -12}, {90, -8}, {90, 8}, {-90, 12}}, {180.0, 0.8, 0.9, 20.0, 0.0, 0.3}},
        {"receiver",
         {{-85, -35}, {-40, -35}, {-30, -50}, {50, -50}, {60, -35}, {85, -35}, {85, 40}, {-85, 40}},
         {90.0, 0.8, 0.85, 16.0, 45.0, 0.3}},
    };
    return glyphs;
}

std::vector<double> default_hues() {
    std::vector<double> h;
    for (const auto& g : shipped_glyphs()) h.push_back(g.style.hue_deg);
    return h;
}

double hue_distance(double a, double b) {
    const double d = std::fmod(std::abs(a - b), 360.0);
    return std::min(d, 360.0 - d);
}

// Star-shaped outline: sorted angles, random radii.
std::vector<Point> random_outline(Rng& rng, double r_min, double r_max) {
    const std::size_t n = 3 + rng.below(5);
    std::vector<double> angles(n);
    for (auto& a : angles) a = rng.uniform(0.0, 2.0 * std::numbers::pi);
    std::sort(angles.begin(), angles.end());
    std::vector<Point> pts;
    for (double a : angles) {
        const double r = rng.uniform(r_min, r_max);
        pts.push_back({r * std::cos(a), r * std::sin(a)});
    }
    return pts;
}

struct Frame {
    double c, s, scale, cx, cy;

    Point to_canvas(const Point& p) const {
        return {cx + scale * (c * p[0] - s * p[1]), cy + scale * (s * p[0] + c * p[1])};
    }
    Point to_local(double x, double y) const {
        const double dx = (x - cx) / scale, dy = (y - cy) / scale;
        return {c * dx + s * dy, -s * dx + c * dy};
    }
};

Frame frame_of(const Pose& pose) {
    if (!(pose.scale > 0.0)) throw std::invalid_argument("glyph pose scale must be positive");
    return {std::cos(pose.rotation_deg * kDeg), std::sin(pose.rotation_deg * kDeg), pose.scale, pose.cx, pose.cy};
}

// Even-odd rule.
bool inside(const std::vector<Point>& poly, const Point& p) {
    bool in = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const auto& a = poly[i];
        const auto& b = poly[j];
        if ((a[1] > p[1]) != (b[1] > p[1])) {
            const double x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if (p[0] < x) in = !in;
        }
    }
    return in;
}

template <typename Visit>
void for_each_covered_pixel(const Glyph& glyph, const Pose& pose, std::size_t width, std::size_t height,
                            Visit&& visit) {
    const auto frame = frame_of(pose);
    const auto ext = clamp_to(outline_extent(glyph, pose), static_cast<std::int64_t>(width),
                              static_cast<std::int64_t>(height));
    if (!ext) return;
    for (auto r = ext->y; r < ext->bottom(); ++r) {
        for (auto q = ext->x; q < ext->right(); ++q) {
            const auto local = frame.to_local(static_cast<double>(q) + 0.5, static_cast<double>(r) + 0.5);
            if (inside(glyph.outline, local)) visit(static_cast<std::size_t>(r), static_cast<std::size_t>(q), local);
        }
    }
}

Image to_gray(const Image& rgb) {
    Image out({rgb.dim(0), rgb.dim(1), 1});
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (rgb[3 * i] + rgb[3 * i + 1] + rgb[3 * i + 2]) / 3.0f;
    return out;
}

}  // namespace

Glyph part_glyph(const PartId& part) {
    for (const auto& g : shipped_glyphs()) {
        if (g.name == part.name()) return g;
    }
    Rng rng(derive_seed(0x5eed, part.name()));
    Glyph g{part.name(), random_outline(rng, 45.0, 80.0), {}};
    const auto avoid = default_hues();
    double hue = 0.0;
    do {
        hue = rng.uniform(0.0, 360.0);
    } while (std::any_of(avoid.begin(), avoid.end(), [&](double h) { return hue_distance(h, hue) < kHueClearance; }));
    g.style = {hue, 0.75, 0.9, rng.uniform(8.0, 22.0), rng.uniform(0.0, 180.0), 0.3};
    return g;
}

std::vector<Point> transformed_outline(const Glyph& glyph, const Pose& pose) {
    const auto frame = frame_of(pose);
    std::vector<Point> out;
    out.reserve(glyph.outline.size());
    for (const auto& p : glyph.outline) out.push_back(frame.to_canvas(p));
    return out;
}

BoundingBox outline_extent(const Glyph& glyph, const Pose& pose) {
    const auto pts = transformed_outline(glyph, pose);
    double x0 = pts[0][0], x1 = x0, y0 = pts[0][1], y1 = y0;
    for (const auto& p : pts) {
        x0 = std::min(x0, p[0]);
        x1 = std::max(x1, p[0]);
        y0 = std::min(y0, p[1]);
        y1 = std::max(y1, p[1]);
    }
    return BoundingBox::from_extent(static_cast<std::int64_t>(std::floor(x0)), static_cast<std::int64_t>(std::floor(y0)),
                                    static_cast<std::int64_t>(std::ceil(x1)), static_cast<std::int64_t>(std::ceil(y1)));
}

std::vector<std::uint8_t> glyph_mask(const Glyph& glyph, const Pose& pose, std::size_t width, std::size_t height) {
    std::vector<std::uint8_t> mask(width * height, 0);
    for_each_covered_pixel(glyph, pose, width, height,
                           [&](std::size_t r, std::size_t q, const Point&) { mask[r * width + q] = 1; });
    return mask;
}

Rgb hsv_to_rgb(double hue_deg, double saturation, double value) {
    const double h = std::fmod(std::fmod(hue_deg, 360.0) + 360.0, 360.0) / 60.0;
    const double c = value * saturation;
    const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
    const double m = value - c;
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(h)) {
        case 0: r = c; g = x; break;
        case 1: r = x; g = c; break;
        case 2: g = c; b = x; break;
        case 3: g = x; b = c; break;
        case 4: r = x; b = c; break;
        default: r = c; b = x; break;
    }
    return {static_cast<float>(r + m), static_cast<float>(g + m), static_cast<float>(b + m)};
}

std::optional<BoundingBox> render_glyph(Image& canvas, const Glyph& glyph, const Pose& pose) {
    if (canvas.rank() != 3 || canvas.dim(2) != 3) throw ShapeError("render_glyph needs an (H,W,3) canvas");
    const auto& st = glyph.style;
    const auto base = hsv_to_rgb(st.hue_deg, st.saturation, st.value);
    const double ca = std::cos(st.stripe_angle_deg * kDeg), sa = std::sin(st.stripe_angle_deg * kDeg);
    std::int64_t x0 = INT64_MAX, y0 = INT64_MAX, x1 = INT64_MIN, y1 = INT64_MIN;
    for_each_covered_pixel(glyph, pose, canvas.dim(1), canvas.dim(0), [&](std::size_t r, std::size_t q, const Point& p) {
        const double u = (p[0] * ca + p[1] * sa) / st.stripe_period;
        const float shade = (u - std::floor(u)) < 0.5 ? 1.0f : static_cast<float>(1.0 - st.stripe_contrast);
        for (std::size_t k = 0; k < 3; ++k) canvas(r, q, k) = base[k] * shade;
        const auto ri = static_cast<std::int64_t>(r), qi = static_cast<std::int64_t>(q);
        x0 = std::min(x0, qi);
        x1 = std::max(x1, qi);
        y0 = std::min(y0, ri);
        y1 = std::max(y1, ri);
    });
    if (x0 == INT64_MAX) return std::nullopt;
    return BoundingBox::from_extent(x0, y0, x1 + 1, y1 + 1);
}

Image make_background(std::size_t width, std::size_t height, const BackgroundSpec& spec, Rng& rng,
                      std::size_t channels) {
    const double level = spec.mean + rng.uniform(-0.1, 0.1);
    std::vector<double> noise(width * height);
    for (auto& v : noise) v = level + rng.uniform(-spec.amplitude, spec.amplitude);

    if (spec.blur_sigma > 0.0) {
        const int radius = static_cast<int>(std::ceil(3.0 * spec.blur_sigma));
        std::vector<double> kernel(2 * radius + 1);
        double total = 0.0;
        for (int i = -radius; i <= radius; ++i) {
            kernel[i + radius] = std::exp(-0.5 * i * i / (spec.blur_sigma * spec.blur_sigma));
            total += kernel[i + radius];
        }
        for (auto& k : kernel) k /= total;
        std::vector<double> tmp(noise.size());
        const auto W = static_cast<int>(width), H = static_cast<int>(height);
        for (int r = 0; r < H; ++r)
            for (int q = 0; q < W; ++q) {
                double s = 0.0;
                for (int i = -radius; i <= radius; ++i) s += kernel[i + radius] * noise[r * W + std::clamp(q + i, 0, W - 1)];
                tmp[r * W + q] = s;
            }
        for (int r = 0; r < H; ++r)
            for (int q = 0; q < W; ++q) {
                double s = 0.0;
                for (int i = -radius; i <= radius; ++i) s += kernel[i + radius] * tmp[std::clamp(r + i, 0, H - 1) * W + q];
                noise[r * W + q] = s;
            }
    }

    double tint[3];
    for (auto& t : tint) t = rng.uniform(-spec.tint, spec.tint);
    Image out({height, width, 3});
    for (std::size_t i = 0; i < noise.size(); ++i) {
        for (std::size_t k = 0; k < 3; ++k) out[3 * i + k] = static_cast<float>(std::clamp(noise[i] + tint[k], 0.0, 1.0));
    }
    return channels == 1 ? to_gray(out) : out;
}

Glyph random_distractor(Rng& rng, const std::vector<double>& avoid_hues) {
    auto avoid = default_hues();
    avoid.insert(avoid.end(), avoid_hues.begin(), avoid_hues.end());
    Glyph g{"distractor", random_outline(rng, 25.0, 75.0), {}};
    const double sat = rng.uniform(0.0, 0.9);
    double hue = rng.uniform(0.0, 360.0);
    if (sat > 0.25) {
        while (std::any_of(avoid.begin(), avoid.end(), [&](double h) { return hue_distance(h, hue) < kHueClearance; })) {
            hue = rng.uniform(0.0, 360.0);
        }
    }
    g.style = {hue, sat, rng.uniform(0.3, 0.95), rng.uniform(6.0, 24.0), rng.uniform(0.0, 180.0), rng.uniform(0.0, 0.4)};
    return g;
}

std::vector<Sample> generate_part_dataset(const PartId& part, std::size_t n_pos, std::size_t n_neg, std::uint64_t seed,
                                          const PartDatasetOptions& options) {
    if (options.channels != 1 && options.channels != 3) throw std::invalid_argument("channels must be 1 or 3");
    const auto glyph = part_glyph(part);
    Rng rng(derive_seed(seed, part.name()));
    const auto side = static_cast<double>(kWindowSize);
    std::vector<Sample> out;
    out.reserve(n_pos + n_neg);

    auto add_distractors = [&](Image& img, std::size_t count) {
        for (std::size_t d = 0; d < count; ++d) {
            const auto dg = random_distractor(rng, {glyph.style.hue_deg});
            render_glyph(img, dg, {rng.uniform(0.0, side), rng.uniform(0.0, side), rng.uniform(-180.0, 180.0), 1.0});
        }
    };
    auto finish = [&](Image img, Label label, const std::string& origin) {
        out.push_back({options.channels == 1 ? to_gray(img) : std::move(img), label, part, origin, 0});
    };

    for (std::size_t i = 0; i < n_pos; ++i) {
        auto img = make_background(kWindowSize, kWindowSize, options.background, rng);
        if (rng.bernoulli(options.distractor_fraction / 2.0)) add_distractors(img, 1);
        Pose pose{0.0, 0.0, rng.uniform(-180.0, 180.0), rng.uniform(options.min_scale, options.max_scale)};
        const auto ext = outline_extent(glyph, pose);
        auto centre_range = [&](double lo_edge, double extent) {
            // centre offset so that at most (1 - min_visible) of the extent overhangs either side
            const double overhang = (1.0 - options.min_visible) * extent;
            const double lo = -lo_edge - overhang, hi = side - (lo_edge + extent) + overhang;
            return lo <= hi ? rng.uniform(lo, hi) : (lo + hi) / 2.0;
        };
        pose.cx = centre_range(static_cast<double>(ext.x), static_cast<double>(ext.w));
        pose.cy = centre_range(static_cast<double>(ext.y), static_cast<double>(ext.h));
        render_glyph(img, glyph, pose);
        finish(std::move(img), Label::present, part.name() + "-" + std::to_string(seed) + "-pos-" + std::to_string(i));
    }
    for (std::size_t i = 0; i < n_neg; ++i) {
        auto img = make_background(kWindowSize, kWindowSize, options.background, rng);
        if (rng.bernoulli(options.distractor_fraction)) add_distractors(img, 1 + rng.below(2));
        finish(std::move(img), Label::absent, part.name() + "-" + std::to_string(seed) + "-neg-" + std::to_string(i));
    }
    return out;
}

void SceneSpec::validate() const {
    if (width == 0 || height == 0) throw std::invalid_argument("scene canvas must be nonempty");
    for (const auto& p : parts) {
        const auto ext = outline_extent(part_glyph(p.part), p.pose);
        if (!clamp_to(ext, static_cast<std::int64_t>(width), static_cast<std::int64_t>(height))) {
            throw std::invalid_argument("part '" + p.part.name() + "' is placed entirely outside the canvas");
        }
    }
}

std::vector<GroundTruthBox> Scene::all_boxes() const {
    auto out = part_boxes;
    if (composite) out.push_back({kCompositeLabel, *composite, true});
    return out;
}

Scene generate_scene(const SceneSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    Scene scene{make_background(spec.width, spec.height, spec.background, rng), {}, std::nullopt};
    for (std::size_t d = 0; d < spec.distractors; ++d) {
        const auto dg = random_distractor(rng);
        render_glyph(scene.image, dg,
                     {rng.uniform(0.0, static_cast<double>(spec.width)), rng.uniform(0.0, static_cast<double>(spec.height)),
                      rng.uniform(-180.0, 180.0), 1.0});
    }
    const auto W = static_cast<std::int64_t>(spec.width), H = static_cast<std::int64_t>(spec.height);
    for (const auto& p : spec.parts) {
        const auto glyph = part_glyph(p.part);
        if (p.occluded) {
            scene.part_boxes.push_back({p.part.name(), *clamp_to(outline_extent(glyph, p.pose), W, H), false});
            continue;
        }
        const auto box = render_glyph(scene.image, glyph, p.pose);
        if (!box) {
            // Outline touches the canvas but covers no pixel centre.
            scene.part_boxes.push_back({p.part.name(), *clamp_to(outline_extent(glyph, p.pose), W, H), false});
            continue;
        }
        scene.part_boxes.push_back({p.part.name(), *box, true});
        scene.composite = scene.composite ? union_extent(*scene.composite, *box) : *box;
    }
    return scene;
}

SceneSpec rifle_scene(const RifleLayout& layout, std::size_t width, std::size_t height) {
    // Part centres relative to the rifle's bounding-box centre, unrotated.
    static const std::vector<std::pair<std::string, Point>> arrangement = {
        {"stock", {-175.0, -50.0}},
        {"receiver", {-15.0, -55.0}},
        {"magazine", {5.0, 40.0}},
        {"barrel", {160.0, -70.0}},
    };
    SceneSpec spec;
    spec.width = width;
    spec.height = height;
    const Frame frame = frame_of({layout.cx, layout.cy, layout.rotation_deg, layout.scale});
    for (const auto& [name, offset] : arrangement) {
        PartId id(name);
        if (std::find(layout.removed.begin(), layout.removed.end(), id) != layout.removed.end()) continue;
        const auto c = frame.to_canvas(offset);
        const bool occluded = std::find(layout.occluded.begin(), layout.occluded.end(), id) != layout.occluded.end();
        spec.parts.push_back({id, {c[0], c[1], layout.rotation_deg, layout.scale}, occluded});
    }
    return spec;
}

namespace {

RifleLayout random_rigid_layout(Rng& rng, const SuiteOptions& o) {
    RifleLayout l;
    l.rotation_deg = rng.uniform(-o.max_rotation_deg, o.max_rotation_deg);
    l.scale = rng.uniform(o.min_scale, o.max_scale);
    const double c = std::abs(std::cos(l.rotation_deg * kDeg)), s = std::abs(std::sin(l.rotation_deg * kDeg));
    // rifle silhouette is 500 x 210 at scale 1
    const double half_w = 0.5 * l.scale * (500.0 * c + 210.0 * s) + 4.0;
    const double half_h = 0.5 * l.scale * (500.0 * s + 210.0 * c) + 4.0;
    auto pick = [&](double extent, double half) {
        return half < extent - half ? rng.uniform(half, extent - half) : extent / 2.0;
    };
    l.cx = pick(static_cast<double>(o.width), half_w);
    l.cy = pick(static_cast<double>(o.height), half_h);
    return l;
}

}  // namespace

std::vector<SceneSpec> rigid_scene_specs(std::size_t count, std::uint64_t seed, const SuiteOptions& options) {
    Rng rng(derive_seed(seed, "rigid-scenes"));
    std::vector<SceneSpec> out;
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(rifle_scene(random_rigid_layout(rng, options), options.width, options.height));
    }
    return out;
}

std::vector<SceneSpec> ablative_scene_specs(std::size_t count, std::uint64_t seed, const SuiteOptions& options) {
    Rng rng(derive_seed(seed, "ablative-scenes"));
    const PartId stock("stock"), magazine("magazine"), barrel("barrel"), receiver("receiver");
    std::vector<SceneSpec> out;
    for (std::size_t i = 0; i < count; ++i) {
        auto l = random_rigid_layout(rng, options);
        switch (i % 7) {
            case 0: l.removed = {barrel}; break;
            case 1: l.occluded = {magazine}; break;
            case 2: l.removed = {stock}; l.occluded = {barrel}; break;
            case 3: l.removed = {magazine}; break;
            case 4: l.occluded = {stock}; break;
            case 5: l.removed = {stock, receiver, magazine}; break;
            default: l.removed = {receiver}; break;
        }
        out.push_back(rifle_scene(l, options.width, options.height));
    }
    return out;
}

std::vector<SceneSpec> background_scene_specs(std::size_t count, const SuiteOptions& options) {
    SceneSpec spec;
    spec.width = options.width;
    spec.height = options.height;
    return std::vector<SceneSpec>(count, spec);
}

}  // namespace snnw

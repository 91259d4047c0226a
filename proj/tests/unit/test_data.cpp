#include "doctest.h"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "snnw/dataset.hpp"
#include "snnw/image_io.hpp"
#include "snnw/storage.hpp"
#include "snnw/synthetic.hpp"
#include "support.hpp"

using namespace snnw;
namespace fs = std::filesystem;

namespace {

// Writes an 8-bit RGB PNG straight through libpng, independent of save_png.
void write_rgb_png(const fs::path& path, std::size_t w, std::size_t h, const std::vector<std::uint8_t>& rgb) {
    FILE* f = std::fopen(path.c_str(), "wb");
    REQUIRE(f);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    png_init_io(png, f);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t r = 0; r < h; ++r) png_write_row(png, rgb.data() + r * w * 3);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
}

std::vector<Sample> labelled(std::size_t n, std::size_t group = 1) {
    std::vector<Sample> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({Image(Shape{2, 2, 1}, static_cast<float>(i)), i % 2 ? Label::present : Label::absent,
                       PartId("stock"), "src" + std::to_string(i / group), 0});
    }
    return out;
}

double max_abs_diff(const Image& a, const Image& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a[i]) - double(b[i])));
    return m;
}

}  // namespace

TEST_CASE("load_image normalizes PNG values") {
    const auto dir = test_support::temp_dir("png");
    write_rgb_png(dir / "white.png", 3, 2, std::vector<std::uint8_t>(18, 255));
    write_rgb_png(dir / "black.png", 3, 2, std::vector<std::uint8_t>(18, 0));
    write_rgb_png(dir / "two.png", 2, 1, {255, 0, 0, 0, 0, 0});

    auto white = load_image(dir / "white.png");
    CHECK(white.shape() == Shape{2, 3, 3});
    for (auto v : white.data()) CHECK(v == 1.0f);
    const auto black = load_image(dir / "black.png");
    for (auto v : black.data()) CHECK(v == 0.0f);
    auto two = load_image(dir / "two.png");
    CHECK(two.shape() == Shape{1, 2, 3});
    CHECK(two.values() == std::vector<float>{1, 0, 0, 0, 0, 0});

    // round trip through save_png keeps 8-bit levels exactly
    Image img(Shape{4, 5, 3});
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(i % 256) / 255.0f;
    save_png(img, dir / "rt.png");
    CHECK(load_image(dir / "rt.png") == img);

    std::ofstream(dir / "p.ppm", std::ios::binary) << "P6\n2 1\n255\n" << std::string("\xff\x00\x00\x00\x00\xff", 6);
    CHECK(load_image(dir / "p.ppm").values() == std::vector<float>{1, 0, 0, 0, 0, 1});

    std::ofstream(dir / "junk.png") << "not an image";
    CHECK_THROWS_AS(load_image(dir / "junk.png"), ImageIoError);
    CHECK_THROWS_AS(load_image(dir / "missing.png"), ImageIoError);
}

TEST_CASE("split_dataset sizes and determinism") {
    auto s = split_dataset(labelled(2500), {2000, 400, 100}, 1);
    CHECK(s.train.size() == 2000);
    CHECK(s.val.size() == 400);
    CHECK(s.test.size() == 100);

    auto all = split_dataset(labelled(50), {1, 0, 0}, 1);
    CHECK(all.train.size() == 50);
    CHECK(all.val.empty());

    auto a = split_dataset(labelled(300, 3), {0.8, 0.1, 0.1}, 9), b = split_dataset(labelled(300, 3), {0.8, 0.1, 0.1}, 9);
    REQUIRE(a.train.size() == b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i) CHECK(a.train[i].origin == b.train[i].origin);

    CHECK_THROWS_AS(split_dataset(labelled(10), {8, 2, 1}, 1), std::invalid_argument);
}

TEST_CASE("splits are origin-disjoint") {
    Rng rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t group = 1 + rng.below(4);
        const auto n = 40 * group;
        auto s = split_dataset(labelled(n, group), {0.5, 0.25, 0.25}, trial);
        std::set<std::string> seen[3];
        const std::vector<Sample>* parts[3] = {&s.train, &s.val, &s.test};
        for (int i = 0; i < 3; ++i)
            for (const auto& x : *parts[i]) seen[i].insert(x.origin);
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j)
                for (const auto& o : seen[i]) CHECK(seen[j].count(o) == 0);
        CHECK(s.train.size() + s.val.size() + s.test.size() == n);
    }
}

TEST_CASE("augmentation") {
    Rng rng(1);
    Sample s{test_support::random_image(200, 200, 3, rng), Label::present, PartId("barrel"), "x", 0};
    CHECK(affine_transform(s.image, {}) == s.image);
    CHECK(max_abs_diff(affine_transform(s.image, {360.0, 0.0, 1.0}), s.image) <= 1.0 / 255.0);

    AugmentSpec spec;
    spec.copies = 3;
    auto copies = augment_sample(s, spec);
    CHECK(copies.size() == 3);
    for (const auto& c : copies) {
        CHECK(c.label == s.label);
        CHECK(c.part == s.part);
        CHECK(c.origin == s.origin);
        CHECK(c.image.shape() == s.image.shape());
    }
    CHECK(augment_sample(s, spec)[0].image == copies[0].image);

    std::vector<Sample> set;
    for (int i = 0; i < 20; ++i) set.push_back({Image(Shape{8, 8, 1}, 0.5f), Label::absent, PartId("stock"), "o" + std::to_string(i), 0});
    CHECK(augment_dataset(set, spec).size() == 80);  // 2000 -> 8000 at scale

    spec.scale = 1.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec.scale = 0.1;
    spec.rotation_deg = -1;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("negative crops avoid exclusion boxes") {
    Rng rng(2);
    const std::vector<BoundingBox> excl{{100, 100, 150, 80}, {500, 20, 30, 300}};
    const auto crops = place_negative_crops(640, 480, 10000, rng, excl);
    CHECK(crops.size() == 10000);
    for (const auto& c : crops) {
        CHECK(c.w == 200);
        CHECK_FALSE(intersects(c, excl[0]));
        CHECK_FALSE(intersects(c, excl[1]));
        CHECK(c.right() <= 640);
        CHECK(c.bottom() <= 480);
    }

    const auto free_crops = place_negative_crops(400, 400, 20000, rng, {});
    std::int64_t lo = 1000, hi = -1;
    double mean = 0;
    for (const auto& c : free_crops) {
        lo = std::min(lo, c.x);
        hi = std::max(hi, c.x);
        mean += static_cast<double>(c.x);
    }
    CHECK(lo == 0);
    CHECK(hi == 200);
    CHECK(mean / 20000.0 == doctest::Approx(100.0).epsilon(0.03));

    CHECK_THROWS_AS(place_negative_crops(400, 400, 1, rng, {{0, 0, 400, 400}}), std::runtime_error);
    CHECK_THROWS_AS(place_negative_crops(150, 400, 1, rng, {}), std::invalid_argument);

    const Image src(Shape{300, 300, 3}, 0.25f);
    const auto samples = extract_negative_crops(src, 3, rng, {});
    CHECK(samples.size() == 3);
    for (const auto& s : samples) {
        CHECK(s.label == Label::absent);
        CHECK(s.image.shape() == Shape{200, 200, 3});
    }
}

TEST_CASE("part datasets") {
    const PartId stock("stock");
    auto none = generate_part_dataset(stock, 0, 5, 1);
    CHECK(none.size() == 5);
    for (const auto& s : none) CHECK(s.label == Label::absent);

    auto a = generate_part_dataset(stock, 3, 3, 4), b = generate_part_dataset(stock, 3, 3, 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].image == b[i].image);
        CHECK(a[i].origin == b[i].origin);
        CHECK(a[i].image.shape() == Shape{200, 200, 3});
        for (auto v : a[i].image.data()) {
            if (v < 0.0f || v > 1.0f) FAIL("value outside [0,1]");
        }
    }
    std::set<std::string> origins;
    for (const auto& s : a) origins.insert(s.origin);
    CHECK(origins.size() == a.size());

    PartDatasetOptions gray;
    gray.channels = 1;
    CHECK(generate_part_dataset(stock, 1, 1, 4, gray)[0].image.shape() == Shape{200, 200, 1});
}

TEST_CASE("shipped glyphs are pairwise distinct") {
    const auto parts = default_parts();
    std::vector<Image> renders;
    for (const auto& p : parts) {
        Image canvas(Shape{200, 200, 3}, 0.0f);
        render_glyph(canvas, part_glyph(p), {100, 100, 0, 1});
        renders.push_back(std::move(canvas));
    }
    for (std::size_t i = 0; i < renders.size(); ++i)
        for (std::size_t j = i + 1; j < renders.size(); ++j) {
            double l1 = 0;
            for (std::size_t k = 0; k < renders[i].size(); ++k) l1 += std::abs(renders[i][k] - renders[j][k]);
            CAPTURE(parts[i].name());
            CAPTURE(parts[j].name());
            CHECK(l1 / static_cast<double>(renders[i].size()) > 0.1);
        }
    CHECK(part_glyph(PartId("trigger")).outline == part_glyph(PartId("trigger")).outline);
}

TEST_CASE("scene ground truth matches glyph masks") {
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        RifleLayout l;
        l.cx = rng.uniform(250, 390);
        l.cy = rng.uniform(150, 210);
        l.rotation_deg = rng.uniform(-40, 40);
        l.scale = rng.uniform(0.7, 1.0);
        const auto spec = rifle_scene(l, 640, 360);
        const auto scene = generate_scene(spec, trial);
        REQUIRE(scene.part_boxes.size() == 4);
        std::optional<BoundingBox> uni;
        for (std::size_t i = 0; i < 4; ++i) {
            const auto& p = spec.parts[i];
            const auto mask = glyph_mask(part_glyph(p.part), p.pose, 640, 360);
            std::int64_t x0 = 640, y0 = 360, x1 = -1, y1 = -1;
            for (std::int64_t y = 0; y < 360; ++y)
                for (std::int64_t x = 0; x < 640; ++x)
                    if (mask[static_cast<std::size_t>(y * 640 + x)]) {
                        x0 = std::min(x0, x), y0 = std::min(y0, y), x1 = std::max(x1, x), y1 = std::max(y1, y);
                    }
            const auto truth = BoundingBox::from_extent(x0, y0, x1 + 1, y1 + 1);
            CHECK(scene.part_boxes[i].box == truth);
            CHECK(scene.part_boxes[i].visible);
            uni = uni ? union_extent(*uni, truth) : truth;
        }
        CHECK(scene.composite == uni);
        const auto all = scene.all_boxes();
        CHECK(all.size() == 5);
        CHECK(all.back().part == kCompositeLabel);
    }
}

TEST_CASE("ablative scenes") {
    RifleLayout l;
    l.cx = 320;
    l.cy = 180;
    l.removed = {PartId("barrel"), PartId("stock")};
    auto scene = generate_scene(rifle_scene(l, 640, 360), 1);
    std::size_t visible = 0;
    for (const auto& b : scene.part_boxes) visible += b.visible;
    CHECK(visible == 2);

    l.removed.clear();
    l.occluded = {PartId("magazine")};
    const auto spec = rifle_scene(l, 640, 360);
    scene = generate_scene(spec, 1);
    for (const auto& b : scene.part_boxes) CHECK(b.visible == (b.part != "magazine"));
    // hidden parts keep a box inside the canvas
    for (const auto& b : scene.part_boxes) CHECK(b.box.right() <= 640);

    SceneSpec outside;
    outside.parts.push_back({PartId("stock"), {5000, 5000, 0, 1}, false});
    CHECK_THROWS_AS(generate_scene(outside, 1), std::invalid_argument);

    const auto suite = ablative_scene_specs(7, 3);
    std::size_t singles = 0;
    for (const auto& s : suite) {
        std::size_t shown = 0;
        for (const auto& p : s.parts) shown += !p.occluded;
        singles += shown == 1;
    }
    CHECK(singles == 1);
    CHECK(background_scene_specs(3).size() == 3);
    CHECK(background_scene_specs(3)[0].parts.empty());
}

TEST_CASE("dataset tree and scene files round trip") {
    const auto dir = test_support::temp_dir("tree");
    const PartId stock("stock");
    auto samples = generate_part_dataset(stock, 2, 3, 7);
    samples[0].variant = 2;
    write_split(dir, "stock", "train", samples);
    CHECK(fs::exists(dir / "stock" / "train" / "pos" / (samples[0].origin + "_2.png")));
    CHECK(fs::exists(dir / "stock" / "train" / "neg" / (samples[4].origin + "_0.png")));
    auto back = read_split(dir, "stock", "train", stock);
    REQUIRE(back.size() == 5);
    std::size_t pos = 0;
    for (const auto& s : back) {
        pos += s.label == Label::present;
        const auto it = std::find_if(samples.begin(), samples.end(), [&](const Sample& o) {
            return o.origin == s.origin && o.variant == s.variant;
        });
        REQUIRE(it != samples.end());
        CHECK(max_abs_diff(it->image, s.image) <= 0.5 / 255.0 + 1e-6);
        CHECK(it->label == s.label);
    }
    CHECK(pos == 2);
    CHECK_THROWS_AS(read_split(dir, "barrel", "train", PartId("barrel")), std::runtime_error);

    std::vector<Scene> scenes{generate_scene(rifle_scene({}, 640, 440), 1)};
    const auto recs = write_scene_set(dir / "scenes", "rigid", scenes);
    const auto read = read_scene_set(dir / "scenes" / "rigid.jsonl");
    REQUIRE(read.size() == 1);
    CHECK(read[0].image == recs[0].image);
    CHECK(read[0].boxes == scenes[0].all_boxes());
    CHECK(read[0].composite() == scenes[0].composite);
    CHECK(load_image(dir / "scenes" / read[0].image).shape() == scenes[0].image.shape());

    std::ofstream(dir / "bad.jsonl") << "{\"image\": 3}\n";
    CHECK_THROWS_AS(read_scene_set(dir / "bad.jsonl"), std::runtime_error);
}

#include "doctest.h"

#include <cmath>
#include <set>

#include "snnw/evaluation.hpp"
#include "snnw/rng.hpp"
#include "support.hpp"

using namespace snnw;

namespace {

// Pixel-set IoU: enumerate covered pixels of both boxes.
double pixel_iou(const BoundingBox& a, const BoundingBox& b) {
    std::set<std::pair<std::int64_t, std::int64_t>> pa, pb;
    for (auto y = a.y; y < a.bottom(); ++y)
        for (auto x = a.x; x < a.right(); ++x) pa.insert({x, y});
    std::size_t inter = 0;
    for (auto y = b.y; y < b.bottom(); ++y)
        for (auto x = b.x; x < b.right(); ++x) {
            pb.insert({x, y});
            inter += pa.count({x, y});
        }
    return static_cast<double>(inter) / static_cast<double>(pa.size() + pb.size() - inter);
}

}  // namespace

TEST_CASE("metrics reproduce the published accuracy column") {
    // Errors on the positive set are misses (FN), errors on the negative set false alarms (FP).
    struct Row {
        std::uint64_t tp, fn, tn, fp;
        double accuracy, printed_precision_col, printed_recall_col;
    };
    const Row rows[] = {{97, 3, 78, 22, 0.875, 0.97, 0.815},
                        {81, 19, 84, 16, 0.825, 0.81, 0.835},
                        {99, 1, 54, 46, 0.765, 0.99, 0.683},
                        {82, 18, 95, 5, 0.885, 0.82, 0.943}};
    for (const auto& r : rows) {
        const auto m = compute_metrics({r.tp, r.fp, r.tn, r.fn});
        CHECK(format_metric(m.accuracy) == format_metric(r.accuracy));
        // The printed columns are recall and precision in that order.
        CHECK(*m.recall == doctest::Approx(r.printed_precision_col).epsilon(1e-12));
        CHECK(std::abs(*m.precision - r.printed_recall_col) < 5e-4);
    }
}

TEST_CASE("metrics edge cases") {
    auto perfect = compute_metrics({100, 0, 100, 0});
    CHECK(*perfect.accuracy == 1.0);
    CHECK(*perfect.precision == 1.0);
    CHECK(*perfect.recall == 1.0);

    CHECK_THROWS_AS(compute_metrics({}), std::invalid_argument);

    auto no_positives_called = compute_metrics({0, 0, 10, 5});
    CHECK_FALSE(no_positives_called.precision.has_value());
    CHECK(*no_positives_called.recall == 0.0);
    auto only_negatives = compute_metrics({0, 3, 7, 0});
    CHECK_FALSE(only_negatives.recall.has_value());
    CHECK(*only_negatives.precision == 0.0);
    CHECK(format_metric(std::nullopt) == "-");
}

TEST_CASE("iou examples") {
    const BoundingBox a{0, 0, 10, 10};
    CHECK(iou(a, a) == 1.0);
    CHECK(iou(a, {20, 20, 5, 5}) == 0.0);
    CHECK(iou(a, {10, 0, 10, 10}) == 0.0);  // touching edges share no pixel
    CHECK(iou(a, {5, 0, 10, 10}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(iou(a, {0, 0, 0, 4}), std::invalid_argument);
}

TEST_CASE("iou matches the pixel-set oracle on random boxes") {
    Rng rng(5);
    for (int i = 0; i < 2000; ++i) {
        auto box = [&] {
            return BoundingBox{static_cast<std::int64_t>(rng.below(30)), static_cast<std::int64_t>(rng.below(30)),
                               1 + static_cast<std::int64_t>(rng.below(20)),
                               1 + static_cast<std::int64_t>(rng.below(20))};
        };
        const auto a = box(), b = box();
        const double v = iou(a, b);
        CHECK(v == pixel_iou(a, b));
        CHECK(v == iou(b, a));
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        CHECK((v == 1.0) == (a == b));
    }
}

TEST_CASE("segmentation success rule") {
    const BoundingBox truth{0, 0, 100, 100};
    CHECK(segmentation_success({truth, truth, true, {}}));
    CHECK_FALSE(segmentation_success({truth, std::nullopt, true, {}}));
    CHECK_FALSE(segmentation_success({truth, truth, false, {}}));
    // 49 of 100 columns overlap: iou 0.49
    CHECK_FALSE(segmentation_success({truth, BoundingBox{0, 0, 49, 100}, true, {}}));
    CHECK(segmentation_success({truth, BoundingBox{0, 0, 50, 100}, true, {}}));

    // monotone in iou for detected cases
    bool seen_success = false;
    for (std::int64_t w = 1; w <= 100; ++w) {
        const bool s = segmentation_success({truth, BoundingBox{0, 0, w, 100}, true, {}});
        if (seen_success) CHECK(s);
        seen_success = seen_success || s;
    }

    SegmentationCase c{truth, BoundingBox{0, 0, 100, 100}, true, {{10, 10, 20, 20}, {50, 50, 50, 50}}};
    CHECK(covers_visible_parts(c));
    c.visible_parts.push_back({90, 90, 20, 5});
    CHECK_FALSE(covers_visible_parts(c));
}

TEST_CASE("position reports match the published detection rows") {
    const BoundingBox truth{0, 0, 100, 100}, good{0, 0, 100, 90}, poor{0, 0, 30, 30};
    auto cases = [&](int detected, int overlap, int total) {
        std::vector<SegmentationCase> out;
        for (int i = 0; i < total; ++i) {
            const bool d = i < detected;
            out.push_back({truth, d ? std::optional(i < overlap ? good : poor) : std::nullopt, d, {}});
        }
        return out;
    };
    auto low = evaluate_detection_run(cases(13, 4, 16), "Low");
    CHECK(low.detections() == "13 / 16");
    CHECK(low.overlap == 4);
    auto high = evaluate_detection_run(cases(15, 9, 16), "High");
    CHECK(high.detections() == "15 / 16");
    CHECK(high.overlap == 9);
    auto all = evaluate_detection_run(cases(7, 7, 7), "All");
    CHECK(all.detections() == "7 / 7");
    CHECK(all.overlap == 7);
    CHECK_THROWS_AS(evaluate_detection_run({}, "none"), std::invalid_argument);

    const auto table = position_table({low, high});
    CHECK(table.find("13 / 16") != std::string::npos);
    CHECK(table.find("Overlap over 50%") != std::string::npos);
}

TEST_CASE("evaluate_classifier counts with constant networks") {
    const auto pos = test_support::constant_network(PartId("stock"), true);
    const auto neg = test_support::constant_network(PartId("stock"), false);
    const auto set = test_support::tiny_set(PartId("stock"), 100, 100);

    auto c = evaluate_classifier(pos, set);
    CHECK(c == ConfusionCounts{100, 100, 0, 0});
    c = evaluate_classifier(neg, set);
    CHECK(c == ConfusionCounts{0, 0, 100, 100});
    CHECK(c.tp + c.fn == 100);
    CHECK(c.tn + c.fp == 100);
    CHECK_THROWS_AS(evaluate_classifier(pos, {}), std::invalid_argument);

    const auto table = metrics_table({{"stock", compute_metrics(c)}});
    CHECK(table.find("stock") != std::string::npos);
    CHECK(table.find(" - ") != std::string::npos);  // precision undefined
}

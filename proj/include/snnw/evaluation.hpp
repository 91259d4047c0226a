#pragma once

// Confusion counts and classifier metrics, IoU-based segmentation scoring,
// and the plain-text / JSON reports built from them.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "snnw/geometry.hpp"
#include "snnw/part_network.hpp"

namespace snnw {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const noexcept { return tp + fp + tn + fn; }

    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// A metric with a zero denominator is absent rather than zero.
struct MetricsReport {
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;
    ConfusionCounts counts;
};

/// Throws std::invalid_argument on all-zero counts.
MetricsReport compute_metrics(const ConfusionCounts& c);

/// Thresholds predict_window at 0.5: misses on positives are false negatives,
/// hits on negatives false positives. Throws on an empty set.
ConfusionCounts evaluate_classifier(const TrainedPartNetwork& net, const std::vector<Sample>& test_set);

/// Intersection over union of two pixel boxes; 0 when disjoint. Throws on a
/// zero-area box.
double iou(const BoundingBox& a, const BoundingBox& b);

struct SegmentationCase {
    BoundingBox truth;
    std::optional<BoundingBox> predicted;
    bool detected = false;
    std::vector<BoundingBox> visible_parts;  // for the coverage flag; may be empty
};

inline constexpr double kOverlapSuccess = 0.5;

/// Detected with IoU >= 0.5.
bool segmentation_success(const SegmentationCase& c);

/// Qualitative check: the predicted box contains every visible part box (or
/// the ground truth when no parts are listed).
bool covers_visible_parts(const SegmentationCase& c);

struct PositionReport {
    std::string label;
    std::size_t detected = 0;
    std::size_t cases = 0;
    std::size_t overlap = 0;  // detected cases with IoU >= 0.5
    std::size_t covering = 0;

    /// "d / n"
    std::string detections() const { return std::to_string(detected) + " / " + std::to_string(cases); }
};

/// Throws on an empty case list.
PositionReport evaluate_detection_run(const std::vector<SegmentationCase>& cases, const std::string& label);

struct PartMetricsRow {
    std::string part;
    MetricsReport metrics;
};

/// Table-I-like layout: part, accuracy, precision, recall, TP/FN/TN/FP.
std::string metrics_table(const std::vector<PartMetricsRow>& rows);

/// Table-II-like layout: position, detections, overlap over 50%.
std::string position_table(const std::vector<PositionReport>& rows);

/// Formats an optional metric with three decimals, "-" when absent.
std::string format_metric(const std::optional<double>& v);

}  // namespace snnw

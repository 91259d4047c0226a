#include "snnw/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace snnw {

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

}  // namespace

MetricsReport compute_metrics(const ConfusionCounts& c) {
    if (c.total() == 0) throw std::invalid_argument("confusion counts are all zero");
    return {ratio(c.tp + c.tn, c.total()), ratio(c.tp, c.tp + c.fp), ratio(c.tp, c.tp + c.fn), c};
}

ConfusionCounts evaluate_classifier(const TrainedPartNetwork& net, const std::vector<Sample>& test_set) {
    if (test_set.empty()) throw std::invalid_argument("empty test set");
    ConfusionCounts c;
    for (const auto& s : test_set) {
        const bool said_present = predict_window(net, s.image).positive();
        if (s.label == Label::present) {
            ++(said_present ? c.tp : c.fn);
        } else {
            ++(said_present ? c.fp : c.tn);
        }
    }
    return c;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
    if (!a.valid() || !b.valid()) throw std::invalid_argument("iou of a degenerate box");
    const auto inter = intersection(a, b);
    if (!inter) return 0.0;
    const auto i = inter->area();
    return static_cast<double>(i) / static_cast<double>(a.area() + b.area() - i);
}

bool segmentation_success(const SegmentationCase& c) {
    return c.detected && c.predicted && iou(*c.predicted, c.truth) >= kOverlapSuccess;
}

bool covers_visible_parts(const SegmentationCase& c) {
    if (!c.detected || !c.predicted) return false;
    const auto& p = *c.predicted;
    auto inside = [&](const BoundingBox& b) {
        return b.x >= p.x && b.y >= p.y && b.right() <= p.right() && b.bottom() <= p.bottom();
    };
    if (c.visible_parts.empty()) return inside(c.truth);
    return std::all_of(c.visible_parts.begin(), c.visible_parts.end(), inside);
}

PositionReport evaluate_detection_run(const std::vector<SegmentationCase>& cases, const std::string& label) {
    if (cases.empty()) throw std::invalid_argument("no segmentation cases for '" + label + "'");
    PositionReport r{label, 0, cases.size(), 0, 0};
    for (const auto& c : cases) {
        if (!c.detected) continue;
        ++r.detected;
        r.overlap += segmentation_success(c);
        r.covering += covers_visible_parts(c);
    }
    return r;
}

std::string format_metric(const std::optional<double>& v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *v);
    return buf;
}

std::string metrics_table(const std::vector<PartMetricsRow>& rows) {
    std::ostringstream os;
    os << pad("Part", 12) << pad("Accuracy", 10) << pad("Precision", 11) << pad("Recall", 8) << pad("TP", 6)
       << pad("FN", 6) << pad("TN", 6) << "FP\n";
    for (const auto& r : rows) {
        const auto& c = r.metrics.counts;
        os << pad(r.part, 12) << pad(format_metric(r.metrics.accuracy), 10)
           << pad(format_metric(r.metrics.precision), 11) << pad(format_metric(r.metrics.recall), 8)
           << pad(std::to_string(c.tp), 6) << pad(std::to_string(c.fn), 6) << pad(std::to_string(c.tn), 6) << c.fp
           << '\n';
    }
    return os.str();
}

std::string position_table(const std::vector<PositionReport>& rows) {
    std::ostringstream os;
    os << pad("Position", 14) << pad("Detections", 12) << "Overlap over 50%\n";
    for (const auto& r : rows) {
        os << pad(r.label, 14) << pad(r.detections(), 12) << r.overlap << '\n';
    }
    return os.str();
}

}  // namespace snnw

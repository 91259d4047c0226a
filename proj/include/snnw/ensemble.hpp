#pragma once

// Sliding-window ensemble: every part network scores every window; the
// per-part results are reduced to an alert, a heatmap and boxes.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "snnw/geometry.hpp"
#include "snnw/part_network.hpp"
#include "snnw/sample.hpp"

namespace snnw {

struct WindowConfig {
    std::size_t window = 200;
    std::size_t stride = 50;
    bool flush_edge = true;
    bool pad_small = false;  // replicate-pad images smaller than the window instead of rejecting them

    void validate() const;
};

/// Raised for images smaller than the window when padding is off.
class ImageTooSmallError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Origin {
    std::int64_t x = 0;
    std::int64_t y = 0;

    friend auto operator<=>(const Origin&, const Origin&) = default;
};

/// Window origins along one axis of length `dim`.
std::vector<std::int64_t> axis_origins(std::size_t dim, const WindowConfig& cfg);

/// All window origins, rows of y outermost. Throws ImageTooSmallError when
/// either dimension is below the window (padding is the caller's job).
std::vector<Origin> slide_windows(std::size_t width, std::size_t height, const WindowConfig& cfg);

/// Replicates edge pixels so both dimensions reach at least `window`.
Image pad_to_window(const Image& image, std::size_t window);

using PartNetworks = std::map<PartId, TrainedPartNetwork>;

struct WindowScore {
    Origin origin;
    std::map<PartId, double> p_present;
};

/// One score per origin, in slide_windows order. `workers` > 1 splits the
/// windows across threads; results do not depend on it.
std::vector<WindowScore> score_windows(const Image& image, const PartNetworks& networks, const WindowConfig& cfg,
                                       std::size_t workers = 1);

struct EnsembleConfig {
    std::vector<PartId> parts;
    std::map<PartId, double> weights;  // empty: 1/n each
    double threshold = 0.5;            // per-window positive decision
    std::size_t k = 2;                 // alert when at least k parts are detected
    double box_threshold = 0.5;        // part-activation threshold for part boxes
    std::size_t fusion_threshold = 2;  // agreeing parts per cell for the fused box
    std::size_t core_margin = 25;      // pixels trimmed from each window side when voting for agreement

    /// Fills default weights; throws on an invalid combination.
    void validate();
    double weight(const PartId& part) const;

    static EnsembleConfig defaults(std::vector<PartId> parts = default_parts(), std::size_t k = 2);
};

/// Per-part grids over window origins plus the agreement grid. A positive
/// window votes for its core (the window less `core_margin` on every side);
/// cells are cut out by all core edges and a part agrees on a cell when any
/// core covering it is positive.
struct Heatmap {
    std::size_t window = 200;
    std::size_t stride = 50;
    std::vector<std::int64_t> xs;  // origin columns
    std::vector<std::int64_t> ys;  // origin rows
    std::map<PartId, std::vector<double>> activation;  // ys.size() x xs.size(), row-major

    std::vector<std::int64_t> cell_x;  // cell boundaries, ascending
    std::vector<std::int64_t> cell_y;
    std::vector<std::uint32_t> agreement;  // (cell_y.size()-1) x (cell_x.size()-1)

    double at(const PartId& part, std::size_t row, std::size_t col) const;
    std::size_t cell_rows() const { return cell_y.size() - 1; }
    std::size_t cell_cols() const { return cell_x.size() - 1; }
    std::uint32_t agreement_at(std::size_t row, std::size_t col) const { return agreement[row * cell_cols() + col]; }
};

Heatmap accumulate_heatmap(const std::vector<WindowScore>& scores, const WindowConfig& wcfg,
                           const EnsembleConfig& ecfg);

struct DetectionResult {
    bool alert = false;
    double confidence = 0.0;
    std::vector<PartId> parts_detected;  // in ensemble order
    std::map<PartId, double> p_max;
    std::map<PartId, std::optional<BoundingBox>> part_boxes;
    std::optional<BoundingBox> fused_box;
    Heatmap heatmap;
    std::vector<WindowScore> scores;
};

/// Alert, confidence and detected parts only.
DetectionResult aggregate_decision(const std::vector<WindowScore>& scores, const EnsembleConfig& cfg);

/// Extent of all windows whose p_present for `part` exceeds the threshold.
std::optional<BoundingBox> extract_part_box(const Heatmap& heatmap, const PartId& part, double activation_threshold);

/// Extent of the cells where at least `fusion_threshold` parts agree; when no
/// cell gets there, the union of the part boxes (none without part boxes).
std::optional<BoundingBox> fuse_boxes(const Heatmap& heatmap, const EnsembleConfig& cfg);

/// (1 - p)^m, the closed-form miss figure for m independent detectors; the accuracy bound is one minus this.
double paper_miss_bound(double p, int m);
double paper_accuracy_bound(double p, int m);

/// P(fewer than k of the independent detectors fire), Poisson-binomial tail.
double exact_miss_probability(const std::vector<double>& p, std::size_t k);

/// Full pipeline on one image. Boxes are clamped to the image.
DetectionResult detect(const Image& image, const PartNetworks& networks, const WindowConfig& wcfg,
                       EnsembleConfig ecfg, std::size_t workers = 1);

/// Throws std::invalid_argument unless every ensemble part has a network and
/// every network's stored part matches its slot.
void check_networks(const PartNetworks& networks, const EnsembleConfig& cfg, std::size_t channels);

}  // namespace snnw

#pragma once

// On-disk layouts: part datasets as PNG trees, scene sets as PNGs plus a
// JSON-lines ground-truth file, and the detection JSON document.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "snnw/dataset.hpp"
#include "snnw/ensemble.hpp"
#include "snnw/synthetic.hpp"

namespace snnw {

namespace fs = std::filesystem;

inline constexpr const char* kSplitNames[] = {"train", "val", "test"};

/// Writes `<root>/<group>/<split>/<pos|neg>/<origin>_<variant>.png`. `group`
/// is the part name, or "negative" for the shared negative set.
void write_split(const fs::path& root, const std::string& group, const std::string& split,
                 const std::vector<Sample>& samples);

/// Reads one split back in file-name order. Samples are tagged with `part`;
/// origin and variant come from the file name. Throws std::runtime_error when
/// the split directory is missing.
std::vector<Sample> read_split(const fs::path& root, const std::string& group, const std::string& split,
                               const PartId& part);

void write_dataset(const fs::path& root, const std::string& group, const DatasetSplit& split);
DatasetSplit read_dataset(const fs::path& root, const std::string& group, const PartId& part);

/// One line of a scene ground-truth file.
struct SceneRecord {
    std::string image;  // relative to the JSON-lines file
    std::vector<GroundTruthBox> boxes;

    /// The "composite" entry, if any.
    std::optional<BoundingBox> composite() const;
    std::vector<BoundingBox> visible_part_boxes() const;
    std::size_t visible_parts() const;
};

nlohmann::json to_json(const SceneRecord& r);
SceneRecord scene_record_from_json(const nlohmann::json& j);

/// Writes `<dir>/<name>/<name>-NNN.png` and `<dir>/<name>.jsonl`.
std::vector<SceneRecord> write_scene_set(const fs::path& dir, const std::string& name,
                                         const std::vector<Scene>& scenes);

/// Throws std::runtime_error on a missing or malformed file.
std::vector<SceneRecord> read_scene_set(const fs::path& jsonl);

/// `{alert, confidence, parts:[{part,p_max,box}], fused_box, grid:{window,
/// stride, xs, ys, cells}}`; boxes are `{x,y,w,h}` or null. Cells list
/// per-window p_present in slide order.
nlohmann::json detection_json(const DetectionResult& r, const EnsembleConfig& ecfg);

nlohmann::json box_json(const BoundingBox& b);
BoundingBox box_from_json(const nlohmann::json& j);

/// Linear gray rendering of one part's p_present grid, each origin drawn as a
/// `cell` x `cell` block.
Image heatmap_image(const Heatmap& h, const PartId& part, std::size_t cell = 8);

/// Whole-file binary write and read. Throw std::runtime_error on failure.
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

}  // namespace snnw

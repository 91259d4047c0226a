#pragma once

// End-to-end operations shared by the command-line tool, the Python module
// and the acceptance run: synthesize a data tree, augment it, train every
// part network, detect on images and evaluate against ground truth.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "snnw/dataset.hpp"
#include "snnw/ensemble.hpp"
#include "snnw/evaluation.hpp"
#include "snnw/part_network.hpp"
#include "snnw/storage.hpp"
#include "snnw/synthetic.hpp"

namespace snnw {

/// Raised for configs that do not parse or validate (usage errors).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when models and data disagree (missing parts, wrong part ids,
/// missing ground truth, empty sets).
class ConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sizes of the synthetic data tree. Split sizes count each class, so
/// test = 100 gives 100 positives and 100 negatives.
struct SynthConfig {
    std::size_t train = 100;
    std::size_t val = 50;
    std::size_t test = 100;
    std::size_t negatives = 100;  // pure-negative crops per split
    std::size_t rigid_scenes = 7;
    std::size_t ablative_scenes = 7;
    std::size_t background_scenes = 14;
    std::size_t channels = 3;
    double distractor_fraction = 0.6;
    SuiteOptions scenes{};
};

struct RunConfig {
    std::string data_dir = "data";
    std::string models_dir = "models";
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    std::vector<std::string> parts{"stock", "magazine", "barrel", "receiver"};
    SynthConfig synth{};
    AugmentSpec augment{};
    TrainConfig train{};
    WindowConfig window{};
    EnsembleConfig ensemble{};  // parts are taken from `parts`
    std::size_t workers = 1;    // threads for window scoring and per-part training

    std::vector<PartId> part_ids() const;
    /// Ensemble config with parts filled in and validated.
    EnsembleConfig ensemble_config() const;
    void validate() const;
};

/// Unknown keys and ill-typed values raise ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig apply_json(RunConfig base, const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);

/// The path-free part of the config embedded in every output artifact.
nlohmann::json artifact_config(const RunConfig& c);

// ---- synth ----

struct SynthSummary {
    std::map<std::string, DatasetSplit> part_sets;  // in-memory copy of what was written
    DatasetSplit negative_set;
    std::map<std::string, std::vector<SceneRecord>> scene_sets;  // rigid, ablative, background
};

/// Per-part train/val/test sets, each split drawn from its own seed stream so
/// origins never cross splits.
DatasetSplit synth_part_split(const PartId& part, const RunConfig& c);

/// Pure negatives: 200x200 crops cut from large distractor-strewn
/// backgrounds, away from any distractor.
DatasetSplit synth_negative_split(const RunConfig& c);

struct SceneSuites {
    std::vector<Scene> rigid;
    std::vector<Scene> ablative;
    std::vector<Scene> background;
};
SceneSuites synth_scenes(const RunConfig& c);

/// Writes `<data_dir>/<part>/...`, `<data_dir>/negative/...`,
/// `<data_dir>/scenes/<set>.jsonl` and a `synth.json` manifest.
SynthSummary synthesize(const RunConfig& c, bool keep_in_memory = false);

// ---- augment ----

/// Adds `augment.copies` transformed copies of every train sample of every
/// part, in place. Returns the number of files written.
std::size_t augment_tree(const RunConfig& c, const std::string& split = "train");

// ---- train ----

/// Training config of one part: the shared settings with a per-part stream.
TrainConfig part_train_config(const RunConfig& c, const PartId& part);
TrainedPartNetwork initial_network(const RunConfig& c, const PartId& part);

/// Trains every part from in-memory splits; `jobs` > 1 trains parts on
/// separate threads with identical results.
std::vector<TrainingOutcome> train_parts(const RunConfig& c, const std::map<std::string, DatasetSplit>& data,
                                         std::size_t jobs);

/// Reads `<data_dir>/<part>`, trains, writes `<models_dir>/<part>.snnw` and
/// `<models_dir>/<part>.report.json`.
std::vector<TrainingOutcome> train_tree(const RunConfig& c, std::size_t jobs);

nlohmann::json report_json(const TrainReport& r);

// ---- detect ----

/// Loads `<models_dir>/<part>.snnw` for every configured part. Missing files
/// and part mismatches raise ConsistencyError.
PartNetworks load_networks(const RunConfig& c);

/// Detection JSON plus the seed and path-free config.
nlohmann::json detection_document(const DetectionResult& r, const RunConfig& c);

/// Blue predicted boxes (fused box thick, part boxes thin); green ground
/// truth when given.
Image annotate(const Image& image, const DetectionResult& r, const std::vector<BoundingBox>& truth = {});

inline constexpr Rgb kPredictedColour{0.0f, 0.2f, 1.0f};
inline constexpr Rgb kTruthColour{0.0f, 0.85f, 0.0f};

// ---- evaluate ----

struct SceneOutcome {
    std::string image;
    std::size_t visible_parts = 0;
    bool alert = false;
    std::optional<BoundingBox> truth;
    std::optional<BoundingBox> fused;
    std::optional<double> iou;
    std::vector<std::string> parts_detected;
};

struct SceneSetReport {
    std::string label;
    std::vector<SceneOutcome> scenes;
    std::optional<PositionReport> position;  // absent for sets without ground-truth weapons
    std::size_t alerts = 0;
};

/// Runs detection on every scene of a set read from `jsonl`. Scenes without a
/// composite box count as pure background. Empty sets raise ConsistencyError.
SceneSetReport evaluate_scene_set(const std::filesystem::path& jsonl, const PartNetworks& nets,
                                  const RunConfig& c);

/// Same for in-memory scenes.
SceneSetReport evaluate_scenes(const std::vector<Scene>& scenes, const std::string& label,
                               const PartNetworks& nets, const RunConfig& c);

struct EvaluationReport {
    std::vector<PartMetricsRow> parts;
    std::vector<PartMetricsRow> pure_negatives;  // false-positive check on the shared negative set
    std::vector<SceneSetReport> scene_sets;

    std::string text() const;
    nlohmann::json json(const RunConfig& c) const;
};

/// Table-I metrics on every part's test split, pure-negative false positives
/// when the negative set exists, and every scene set under
/// `<data_dir>/scenes` (or `scene_files` when given).
EvaluationReport evaluate_tree(const RunConfig& c, const std::vector<std::filesystem::path>& scene_files = {});

}  // namespace snnw

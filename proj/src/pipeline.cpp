#include "snnw/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <set>
#include <sstream>
#include <thread>

#include "snnw/image_io.hpp"
#include "snnw/model_io.hpp"

namespace snnw {

using nlohmann::json;

namespace {

// Reads known keys from a JSON object and rejects everything else.
class Reader {
public:
    Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + " must be an object");
    }
    ~Reader() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) throw ConfigError("unknown config key " + where_ + "." + k);
        }
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
                if (!it->is_number_integer() || it->template get<std::int64_t>() < 0) throw ConfigError("");
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!it->is_number()) throw ConfigError("");
            }
            out = it->template get<T>();
        } catch (const std::exception&) {
            throw ConfigError("bad value for " + where_ + "." + key + ": " + it->dump());
        }
    }

    const json* sub(const char* key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

void read_suite(const json& j, SuiteOptions& s) {
    Reader r(j, "synth.scenes");
    r.get("width", s.width);
    r.get("height", s.height);
    r.get("max_rotation_deg", s.max_rotation_deg);
    r.get("min_scale", s.min_scale);
    r.get("max_scale", s.max_scale);
}

void read_synth(const json& j, SynthConfig& s) {
    Reader r(j, "synth");
    r.get("train", s.train);
    r.get("val", s.val);
    r.get("test", s.test);
    r.get("negatives", s.negatives);
    r.get("rigid_scenes", s.rigid_scenes);
    r.get("ablative_scenes", s.ablative_scenes);
    r.get("background_scenes", s.background_scenes);
    r.get("channels", s.channels);
    r.get("distractor_fraction", s.distractor_fraction);
    if (const auto* sc = r.sub("scenes")) read_suite(*sc, s.scenes);
}

void read_augment(const json& j, AugmentSpec& a) {
    Reader r(j, "augment");
    r.get("rotation_deg", a.rotation_deg);
    r.get("shear", a.shear);
    r.get("scale", a.scale);
    r.get("copies", a.copies);
}

void read_train(const json& j, TrainConfig& t) {
    Reader r(j, "train");
    r.get("epochs", t.epochs);
    r.get("batch_size", t.batch_size);
    r.get("lr", t.lr);
    r.get("momentum", t.momentum);
    r.get("patience", t.patience);
}

void read_window(const json& j, WindowConfig& w) {
    Reader r(j, "window");
    r.get("window", w.window);
    r.get("stride", w.stride);
    r.get("flush_edge", w.flush_edge);
    r.get("pad_small", w.pad_small);
}

void read_ensemble(const json& j, EnsembleConfig& e) {
    Reader r(j, "ensemble");
    if (const auto* w = r.sub("weights")) {
        if (!w->is_object()) throw ConfigError("ensemble.weights must map part names to numbers");
        e.weights.clear();
        for (const auto& [k, v] : w->items()) {
            if (!v.is_number()) throw ConfigError("bad weight for part " + k);
            e.weights[PartId(k)] = v.get<double>();
        }
    }
    r.get("threshold", e.threshold);
    r.get("k", e.k);
    r.get("box_threshold", e.box_threshold);
    r.get("fusion_threshold", e.fusion_threshold);
    r.get("core_margin", e.core_margin);
}

json weights_json(const std::map<PartId, double>& w) {
    json out = json::object();
    for (const auto& [k, v] : w) out[k.name()] = v;
    return out;
}

std::optional<BoundingBox> scene_composite(const std::vector<GroundTruthBox>& boxes) {
    for (const auto& b : boxes) {
        if (b.part == kCompositeLabel) return b.box;
    }
    return std::nullopt;
}

std::size_t visible_count(const std::vector<GroundTruthBox>& boxes) {
    return static_cast<std::size_t>(std::count_if(boxes.begin(), boxes.end(), [](const GroundTruthBox& b) {
        return b.part != kCompositeLabel && b.visible;
    }));
}

SceneOutcome score_scene(const Image& image, const std::string& name, const std::vector<GroundTruthBox>& boxes,
                         const PartNetworks& nets, const RunConfig& c) {
    const auto r = detect(image, nets, c.window, c.ensemble_config(), c.workers);
    SceneOutcome o;
    o.image = name;
    o.visible_parts = visible_count(boxes);
    o.alert = r.alert;
    o.truth = scene_composite(boxes);
    o.fused = r.fused_box;
    if (o.truth && o.fused) o.iou = iou(*o.fused, *o.truth);
    for (const auto& p : r.parts_detected) o.parts_detected.push_back(p.name());
    return o;
}

SceneSetReport finish_set(std::string label, std::vector<SceneOutcome> scenes) {
    if (scenes.empty()) throw ConsistencyError("scene set '" + label + "' is empty");
    SceneSetReport rep;
    rep.label = std::move(label);
    std::vector<SegmentationCase> cases;
    for (const auto& s : scenes) {
        rep.alerts += s.alert;
        if (s.truth) cases.push_back({*s.truth, s.fused, s.alert, {}});
    }
    if (!cases.empty()) rep.position = evaluate_detection_run(cases, rep.label);
    rep.scenes = std::move(scenes);
    return rep;
}

json optional_box(const std::optional<BoundingBox>& b) { return b ? box_json(*b) : json(nullptr); }

json metrics_json(const PartMetricsRow& r) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    const auto& c = r.metrics.counts;
    return {{"part", r.part},
            {"accuracy", opt(r.metrics.accuracy)},
            {"precision", opt(r.metrics.precision)},
            {"recall", opt(r.metrics.recall)},
            {"counts", {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}}}};
}

}  // namespace

std::vector<PartId> RunConfig::part_ids() const {
    std::vector<PartId> out;
    for (const auto& p : parts) out.emplace_back(p);
    return out;
}

EnsembleConfig RunConfig::ensemble_config() const {
    EnsembleConfig e = ensemble;
    e.parts = part_ids();
    try {
        e.validate();
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
    }
    return e;
}

void RunConfig::validate() const {
    if (parts.empty()) throw ConfigError("parts must not be empty");
    std::set<std::string> unique(parts.begin(), parts.end());
    if (unique.size() != parts.size()) throw ConfigError("parts must be distinct");
    for (const auto& p : parts) {
        if (p.empty() || p == "negative" || p == "scenes" || p.find('/') != std::string::npos) {
            throw ConfigError("invalid part name '" + p + "'");
        }
    }
    try {
        augment.validate();
        train.validate();
        window.validate();
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
    }
    if (synth.channels != 1 && synth.channels != 3) throw ConfigError("synth.channels must be 1 or 3");
    if (!(synth.distractor_fraction >= 0.0 && synth.distractor_fraction <= 1.0)) {
        throw ConfigError("synth.distractor_fraction must lie in [0,1]");
    }
    const auto& s = synth.scenes;
    if (s.width < window.window || s.height < window.window) throw ConfigError("scene canvas smaller than the window");
    if (!(s.min_scale > 0.0 && s.min_scale <= s.max_scale)) throw ConfigError("bad scene scale range");
    if (2 * ensemble.core_margin >= window.window) throw ConfigError("ensemble.core_margin leaves no window core");
    if (workers == 0) throw ConfigError("workers must be positive");
    ensemble_config();
}

RunConfig apply_json(RunConfig c, const json& j) {
    {
        Reader r(j, "config");
        r.get("data_dir", c.data_dir);
        r.get("models_dir", c.models_dir);
        r.get("out_dir", c.out_dir);
        r.get("seed", c.seed);
        r.get("parts", c.parts);
        r.get("workers", c.workers);
        if (const auto* s = r.sub("synth")) read_synth(*s, c.synth);
        if (const auto* s = r.sub("augment")) read_augment(*s, c.augment);
        if (const auto* s = r.sub("train")) read_train(*s, c.train);
        if (const auto* s = r.sub("window")) read_window(*s, c.window);
        if (const auto* s = r.sub("ensemble")) read_ensemble(*s, c.ensemble);
    }
    c.validate();
    return c;
}

RunConfig run_config_from_json(const json& j) { return apply_json(RunConfig{}, j); }

json artifact_config(const RunConfig& c) {
    const auto& s = c.synth;
    return {{"seed", c.seed},
            {"parts", c.parts},
            {"synth",
             {{"train", s.train},
              {"val", s.val},
              {"test", s.test},
              {"negatives", s.negatives},
              {"rigid_scenes", s.rigid_scenes},
              {"ablative_scenes", s.ablative_scenes},
              {"background_scenes", s.background_scenes},
              {"channels", s.channels},
              {"distractor_fraction", s.distractor_fraction},
              {"scenes",
               {{"width", s.scenes.width},
                {"height", s.scenes.height},
                {"max_rotation_deg", s.scenes.max_rotation_deg},
                {"min_scale", s.scenes.min_scale},
                {"max_scale", s.scenes.max_scale}}}}},
            {"augment",
             {{"rotation_deg", c.augment.rotation_deg},
              {"shear", c.augment.shear},
              {"scale", c.augment.scale},
              {"copies", c.augment.copies}}},
            {"train",
             {{"epochs", c.train.epochs},
              {"batch_size", c.train.batch_size},
              {"lr", c.train.lr},
              {"momentum", c.train.momentum},
              {"patience", c.train.patience}}},
            {"window",
             {{"window", c.window.window},
              {"stride", c.window.stride},
              {"flush_edge", c.window.flush_edge},
              {"pad_small", c.window.pad_small}}},
            {"ensemble",
             {{"weights", weights_json(c.ensemble.weights)},
              {"threshold", c.ensemble.threshold},
              {"k", c.ensemble.k},
              {"box_threshold", c.ensemble.box_threshold},
              {"fusion_threshold", c.ensemble.fusion_threshold},
              {"core_margin", c.ensemble.core_margin}}}};
}

json to_json(const RunConfig& c) {
    json j = artifact_config(c);
    j["data_dir"] = c.data_dir;
    j["models_dir"] = c.models_dir;
    j["out_dir"] = c.out_dir;
    j["workers"] = c.workers;
    return j;
}

// ---- synth ----

DatasetSplit synth_part_split(const PartId& part, const RunConfig& c) {
    PartDatasetOptions opt;
    opt.channels = c.synth.channels;
    opt.distractor_fraction = c.synth.distractor_fraction;
    const std::size_t n[3] = {c.synth.train, c.synth.val, c.synth.test};
    DatasetSplit out;
    std::vector<Sample>* dest[3] = {&out.train, &out.val, &out.test};
    for (int s = 0; s < 3; ++s) {
        *dest[s] = generate_part_dataset(part, n[s], n[s], derive_seed(c.seed, kSplitNames[s]), opt);
    }
    return out;
}

DatasetSplit synth_negative_split(const RunConfig& c) {
    constexpr std::size_t kSource = 600, kDistractors = 3, kCropsPerSource = 4;
    const PartId negative("negative");
    const std::size_t n[3] = {c.synth.negatives, c.synth.negatives, c.synth.negatives};
    DatasetSplit out;
    std::vector<Sample>* dest[3] = {&out.train, &out.val, &out.test};
    for (int s = 0; s < 3; ++s) {
        Rng rng(derive_seed(c.seed, std::string("negative-") + kSplitNames[s]));
        for (std::size_t src = 0; dest[s]->size() < n[s]; ++src) {
            Image canvas = make_background(kSource, kSource, BackgroundSpec{}, rng);
            std::vector<BoundingBox> exclusion;
            for (std::size_t d = 0; d < kDistractors; ++d) {
                const auto g = random_distractor(rng);
                const Pose pose{rng.uniform(0.0, kSource), rng.uniform(0.0, kSource), rng.uniform(-180.0, 180.0), 1.0};
                if (auto b = render_glyph(canvas, g, pose)) exclusion.push_back(*b);
            }
            if (c.synth.channels == 1) {
                Image gray(Shape{kSource, kSource, 1});
                for (std::size_t y = 0; y < kSource; ++y)
                    for (std::size_t x = 0; x < kSource; ++x)
                        gray(y, x, 0) = (canvas(y, x, 0) + canvas(y, x, 1) + canvas(y, x, 2)) / 3.0f;
                canvas = std::move(gray);
            }
            const std::string origin = "negative-" + std::to_string(c.seed) + "-" + kSplitNames[s] + "-" +
                                       std::to_string(src);
            const auto want = std::min(kCropsPerSource, n[s] - dest[s]->size());
            try {
                for (auto& smp : extract_negative_crops(canvas, want, rng, exclusion, negative, origin)) {
                    dest[s]->push_back(std::move(smp));
                }
            } catch (const std::runtime_error&) {
                // crowded source: draw another one
            }
        }
    }
    return out;
}

SceneSuites synth_scenes(const RunConfig& c) {
    SceneSuites out;
    const auto& opt = c.synth.scenes;
    auto render = [&](const std::vector<SceneSpec>& specs, const char* label, std::vector<Scene>& dest) {
        for (std::size_t i = 0; i < specs.size(); ++i) {
            dest.push_back(generate_scene(specs[i], derive_seed(c.seed, label, i)));
        }
    };
    render(rigid_scene_specs(c.synth.rigid_scenes, c.seed, opt), "rigid", out.rigid);
    render(ablative_scene_specs(c.synth.ablative_scenes, c.seed, opt), "ablative", out.ablative);
    render(background_scene_specs(c.synth.background_scenes, opt), "background", out.background);
    return out;
}

SynthSummary synthesize(const RunConfig& c, bool keep_in_memory) {
    c.validate();
    const fs::path root(c.data_dir);
    SynthSummary sum;
    json manifest = {{"seed", c.seed}, {"config", artifact_config(c)}, {"parts", json::object()}};
    for (const auto& part : c.part_ids()) {
        auto split = synth_part_split(part, c);
        write_dataset(root, part.name(), split);
        manifest["parts"][part.name()] = {{"train", split.train.size()}, {"val", split.val.size()},
                                          {"test", split.test.size()}};
        if (keep_in_memory) sum.part_sets.emplace(part.name(), std::move(split));
    }
    auto neg = synth_negative_split(c);
    write_dataset(root, "negative", neg);
    manifest["negative"] = {{"train", neg.train.size()}, {"val", neg.val.size()}, {"test", neg.test.size()}};
    if (keep_in_memory) sum.negative_set = std::move(neg);

    auto suites = synth_scenes(c);
    const fs::path scenes = root / "scenes";
    sum.scene_sets["rigid"] = write_scene_set(scenes, "rigid", suites.rigid);
    sum.scene_sets["ablative"] = write_scene_set(scenes, "ablative", suites.ablative);
    sum.scene_sets["background"] = write_scene_set(scenes, "background", suites.background);
    manifest["scenes"] = {{"rigid", suites.rigid.size()}, {"ablative", suites.ablative.size()},
                          {"background", suites.background.size()}};
    write_text(root / "synth.json", manifest.dump(2) + "\n");
    return sum;
}

// ---- augment ----

std::size_t augment_tree(const RunConfig& c, const std::string& split) {
    c.validate();
    const fs::path root(c.data_dir);
    std::size_t written = 0;
    for (const auto& part : c.part_ids()) {
        std::vector<Sample> originals;
        for (auto& s : read_split(root, part.name(), split, part)) {
            if (s.variant == 0) originals.push_back(std::move(s));
        }
        AugmentSpec spec = c.augment;
        spec.seed = derive_seed(c.seed, "augment/" + part.name());
        auto all = augment_dataset(originals, spec);
        std::vector<Sample> copies(std::make_move_iterator(all.begin() + static_cast<std::ptrdiff_t>(originals.size())),
                                   std::make_move_iterator(all.end()));
        write_split(root, part.name(), split, copies);
        written += copies.size();
    }
    return written;
}

// ---- train ----

TrainConfig part_train_config(const RunConfig& c, const PartId& part) {
    TrainConfig t = c.train;
    t.seed = derive_seed(c.seed, "train/" + part.name());
    return t;
}

TrainedPartNetwork initial_network(const RunConfig& c, const PartId& part) {
    PartNetworkSpec spec;
    spec.channels = static_cast<std::uint32_t>(c.synth.channels);
    return build_network(spec, part, derive_seed(c.seed, "init/" + part.name()));
}

std::vector<TrainingOutcome> train_parts(const RunConfig& c, const std::map<std::string, DatasetSplit>& data,
                                         std::size_t jobs) {
    c.validate();
    const auto parts = c.part_ids();
    for (const auto& p : parts) {
        if (!data.count(p.name())) throw ConsistencyError("no training data for part '" + p.name() + "'");
    }
    std::vector<std::optional<TrainingOutcome>> results(parts.size());
    std::vector<std::exception_ptr> errors(parts.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < parts.size();) {
            try {
                const auto& d = data.at(parts[i].name());
                results[i] = train_part_network(initial_network(c, parts[i]), d.train, d.val,
                                                part_train_config(c, parts[i]));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t n = std::clamp<std::size_t>(jobs, 1, parts.size());
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::vector<TrainingOutcome> out;
    for (auto& r : results) out.push_back(std::move(*r));
    return out;
}

json report_json(const TrainReport& r) {
    json epochs = json::array();
    for (const auto& e : r.epochs) {
        epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_accuracy", e.val_accuracy},
                          {"val_loss", e.val_loss}});
    }
    return {{"part", r.part.name()}, {"best_epoch", r.best_epoch}, {"stopped_early", r.stopped_early},
            {"epochs", std::move(epochs)}};
}

std::vector<TrainingOutcome> train_tree(const RunConfig& c, std::size_t jobs) {
    c.validate();
    const fs::path root(c.data_dir);
    std::map<std::string, DatasetSplit> data;
    for (const auto& p : c.part_ids()) {
        if (!fs::is_directory(root / p.name())) {
            throw ConsistencyError("missing part directory " + (root / p.name()).string());
        }
        DatasetSplit d;
        d.train = read_split(root, p.name(), "train", p);
        d.val = read_split(root, p.name(), "val", p);
        if (d.train.empty()) throw ConsistencyError("no training samples for part '" + p.name() + "'");
        data.emplace(p.name(), std::move(d));
    }
    auto out = train_parts(c, data, jobs);
    const fs::path models(c.models_dir);
    fs::create_directories(models);
    for (const auto& o : out) {
        save_model(o.network, models / (o.network.part.name() + ".snnw"));
        json rep = report_json(o.report);
        rep["seed"] = c.seed;
        rep["config"] = artifact_config(c);
        write_text(models / (o.network.part.name() + ".report.json"), rep.dump(2) + "\n");
    }
    return out;
}

// ---- detect ----

PartNetworks load_networks(const RunConfig& c) {
    PartNetworks nets;
    for (const auto& p : c.part_ids()) {
        const fs::path file = fs::path(c.models_dir) / (p.name() + ".snnw");
        if (!fs::exists(file)) throw ConsistencyError("missing model " + file.string());
        try {
            nets.emplace(p, load_model(file, p));
        } catch (const ModelFileError& e) {
            if (e.kind() == ModelFileError::Kind::io) throw;
            throw ConsistencyError(e.what());
        }
    }
    return nets;
}

json detection_document(const DetectionResult& r, const RunConfig& c) {
    json j = detection_json(r, c.ensemble_config());
    j["seed"] = c.seed;
    j["config"] = artifact_config(c);
    return j;
}

Image annotate(const Image& image, const DetectionResult& r, const std::vector<BoundingBox>& truth) {
    Image out = to_rgb(image);
    for (const auto& t : truth) draw_box(out, t, kTruthColour, 3);
    for (const auto& [part, box] : r.part_boxes) {
        if (box) draw_box(out, *box, kPredictedColour, 1);
    }
    if (r.fused_box) draw_box(out, *r.fused_box, kPredictedColour, 3);
    return out;
}

// ---- evaluate ----

SceneSetReport evaluate_scene_set(const fs::path& jsonl, const PartNetworks& nets, const RunConfig& c) {
    const auto records = read_scene_set(jsonl);
    std::vector<SceneOutcome> scenes;
    for (const auto& rec : records) {
        const auto img = load_image(jsonl.parent_path() / rec.image);
        scenes.push_back(score_scene(img, rec.image, rec.boxes, nets, c));
    }
    return finish_set(jsonl.stem().string(), std::move(scenes));
}

SceneSetReport evaluate_scenes(const std::vector<Scene>& scenes, const std::string& label, const PartNetworks& nets,
                               const RunConfig& c) {
    std::vector<SceneOutcome> out;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        out.push_back(score_scene(scenes[i].image, label + "-" + std::to_string(i), scenes[i].all_boxes(), nets, c));
    }
    return finish_set(label, std::move(out));
}

EvaluationReport evaluate_tree(const RunConfig& c, const std::vector<fs::path>& scene_files) {
    c.validate();
    const auto nets = load_networks(c);
    const fs::path root(c.data_dir);
    EvaluationReport rep;
    for (const auto& p : c.part_ids()) {
        const auto test = read_split(root, p.name(), "test", p);
        if (test.empty()) throw ConsistencyError("empty test split for part '" + p.name() + "'");
        const auto& net = nets.at(p);
        rep.parts.push_back({p.name(), compute_metrics(evaluate_classifier(net, test))});
        if (fs::is_directory(root / "negative" / "test")) {
            const auto neg = read_split(root, "negative", "test", p);
            if (!neg.empty()) rep.pure_negatives.push_back({p.name(), compute_metrics(evaluate_classifier(net, neg))});
        }
    }
    std::vector<fs::path> files = scene_files;
    if (files.empty()) {
        const fs::path dir = root / "scenes";
        if (!fs::is_directory(dir)) throw ConsistencyError("no scene ground truth under " + dir.string());
        for (const auto& e : fs::directory_iterator(dir)) {
            if (e.path().extension() == ".jsonl") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) throw ConsistencyError("no scene ground truth under " + dir.string());
    }
    for (const auto& f : files) rep.scene_sets.push_back(evaluate_scene_set(f, nets, c));
    return rep;
}

std::string EvaluationReport::text() const {
    std::ostringstream os;
    os << "Part classifiers (test split)\n" << metrics_table(parts);
    if (!pure_negatives.empty()) {
        os << "\nPure-negative set (every sample absent)\n" << metrics_table(pure_negatives);
    }
    std::vector<PositionReport> rows;
    for (const auto& s : scene_sets) {
        if (s.position) rows.push_back(*s.position);
    }
    if (!rows.empty()) os << "\nScene segmentation\n" << position_table(rows);
    for (const auto& s : scene_sets) {
        if (!s.position) os << "\n" << s.label << ": " << s.alerts << " alert(s) on " << s.scenes.size() << " scenes\n";
    }
    return os.str();
}

json EvaluationReport::json(const RunConfig& c) const {
    nlohmann::json parts_j = nlohmann::json::array(), neg_j = nlohmann::json::array(), sets = nlohmann::json::array();
    for (const auto& r : parts) parts_j.push_back(metrics_json(r));
    for (const auto& r : pure_negatives) neg_j.push_back(metrics_json(r));
    for (const auto& s : scene_sets) {
        nlohmann::json scenes = nlohmann::json::array();
        for (const auto& o : s.scenes) {
            scenes.push_back({{"image", o.image},
                              {"visible_parts", o.visible_parts},
                              {"alert", o.alert},
                              {"parts_detected", o.parts_detected},
                              {"truth", optional_box(o.truth)},
                              {"fused_box", optional_box(o.fused)},
                              {"iou", o.iou ? nlohmann::json(*o.iou) : nlohmann::json(nullptr)}});
        }
        nlohmann::json set = {{"label", s.label}, {"alerts", s.alerts}, {"scenes", std::move(scenes)}};
        if (s.position) {
            set["detections"] = s.position->detections();
            set["detected"] = s.position->detected;
            set["cases"] = s.position->cases;
            set["overlap_over_50"] = s.position->overlap;
        }
        sets.push_back(std::move(set));
    }
    return {{"seed", c.seed},
            {"config", artifact_config(c)},
            {"parts", std::move(parts_j)},
            {"pure_negatives", std::move(neg_j)},
            {"scene_sets", std::move(sets)}};
}

}  // namespace snnw

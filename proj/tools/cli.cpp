#include "cli.hpp"

#include <CLI11.hpp>
#include <toml.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

#include "snnw/image_io.hpp"
#include "snnw/model_io.hpp"
#include "snnw/pipeline.hpp"

namespace snnw::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json toml_to_json(const toml::node& n) {
    if (const auto* t = n.as_table()) {
        json out = json::object();
        for (const auto& [k, v] : *t) out[std::string(k.str())] = toml_to_json(v);
        return out;
    }
    if (const auto* a = n.as_array()) {
        json out = json::array();
        for (const auto& v : *a) out.push_back(toml_to_json(v));
        return out;
    }
    if (const auto* v = n.as_integer()) return v->get();
    if (const auto* v = n.as_floating_point()) return v->get();
    if (const auto* v = n.as_boolean()) return v->get();
    if (const auto* v = n.as_string()) return v->get();
    throw ConfigError("unsupported TOML value (dates and times are not config values)");
}

BoundingBox parse_box(const std::string& s) {
    std::int64_t v[4];
    char tail = 0;
    if (std::sscanf(s.c_str(), "%ld,%ld,%ld,%ld%c", &v[0], &v[1], &v[2], &v[3], &tail) != 4 || v[2] <= 0 ||
        v[3] <= 0) {
        throw ConfigError("box must be x,y,w,h with positive w and h: '" + s + "'");
    }
    return {v[0], v[1], v[2], v[3]};
}

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<std::size_t> workers;
};

void add_common(CLI::App* app, Common& c, const std::string& out_help) {
    app->add_option("--config", c.config, "TOML or JSON config file")->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "Base seed (overrides the config)");
    app->add_option("--out", c.out, out_help);
    app->add_option("--workers", c.workers, "Threads for window scoring (training uses --jobs)");
}

RunConfig base_config(const Common& c) {
    RunConfig cfg;
    if (!c.config.empty()) cfg = run_config_from_json(read_config_file(c.config));
    if (c.seed) cfg.seed = *c.seed;
    if (c.workers) cfg.workers = *c.workers;
    return cfg;
}

}  // namespace

json read_config_file(const fs::path& path) {
    const std::string text = read_text(path);
    if (path.extension() == ".toml") {
        try {
            return toml_to_json(toml::parse(text, path.string()));
        } catch (const toml::parse_error& e) {
            std::ostringstream os;
            os << e;
            throw ConfigError("TOML: " + os.str());
        }
    }
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

int run(int argc, char** argv) {
    CLI::App app{"Part-ensemble weapon detector: synthesize data, train part networks, detect, evaluate"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "snnw 0.1.0");

    // synth
    Common synth_c;
    std::optional<std::size_t> n_parts, n_train, n_val, n_test;
    auto* synth = app.add_subcommand("synth", "Write part datasets, the negative set and scene sets");
    add_common(synth, synth_c, "Data directory to write");
    synth->add_option("--parts", n_parts, "Use the first N default parts")->check(CLI::Range(1, 4));
    synth->add_option("--train", n_train, "Training samples per class and part");
    synth->add_option("--val", n_val, "Validation samples per class and part");
    synth->add_option("--test", n_test, "Test samples per class and part");

    // augment
    Common aug_c;
    std::optional<std::uint32_t> copies;
    std::string aug_split = "train";
    auto* augment = app.add_subcommand("augment", "Add rotated/sheared/scaled copies to a split");
    add_common(augment, aug_c, "Data directory to augment in place");
    augment->add_option("--copies", copies, "Augmented copies per original sample");
    augment->add_option("--split", aug_split, "Split to augment")->check(CLI::IsMember({"train", "val", "test"}));

    // train
    Common train_c;
    std::string train_data;
    std::optional<std::uint32_t> epochs;
    std::size_t jobs = 1;
    auto* train = app.add_subcommand("train", "Train one network per part");
    add_common(train, train_c, "Models directory to write");
    train->add_option("--data", train_data, "Data directory");
    train->add_option("--epochs", epochs, "Epoch budget");
    train->add_option("--jobs", jobs, "Parts trained concurrently")->check(CLI::PositiveNumber);

    // detect
    Common det_c;
    std::string det_models, det_image;
    std::optional<std::size_t> require_parts;
    std::vector<std::string> truth_boxes;
    bool heatmaps = false, pad = false;
    auto* det = app.add_subcommand("detect", "Scan an image and write detection JSON plus an annotated PNG");
    add_common(det, det_c, "Output directory");
    det->add_option("image", det_image, "Image to scan (PNG or PPM)")->required();
    det->add_option("--models", det_models, "Models directory");
    det->add_option("--require-parts,-k", require_parts, "Alert when at least this many parts are detected");
    det->add_option("--truth", truth_boxes, "Ground-truth box x,y,w,h drawn in green (repeatable)");
    det->add_flag("--heatmaps", heatmaps, "Also write one heatmap PNG per part");
    det->add_flag("--pad", pad, "Replicate-pad images smaller than the window");

    // evaluate
    Common ev_c;
    std::string ev_data, ev_models;
    std::vector<std::string> scene_files;
    auto* ev = app.add_subcommand("evaluate", "Per-part metrics and scene segmentation reports");
    add_common(ev, ev_c, "Output directory for report.json and report.txt");
    ev->add_option("--data", ev_data, "Data directory");
    ev->add_option("--models", ev_models, "Models directory");
    ev->add_option("--scenes", scene_files, "Scene JSON-lines files (default: <data>/scenes/*.jsonl)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : usage;
    }

    try {
        if (synth->parsed()) {
            RunConfig c = base_config(synth_c);
            if (!synth_c.out.empty()) c.data_dir = synth_c.out;
            if (n_parts) c.parts.resize(*n_parts);
            if (n_train) c.synth.train = *n_train;
            if (n_val) c.synth.val = *n_val;
            if (n_test) c.synth.test = *n_test;
            c.validate();
            const auto s = synthesize(c);
            std::cout << "wrote " << c.data_dir << ": " << c.parts.size() << " part sets of " << c.synth.train << "/"
                      << c.synth.val << "/" << c.synth.test << " per class, negative set of "
                      << c.synth.negatives << " per split, scenes";
            for (const auto& [name, recs] : s.scene_sets) std::cout << " " << name << "=" << recs.size();
            std::cout << " (seed " << c.seed << ")\n";
        } else if (augment->parsed()) {
            RunConfig c = base_config(aug_c);
            if (!aug_c.out.empty()) c.data_dir = aug_c.out;
            if (copies) c.augment.copies = *copies;
            c.validate();
            const auto n = augment_tree(c, aug_split);
            std::cout << "wrote " << n << " augmented samples into " << c.data_dir << " (" << aug_split << ", seed "
                      << c.seed << ")\n";
        } else if (train->parsed()) {
            RunConfig c = base_config(train_c);
            if (!train_c.out.empty()) c.models_dir = train_c.out;
            if (!train_data.empty()) c.data_dir = train_data;
            if (epochs) c.train.epochs = *epochs;
            c.validate();
            for (const auto& o : train_tree(c, jobs)) {
                const auto& r = o.report;
                std::printf("%-10s epochs %zu  best %d  val acc %.3f  val loss %.4f%s\n", r.part.name().c_str(),
                            r.epochs.size(), r.best_epoch, o.network.meta.best_val_accuracy,
                            o.network.meta.best_val_loss, r.stopped_early ? "  (stopped early)" : "");
            }
            std::cout << "models in " << c.models_dir << " (seed " << c.seed << ")\n";
        } else if (det->parsed()) {
            RunConfig c = base_config(det_c);
            if (!det_c.out.empty()) c.out_dir = det_c.out;
            if (!det_models.empty()) c.models_dir = det_models;
            if (require_parts) c.ensemble.k = *require_parts;
            if (pad) c.window.pad_small = true;
            c.validate();
            std::vector<BoundingBox> truth;
            for (const auto& t : truth_boxes) truth.push_back(parse_box(t));
            const auto nets = load_networks(c);
            const Image image = load_image(det_image);
            const auto r = detect(image, nets, c.window, c.ensemble_config(), c.workers);
            const fs::path out(c.out_dir);
            const std::string stem = fs::path(det_image).stem().string();
            fs::create_directories(out);
            const json doc = detection_document(r, c);
            write_text(out / (stem + ".detection.json"), doc.dump(2) + "\n");
            save_png(annotate(image, r, truth), out / (stem + ".annotated.png"));
            if (heatmaps) {
                for (const auto& p : c.part_ids()) {
                    save_png(heatmap_image(r.heatmap, p), out / (stem + ".heatmap." + p.name() + ".png"));
                }
            }
            std::cout << (r.alert ? "ALERT" : "no alert") << "  confidence " << r.confidence << "  parts";
            for (const auto& p : r.parts_detected) std::cout << " " << p.name();
            if (r.fused_box) std::cout << "  fused " << to_string(*r.fused_box);
            std::cout << "\n";
        } else if (ev->parsed()) {
            RunConfig c = base_config(ev_c);
            if (!ev_c.out.empty()) c.out_dir = ev_c.out;
            if (!ev_data.empty()) c.data_dir = ev_data;
            if (!ev_models.empty()) c.models_dir = ev_models;
            c.validate();
            std::vector<fs::path> files(scene_files.begin(), scene_files.end());
            const auto rep = evaluate_tree(c, files);
            const fs::path out(c.out_dir);
            write_text(out / "report.json", rep.json(c).dump(2) + "\n");
            write_text(out / "report.txt", rep.text());
            std::cout << rep.text();
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return usage;
    } catch (const ConsistencyError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return inconsistent;
    } catch (const ModelFileError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.kind() == ModelFileError::Kind::io ? io : inconsistent;
    } catch (const ImageTooSmallError& e) {
        std::cerr << "error: " << e.what() << " (use --pad)\n";
        return inconsistent;
    } catch (const ImageIoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return io;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return io;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return io;
    }
    return ok;
}

}  // namespace snnw::cli

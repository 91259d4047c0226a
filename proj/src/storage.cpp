#include "snnw/storage.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "snnw/image_io.hpp"

namespace snnw {

using nlohmann::json;

namespace {

const char* label_dir(Label l) { return l == Label::present ? "pos" : "neg"; }

std::string numbered(const std::string& name, std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "-%03zu", i);
    return name + buf;
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
    if (!f.flush()) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

void write_split(const fs::path& root, const std::string& group, const std::string& split,
                 const std::vector<Sample>& samples) {
    for (const char* l : {"pos", "neg"}) fs::create_directories(root / group / split / l);
    for (const auto& s : samples) {
        save_png(s.image, root / group / split / label_dir(s.label) /
                              (s.origin + "_" + std::to_string(s.variant) + ".png"));
    }
}

std::vector<Sample> read_split(const fs::path& root, const std::string& group, const std::string& split,
                               const PartId& part) {
    const fs::path dir = root / group / split;
    if (!fs::is_directory(dir)) throw std::runtime_error("missing dataset directory " + dir.string());
    std::vector<Sample> out;
    for (Label label : {Label::present, Label::absent}) {
        const fs::path sub = dir / label_dir(label);
        if (!fs::is_directory(sub)) continue;
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(sub)) {
            if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            const std::string stem = f.stem().string();
            const auto cut = stem.rfind('_');
            Sample s;
            s.image = load_image(f);
            s.label = label;
            s.part = part;
            s.origin = cut == std::string::npos ? stem : stem.substr(0, cut);
            if (cut != std::string::npos) {
                try {
                    s.variant = static_cast<std::uint32_t>(std::stoul(stem.substr(cut + 1)));
                } catch (const std::exception&) {
                    s.origin = stem;
                }
            }
            out.push_back(std::move(s));
        }
    }
    return out;
}

void write_dataset(const fs::path& root, const std::string& group, const DatasetSplit& split) {
    write_split(root, group, "train", split.train);
    write_split(root, group, "val", split.val);
    write_split(root, group, "test", split.test);
}

DatasetSplit read_dataset(const fs::path& root, const std::string& group, const PartId& part) {
    return {read_split(root, group, "train", part), read_split(root, group, "val", part),
            read_split(root, group, "test", part)};
}

json box_json(const BoundingBox& b) { return {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

BoundingBox box_from_json(const json& j) {
    return {j.at("x").get<std::int64_t>(), j.at("y").get<std::int64_t>(), j.at("w").get<std::int64_t>(),
            j.at("h").get<std::int64_t>()};
}

std::optional<BoundingBox> SceneRecord::composite() const {
    for (const auto& b : boxes) {
        if (b.part == kCompositeLabel) return b.box;
    }
    return std::nullopt;
}

std::vector<BoundingBox> SceneRecord::visible_part_boxes() const {
    std::vector<BoundingBox> out;
    for (const auto& b : boxes) {
        if (b.part != kCompositeLabel && b.visible) out.push_back(b.box);
    }
    return out;
}

std::size_t SceneRecord::visible_parts() const { return visible_part_boxes().size(); }

json to_json(const SceneRecord& r) {
    json boxes = json::array();
    for (const auto& b : r.boxes) {
        boxes.push_back({{"part", b.part}, {"x", b.box.x}, {"y", b.box.y}, {"w", b.box.w}, {"h", b.box.h},
                         {"visible", b.visible}});
    }
    return {{"image", r.image}, {"boxes", std::move(boxes)}};
}

SceneRecord scene_record_from_json(const json& j) {
    SceneRecord r;
    r.image = j.at("image").get<std::string>();
    for (const auto& b : j.at("boxes")) {
        r.boxes.push_back({b.at("part").get<std::string>(), box_from_json(b), b.value("visible", true)});
    }
    return r;
}

std::vector<SceneRecord> write_scene_set(const fs::path& dir, const std::string& name,
                                         const std::vector<Scene>& scenes) {
    fs::create_directories(dir / name);
    std::vector<SceneRecord> records;
    std::string lines;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const std::string rel = name + "/" + numbered(name, i) + ".png";
        save_png(scenes[i].image, dir / rel);
        SceneRecord r{rel, scenes[i].all_boxes()};
        lines += to_json(r).dump() + "\n";
        records.push_back(std::move(r));
    }
    write_text(dir / (name + ".jsonl"), lines);
    return records;
}

std::vector<SceneRecord> read_scene_set(const fs::path& jsonl) {
    std::istringstream in(read_text(jsonl));
    std::vector<SceneRecord> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(scene_record_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw std::runtime_error(jsonl.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

json detection_json(const DetectionResult& r, const EnsembleConfig& ecfg) {
    json parts = json::array();
    for (const auto& part : ecfg.parts) {
        const auto pm = r.p_max.find(part);
        const auto pb = r.part_boxes.find(part);
        const bool has_box = pb != r.part_boxes.end() && pb->second;
        parts.push_back({{"part", part.name()},
                         {"p_max", pm == r.p_max.end() ? 0.0 : pm->second},
                         {"detected", std::find(r.parts_detected.begin(), r.parts_detected.end(), part) !=
                                          r.parts_detected.end()},
                         {"box", has_box ? box_json(*pb->second) : json(nullptr)}});
    }
    json cells = json::array();
    for (const auto& s : r.scores) {
        json p = json::object();
        for (const auto& part : ecfg.parts) {
            const auto it = s.p_present.find(part);
            p[part.name()] = it == s.p_present.end() ? 0.0 : it->second;
        }
        cells.push_back({{"x", s.origin.x}, {"y", s.origin.y}, {"p_present", std::move(p)}});
    }
    const auto& h = r.heatmap;
    return {{"alert", r.alert},
            {"confidence", r.confidence},
            {"parts", std::move(parts)},
            {"fused_box", r.fused_box ? box_json(*r.fused_box) : json(nullptr)},
            {"grid", {{"window", h.window}, {"stride", h.stride}, {"xs", h.xs}, {"ys", h.ys}, {"cells", std::move(cells)}}}};
}

Image heatmap_image(const Heatmap& h, const PartId& part, std::size_t cell) {
    const auto it = h.activation.find(part);
    if (it == h.activation.end()) throw std::invalid_argument("heatmap has no part '" + part.name() + "'");
    if (cell == 0) throw std::invalid_argument("heatmap cell size must be positive");
    const std::size_t rows = h.ys.size(), cols = h.xs.size();
    Image img(Shape{rows * cell, cols * cell, 1});
    for (std::size_t r = 0; r < rows * cell; ++r) {
        for (std::size_t c = 0; c < cols * cell; ++c) {
            img(r, c, 0) = static_cast<float>(it->second[(r / cell) * cols + c / cell]);
        }
    }
    return img;
}

}  // namespace snnw

#include "doctest.h"

#include <fstream>

#include "cli.hpp"
#include "snnw/image_io.hpp"
#include "snnw/model_io.hpp"
#include "snnw/pipeline.hpp"
#include "support.hpp"

using namespace snnw;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "snnw");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

std::vector<std::uint8_t> bytes_of(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

const char* kTinyToml = R"(seed = 4
parts = ["stock", "magazine"]

[synth]
train = 4
val = 2
test = 2
negatives = 2
rigid_scenes = 1
ablative_scenes = 1
background_scenes = 1

[train]
epochs = 1
batch_size = 4

[ensemble]
k = 1
)";

}  // namespace

TEST_CASE("config parsing is strict") {
    const auto c = run_config_from_json(json{{"seed", 9}, {"train", {{"epochs", 3}}}, {"ensemble", {{"k", 3}}}});
    CHECK(c.seed == 9);
    CHECK(c.train.epochs == 3);
    CHECK(c.ensemble.k == 3);
    CHECK(c.train.lr == RunConfig{}.train.lr);

    CHECK_THROWS_AS(run_config_from_json(json{{"sead", 1}}), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(json{{"train", {{"epoch", 1}}}}), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(json{{"train", {{"epochs", -1}}}}), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(json{{"train", {{"lr", "fast"}}}}), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(json{{"synth", {{"scenes", {{"depth", 3}}}}}}), ConfigError);

    // round trip through JSON
    RunConfig d;
    d.seed = 77;
    d.ensemble.core_margin = 10;
    d.synth.scenes.width = 800;
    CHECK(to_json(run_config_from_json(to_json(d))) == to_json(d));
    CHECK_FALSE(artifact_config(d).contains("data_dir"));

    RunConfig bad;
    bad.ensemble.k = 5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = RunConfig{};
    bad.ensemble.core_margin = 100;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("TOML and JSON config files agree") {
    const auto dir = test_support::temp_dir("cfg");
    std::ofstream(dir / "c.toml") << kTinyToml;
    const auto t = cli::read_config_file(dir / "c.toml");
    std::ofstream(dir / "c.json") << t.dump();
    CHECK(cli::read_config_file(dir / "c.json") == t);
    const auto c = run_config_from_json(t);
    CHECK(c.parts == std::vector<std::string>{"stock", "magazine"});
    CHECK(c.synth.train == 4);

    // the shipped reference config spells out exactly the defaults
    const auto shipped = run_config_from_json(cli::read_config_file(fs::path(SNNW_SOURCE_DIR) / "docs" / "default.toml"));
    CHECK(to_json(shipped) == to_json(RunConfig{}));

    std::ofstream(dir / "bad.toml") << "seed = = 3\n";
    CHECK_THROWS_AS(cli::read_config_file(dir / "bad.toml"), ConfigError);
    std::ofstream(dir / "bad.json") << "{seed: 3}";
    CHECK_THROWS_AS(cli::read_config_file(dir / "bad.json"), ConfigError);
}

TEST_CASE("detection document fields") {
    RunConfig c;
    c.parts = {"stock", "barrel"};
    PartNetworks nets;
    for (const auto& p : c.part_ids()) nets.emplace(p, test_support::constant_network(p, true, 200));
    const Image img(Shape{300, 400, 3}, 0.5f);
    const auto r = detect(img, nets, c.window, c.ensemble_config(), 1);
    const auto doc = detection_document(r, c);
    CHECK(doc["alert"] == true);
    CHECK(doc["seed"] == 1);
    REQUIRE(doc["parts"].size() == 2);
    for (const auto& p : doc["parts"]) {
        CHECK(p["detected"] == true);
        CHECK(p["p_max"].get<double>() > 0.99);
        CHECK(p.contains("box"));
    }
    CHECK(doc["fused_box"]["w"].get<int>() > 0);
    CHECK(doc["grid"]["window"] == 200);
    CHECK(doc["grid"]["cells"].size() == doc["grid"]["xs"].size() * doc["grid"]["ys"].size());
    CHECK(doc["config"]["ensemble"]["k"] == 2);

    const auto drawn = annotate(img, r, {{10, 10, 50, 50}});
    CHECK(drawn.shape() == img.shape());
    CHECK(drawn(10, 30, 1) == doctest::Approx(kTruthColour[1]));
    CHECK(drawn(static_cast<std::size_t>(r.fused_box->y), static_cast<std::size_t>(r.fused_box->x + 60), 2) == doctest::Approx(kPredictedColour[2]));
}

TEST_CASE("command line: exit codes") {
    const auto dir = test_support::temp_dir("cli-codes");
    CHECK(run_cli({}) == cli::usage);
    CHECK(run_cli({"frobnicate"}) == cli::usage);
    CHECK(run_cli({"train", "--epochs", "many"}) == cli::usage);
    CHECK(run_cli({"train", "--config", (dir / "absent.toml").string()}) == cli::usage);

    std::ofstream(dir / "unknown.json") << R"({"train": {"epochz": 2}})";
    CHECK(run_cli({"train", "--config", (dir / "unknown.json").string()}) == cli::usage);

    save_png(Image(Shape{250, 250, 3}, 0.2f), dir / "img.png");
    // no models at all
    CHECK(run_cli({"detect", (dir / "img.png").string(), "--models", (dir / "nomodels").string(), "--out",
                   (dir / "o").string()}) == cli::inconsistent);

    // models present, image unreadable
    const auto models = dir / "models";
    fs::create_directories(models);
    for (const auto& p : RunConfig{}.parts) save_model(test_support::constant_network(PartId(p), false, 200), models / (p + ".snnw"));
    CHECK(run_cli({"detect", (dir / "missing.png").string(), "--models", models.string(), "--out",
                   (dir / "o").string()}) == cli::io);
    // a model stored under the wrong part name
    fs::copy_file(models / "stock.snnw", models / "barrel.snnw", fs::copy_options::overwrite_existing);
    CHECK(run_cli({"detect", (dir / "img.png").string(), "--models", models.string(), "--out",
                   (dir / "o").string()}) == cli::inconsistent);
    save_model(test_support::constant_network(PartId("barrel"), false, 200), models / "barrel.snnw");

    save_png(Image(Shape{120, 300, 3}, 0.2f), dir / "small.png");
    CHECK(run_cli({"detect", (dir / "small.png").string(), "--models", models.string(), "--out",
                   (dir / "o").string()}) == cli::inconsistent);
    CHECK(run_cli({"detect", (dir / "small.png").string(), "--pad", "--models", models.string(), "--out",
                   (dir / "o").string()}) == cli::ok);
    const auto doc = json::parse(read_text(dir / "o" / "small.detection.json"));
    CHECK(doc["alert"] == false);
    CHECK(fs::exists(dir / "o" / "small.annotated.png"));
}

TEST_CASE("command line: synth, train, detect and evaluate") {
    const auto dir = test_support::temp_dir("cli-run");
    std::ofstream(dir / "tiny.toml") << kTinyToml;
    const std::string cfg = (dir / "tiny.toml").string();
    const auto data = dir / "data";

    REQUIRE(run_cli({"synth", "--config", cfg, "--out", data.string()}) == cli::ok);
    CHECK(fs::exists(data / "synth.json"));
    CHECK(fs::exists(data / "scenes" / "rigid.jsonl"));
    CHECK(read_split(data, "magazine", "val", PartId("magazine")).size() == 4);

    REQUIRE(run_cli({"augment", "--config", cfg, "--out", data.string(), "--copies", "1"}) == cli::ok);
    CHECK(read_split(data, "stock", "train", PartId("stock")).size() == 16);

    REQUIRE(run_cli({"train", "--config", cfg, "--data", data.string(), "--out", (dir / "m1").string()}) == cli::ok);
    REQUIRE(run_cli({"train", "--config", cfg, "--data", data.string(), "--out", (dir / "m2").string(), "--jobs",
                     "2"}) == cli::ok);
    for (const auto* p : {"stock", "magazine"}) {
        const auto name = std::string(p) + ".snnw";
        CHECK(bytes_of(dir / "m1" / name) == bytes_of(dir / "m2" / name));
        CHECK(fs::exists(dir / "m1" / (std::string(p) + ".report.json")));
    }

    // zero epochs leaves the seeded initialisation
    REQUIRE(run_cli({"train", "--config", cfg, "--data", data.string(), "--out", (dir / "m0").string(), "--epochs",
                     "0"}) == cli::ok);
    const auto c = run_config_from_json(cli::read_config_file(cfg));
    const auto init = initial_network(c, PartId("stock"));
    const auto zero = load_model(dir / "m0" / "stock.snnw", PartId("stock"));
    const auto pa = init.net.parameters(), pb = zero.net.parameters();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(*pa[i] == *pb[i]);

    const auto scene = read_scene_set(data / "scenes" / "rigid.jsonl").at(0);
    const auto image = data / "scenes" / scene.image;
    REQUIRE(run_cli({"detect", image.string(), "--config", cfg, "--models", (dir / "m1").string(), "--out",
                     (dir / "d1").string(), "--heatmaps", "--truth", "1,2,30,40"}) == cli::ok);
    REQUIRE(run_cli({"detect", image.string(), "--config", cfg, "--models", (dir / "m2").string(), "--out",
                     (dir / "d2").string()}) == cli::ok);
    const auto stem = fs::path(scene.image).stem().string();
    CHECK(bytes_of(dir / "d1" / (stem + ".detection.json")) == bytes_of(dir / "d2" / (stem + ".detection.json")));
    REQUIRE(run_cli({"detect", image.string(), "--config", cfg, "--models", (dir / "m1").string(), "--out",
                     (dir / "d3").string(), "--workers", "3"}) == cli::ok);
    const auto seq = json::parse(read_text(dir / "d1" / (stem + ".detection.json")));
    const auto par = json::parse(read_text(dir / "d3" / (stem + ".detection.json")));
    CHECK(seq["grid"] == par["grid"]);
    CHECK(seq["parts"] == par["parts"]);
    CHECK(fs::exists(dir / "d1" / (stem + ".heatmap.magazine.png")));
    CHECK(load_image(dir / "d1" / (stem + ".annotated.png")).shape() == load_image(image).shape());

    REQUIRE(run_cli({"evaluate", "--config", cfg, "--data", data.string(), "--models", (dir / "m1").string(), "--out",
                     (dir / "ev").string()}) == cli::ok);
    const auto rep = json::parse(read_text(dir / "ev" / "report.json"));
    CHECK(rep["parts"].size() == 2);
    CHECK(rep["scene_sets"].size() == 3);
    CHECK(read_text(dir / "ev" / "report.txt").find("stock") != std::string::npos);

    // a deleted model is a consistency failure, not a crash
    fs::remove(dir / "m1" / "magazine.snnw");
    CHECK(run_cli({"evaluate", "--config", cfg, "--data", data.string(), "--models", (dir / "m1").string(), "--out",
                   (dir / "ev").string()}) == cli::inconsistent);
}

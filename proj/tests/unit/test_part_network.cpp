#include "doctest.h"

#include <cmath>
#include <fstream>

#include "snnw/model_io.hpp"
#include "snnw/part_network.hpp"
#include "support.hpp"

using namespace snnw;
using test_support::tiny_spec;

namespace {

// Separable toy task: present windows are bright, absent ones dark.
std::vector<Sample> bright_dark(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Sample> out;
    for (std::size_t i = 0; i < n; ++i) {
        const bool pos = i % 2 == 0;
        Image img(Shape{16, 16, 3});
        for (auto& v : img.data()) v = static_cast<float>((pos ? 0.6 : 0.0) + 0.4 * rng.uniform());
        out.push_back({std::move(img), pos ? Label::present : Label::absent, PartId("stock"),
                       "s" + std::to_string(seed) + "_" + std::to_string(i), 0});
    }
    return out;
}

bool same_parameters(const TrainedPartNetwork& a, const TrainedPartNetwork& b) {
    const auto pa = a.net.parameters(), pb = b.net.parameters();
    if (pa.size() != pb.size()) return false;
    for (std::size_t i = 0; i < pa.size(); ++i)
        if (!(*pa[i] == *pb[i])) return false;
    return true;
}

TrainConfig quick(std::uint32_t epochs) {
    TrainConfig c;
    c.epochs = epochs;
    c.batch_size = 8;
    c.lr = 0.01;
    c.patience = 0;
    return c;
}

}  // namespace

TEST_CASE("build_network is deterministic under its seed") {
    const PartId p("stock");
    CHECK(serialize_model(build_network(tiny_spec(), p, 5)) == serialize_model(build_network(tiny_spec(), p, 5)));
    CHECK(serialize_model(build_network(tiny_spec(), p, 5)) != serialize_model(build_network(tiny_spec(), p, 6)));

    auto bad = tiny_spec();
    bad.dense_widths.clear();
    CHECK_THROWS_AS(build_network(bad, p, 1), std::invalid_argument);
}

TEST_CASE("predictions lie on the simplex") {
    const auto net = build_network(tiny_spec(), PartId("stock"), 2);
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
        const auto pr = predict_window(net, test_support::random_image(16, 16, 3, rng));
        CHECK(pr.p_present >= 0.0);
        CHECK(pr.p_absent >= 0.0);
        CHECK(pr.p_present + pr.p_absent == doctest::Approx(1.0).epsilon(1e-6));
    }
    CHECK_FALSE(WindowPrediction{0.5, 0.5}.positive());
    CHECK(WindowPrediction{0.5001, 0.4999}.positive());
    CHECK_THROWS(predict_window(net, Image(Shape{8, 16, 3})));
}

TEST_CASE("training reduces loss and keeps the best epoch") {
    const auto train = bright_dark(64, 1), val = bright_dark(32, 2);
    auto init = build_network(tiny_spec(), PartId("stock"), 3);
    const auto before = score_set(init, val);
    auto out = train_part_network(init, train, val, quick(6));
    REQUIRE(out.report.epochs.size() == 6);
    CHECK(out.report.epochs.back().train_loss < out.report.epochs.front().train_loss);
    const auto after = score_set(out.network, val);
    CHECK(after.loss < before.loss);
    CHECK(after.accuracy >= 0.9);

    // the kept parameters belong to the reported best epoch
    const auto& best = out.report.epochs[static_cast<std::size_t>(out.report.best_epoch - 1)];
    CHECK(after.accuracy == doctest::Approx(best.val_accuracy));
    for (const auto& e : out.report.epochs) {
        CHECK(e.val_accuracy <= best.val_accuracy);
        if (e.val_accuracy == best.val_accuracy) CHECK(e.val_loss >= best.val_loss);
    }
    CHECK(out.network.meta.best_epoch == out.report.best_epoch);
    CHECK(out.network.meta.epochs_run == 6);
}

TEST_CASE("training is deterministic") {
    const auto train = bright_dark(32, 1), val = bright_dark(16, 2);
    const auto init = build_network(tiny_spec(), PartId("stock"), 3);
    auto a = train_part_network(init, train, val, quick(2));
    auto b = train_part_network(init, train, val, quick(2));
    CHECK(serialize_model(a.network) == serialize_model(b.network));
    CHECK(a.report == b.report);
    auto cfg = quick(2);
    cfg.seed = 99;
    CHECK(serialize_model(train_part_network(init, train, val, cfg).network) != serialize_model(a.network));
}

TEST_CASE("early stopping and zero epochs") {
    const auto train = bright_dark(32, 1), val = bright_dark(16, 2);
    const auto init = build_network(tiny_spec(), PartId("stock"), 3);
    auto zero = train_part_network(init, train, val, quick(0));
    CHECK(zero.report.epochs.empty());
    CHECK(zero.network.meta.best_epoch == -1);
    CHECK(same_parameters(zero.network, init));

    auto cfg = quick(30);
    cfg.patience = 2;
    auto stopped = train_part_network(init, train, val, cfg);
    if (stopped.report.stopped_early) {
        // the last `patience` epochs brought no accuracy gain over everything before them
        const auto& e = stopped.report.epochs;
        REQUIRE(e.size() >= 3);
        CHECK(e.size() < 30);
        double before = 0.0;
        for (std::size_t i = 0; i + 2 < e.size(); ++i) before = std::max(before, e[i].val_accuracy);
        CHECK(e[e.size() - 1].val_accuracy <= before);
        CHECK(e[e.size() - 2].val_accuracy <= before);
    }

    const std::vector<Sample> other_part{{Image(Shape{16, 16, 3}), Label::present, PartId("barrel"), "x", 0}};
    CHECK_THROWS_AS(train_part_network(init, other_part, val, quick(1)), std::invalid_argument);
    CHECK_THROWS_AS(train_part_network(init, {}, val, quick(1)), std::invalid_argument);
    auto bad = quick(1);
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("model files round trip") {
    const auto dir = test_support::temp_dir("model");
    auto net = build_network(tiny_spec(), PartId("magazine"), 11);
    net.meta = {11, 3, 2, 0.75f, 0.4f, 0.3f};
    save_model(net, dir / "m.snnw");
    const auto back = load_model(dir / "m.snnw", PartId("magazine"));
    CHECK(back.part == net.part);
    CHECK(back.meta == net.meta);
    CHECK(back.spec() == net.spec());
    CHECK(serialize_model(back) == serialize_model(net));

    Rng rng(4);
    const auto img = test_support::random_image(16, 16, 3, rng);
    CHECK(predict_window(back, img).p_present == predict_window(net, img).p_present);
}

TEST_CASE("model file errors") {
    const auto dir = test_support::temp_dir("model-err");
    const auto net = build_network(tiny_spec(), PartId("stock"), 1);
    const auto bytes = serialize_model(net);
    auto kind_of = [&](const std::vector<std::uint8_t>& b) {
        try {
            deserialize_model(b);
        } catch (const ModelFileError& e) {
            return e.kind();
        }
        FAIL("no error");
        return ModelFileError::Kind::io;
    };

    auto magic = bytes;
    magic[0] = 'X';
    CHECK(kind_of(magic) == ModelFileError::Kind::not_a_model);
    auto version = bytes;
    version[4] = 9;
    CHECK(kind_of(version) == ModelFileError::Kind::version_mismatch);
    for (std::size_t cut : {std::size_t{3}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
        auto t = std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
        const auto k = kind_of(t);
        CHECK((k == ModelFileError::Kind::truncated || k == ModelFileError::Kind::not_a_model));
    }
    auto extra = bytes;
    extra.push_back(0);
    CHECK(kind_of(extra) == ModelFileError::Kind::corrupt);

    save_model(net, dir / "stock.snnw");
    try {
        load_model(dir / "stock.snnw", PartId("barrel"));
        FAIL("expected part mismatch");
    } catch (const ModelFileError& e) {
        CHECK(e.kind() == ModelFileError::Kind::part_mismatch);
    }
    try {
        load_model(dir / "none.snnw");
        FAIL("expected io error");
    } catch (const ModelFileError& e) {
        CHECK(e.kind() == ModelFileError::Kind::io);
    }
}

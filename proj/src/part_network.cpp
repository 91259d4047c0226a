#include "snnw/part_network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace snnw {

void validate_part_spec(const PartNetworkSpec& spec) {
    nn::validate(spec);
    if (spec.channels != 1 && spec.channels != 3) {
        throw std::invalid_argument("part networks take 1 or 3 input channels, got " + std::to_string(spec.channels));
    }
}

TrainedPartNetwork build_network(const PartNetworkSpec& spec, const PartId& part, std::uint64_t seed) {
    validate_part_spec(spec);
    TrainedPartNetwork out{part, nn::ConvNet<double>::initialized(spec, seed).cast<float>(), {}};
    out.meta.seed = seed;
    return out;
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
    if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0,1)");
}

template <typename T>
Tensor<T> to_channels_first(const Tensor<float>& hwc) {
    if (hwc.rank() != 3) throw ShapeError("expected an (H,W,C) image, got " + to_string(hwc.shape()));
    const auto H = hwc.dim(0), W = hwc.dim(1), C = hwc.dim(2);
    Tensor<T> out({C, H, W});
    for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < W; ++j)
            for (std::size_t c = 0; c < C; ++c) out(c, i, j) = static_cast<T>(hwc(i, j, c));
    return out;
}

template Tensor<float> to_channels_first<float>(const Tensor<float>&);
template Tensor<double> to_channels_first<double>(const Tensor<float>&);

namespace {

void check_window(const PartNetworkSpec& spec, const Image& window) {
    const Shape expected{spec.input_rows, spec.input_cols, spec.channels};
    if (window.shape() != expected) {
        throw ShapeError("window shape " + to_string(window.shape()) + " does not match network input " +
                         to_string(expected));
    }
}

void check_samples(const TrainedPartNetwork& net, const std::vector<Sample>& samples, const char* which) {
    const auto& spec = net.spec();
    for (const auto& s : samples) {
        if (s.part != net.part) {
            throw std::invalid_argument(std::string(which) + " sample '" + s.origin + "' belongs to part '" +
                                        s.part.name() + "', network detects '" + net.part.name() + "'");
        }
        if (!valid_label(s.label)) {
            throw std::invalid_argument(std::string(which) + " sample '" + s.origin + "' has a label outside {0,1}");
        }
        check_window(spec, s.image);
    }
}

}  // namespace

WindowPrediction predict_window(const TrainedPartNetwork& net, const Image& window) {
    check_window(net.spec(), window);
    const auto probs = net.net.probabilities(to_channels_first<float>(window));
    return {probs[class_index(Label::present)], probs[class_index(Label::absent)]};
}

SetScore score_set(const TrainedPartNetwork& net, const std::vector<Sample>& samples) {
    if (samples.empty()) return {};
    double loss = 0.0;
    std::size_t correct = 0;
    for (const auto& s : samples) {
        const auto logits = net.net.logits(to_channels_first<float>(s.image));
        const auto sl = nn::softmax_cross_entropy(logits, class_index(s.label));
        loss += sl.loss;
        const bool predicted_present = sl.probs[class_index(Label::present)] > 0.5f;
        if (predicted_present == (s.label == Label::present)) ++correct;
    }
    const auto n = static_cast<double>(samples.size());
    return {static_cast<double>(correct) / n, loss / n};
}

TrainingOutcome train_part_network(TrainedPartNetwork net, const std::vector<Sample>& train_set,
                                   const std::vector<Sample>& val_set, const TrainConfig& cfg) {
    cfg.validate();
    if (train_set.empty()) throw std::invalid_argument("training set is empty");
    check_samples(net, train_set, "training");
    check_samples(net, val_set, "validation");

    std::vector<std::size_t> positives, negatives;
    for (std::size_t i = 0; i < train_set.size(); ++i) {
        (train_set[i].label == Label::present ? positives : negatives).push_back(i);
    }

    TrainingOutcome out{std::move(net), {}};
    auto& model = out.network;
    out.report.part = model.part;
    model.meta.seed = cfg.seed;

    Rng batch_rng(derive_seed(cfg.seed, "batches"));
    Rng dropout_rng(derive_seed(cfg.seed, "dropout"));

    // Endless reshuffled stream over one class.
    struct Stream {
        std::vector<std::size_t> order;
        std::size_t next = 0;
        std::size_t draw(Rng& rng) {
            if (next == 0) rng.shuffle(order.begin(), order.end());
            const auto v = order[next];
            next = (next + 1) % order.size();
            return v;
        }
    };
    Stream pos{positives}, neg{negatives};
    const bool balanced = !positives.empty() && !negatives.empty();
    Stream all{};
    if (!balanced) {
        all.order.resize(train_set.size());
        for (std::size_t i = 0; i < train_set.size(); ++i) all.order[i] = i;
    }

    auto params = model.net.parameters();
    std::vector<Tensor<float>> velocity, accum;
    for (auto* p : params) {
        velocity.emplace_back(p->shape());
        accum.emplace_back(p->shape());
    }

    const std::size_t batches = (train_set.size() + cfg.batch_size - 1) / cfg.batch_size;
    nn::ConvNet<float> best = model.net;
    double best_acc = -1.0, best_loss = 0.0;
    std::uint32_t since_best = 0;

    for (std::uint32_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t b = 0; b < batches; ++b) {
            for (auto& a : accum) a.fill(0.0f);
            for (std::uint32_t k = 0; k < cfg.batch_size; ++k) {
                const std::size_t idx = balanced ? ((b * cfg.batch_size + k) % 2 == 0 ? pos.draw(batch_rng) : neg.draw(batch_rng))
                                                 : all.draw(batch_rng);
                const auto& s = train_set[idx];
                auto lg = model.net.loss_and_gradients(to_channels_first<float>(s.image), class_index(s.label),
                                                       nn::Mode::train, &dropout_rng);
                epoch_loss += lg.loss;
                ++seen;
                for (std::size_t p = 0; p < accum.size(); ++p) {
                    auto dst = accum[p].data();
                    auto src = lg.gradients[p].data();
                    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
                }
            }
            const float inv = 1.0f / static_cast<float>(cfg.batch_size);
            for (std::size_t p = 0; p < params.size(); ++p) {
                for (auto& v : accum[p].data()) v *= inv;
                nn::sgd_step(*params[p], accum[p], static_cast<float>(cfg.lr), static_cast<float>(cfg.momentum),
                             velocity[p]);
            }
        }

        EpochStats stats{epoch, epoch_loss / static_cast<double>(seen), 0.0, 0.0};
        if (!val_set.empty()) {
            const auto vs = score_set(model, val_set);
            stats.val_accuracy = vs.accuracy;
            stats.val_loss = vs.loss;
        }
        out.report.epochs.push_back(stats);
        model.meta.epochs_run = epoch;
        model.meta.final_train_loss = static_cast<float>(stats.train_loss);

        const bool more_accurate = val_set.empty() || stats.val_accuracy > best_acc;
        if (more_accurate || (stats.val_accuracy == best_acc && stats.val_loss < best_loss)) {
            best = model.net;
            best_acc = stats.val_accuracy;
            best_loss = stats.val_loss;
            out.report.best_epoch = static_cast<std::int32_t>(epoch);
        }
        // patience counts epochs without an accuracy gain
        if (more_accurate) {
            since_best = 0;
        } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
            out.report.stopped_early = epoch < cfg.epochs;
            break;
        }
    }

    if (out.report.best_epoch > 0) {
        model.net = std::move(best);
        model.meta.best_epoch = out.report.best_epoch;
        model.meta.best_val_accuracy = static_cast<float>(best_acc);
        model.meta.best_val_loss = static_cast<float>(best_loss);
    }
    return out;
}

}  // namespace snnw

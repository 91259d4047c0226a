#pragma once

#include <cstdint>
#include <vector>

#include "snnw/nn/convnet.hpp"
#include "snnw/sample.hpp"

namespace snnw {

/// Architecture of one part detector. Defaults: 200x200x3 input, conv
/// blocks (32,64,64) with 3x3 kernels, dense (128,64,2), dropout 0.5.
using PartNetworkSpec = nn::ConvNetLayout;

/// Checks the part-detector contract on top of the generic layout rules.
void validate_part_spec(const PartNetworkSpec& spec);

struct TrainingMeta {
    std::uint64_t seed = 0;
    std::uint32_t epochs_run = 0;
    std::int32_t best_epoch = -1;  // -1: parameters are the initialisation
    float best_val_accuracy = 0.0f;
    float best_val_loss = 0.0f;
    float final_train_loss = 0.0f;

    friend bool operator==(const TrainingMeta&, const TrainingMeta&) = default;
};

struct TrainedPartNetwork {
    PartId part;
    nn::ConvNet<float> net;
    TrainingMeta meta;

    const PartNetworkSpec& spec() const { return net.layout(); }
};

/// Deterministic Kaiming initialisation under `seed`.
TrainedPartNetwork build_network(const PartNetworkSpec& spec, const PartId& part, std::uint64_t seed);

struct TrainConfig {
    std::uint32_t epochs = 20;
    std::uint32_t batch_size = 16;
    double lr = 0.003;
    double momentum = 0.9;
    std::uint64_t seed = 7;
    std::uint32_t patience = 4;  // epochs without a validation-accuracy gain before stopping; 0 disables

    void validate() const;
};

struct EpochStats {
    std::uint32_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_accuracy = 0.0;
    double val_loss = 0.0;

    friend bool operator==(const EpochStats&, const EpochStats&) = default;
};

struct TrainReport {
    PartId part;
    std::vector<EpochStats> epochs;
    std::int32_t best_epoch = -1;
    bool stopped_early = false;

    friend bool operator==(const TrainReport&, const TrainReport&) = default;
};

struct TrainingOutcome {
    TrainedPartNetwork network;
    TrainReport report;
};

/// Minibatch momentum-SGD on softmax cross-entropy with 50/50 class-balanced
/// batches. Keeps the parameters of the best validation epoch (accuracy,
/// ties to lower loss).
TrainingOutcome train_part_network(TrainedPartNetwork net, const std::vector<Sample>& train_set,
                                   const std::vector<Sample>& val_set, const TrainConfig& cfg);

struct WindowPrediction {
    double p_present = 0.0;
    double p_absent = 0.0;

    /// Positive iff p_present > 0.5; exactly 0.5 is negative.
    bool positive(double threshold = 0.5) const { return p_present > threshold; }
};

/// Scores one (H,W,C) window matching the network input geometry, dropout off.
WindowPrediction predict_window(const TrainedPartNetwork& net, const Image& window);

/// Mean cross-entropy and thresholded accuracy over a labelled set.
struct SetScore {
    double accuracy = 0.0;
    double loss = 0.0;
};
SetScore score_set(const TrainedPartNetwork& net, const std::vector<Sample>& samples);

/// (H,W,C) -> (C,H,W).
template <typename T>
Tensor<T> to_channels_first(const Tensor<float>& hwc);

}  // namespace snnw

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "snnw/nn/layers.hpp"

namespace snnw::nn {

struct ConvBlock {
    std::uint32_t filters = 32;
    std::uint32_t kernel = 3;

    friend bool operator==(const ConvBlock&, const ConvBlock&) = default;
};

/// Feed-forward stack: conv blocks (conv, ReLU, 2x2 max-pool), flatten,
/// dense layers with ReLU between them, softmax on the last one. Dropout sits
/// on the output of the second-to-last dense layer.
struct ConvNetLayout {
    std::uint32_t input_rows = 200;
    std::uint32_t input_cols = 200;
    std::uint32_t channels = 3;
    std::vector<ConvBlock> conv_blocks{{32, 3}, {64, 3}, {64, 3}};
    std::vector<std::uint32_t> dense_widths{128, 64, 2};
    double dropout_rate = 0.5;

    friend bool operator==(const ConvNetLayout&, const ConvNetLayout&) = default;
};

/// Throws std::invalid_argument describing the first violated constraint.
void validate(const ConvNetLayout& layout);

/// Flattened feature count entering the first dense layer.
std::size_t flattened_features(const ConvNetLayout& layout);

template <typename T>
struct ForwardTrace {
    std::vector<Patches<T>> conv_patches;  // unfolded conv inputs
    std::vector<Tensor<T>> conv_outputs;  // pre-activation
    std::vector<Tensor<T>> pool_inputs;   // post-ReLU
    std::vector<std::vector<std::uint32_t>> pool_argmax;
    std::vector<Tensor<T>> dense_inputs;
    std::vector<Tensor<T>> dense_outputs;  // pre-activation
    std::optional<DropoutResult<T>> dropout;
    Tensor<T> logits;

    /// ReLU on/off masks and pooling winners, used to spot kinks.
    std::vector<std::uint8_t> activation_pattern() const;
};

template <typename T>
class ConvNet {
public:
    explicit ConvNet(ConvNetLayout layout);

    /// Kaiming fan-in normal weights, zero biases, drawn from a seeded stream.
    static ConvNet initialized(const ConvNetLayout& layout, std::uint64_t seed);

    const ConvNetLayout& layout() const noexcept { return layout_; }

    /// Parameters in declaration order: per conv block kernels then bias,
    /// then per dense layer weights then bias.
    std::vector<Tensor<T>*> parameters();
    std::vector<const Tensor<T>*> parameters() const;
    std::size_t parameter_count() const;

    /// Expects a (C,H,W) tensor matching the layout's input geometry.
    ForwardTrace<T> forward(const Tensor<T>& input, Mode mode, Rng* rng = nullptr) const;

    Tensor<T> logits(const Tensor<T>& input) const;
    Tensor<T> probabilities(const Tensor<T>& input) const;

    struct LossAndGradients {
        T loss{};
        Tensor<T> probs;
        std::vector<Tensor<T>> gradients;  // mirrors parameters()
    };

    LossAndGradients loss_and_gradients(const Tensor<T>& input, std::size_t target, Mode mode,
                                        Rng* rng = nullptr) const;

    template <typename U>
    ConvNet<U> cast() const {
        ConvNet<U> out(layout_);
        auto dst = out.parameters();
        auto src = parameters();
        for (std::size_t i = 0; i < src.size(); ++i) *dst[i] = src[i]->template cast<U>();
        return out;
    }

    std::vector<ConvLayer<T>> conv_layers;
    std::vector<DenseLayer<T>> dense_layers;

private:
    ConvNetLayout layout_;
};

struct GradientCheckResult {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    std::size_t kinks_skipped = 0;  // parameters whose perturbation crossed a ReLU/pool kink at every step size
};

/// Central finite differences (L(w+e) - L(w-e)) / 2e against the supplied
/// analytic gradients, per parameter, with dropout off. The relative error is
/// |analytic - numeric| / max(|numeric|, 1e-7).
///
/// When a perturbation changes the activation pattern (a ReLU input or a pool
/// winner crosses over), the difference quotient straddles a kink and is not
/// a derivative estimate; the step is shrunk tenfold up to three times before
/// the parameter is counted as skipped.
GradientCheckResult gradient_check(const ConvNet<double>& net, const Tensor<double>& input, std::size_t target,
                                   double epsilon, const std::vector<Tensor<double>>& analytic);

/// Same, using the network's own backward pass.
GradientCheckResult gradient_check(const ConvNet<double>& net, const Tensor<double>& input, std::size_t target,
                                   double epsilon = 1e-4);

}  // namespace snnw::nn

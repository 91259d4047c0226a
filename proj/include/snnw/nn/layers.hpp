#pragma once

// Layer primitives: valid-padding cross-correlation, 2x2 max-pooling, ReLU,
// fully connected, softmax cross-entropy, inverted dropout, momentum SGD.
// Every forward op has a backward companion returning exact gradients.
// Instantiated for float (training/inference) and double (gradient checks).

#include <cstdint>
#include <span>
#include <vector>

#include "snnw/nn/tensor.hpp"
#include "snnw/rng.hpp"

namespace snnw::nn {

struct Stride {
    std::size_t rows = 1;
    std::size_t cols = 1;
};

template <typename T>
struct ConvLayer {
    Tensor<T> kernels;  // (out_channels, in_channels, kh, kw)
    Tensor<T> bias;     // (out_channels)
    Stride stride{};

    std::size_t out_channels() const { return kernels.dim(0); }
    std::size_t in_channels() const { return kernels.dim(1); }
    std::size_t kernel_rows() const { return kernels.dim(2); }
    std::size_t kernel_cols() const { return kernels.dim(3); }
};

template <typename T>
struct ConvGradients {
    Tensor<T> input;  // empty when not requested
    Tensor<T> kernels;
    Tensor<T> bias;
};

/// Output shape of conv2d for a (C,H,W) input; throws ShapeError on mismatch.
template <typename T>
Shape conv2d_output_shape(const Shape& input, const ConvLayer<T>& layer);

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const ConvLayer<T>& layer);

template <typename T>
ConvGradients<T> conv2d_backward(const Tensor<T>& input, const ConvLayer<T>& layer,
                                 const Tensor<T>& upstream, bool want_input_grad = true);

/// Input unfolded into receptive-field columns (C*kh*kw rows, one column per
/// output position); lets the backward pass reuse the forward unfolding.
template <typename T>
struct Patches {
    Shape input_shape;
    AlignedVector<T> columns;
};

template <typename T>
Patches<T> unfold_patches(const Tensor<T>& input, const ConvLayer<T>& layer);

template <typename T>
Tensor<T> conv2d(const Patches<T>& patches, const ConvLayer<T>& layer);

template <typename T>
ConvGradients<T> conv2d_backward(const Patches<T>& patches, const ConvLayer<T>& layer, const Tensor<T>& upstream,
                                 bool want_input_grad = true);

template <typename T>
struct PoolResult {
    Tensor<T> output;
    std::vector<std::uint32_t> argmax;  // flat input index per output cell
};

/// Disjoint 2x2 max-pooling. A trailing odd row/column is dropped.
/// Ties resolve to the first maximum in row-major block order.
template <typename T>
PoolResult<T> maxpool2x2(const Tensor<T>& input);

template <typename T>
Tensor<T> maxpool2x2_backward(const Shape& input_shape, std::span<const std::uint32_t> argmax,
                              const Tensor<T>& upstream);

template <typename T>
Tensor<T> relu(const Tensor<T>& input);

/// Upstream masked by (input > 0); the subgradient at exactly 0 is 0.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& upstream);

template <typename T>
struct DenseLayer {
    Tensor<T> weights;  // (out_dim, in_dim)
    Tensor<T> bias;     // (out_dim)

    std::size_t out_dim() const { return weights.dim(0); }
    std::size_t in_dim() const { return weights.dim(1); }
};

template <typename T>
struct DenseGradients {
    Tensor<T> input;
    Tensor<T> weights;
    Tensor<T> bias;
};

template <typename T>
Tensor<T> dense(const Tensor<T>& input, const DenseLayer<T>& layer);

template <typename T>
DenseGradients<T> dense_backward(const Tensor<T>& input, const DenseLayer<T>& layer,
                                 const Tensor<T>& upstream);

template <typename T>
struct SoftmaxLoss {
    Tensor<T> probs;
    T loss{};
    Tensor<T> grad;  // d loss / d logits = probs - onehot(target)
};

/// Two-way softmax with cross-entropy, stabilised by max-subtraction.
template <typename T>
SoftmaxLoss<T> softmax_cross_entropy(const Tensor<T>& logits, std::size_t target);

enum class Mode { train, inference };

struct DropoutSpec {
    double rate = 0.5;
    Mode mode = Mode::inference;
};

template <typename T>
struct DropoutResult {
    Tensor<T> output;
    std::vector<T> scale;  // per-unit multiplier applied (0 or 1/(1-rate)); empty if identity
};

/// Inverted dropout. Inference mode (or rate 0) is the exact identity and
/// does not touch the generator.
template <typename T>
DropoutResult<T> dropout(const Tensor<T>& input, const DropoutSpec& spec, Rng& rng);

template <typename T>
Tensor<T> dropout_backward(const DropoutResult<T>& forward, const Tensor<T>& upstream);

/// v <- momentum * v + g;  w <- w - lr * v
template <typename T>
void sgd_step(Tensor<T>& params, const Tensor<T>& grads, T lr, T momentum, Tensor<T>& velocity);

}  // namespace snnw::nn

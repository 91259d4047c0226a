#include "snnw/nn/layers.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

namespace snnw::nn {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

struct ConvGeometry {
    std::size_t channels, rows, cols;
    std::size_t kernel_rows, kernel_cols;
    std::size_t stride_rows, stride_cols;
    std::size_t out_rows, out_cols;

    std::size_t patch() const { return channels * kernel_rows * kernel_cols; }
    std::size_t positions() const { return out_rows * out_cols; }
};

template <typename T>
ConvGeometry geometry(const Shape& input, const ConvLayer<T>& layer) {
    if (input.size() != 3) throw ShapeError("conv2d expects a (C,H,W) input, got " + to_string(input));
    if (layer.kernels.rank() != 4) {
        throw ShapeError("conv2d kernels must be (out,in,kh,kw), got " + to_string(layer.kernels.shape()));
    }
    if (layer.bias.shape() != Shape{layer.out_channels()}) {
        throw ShapeError("conv2d bias shape " + to_string(layer.bias.shape()) + " does not match " +
                         std::to_string(layer.out_channels()) + " output channels");
    }
    if (input[0] != layer.in_channels()) {
        throw ShapeError("conv2d input has " + std::to_string(input[0]) + " channels, kernels expect " +
                         std::to_string(layer.in_channels()));
    }
    if (layer.stride.rows == 0 || layer.stride.cols == 0) throw ShapeError("conv2d stride must be positive");
    if (layer.kernel_rows() > input[1] || layer.kernel_cols() > input[2]) {
        throw ShapeError("conv2d kernel " + std::to_string(layer.kernel_rows()) + "x" +
                         std::to_string(layer.kernel_cols()) + " exceeds input " + to_string(input));
    }
    ConvGeometry g{};
    g.channels = input[0];
    g.rows = input[1];
    g.cols = input[2];
    g.kernel_rows = layer.kernel_rows();
    g.kernel_cols = layer.kernel_cols();
    g.stride_rows = layer.stride.rows;
    g.stride_cols = layer.stride.cols;
    g.out_rows = (g.rows - g.kernel_rows) / g.stride_rows + 1;
    g.out_cols = (g.cols - g.kernel_cols) / g.stride_cols + 1;
    return g;
}

// Unfolds every receptive field into a column: (C*kh*kw, out_rows*out_cols).
template <typename T>
AlignedVector<T> im2col(const T* in, const ConvGeometry& g) {
    AlignedVector<T> cols(g.patch() * g.positions());
    T* dst = cols.data();
    for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t ki = 0; ki < g.kernel_rows; ++ki) {
            for (std::size_t kj = 0; kj < g.kernel_cols; ++kj) {
                for (std::size_t oi = 0; oi < g.out_rows; ++oi) {
                    const T* src = in + (c * g.rows + oi * g.stride_rows + ki) * g.cols + kj;
                    if (g.stride_cols == 1) {
                        std::copy_n(src, g.out_cols, dst);
                        dst += g.out_cols;
                    } else {
                        for (std::size_t oj = 0; oj < g.out_cols; ++oj) *dst++ = src[oj * g.stride_cols];
                    }
                }
            }
        }
    }
    return cols;
}

template <typename T>
void col2im(const T* cols, const ConvGeometry& g, T* out) {
    const T* src = cols;
    for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t ki = 0; ki < g.kernel_rows; ++ki) {
            for (std::size_t kj = 0; kj < g.kernel_cols; ++kj) {
                for (std::size_t oi = 0; oi < g.out_rows; ++oi) {
                    T* dst = out + (c * g.rows + oi * g.stride_rows + ki) * g.cols + kj;
                    if (g.stride_cols == 1) {
                        for (std::size_t oj = 0; oj < g.out_cols; ++oj) dst[oj] += src[oj];
                        src += g.out_cols;
                    } else {
                        for (std::size_t oj = 0; oj < g.out_cols; ++oj) dst[oj * g.stride_cols] += *src++;
                    }
                }
            }
        }
    }
}

}  // namespace

template <typename T>
Shape conv2d_output_shape(const Shape& input, const ConvLayer<T>& layer) {
    const auto g = geometry(input, layer);
    return {layer.out_channels(), g.out_rows, g.out_cols};
}

template <typename T>
Patches<T> unfold_patches(const Tensor<T>& input, const ConvLayer<T>& layer) {
    const auto g = geometry(input.shape(), layer);
    return {input.shape(), im2col(input.data().data(), g)};
}

template <typename T>
Tensor<T> conv2d(const Patches<T>& patches, const ConvLayer<T>& layer) {
    const auto g = geometry(patches.input_shape, layer);
    if (patches.columns.size() != g.patch() * g.positions()) throw ShapeError("conv2d: patch matrix size mismatch");
    const auto oc = layer.out_channels();

    Tensor<T> out({oc, g.out_rows, g.out_cols});
    MatrixMap<T> y(out.data().data(), oc, g.positions());
    ConstMatrixMap<T> k(layer.kernels.data().data(), oc, g.patch());
    ConstMatrixMap<T> x(patches.columns.data(), g.patch(), g.positions());
    y.noalias() = k * x;
    for (std::size_t o = 0; o < oc; ++o) y.row(o).array() += layer.bias[o];
    return out;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const ConvLayer<T>& layer) {
    return conv2d(unfold_patches(input, layer), layer);
}

template <typename T>
ConvGradients<T> conv2d_backward(const Patches<T>& patches, const ConvLayer<T>& layer, const Tensor<T>& upstream,
                                 bool want_input_grad) {
    const auto g = geometry(patches.input_shape, layer);
    if (patches.columns.size() != g.patch() * g.positions()) {
        throw ShapeError("conv2d_backward: patch matrix size mismatch");
    }
    const auto oc = layer.out_channels();
    require_same_shape(upstream.shape(), {oc, g.out_rows, g.out_cols}, "conv2d_backward upstream");

    ConstMatrixMap<T> dy(upstream.data().data(), oc, g.positions());
    ConstMatrixMap<T> x(patches.columns.data(), g.patch(), g.positions());

    ConvGradients<T> grads;
    grads.kernels = Tensor<T>(layer.kernels.shape());
    MatrixMap<T> dk(grads.kernels.data().data(), oc, g.patch());
    dk.noalias() = dy * x.transpose();

    grads.bias = Tensor<T>(layer.bias.shape());
    for (std::size_t o = 0; o < oc; ++o) grads.bias[o] = dy.row(o).sum();

    if (want_input_grad) {
        AlignedVector<T> dcols(g.patch() * g.positions());
        MatrixMap<T> dx(dcols.data(), g.patch(), g.positions());
        ConstMatrixMap<T> k(layer.kernels.data().data(), oc, g.patch());
        dx.noalias() = k.transpose() * dy;
        grads.input = Tensor<T>(patches.input_shape);
        col2im(dcols.data(), g, grads.input.data().data());
    }
    return grads;
}

template <typename T>
ConvGradients<T> conv2d_backward(const Tensor<T>& input, const ConvLayer<T>& layer,
                                 const Tensor<T>& upstream, bool want_input_grad) {
    return conv2d_backward(unfold_patches(input, layer), layer, upstream, want_input_grad);
}

template <typename T>
PoolResult<T> maxpool2x2(const Tensor<T>& input) {
    if (input.rank() != 3) throw ShapeError("maxpool2x2 expects (C,H,W), got " + to_string(input.shape()));
    const auto channels = input.dim(0), rows = input.dim(1), cols = input.dim(2);
    if (rows < 2 || cols < 2) throw ShapeError("maxpool2x2 needs at least 2x2 spatial input, got " + to_string(input.shape()));
    const auto out_rows = rows / 2, out_cols = cols / 2;

    PoolResult<T> r{Tensor<T>({channels, out_rows, out_cols}), {}};
    r.argmax.resize(r.output.size());
    const T* in = input.data().data();
    std::size_t o = 0;
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t i = 0; i < out_rows; ++i) {
            for (std::size_t j = 0; j < out_cols; ++j, ++o) {
                const std::size_t base = (c * rows + 2 * i) * cols + 2 * j;
                const std::size_t cand[4] = {base, base + 1, base + cols, base + cols + 1};
                std::size_t best = cand[0];
                for (int q = 1; q < 4; ++q) {
                    if (in[cand[q]] > in[best]) best = cand[q];
                }
                r.output[o] = in[best];
                r.argmax[o] = static_cast<std::uint32_t>(best);
            }
        }
    }
    return r;
}

template <typename T>
Tensor<T> maxpool2x2_backward(const Shape& input_shape, std::span<const std::uint32_t> argmax,
                              const Tensor<T>& upstream) {
    if (argmax.size() != upstream.size()) {
        throw ShapeError("maxpool2x2_backward: argmax and upstream sizes differ");
    }
    Tensor<T> grad(input_shape);
    for (std::size_t o = 0; o < upstream.size(); ++o) grad[argmax[o]] += upstream[o];
    return grad;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
    Tensor<T> out = input;
    for (auto& v : out.data()) v = v > T{0} ? v : T{0};
    return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& upstream) {
    require_same_shape(input.shape(), upstream.shape(), "relu_backward");
    Tensor<T> grad(upstream.shape());
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = input[i] > T{0} ? upstream[i] : T{0};
    return grad;
}

namespace {
template <typename T>
void check_dense(const Tensor<T>& input, const DenseLayer<T>& layer) {
    if (layer.weights.rank() != 2) throw ShapeError("dense weights must be (out,in), got " + to_string(layer.weights.shape()));
    if (layer.bias.shape() != Shape{layer.out_dim()}) {
        throw ShapeError("dense bias shape " + to_string(layer.bias.shape()) + " does not match out_dim " +
                         std::to_string(layer.out_dim()));
    }
    if (input.size() != layer.in_dim()) {
        throw ShapeError("dense input has " + std::to_string(input.size()) + " elements, layer expects " +
                         std::to_string(layer.in_dim()));
    }
}
}  // namespace

template <typename T>
Tensor<T> dense(const Tensor<T>& input, const DenseLayer<T>& layer) {
    check_dense(input, layer);
    Tensor<T> out = layer.bias;
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> y(out.data().data(), layer.out_dim());
    ConstMatrixMap<T> w(layer.weights.data().data(), layer.out_dim(), layer.in_dim());
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> x(input.data().data(), layer.in_dim());
    y.noalias() += w * x;
    return out;
}

template <typename T>
DenseGradients<T> dense_backward(const Tensor<T>& input, const DenseLayer<T>& layer,
                                 const Tensor<T>& upstream) {
    check_dense(input, layer);
    require_same_shape(upstream.shape(), layer.bias.shape(), "dense_backward upstream");
    using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
    Eigen::Map<const Vec> x(input.data().data(), layer.in_dim());
    Eigen::Map<const Vec> dy(upstream.data().data(), layer.out_dim());
    ConstMatrixMap<T> w(layer.weights.data().data(), layer.out_dim(), layer.in_dim());

    DenseGradients<T> g{Tensor<T>(input.shape()), Tensor<T>(layer.weights.shape()), upstream};
    MatrixMap<T>(g.weights.data().data(), layer.out_dim(), layer.in_dim()).noalias() = dy * x.transpose();
    Eigen::Map<Vec>(g.input.data().data(), layer.in_dim()).noalias() = w.transpose() * dy;
    return g;
}

template <typename T>
SoftmaxLoss<T> softmax_cross_entropy(const Tensor<T>& logits, std::size_t target) {
    if (logits.rank() != 1 || logits.size() != 2) {
        throw ShapeError("softmax_cross_entropy expects 2 logits, got " + to_string(logits.shape()));
    }
    if (target >= logits.size()) {
        throw std::out_of_range("softmax_cross_entropy: target class " + std::to_string(target) +
                                " outside {0,1}");
    }
    const T peak = std::max(logits[0], logits[1]);
    const T e0 = std::exp(logits[0] - peak), e1 = std::exp(logits[1] - peak);
    const T z = e0 + e1;

    SoftmaxLoss<T> r{Tensor<T>({2}), T{0}, Tensor<T>({2})};
    r.probs[0] = e0 / z;
    r.probs[1] = e1 / z;
    // log-sum-exp form avoids log(0) when one probability underflows
    r.loss = std::log(z) - (logits[target] - peak);
    r.grad = r.probs;
    r.grad[target] -= T{1};
    return r;
}

template <typename T>
DropoutResult<T> dropout(const Tensor<T>& input, const DropoutSpec& spec, Rng& rng) {
    if (!(spec.rate >= 0.0 && spec.rate < 1.0)) {
        throw std::invalid_argument("dropout rate must lie in [0,1), got " + std::to_string(spec.rate));
    }
    if (spec.mode == Mode::inference || spec.rate == 0.0) return {input, {}};
    DropoutResult<T> r{input, std::vector<T>(input.size())};
    const T keep_scale = static_cast<T>(1.0 / (1.0 - spec.rate));
    for (std::size_t i = 0; i < input.size(); ++i) {
        r.scale[i] = rng.uniform() < spec.rate ? T{0} : keep_scale;
        r.output[i] *= r.scale[i];
    }
    return r;
}

template <typename T>
Tensor<T> dropout_backward(const DropoutResult<T>& forward, const Tensor<T>& upstream) {
    require_same_shape(forward.output.shape(), upstream.shape(), "dropout_backward");
    if (forward.scale.empty()) return upstream;
    Tensor<T> grad = upstream;
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= forward.scale[i];
    return grad;
}

template <typename T>
void sgd_step(Tensor<T>& params, const Tensor<T>& grads, T lr, T momentum, Tensor<T>& velocity) {
    require_same_shape(params.shape(), grads.shape(), "sgd_step gradients");
    require_same_shape(params.shape(), velocity.shape(), "sgd_step velocity");
    if (!(lr > T{0})) throw std::invalid_argument("sgd_step: learning rate must be positive");
    for (std::size_t i = 0; i < params.size(); ++i) {
        velocity[i] = momentum * velocity[i] + grads[i];
        params[i] -= lr * velocity[i];
    }
}

#define SNNW_INSTANTIATE_LAYERS(T)                                                                  \
    template Shape conv2d_output_shape<T>(const Shape&, const ConvLayer<T>&);                     \
    template Tensor<T> conv2d<T>(const Tensor<T>&, const ConvLayer<T>&);                          \
    template Patches<T> unfold_patches<T>(const Tensor<T>&, const ConvLayer<T>&);                 \
    template Tensor<T> conv2d<T>(const Patches<T>&, const ConvLayer<T>&);                         \
    template ConvGradients<T> conv2d_backward<T>(const Patches<T>&, const ConvLayer<T>&,          \
                                                 const Tensor<T>&, bool);                         \
    template ConvGradients<T> conv2d_backward<T>(const Tensor<T>&, const ConvLayer<T>&,           \
                                                 const Tensor<T>&, bool);                         \
    template PoolResult<T> maxpool2x2<T>(const Tensor<T>&);                                       \
    template Tensor<T> maxpool2x2_backward<T>(const Shape&, std::span<const std::uint32_t>,       \
                                              const Tensor<T>&);                                  \
    template Tensor<T> relu<T>(const Tensor<T>&);                                                 \
    template Tensor<T> relu_backward<T>(const Tensor<T>&, const Tensor<T>&);                      \
    template Tensor<T> dense<T>(const Tensor<T>&, const DenseLayer<T>&);                          \
    template DenseGradients<T> dense_backward<T>(const Tensor<T>&, const DenseLayer<T>&,          \
                                                 const Tensor<T>&);                               \
    template SoftmaxLoss<T> softmax_cross_entropy<T>(const Tensor<T>&, std::size_t);              \
    template DropoutResult<T> dropout<T>(const Tensor<T>&, const DropoutSpec&, Rng&);             \
    template Tensor<T> dropout_backward<T>(const DropoutResult<T>&, const Tensor<T>&);            \
    template void sgd_step<T>(Tensor<T>&, const Tensor<T>&, T, T, Tensor<T>&);

SNNW_INSTANTIATE_LAYERS(float)
SNNW_INSTANTIATE_LAYERS(double)

#undef SNNW_INSTANTIATE_LAYERS

}  // namespace snnw::nn

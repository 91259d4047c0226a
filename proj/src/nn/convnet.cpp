#include "snnw/nn/convnet.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace snnw::nn {

namespace {

struct Spatial {
    std::size_t channels, rows, cols;
};

// Walks the conv blocks, returning the geometry after each pool.
std::vector<Spatial> block_outputs(const ConvNetLayout& layout) {
    std::vector<Spatial> out;
    Spatial s{layout.channels, layout.input_rows, layout.input_cols};
    for (std::size_t b = 0; b < layout.conv_blocks.size(); ++b) {
        const auto& blk = layout.conv_blocks[b];
        if (blk.filters == 0 || blk.kernel == 0) {
            throw std::invalid_argument("conv block " + std::to_string(b) + " needs positive filters and kernel");
        }
        if (blk.kernel > s.rows || blk.kernel > s.cols) {
            throw std::invalid_argument("conv block " + std::to_string(b) + " kernel " + std::to_string(blk.kernel) +
                                        " exceeds its " + std::to_string(s.rows) + "x" + std::to_string(s.cols) +
                                        " input");
        }
        s = {blk.filters, s.rows - blk.kernel + 1, s.cols - blk.kernel + 1};
        if (s.rows < 2 || s.cols < 2) {
            throw std::invalid_argument("conv block " + std::to_string(b) + " leaves less than 2x2 for pooling");
        }
        s.rows /= 2;
        s.cols /= 2;
        out.push_back(s);
    }
    return out;
}

}  // namespace

void validate(const ConvNetLayout& layout) {
    if (layout.input_rows == 0 || layout.input_cols == 0 || layout.channels == 0) {
        throw std::invalid_argument("input geometry must be positive");
    }
    if (layout.dense_widths.empty()) throw std::invalid_argument("at least one dense layer is required");
    for (auto w : layout.dense_widths) {
        if (w == 0) throw std::invalid_argument("dense widths must be positive");
    }
    if (layout.dense_widths.back() != 2) {
        throw std::invalid_argument("final dense width must be 2 (binary softmax), got " +
                                    std::to_string(layout.dense_widths.back()));
    }
    if (!(layout.dropout_rate >= 0.0 && layout.dropout_rate < 1.0)) {
        throw std::invalid_argument("dropout rate must lie in [0,1)");
    }
    block_outputs(layout);
}

std::size_t flattened_features(const ConvNetLayout& layout) {
    const auto blocks = block_outputs(layout);
    if (blocks.empty()) return std::size_t{layout.channels} * layout.input_rows * layout.input_cols;
    const auto& s = blocks.back();
    return s.channels * s.rows * s.cols;
}

template <typename T>
std::vector<std::uint8_t> ForwardTrace<T>::activation_pattern() const {
    std::vector<std::uint8_t> p;
    for (const auto& t : conv_outputs) {
        for (auto v : t.data()) p.push_back(v > T{0});
    }
    for (const auto& a : pool_argmax) {
        for (auto idx : a) {
            for (int b = 0; b < 4; ++b) p.push_back(static_cast<std::uint8_t>(idx >> (8 * b)));
        }
    }
    for (std::size_t i = 0; i + 1 < dense_outputs.size(); ++i) {
        for (auto v : dense_outputs[i].data()) p.push_back(v > T{0});
    }
    return p;
}

template <typename T>
ConvNet<T>::ConvNet(ConvNetLayout layout) : layout_(std::move(layout)) {
    validate(layout_);
    std::size_t in_ch = layout_.channels;
    for (const auto& blk : layout_.conv_blocks) {
        conv_layers.push_back({Tensor<T>({blk.filters, in_ch, blk.kernel, blk.kernel}), Tensor<T>({blk.filters}), {}});
        in_ch = blk.filters;
    }
    std::size_t in_dim = flattened_features(layout_);
    for (auto w : layout_.dense_widths) {
        dense_layers.push_back({Tensor<T>({w, in_dim}), Tensor<T>({w})});
        in_dim = w;
    }
}

template <typename T>
ConvNet<T> ConvNet<T>::initialized(const ConvNetLayout& layout, std::uint64_t seed) {
    ConvNet net(layout);
    Rng rng(seed);
    auto init = [&rng](Tensor<T>& w, std::size_t fan_in) {
        const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (auto& v : w.data()) v = static_cast<T>(rng.normal() * scale);
    };
    for (auto& c : net.conv_layers) init(c.kernels, c.in_channels() * c.kernel_rows() * c.kernel_cols());
    for (auto& d : net.dense_layers) init(d.weights, d.in_dim());
    return net;
}

template <typename T>
std::vector<Tensor<T>*> ConvNet<T>::parameters() {
    std::vector<Tensor<T>*> p;
    for (auto& c : conv_layers) {
        p.push_back(&c.kernels);
        p.push_back(&c.bias);
    }
    for (auto& d : dense_layers) {
        p.push_back(&d.weights);
        p.push_back(&d.bias);
    }
    return p;
}

template <typename T>
std::vector<const Tensor<T>*> ConvNet<T>::parameters() const {
    std::vector<const Tensor<T>*> p;
    for (const auto& c : conv_layers) {
        p.push_back(&c.kernels);
        p.push_back(&c.bias);
    }
    for (const auto& d : dense_layers) {
        p.push_back(&d.weights);
        p.push_back(&d.bias);
    }
    return p;
}

template <typename T>
std::size_t ConvNet<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto* t : parameters()) n += t->size();
    return n;
}

template <typename T>
ForwardTrace<T> ConvNet<T>::forward(const Tensor<T>& input, Mode mode, Rng* rng) const {
    const Shape expected{layout_.channels, layout_.input_rows, layout_.input_cols};
    require_same_shape(input.shape(), expected, "network input");
    if (mode == Mode::train && layout_.dropout_rate > 0.0 && layout_.dense_widths.size() >= 2 && rng == nullptr) {
        throw std::invalid_argument("training-mode forward pass with dropout needs a generator");
    }

    ForwardTrace<T> tr;
    Tensor<T> x = input;
    for (const auto& layer : conv_layers) {
        tr.conv_patches.push_back(unfold_patches(x, layer));
        tr.conv_outputs.push_back(conv2d(tr.conv_patches.back(), layer));
        tr.pool_inputs.push_back(relu(tr.conv_outputs.back()));
        auto pooled = maxpool2x2(tr.pool_inputs.back());
        tr.pool_argmax.push_back(std::move(pooled.argmax));
        x = std::move(pooled.output);
    }
    x = x.reshaped({x.size()});

    const std::size_t n_dense = dense_layers.size();
    for (std::size_t i = 0; i < n_dense; ++i) {
        tr.dense_inputs.push_back(x);
        tr.dense_outputs.push_back(dense(x, dense_layers[i]));
        if (i + 1 == n_dense) break;
        x = relu(tr.dense_outputs.back());
        if (i + 2 == n_dense) {
            Rng unused(0);
            tr.dropout = dropout(x, DropoutSpec{layout_.dropout_rate, mode}, rng ? *rng : unused);
            x = tr.dropout->output;
        }
    }
    tr.logits = tr.dense_outputs.back();
    return tr;
}

template <typename T>
Tensor<T> ConvNet<T>::logits(const Tensor<T>& input) const {
    return forward(input, Mode::inference).logits;
}

template <typename T>
Tensor<T> ConvNet<T>::probabilities(const Tensor<T>& input) const {
    return softmax_cross_entropy(logits(input), 0).probs;
}

template <typename T>
typename ConvNet<T>::LossAndGradients ConvNet<T>::loss_and_gradients(const Tensor<T>& input, std::size_t target,
                                                                     Mode mode, Rng* rng) const {
    const auto tr = forward(input, mode, rng);
    auto sl = softmax_cross_entropy(tr.logits, target);

    const std::size_t n_conv = conv_layers.size(), n_dense = dense_layers.size();
    std::vector<Tensor<T>> grads(2 * (n_conv + n_dense));

    Tensor<T> up = sl.grad;
    for (std::size_t i = n_dense; i-- > 0;) {
        if (i + 1 < n_dense) {
            if (i + 2 == n_dense && tr.dropout) up = dropout_backward(*tr.dropout, up);
            up = relu_backward(tr.dense_outputs[i], up);
        }
        auto g = dense_backward(tr.dense_inputs[i], dense_layers[i], up);
        grads[2 * (n_conv + i)] = std::move(g.weights);
        grads[2 * (n_conv + i) + 1] = std::move(g.bias);
        up = std::move(g.input);
    }

    for (std::size_t i = n_conv; i-- > 0;) {
        const auto& pool_in = tr.pool_inputs[i];
        up = up.reshaped({pool_in.dim(0), pool_in.dim(1) / 2, pool_in.dim(2) / 2});
        // The ReLU gate is applied on the pooled side: a pooled winner is
        // positive exactly when its pre-activation is.
        const auto& argmax = tr.pool_argmax[i];
        for (std::size_t o = 0; o < up.size(); ++o) {
            if (!(pool_in[argmax[o]] > T{0})) up[o] = T{0};
        }
        up = maxpool2x2_backward(pool_in.shape(), argmax, up);
        auto g = conv2d_backward(tr.conv_patches[i], conv_layers[i], up, i > 0);
        grads[2 * i] = std::move(g.kernels);
        grads[2 * i + 1] = std::move(g.bias);
        up = std::move(g.input);
    }
    return {sl.loss, std::move(sl.probs), std::move(grads)};
}

template class ConvNet<float>;
template class ConvNet<double>;
template struct ForwardTrace<float>;
template struct ForwardTrace<double>;

GradientCheckResult gradient_check(const ConvNet<double>& net, const Tensor<double>& input, std::size_t target,
                                   double epsilon, const std::vector<Tensor<double>>& analytic) {
    ConvNet<double> probe = net;
    auto params = probe.parameters();
    if (analytic.size() != params.size()) throw ShapeError("gradient_check: gradient list does not mirror parameters");
    for (std::size_t k = 0; k < params.size(); ++k) {
        require_same_shape(params[k]->shape(), analytic[k].shape(), "gradient_check gradient");
    }

    const auto base_pattern = probe.forward(input, Mode::inference).activation_pattern();
    auto evaluate = [&](std::vector<std::uint8_t>& pattern) {
        auto tr = probe.forward(input, Mode::inference);
        pattern = tr.activation_pattern();
        return softmax_cross_entropy(tr.logits, target).loss;
    };

    GradientCheckResult result;
    std::vector<std::uint8_t> pat_plus, pat_minus;
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& w = *params[k];
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double original = w[i];
            double eps = epsilon;
            bool smooth = false;
            double numeric = 0.0;
            for (int attempt = 0; attempt < 4 && !smooth; ++attempt, eps /= 10.0) {
                w[i] = original + eps;
                const double lp = evaluate(pat_plus);
                w[i] = original - eps;
                const double lm = evaluate(pat_minus);
                w[i] = original;
                smooth = pat_plus == base_pattern && pat_minus == base_pattern;
                numeric = (lp - lm) / (2.0 * eps);
            }
            if (!smooth) {
                ++result.kinks_skipped;
                continue;
            }
            const double a = analytic[k][i];
            const double rel = std::abs(a - numeric) / std::max(std::abs(numeric), 1e-7);
            result.max_relative_error = std::max(result.max_relative_error, rel);
            ++result.checked;
        }
    }
    return result;
}

GradientCheckResult gradient_check(const ConvNet<double>& net, const Tensor<double>& input, std::size_t target,
                                   double epsilon) {
    const auto lg = net.loss_and_gradients(input, target, Mode::inference);
    return gradient_check(net, input, target, epsilon, lg.gradients);
}

}  // namespace snnw::nn

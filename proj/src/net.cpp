#include "advdet/net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "advdet/util.hpp"

namespace advdet {

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Conv2d: return "conv2d";
        case LayerKind::ReLU: return "relu";
        case LayerKind::MaxPool2: return "maxpool2";
        case LayerKind::Flatten: return "flatten";
        case LayerKind::Dense: return "dense";
    }
    return "?";
}

LayerSpec conv2d(int in_channels, int out_channels, int kernel) {
    LayerSpec s;
    s.kind = LayerKind::Conv2d;
    s.in_channels = in_channels;
    s.out_channels = out_channels;
    s.kernel = kernel;
    return s;
}

LayerSpec relu() { return LayerSpec{LayerKind::ReLU}; }
LayerSpec maxpool2() { return LayerSpec{LayerKind::MaxPool2}; }
LayerSpec flatten() { return LayerSpec{LayerKind::Flatten}; }

LayerSpec dense(int in_features, int out_features) {
    LayerSpec s;
    s.kind = LayerKind::Dense;
    s.in_features = in_features;
    s.out_features = out_features;
    return s;
}

namespace {

[[noreturn]] void layer_error(size_t index, const LayerSpec& spec, const std::string& what) {
    throw std::invalid_argument("layer " + std::to_string(index) + " (" + layer_kind_name(spec.kind) +
                                "): " + what);
}

}  // namespace

Classifier::Classifier(std::array<int, 3> input_shape, std::vector<LayerSpec> layers, int num_classes,
                       uint64_t seed)
    : input_shape_(input_shape), layers_(std::move(layers)), num_classes_(num_classes), seed_(seed) {
    if (num_classes_ <= 0) throw std::invalid_argument("Classifier: num_classes must be positive");
    validate_and_infer_shapes();
    init_params(seed);
}

void Classifier::validate_and_infer_shapes() {
    std::array<int, 3> cur = input_shape_;
    bool is_flat = false;
    shapes_.clear();
    flat_.clear();
    if (cur[0] <= 0 || cur[1] <= 0 || cur[2] <= 0)
        throw std::invalid_argument("Classifier: input shape must be positive");
    for (size_t i = 0; i < layers_.size(); ++i) {
        const LayerSpec& l = layers_[i];
        switch (l.kind) {
            case LayerKind::Conv2d: {
                if (is_flat) layer_error(i, l, "applied to flattened input");
                if (l.in_channels != cur[0])
                    layer_error(i, l, "expects " + std::to_string(l.in_channels) + " channels, input has " +
                                          std::to_string(cur[0]));
                if (l.kernel <= 0 || l.out_channels <= 0) layer_error(i, l, "invalid kernel/channel spec");
                if (cur[1] < l.kernel || cur[2] < l.kernel)
                    layer_error(i, l, "kernel larger than input " + std::to_string(cur[1]) + "x" +
                                          std::to_string(cur[2]));
                cur = {l.out_channels, cur[1] - l.kernel + 1, cur[2] - l.kernel + 1};
                break;
            }
            case LayerKind::ReLU:
                break;
            case LayerKind::MaxPool2: {
                if (is_flat) layer_error(i, l, "applied to flattened input");
                if (cur[1] < 2 || cur[2] < 2) layer_error(i, l, "input smaller than 2x2");
                cur = {cur[0], cur[1] / 2, cur[2] / 2};
                break;
            }
            case LayerKind::Flatten: {
                if (is_flat) layer_error(i, l, "input already flat");
                cur = {cur[0] * cur[1] * cur[2], 1, 1};
                is_flat = true;
                break;
            }
            case LayerKind::Dense: {
                if (!is_flat) layer_error(i, l, "requires flattened input");
                if (l.in_features != cur[0])
                    layer_error(i, l, "expects " + std::to_string(l.in_features) + " features, input has " +
                                          std::to_string(cur[0]));
                if (l.out_features <= 0) layer_error(i, l, "invalid output size");
                cur = {l.out_features, 1, 1};
                break;
            }
        }
        shapes_.push_back(cur);
        flat_.push_back(is_flat);
    }
    if (layers_.empty() || !is_flat || cur[0] != num_classes_)
        throw std::invalid_argument("Classifier: layers must end in a flat vector of " +
                                    std::to_string(num_classes_) + " class scores");
}

void Classifier::init_params(uint64_t seed) {
    params_.assign(layers_.size(), LayerParams{});
    Rng rng(seed);
    for (size_t i = 0; i < layers_.size(); ++i) {
        const LayerSpec& l = layers_[i];
        if (l.kind == LayerKind::Conv2d) {
            int fan_in = l.in_channels * l.kernel * l.kernel;
            int fan_out = l.out_channels * l.kernel * l.kernel;
            double limit = std::sqrt(6.0 / (fan_in + fan_out));
            Tensor w({l.out_channels, l.in_channels, l.kernel, l.kernel});
            for (float& v : w.data) v = static_cast<float>(rng.uniform(-limit, limit));
            params_[i].weight = std::move(w);
            params_[i].bias = Tensor({l.out_channels});
        } else if (l.kind == LayerKind::Dense) {
            double limit = std::sqrt(6.0 / (l.in_features + l.out_features));
            Tensor w({l.out_features, l.in_features});
            for (float& v : w.data) v = static_cast<float>(rng.uniform(-limit, limit));
            params_[i].weight = std::move(w);
            params_[i].bias = Tensor({l.out_features});
        }
    }
}

std::array<int, 3> Classifier::output_shape(size_t layer_index) const { return shapes_.at(layer_index); }

namespace {

// All reductions accumulate in double per the numeric contract.

void conv2d_forward(const LayerSpec& l, const LayerParams& p, const Tensor& in, Tensor& out, int B,
                    std::array<int, 3> ishape, std::array<int, 3> oshape) {
    const int C = ishape[0], H = ishape[1], W = ishape[2];
    const int OC = oshape[0], OH = oshape[1], OW = oshape[2];
    const int K = l.kernel;
    for (int b = 0; b < B; ++b) {
        const float* xb = in.data.data() + static_cast<size_t>(b) * C * H * W;
        float* yb = out.data.data() + static_cast<size_t>(b) * OC * OH * OW;
        for (int oc = 0; oc < OC; ++oc) {
            const float bias = p.bias.data[oc];
            for (int oy = 0; oy < OH; ++oy) {
                for (int ox = 0; ox < OW; ++ox) {
                    double acc = bias;
                    for (int ic = 0; ic < C; ++ic) {
                        const float* xrow = xb + (static_cast<size_t>(ic) * H + oy) * W + ox;
                        const float* wrow = p.weight.data.data() +
                                            ((static_cast<size_t>(oc) * C + ic) * K) * K;
                        for (int ky = 0; ky < K; ++ky) {
                            const float* xr = xrow + static_cast<size_t>(ky) * W;
                            const float* wr = wrow + static_cast<size_t>(ky) * K;
                            for (int kx = 0; kx < K; ++kx) acc += static_cast<double>(wr[kx]) * xr[kx];
                        }
                    }
                    yb[(static_cast<size_t>(oc) * OH + oy) * OW + ox] = static_cast<float>(acc);
                }
            }
        }
    }
}

void dense_forward(const LayerSpec& l, const LayerParams& p, const Tensor& in, Tensor& out, int B) {
    const int IN = l.in_features, OUT = l.out_features;
    for (int b = 0; b < B; ++b) {
        const float* xb = in.data.data() + static_cast<size_t>(b) * IN;
        float* yb = out.data.data() + static_cast<size_t>(b) * OUT;
        for (int o = 0; o < OUT; ++o) {
            const float* wrow = p.weight.data.data() + static_cast<size_t>(o) * IN;
            double acc = p.bias.data[o];
            for (int i = 0; i < IN; ++i) acc += static_cast<double>(wrow[i]) * xb[i];
            yb[o] = static_cast<float>(acc);
        }
    }
}

void maxpool2_forward(const Tensor& in, Tensor& out, int B, std::array<int, 3> ishape,
                      std::array<int, 3> oshape) {
    const int C = ishape[0], H = ishape[1], W = ishape[2];
    const int OH = oshape[1], OW = oshape[2];
    for (int b = 0; b < B; ++b) {
        for (int c = 0; c < C; ++c) {
            const float* xc = in.data.data() + (static_cast<size_t>(b) * C + c) * H * W;
            float* yc = out.data.data() + (static_cast<size_t>(b) * C + c) * OH * OW;
            for (int oy = 0; oy < OH; ++oy) {
                for (int ox = 0; ox < OW; ++ox) {
                    const int iy = oy * 2, ix = ox * 2;
                    float m = xc[iy * W + ix];
                    m = std::max(m, xc[iy * W + ix + 1]);
                    m = std::max(m, xc[(iy + 1) * W + ix]);
                    m = std::max(m, xc[(iy + 1) * W + ix + 1]);
                    yc[oy * OW + ox] = m;
                }
            }
        }
    }
}

}  // namespace

ForwardTape Classifier::forward_tape(const Tensor& batch) const {
    if (batch.dim() != 4)
        throw std::invalid_argument("forward: batch must be 4-d (B,C,H,W), got " + batch.shape_str());
    if (batch.shape[1] != input_shape_[0] || batch.shape[2] != input_shape_[1] ||
        batch.shape[3] != input_shape_[2])
        throw std::invalid_argument(std::string("forward: layer 0 (") + layer_kind_name(layers_[0].kind) +
                                    "): batch " + batch.shape_str() + " does not match model input (" +
                                    std::to_string(input_shape_[0]) + "," + std::to_string(input_shape_[1]) +
                                    "," + std::to_string(input_shape_[2]) + ")");
    const int B = batch.shape[0];
    ForwardTape tape;
    tape.batch = B;
    tape.acts.reserve(layers_.size() + 1);
    tape.acts.push_back(batch);

    std::array<int, 3> ishape = input_shape_;
    for (size_t i = 0; i < layers_.size(); ++i) {
        const LayerSpec& l = layers_[i];
        const Tensor& in = tape.acts.back();
        const std::array<int, 3> oshape = shapes_[i];
        Tensor out = flat_[i] ? Tensor({B, oshape[0]}) : Tensor({B, oshape[0], oshape[1], oshape[2]});
        switch (l.kind) {
            case LayerKind::Conv2d:
                conv2d_forward(l, params_[i], in, out, B, ishape, oshape);
                break;
            case LayerKind::ReLU:
                for (size_t j = 0; j < in.data.size(); ++j) out.data[j] = std::max(0.0f, in.data[j]);
                break;
            case LayerKind::MaxPool2:
                maxpool2_forward(in, out, B, ishape, oshape);
                break;
            case LayerKind::Flatten:
                out.data = in.data;  // same storage order
                break;
            case LayerKind::Dense:
                dense_forward(l, params_[i], in, out, B);
                break;
        }
        tape.acts.push_back(std::move(out));
        ishape = oshape;
    }
    forward_calls_->fetch_add(1, std::memory_order_relaxed);
    tape.acts.back().require_finite("forward output");
    return tape;
}

Tensor Classifier::forward(const Tensor& batch) const {
    // lean path: two ping-pong buffers instead of a full tape
    if (batch.dim() != 4 || batch.shape[1] != input_shape_[0] || batch.shape[2] != input_shape_[1] ||
        batch.shape[3] != input_shape_[2])
        return forward_tape(batch).acts.back();  // reuse the tape path's diagnostics
    const int B = batch.shape[0];
    Tensor cur = batch;
    Tensor next;
    std::array<int, 3> ishape = input_shape_;
    for (size_t i = 0; i < layers_.size(); ++i) {
        const LayerSpec& l = layers_[i];
        const std::array<int, 3> oshape = shapes_[i];
        next = flat_[i] ? Tensor({B, oshape[0]}) : Tensor({B, oshape[0], oshape[1], oshape[2]});
        switch (l.kind) {
            case LayerKind::Conv2d:
                conv2d_forward(l, params_[i], cur, next, B, ishape, oshape);
                break;
            case LayerKind::ReLU:
                for (size_t j = 0; j < cur.data.size(); ++j) next.data[j] = std::max(0.0f, cur.data[j]);
                break;
            case LayerKind::MaxPool2:
                maxpool2_forward(cur, next, B, ishape, oshape);
                break;
            case LayerKind::Flatten:
                next.data = std::move(cur.data);
                break;
            case LayerKind::Dense:
                dense_forward(l, params_[i], cur, next, B);
                break;
        }
        cur = std::move(next);
        ishape = oshape;
    }
    forward_calls_->fetch_add(1, std::memory_order_relaxed);
    cur.require_finite("forward output");
    return cur;
}

namespace {

void conv2d_backward(const LayerSpec& l, const LayerParams& p, const Tensor& in, const Tensor& dout,
                     Tensor* din, LayerParams* dparams, int B, std::array<int, 3> ishape,
                     std::array<int, 3> oshape) {
    const int C = ishape[0], H = ishape[1], W = ishape[2];
    const int OC = oshape[0], OH = oshape[1], OW = oshape[2];
    const int K = l.kernel;
    // input and weight gradients are reductions, so they accumulate in
    // double scratch and round once at the end
    std::vector<double> dx_acc(din ? static_cast<size_t>(C) * H * W : 0);
    std::vector<double> dw_acc(dparams ? p.weight.data.size() : 0, 0.0);
    std::vector<double> db_acc(dparams ? p.bias.data.size() : 0, 0.0);
    for (int b = 0; b < B; ++b) {
        const float* xb = in.data.data() + static_cast<size_t>(b) * C * H * W;
        const float* gb = dout.data.data() + static_cast<size_t>(b) * OC * OH * OW;
        if (din) std::fill(dx_acc.begin(), dx_acc.end(), 0.0);
        for (int oc = 0; oc < OC; ++oc) {
            const float* goc = gb + static_cast<size_t>(oc) * OH * OW;
            if (dparams) {
                double acc = 0.0;
                for (int t = 0; t < OH * OW; ++t) acc += goc[t];
                db_acc[oc] += acc;
            }
            for (int ic = 0; ic < C; ++ic) {
                const float* xc = xb + static_cast<size_t>(ic) * H * W;
                double* dxc = din ? dx_acc.data() + static_cast<size_t>(ic) * H * W : nullptr;
                const float* w = p.weight.data.data() + ((static_cast<size_t>(oc) * C + ic) * K) * K;
                double* dw =
                    dparams ? dw_acc.data() + ((static_cast<size_t>(oc) * C + ic) * K) * K : nullptr;
                for (int ky = 0; ky < K; ++ky) {
                    for (int kx = 0; kx < K; ++kx) {
                        const double wv = w[ky * K + kx];
                        double wacc = 0.0;
                        for (int oy = 0; oy < OH; ++oy) {
                            const float* grow = goc + static_cast<size_t>(oy) * OW;
                            const float* xrow = xc + (static_cast<size_t>(oy) + ky) * W + kx;
                            if (dxc) {
                                double* dxrow = dxc + (static_cast<size_t>(oy) + ky) * W + kx;
                                for (int ox = 0; ox < OW; ++ox) {
                                    dxrow[ox] += wv * grow[ox];
                                    wacc += static_cast<double>(grow[ox]) * xrow[ox];
                                }
                            } else {
                                for (int ox = 0; ox < OW; ++ox)
                                    wacc += static_cast<double>(grow[ox]) * xrow[ox];
                            }
                        }
                        if (dw) dw[ky * K + kx] += wacc;
                    }
                }
            }
        }
        if (din) {
            float* dxb = din->data.data() + static_cast<size_t>(b) * C * H * W;
            for (size_t t = 0; t < dx_acc.size(); ++t) dxb[t] = static_cast<float>(dx_acc[t]);
        }
    }
    if (dparams) {
        for (size_t t = 0; t < dw_acc.size(); ++t)
            dparams->weight.data[t] += static_cast<float>(dw_acc[t]);
        for (size_t t = 0; t < db_acc.size(); ++t)
            dparams->bias.data[t] += static_cast<float>(db_acc[t]);
    }
}

void dense_backward(const LayerSpec& l, const LayerParams& p, const Tensor& in, const Tensor& dout,
                    Tensor* din, LayerParams* dparams, int B) {
    const int IN = l.in_features, OUT = l.out_features;
    std::vector<double> dx_acc(din ? IN : 0);
    std::vector<double> dw_acc(dparams ? p.weight.data.size() : 0, 0.0);
    std::vector<double> db_acc(dparams ? p.bias.data.size() : 0, 0.0);
    for (int b = 0; b < B; ++b) {
        const float* xb = in.data.data() + static_cast<size_t>(b) * IN;
        const float* gb = dout.data.data() + static_cast<size_t>(b) * OUT;
        if (din) std::fill(dx_acc.begin(), dx_acc.end(), 0.0);
        for (int o = 0; o < OUT; ++o) {
            const double g = gb[o];
            if (g == 0.0) continue;
            const float* wrow = p.weight.data.data() + static_cast<size_t>(o) * IN;
            if (dparams) {
                double* dwrow = dw_acc.data() + static_cast<size_t>(o) * IN;
                for (int i = 0; i < IN; ++i) dwrow[i] += g * xb[i];
                db_acc[o] += g;
            }
            if (din)
                for (int i = 0; i < IN; ++i) dx_acc[i] += g * wrow[i];
        }
        if (din) {
            float* dxb = din->data.data() + static_cast<size_t>(b) * IN;
            for (int i = 0; i < IN; ++i) dxb[i] = static_cast<float>(dx_acc[i]);
        }
    }
    if (dparams) {
        for (size_t t = 0; t < dw_acc.size(); ++t)
            dparams->weight.data[t] += static_cast<float>(dw_acc[t]);
        for (size_t t = 0; t < db_acc.size(); ++t)
            dparams->bias.data[t] += static_cast<float>(db_acc[t]);
    }
}

void maxpool2_backward(const Tensor& in, const Tensor& dout, Tensor& din, int B,
                       std::array<int, 3> ishape, std::array<int, 3> oshape) {
    const int C = ishape[0], H = ishape[1], W = ishape[2];
    const int OH = oshape[1], OW = oshape[2];
    for (int b = 0; b < B; ++b) {
        for (int c = 0; c < C; ++c) {
            const float* xc = in.data.data() + (static_cast<size_t>(b) * C + c) * H * W;
            const float* gc = dout.data.data() + (static_cast<size_t>(b) * C + c) * OH * OW;
            float* dxc = din.data.data() + (static_cast<size_t>(b) * C + c) * H * W;
            for (int oy = 0; oy < OH; ++oy) {
                for (int ox = 0; ox < OW; ++ox) {
                    const int iy = oy * 2, ix = ox * 2;
                    // first maximum wins on ties
                    int best = iy * W + ix;
                    if (xc[iy * W + ix + 1] > xc[best]) best = iy * W + ix + 1;
                    if (xc[(iy + 1) * W + ix] > xc[best]) best = (iy + 1) * W + ix;
                    if (xc[(iy + 1) * W + ix + 1] > xc[best]) best = (iy + 1) * W + ix + 1;
                    dxc[best] += gc[oy * OW + ox];
                }
            }
        }
    }
}

}  // namespace

Tensor Classifier::backward_input(const ForwardTape& tape, const Tensor& dscores) const {
    gradient_calls_->fetch_add(1, std::memory_order_relaxed);
    const int B = tape.batch;
    if (dscores.dim() != 2 || dscores.shape[0] != B || dscores.shape[1] != num_classes_)
        throw std::invalid_argument("backward_input: dscores must be (B,K)");
    Tensor grad = dscores;
    std::array<int, 3> ishape;
    for (int i = static_cast<int>(layers_.size()) - 1; i >= 0; --i) {
        const LayerSpec& l = layers_[i];
        const Tensor& in = tape.acts[i];
        ishape = (i == 0) ? input_shape_ : shapes_[i - 1];
        Tensor din = Tensor(in.shape);
        switch (l.kind) {
            case LayerKind::Conv2d:
                conv2d_backward(l, params_[i], in, grad, &din, nullptr, B, ishape, shapes_[i]);
                break;
            case LayerKind::ReLU:
                for (size_t j = 0; j < in.data.size(); ++j)
                    din.data[j] = in.data[j] > 0.0f ? grad.data[j] : 0.0f;
                break;
            case LayerKind::MaxPool2:
                maxpool2_backward(in, grad, din, B, ishape, shapes_[i]);
                break;
            case LayerKind::Flatten:
                din.data = grad.data;
                break;
            case LayerKind::Dense:
                dense_backward(l, params_[i], in, grad, &din, nullptr, B);
                break;
        }
        grad = std::move(din);
    }
    grad.require_finite("input gradient");
    return grad;
}

std::vector<LayerParams> Classifier::backward_params(const ForwardTape& tape,
                                                     const Tensor& dscores) const {
    const int B = tape.batch;
    if (dscores.dim() != 2 || dscores.shape[0] != B || dscores.shape[1] != num_classes_)
        throw std::invalid_argument("backward_params: dscores must be (B,K)");
    std::vector<LayerParams> grads(layers_.size());
    for (size_t i = 0; i < layers_.size(); ++i) {
        if (!params_[i].weight.data.empty()) {
            grads[i].weight = Tensor(params_[i].weight.shape);
            grads[i].bias = Tensor(params_[i].bias.shape);
        }
    }
    Tensor grad = dscores;
    std::array<int, 3> ishape;
    for (int i = static_cast<int>(layers_.size()) - 1; i >= 0; --i) {
        const LayerSpec& l = layers_[i];
        const Tensor& in = tape.acts[i];
        ishape = (i == 0) ? input_shape_ : shapes_[i - 1];
        // input gradient still needed to keep propagating below layer i
        bool need_din = i > 0;
        Tensor din = need_din ? Tensor(in.shape) : Tensor();
        switch (l.kind) {
            case LayerKind::Conv2d:
                conv2d_backward(l, params_[i], in, grad, need_din ? &din : nullptr, &grads[i], B, ishape,
                                shapes_[i]);
                break;
            case LayerKind::ReLU:
                if (need_din)
                    for (size_t j = 0; j < in.data.size(); ++j)
                        din.data[j] = in.data[j] > 0.0f ? grad.data[j] : 0.0f;
                break;
            case LayerKind::MaxPool2:
                if (need_din) maxpool2_backward(in, grad, din, B, ishape, shapes_[i]);
                break;
            case LayerKind::Flatten:
                if (need_din) din.data = grad.data;
                break;
            case LayerKind::Dense:
                dense_backward(l, params_[i], in, grad, need_din ? &din : nullptr, &grads[i], B);
                break;
        }
        if (need_din) grad = std::move(din);
    }
    return grads;
}

std::vector<int> Classifier::predict_batch(const Tensor& batch) const {
    Tensor scores = forward(batch);
    const int B = scores.shape[0], K = scores.shape[1];
    std::vector<int> out(B);
    for (int b = 0; b < B; ++b) {
        const float* row = scores.data.data() + static_cast<size_t>(b) * K;
        int best = 0;
        for (int k = 1; k < K; ++k)
            if (row[k] > row[best]) best = k;
        out[b] = best;
    }
    return out;
}

int Classifier::predict(const Tensor& image) const {
    Tensor batch;
    if (image.dim() == 3)
        batch = Tensor({1, image.shape[0], image.shape[1], image.shape[2]}, image.data);
    else if (image.dim() == 4 && image.shape[0] == 1)
        batch = image;
    else
        throw std::invalid_argument("predict: expected a single image, got " + image.shape_str());
    return predict_batch(batch)[0];
}

std::vector<double> softmax(const float* scores, int k) {
    double mx = scores[0];
    for (int i = 1; i < k; ++i) mx = std::max(mx, static_cast<double>(scores[i]));
    std::vector<double> p(k);
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        p[i] = std::exp(static_cast<double>(scores[i]) - mx);
        sum += p[i];
    }
    for (int i = 0; i < k; ++i) p[i] /= sum;
    return p;
}

double cross_entropy_loss(const Tensor& scores, const std::vector<int>& labels) {
    if (scores.dim() != 2) throw std::invalid_argument("cross_entropy_loss: scores must be (B,K)");
    const int B = scores.shape[0], K = scores.shape[1];
    if (static_cast<int>(labels.size()) != B)
        throw std::invalid_argument("cross_entropy_loss: got " + std::to_string(labels.size()) +
                                    " labels for batch of " + std::to_string(B));
    double total = 0.0;
    for (int b = 0; b < B; ++b) {
        if (labels[b] < 0 || labels[b] >= K)
            throw std::invalid_argument("cross_entropy_loss: label " + std::to_string(labels[b]) +
                                        " out of range [0," + std::to_string(K) + ")");
        const float* row = scores.data.data() + static_cast<size_t>(b) * K;
        double mx = row[0];
        for (int k = 1; k < K; ++k) mx = std::max(mx, static_cast<double>(row[k]));
        double lse = 0.0;
        for (int k = 0; k < K; ++k) lse += std::exp(static_cast<double>(row[k]) - mx);
        total += std::log(lse) + mx - row[labels[b]];
    }
    return total / B;
}

Tensor cross_entropy_grad(const Tensor& scores, const std::vector<int>& labels) {
    const int B = scores.shape[0], K = scores.shape[1];
    Tensor g({B, K});
    for (int b = 0; b < B; ++b) {
        const float* row = scores.data.data() + static_cast<size_t>(b) * K;
        std::vector<double> p = softmax(row, K);
        for (int k = 0; k < K; ++k)
            g.data[static_cast<size_t>(b) * K + k] =
                static_cast<float>((p[k] - (k == labels[b] ? 1.0 : 0.0)) / B);
    }
    return g;
}

namespace {

Tensor lift_to_batch(const Tensor& x) {
    if (x.dim() == 3) return Tensor({1, x.shape[0], x.shape[1], x.shape[2]}, x.data);
    if (x.dim() == 4) return x;
    throw std::invalid_argument("expected image (C,H,W) or batch (B,C,H,W), got " + x.shape_str());
}

}  // namespace

Tensor input_gradient(const Classifier& model, const Tensor& x, const std::vector<int>& labels) {
    Tensor batch = lift_to_batch(x);
    ForwardTape tape = model.forward_tape(batch);
    Tensor g = model.backward_input(tape, cross_entropy_grad(tape.acts.back(), labels));
    if (x.dim() == 3) return Tensor({x.shape[0], x.shape[1], x.shape[2]}, std::move(g.data));
    return g;
}

Tensor input_gradient(const Classifier& model, const Tensor& x, int label) {
    return input_gradient(model, x, std::vector<int>{label});
}

Tensor logit_combination_gradient(const Classifier& model, const Tensor& x,
                                  const std::vector<float>& coeffs) {
    if (static_cast<int>(coeffs.size()) != model.num_classes())
        throw std::invalid_argument("logit_combination_gradient: coefficient count mismatch");
    Tensor batch = lift_to_batch(x);
    ForwardTape tape = model.forward_tape(batch);
    Tensor dscores({1, model.num_classes()}, std::vector<float>(coeffs));
    Tensor g = model.backward_input(tape, dscores);
    if (x.dim() == 3) return Tensor({x.shape[0], x.shape[1], x.shape[2]}, std::move(g.data));
    return g;
}

}  // namespace advdet

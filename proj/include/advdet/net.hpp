#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <vector>

#include "advdet/tensor.hpp"

namespace advdet {

enum class LayerKind { Conv2d, ReLU, MaxPool2, Flatten, Dense };

const char* layer_kind_name(LayerKind k);

struct LayerSpec {
    LayerKind kind{};
    int in_channels = 0, out_channels = 0, kernel = 0;  // conv2d
    int in_features = 0, out_features = 0;              // dense
};

LayerSpec conv2d(int in_channels, int out_channels, int kernel);
LayerSpec relu();
LayerSpec maxpool2();
LayerSpec flatten();
LayerSpec dense(int in_features, int out_features);

struct LayerParams {
    Tensor weight;  // conv: (out,in,k,k), dense: (out,in)
    Tensor bias;    // (out)
};

// Activations recorded during a forward pass; consumed by the backward
// passes. acts[0] is the input batch, acts[i+1] the output of layer i.
struct ForwardTape {
    std::vector<Tensor> acts;
    int batch = 0;
};

// Feed-forward image classifier over conv / relu / maxpool / flatten /
// dense layers. Layer shapes are validated once at construction; forward
// and the backward passes are const and safe to call concurrently.
class Classifier {
public:
    Classifier() = default;

    // Validates that the layer shapes chain from input_shape to a flat
    // vector of num_classes scores, then initializes parameters
    // (Xavier-uniform weights, zero biases) from the seed.
    Classifier(std::array<int, 3> input_shape, std::vector<LayerSpec> layers, int num_classes,
               uint64_t seed);

    const std::vector<LayerSpec>& layers() const { return layers_; }
    std::vector<LayerParams>& params() { return params_; }
    const std::vector<LayerParams>& params() const { return params_; }
    std::array<int, 3> input_shape() const { return input_shape_; }
    int num_classes() const { return num_classes_; }
    uint64_t seed() const { return seed_; }

    // batch (B,C,H,W) -> unnormalized class scores (B,K).
    Tensor forward(const Tensor& batch) const;
    ForwardTape forward_tape(const Tensor& batch) const;

    // dscores (B,K) -> gradient with respect to the input batch.
    // Counted by gradient_calls(); the decision-based attack must keep
    // this at zero.
    Tensor backward_input(const ForwardTape& tape, const Tensor& dscores) const;

    // dscores (B,K) -> per-layer parameter gradients (summed over batch).
    std::vector<LayerParams> backward_params(const ForwardTape& tape, const Tensor& dscores) const;

    // argmax class of a single image (C,H,W) or (1,C,H,W); ties resolve
    // to the lowest class index.
    int predict(const Tensor& image) const;
    std::vector<int> predict_batch(const Tensor& batch) const;

    uint64_t gradient_calls() const { return gradient_calls_ ? gradient_calls_->load() : 0; }
    uint64_t forward_calls() const { return forward_calls_ ? forward_calls_->load() : 0; }

    // shape of layer i's output as (c,h,w); flat shapes are (n,1,1)
    std::array<int, 3> output_shape(size_t layer_index) const;

private:
    void validate_and_infer_shapes();
    void init_params(uint64_t seed);

    std::array<int, 3> input_shape_{};
    std::vector<LayerSpec> layers_;
    std::vector<LayerParams> params_;
    std::vector<std::array<int, 3>> shapes_;  // per-layer output shapes
    std::vector<bool> flat_;                  // layer output is flat
    int num_classes_ = 0;
    uint64_t seed_ = 0;
    // shared so copies keep instrumenting the same counters
    std::shared_ptr<std::atomic<uint64_t>> gradient_calls_ = std::make_shared<std::atomic<uint64_t>>(0);
    std::shared_ptr<std::atomic<uint64_t>> forward_calls_ = std::make_shared<std::atomic<uint64_t>>(0);
};

// Numerically stable softmax of one row of scores.
std::vector<double> softmax(const float* scores, int k);

// Mean over the batch of -log softmax(scores)[label]. Rejects labels
// outside [0, K).
double cross_entropy_loss(const Tensor& scores, const std::vector<int>& labels);

// d cross_entropy_loss / d scores = (softmax - onehot) / B.
Tensor cross_entropy_grad(const Tensor& scores, const std::vector<int>& labels);

// Gradient of the cross-entropy loss with respect to the input pixels.
// Accepts a single image (C,H,W) or a batch (B,C,H,W) with one label per
// image; the result has the same shape as x.
Tensor input_gradient(const Classifier& model, const Tensor& x, const std::vector<int>& labels);
Tensor input_gradient(const Classifier& model, const Tensor& x, int label);

// Gradient of sum_k coeffs[k] * score[k] for a single image; used by
// attacks that differentiate raw logits rather than the loss.
Tensor logit_combination_gradient(const Classifier& model, const Tensor& x,
                                  const std::vector<float>& coeffs);

}  // namespace advdet

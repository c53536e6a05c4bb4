#include "advdet/train.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "advdet/util.hpp"

namespace advdet {

Tensor pack_batch(const std::vector<LabeledImage>& data, const std::vector<int>& indices, int first,
                  int last) {
    const auto& shape = data[indices[first]].pixels.shape;
    const int B = last - first;
    Tensor batch({B, shape[0], shape[1], shape[2]});
    const size_t stride = data[indices[first]].pixels.data.size();
    for (int b = 0; b < B; ++b) {
        const auto& img = data[indices[first + b]].pixels;
        std::copy(img.data.begin(), img.data.end(), batch.data.begin() + b * stride);
    }
    return batch;
}

double accuracy(const Classifier& model, const std::vector<LabeledImage>& data) {
    if (data.empty()) return 0.0;
    std::vector<int> idx(data.size());
    std::iota(idx.begin(), idx.end(), 0);
    int correct = 0;
    const int chunk = 256;
    for (size_t first = 0; first < data.size(); first += chunk) {
        const int last = static_cast<int>(std::min(data.size(), first + chunk));
        Tensor batch = pack_batch(data, idx, static_cast<int>(first), last);
        std::vector<int> pred = model.predict_batch(batch);
        for (int b = 0; b < last - static_cast<int>(first); ++b)
            if (pred[b] == data[first + b].label) ++correct;
    }
    return static_cast<double>(correct) / data.size();
}

TrainResult train(Classifier model, const std::vector<LabeledImage>& data, const TrainConfig& config) {
    if (data.empty()) throw std::invalid_argument("train: empty dataset");
    const int K = model.num_classes();
    for (const auto& img : data)
        if (img.label < 0 || img.label >= K)
            throw std::invalid_argument("train: label " + std::to_string(img.label) + " out of range [0," +
                                        std::to_string(K) + ")");
    if (config.batch_size <= 0) throw std::invalid_argument("train: batch_size must be positive");

    // momentum buffers per parameter tensor
    std::vector<LayerParams> velocity(model.layers().size());
    for (size_t i = 0; i < model.layers().size(); ++i) {
        if (!model.params()[i].weight.data.empty()) {
            velocity[i].weight = Tensor(model.params()[i].weight.shape);
            velocity[i].bias = Tensor(model.params()[i].bias.shape);
        }
    }

    Rng rng(config.seed);
    std::vector<int> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        // Fisher-Yates with the pinned Rng
        for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
            std::swap(order[i], order[rng.uniform_int(i + 1)]);

        double epoch_loss = 0.0;
        int batches = 0;
        for (int first = 0; first < static_cast<int>(data.size()); first += config.batch_size) {
            const int last = std::min<int>(data.size(), first + config.batch_size);
            const int B = last - first;
            Tensor batch = pack_batch(data, order, first, last);
            std::vector<int> labels(B);
            for (int b = 0; b < B; ++b) labels[b] = data[order[first + b]].label;

            ForwardTape tape = model.forward_tape(batch);
            const double loss = cross_entropy_loss(tape.acts.back(), labels);
            if (!std::isfinite(loss))
                throw std::runtime_error("train: loss diverged (non-finite) at epoch " +
                                         std::to_string(epoch) + ", batch " + std::to_string(batches));
            epoch_loss += loss;
            ++batches;

            std::vector<LayerParams> grads = model.backward_params(tape, cross_entropy_grad(tape.acts.back(), labels));
            auto update = [&](Tensor& param, Tensor& vel, const Tensor& grad) {
                for (size_t j = 0; j < param.data.size(); ++j) {
                    vel.data[j] = static_cast<float>(config.momentum * vel.data[j] -
                                                     config.learning_rate * grad.data[j]);
                    param.data[j] += vel.data[j];
                }
            };
            for (size_t i = 0; i < model.layers().size(); ++i) {
                if (model.params()[i].weight.data.empty()) continue;
                update(model.params()[i].weight, velocity[i].weight, grads[i].weight);
                update(model.params()[i].bias, velocity[i].bias, grads[i].bias);
            }
        }
        result.epoch_loss.push_back(epoch_loss / std::max(1, batches));
        if (config.verbose)
            std::fprintf(stderr, "epoch %d  loss %.4f\n", epoch, result.epoch_loss.back());
    }
    result.final_train_accuracy = accuracy(model, data);
    result.model = std::move(model);
    return result;
}

}  // namespace advdet

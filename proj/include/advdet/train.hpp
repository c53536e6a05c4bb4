#pragma once

#include <cstdint>
#include <vector>

#include "advdet/data.hpp"
#include "advdet/net.hpp"

namespace advdet {

struct TrainConfig {
    int epochs = 12;
    double learning_rate = 0.05;
    double momentum = 0.9;
    int batch_size = 32;
    uint64_t seed = 1;
    bool verbose = false;
};

struct TrainResult {
    Classifier model;
    double final_train_accuracy = 0.0;
    std::vector<double> epoch_loss;
};

// Mini-batch SGD with momentum. Deterministic for a fixed seed (shuffles
// and updates run single-threaded in a pinned order). Aborts with a
// diagnostic if the loss stops being finite.
TrainResult train(Classifier model, const std::vector<LabeledImage>& data, const TrainConfig& config);

// Fraction of images whose predicted class matches the label.
double accuracy(const Classifier& model, const std::vector<LabeledImage>& data);

// Packs images [first, last) into a (B,C,H,W) batch tensor.
Tensor pack_batch(const std::vector<LabeledImage>& data, const std::vector<int>& indices, int first,
                  int last);

}  // namespace advdet

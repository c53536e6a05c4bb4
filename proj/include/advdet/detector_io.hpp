#pragma once

#include <string>

#include "advdet/metrics.hpp"

namespace advdet {

// Detector file layout mirrors the model file: a single JSON header line
// (kind, dimension, hyperparameters, standardization vectors, format
// version) followed by raw little-endian float32 support vectors and dual
// coefficients. Stumps carry an empty float block.
void save_detector(const std::string& path, const DetectorModel& model);
DetectorModel load_detector(const std::string& path);

}  // namespace advdet

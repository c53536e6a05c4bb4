#pragma once

#include <string>

#include "advdet/net.hpp"

namespace advdet {

// Model file layout: one line of JSON (format version, input shape, K,
// seed, layer list, parameter count) terminated by '\n', followed by the
// parameters as raw little-endian float32 in declaration order (per layer:
// weight, then bias).
void save_classifier(const std::string& path, const Classifier& model);
Classifier load_classifier(const std::string& path);

}  // namespace advdet

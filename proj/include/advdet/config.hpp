#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "advdet/attacks.hpp"

namespace advdet {

enum class ScoreSpace { Logits, Softmax };

const char* score_space_name(ScoreSpace s);
ScoreSpace score_space_from_name(const std::string& name);

struct DatasetSpec {
    std::string kind = "synthetic";  // synthetic | idx
    std::string dir;                 // idx: source directory; synthetic: optional materialization dir
    int train_count = 6000;
    int test_count = 2500;
    int image_size = 16;
    uint64_t seed = 11;
};

struct VictimSpec {
    int conv1_channels = 8;
    int conv2_channels = 16;
    int hidden = 48;
    int epochs = 12;
    double learning_rate = 0.05;
    double momentum = 0.9;
    int batch_size = 32;
    uint64_t seed = 1;
};

struct SplitSpec {
    int detector_train = 4000;
    int detector_test = 1000;
    int calibration = 500;
};

// One attack block from the config file. A missing epsilon for fgsm/bim
// means "calibrate at run time" (50% / 95% success targets).
struct AttackBlock {
    AttackConfig config;
    bool calibrate = false;
};

struct ExperimentConfig {
    std::string id;
    std::string model_path;
    DatasetSpec dataset;
    VictimSpec victim;
    std::vector<AttackBlock> attacks;  // 1 = single, 2 = combined
    std::string detector = "both";     // svm | stump | both
    ScoreSpace score_space = ScoreSpace::Logits;
    SplitSpec split;
    int folds = 5;
    uint64_t seed = 7;

    // standalone-verb inputs
    std::string scores_train_path;
    std::string scores_test_path;
    std::string detector_path;
    std::vector<std::string> attack_dirs;
    int attack_pool = 500;
};

// Parses and normalizes a JSON config for the given CLI verb, filling
// documented defaults (BIM: 100 steps, relative step 0.2; boundary: 25000
// steps; CW: 1000 steps, lr 5e-3, c0 1e-2, 9 search rounds). On schema
// violations every problem is reported, not just the first.
ExperimentConfig validate_config(const std::string& path, const std::string& verb);

// Same, from an in-memory JSON string (path used in diagnostics only).
ExperimentConfig validate_config_text(const std::string& text, const std::string& verb,
                                      const std::string& path = "<config>");

// Normalized round-trip used for manifests.
std::string config_to_json(const ExperimentConfig& config);

}  // namespace advdet

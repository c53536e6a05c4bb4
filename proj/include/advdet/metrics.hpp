#pragma once

#include <variant>
#include <vector>

#include "advdet/stump.hpp"
#include "advdet/svm.hpp"

namespace advdet {

using DetectorModel = std::variant<SvmModel, StumpModel>;

const char* detector_name(const DetectorModel& model);

// Applies the detector to one K-vector of class scores: the SVM path
// standardizes with the stored training statistics, the stump path reduces
// the scores to the top-2 gap first.
int predict_detector(const DetectorModel& model, const std::vector<float>& scores);

struct Metrics {
    double accuracy = 0.0;
    double f1 = 0.0;  // adversarial class (-1) is the positive class
    // confusion counts with "positive" = adversarial
    int true_positive = 0;
    int false_positive = 0;
    int false_negative = 0;
    int true_negative = 0;

    int total() const { return true_positive + false_positive + false_negative + true_negative; }
};

Metrics evaluate_detector(const DetectorModel& model, const std::vector<ScoreRecord>& test);

// Metric arithmetic on raw confusion counts; F1 is 0 when precision and
// recall are both undefined or zero.
Metrics metrics_from_counts(int tp, int fp, int fn, int tn);

}  // namespace advdet

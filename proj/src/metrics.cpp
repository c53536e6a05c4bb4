#include "advdet/metrics.hpp"

#include <stdexcept>

namespace advdet {

const char* detector_name(const DetectorModel& model) {
    return std::holds_alternative<SvmModel>(model) ? "svm-rbf" : "stump";
}

int predict_detector(const DetectorModel& model, const std::vector<float>& scores) {
    if (const SvmModel* svm = std::get_if<SvmModel>(&model)) return svm->predict(scores);
    return std::get<StumpModel>(model).predict(top2_gap(scores));
}

Metrics metrics_from_counts(int tp, int fp, int fn, int tn) {
    Metrics m;
    m.true_positive = tp;
    m.false_positive = fp;
    m.false_negative = fn;
    m.true_negative = tn;
    const int total = m.total();
    m.accuracy = total > 0 ? static_cast<double>(tp + tn) / total : 0.0;
    const double denom = 2.0 * tp + fp + fn;  // equals precision+recall rescaled
    m.f1 = denom > 0.0 ? 2.0 * tp / denom : 0.0;
    return m;
}

Metrics evaluate_detector(const DetectorModel& model, const std::vector<ScoreRecord>& test) {
    if (test.empty()) throw std::invalid_argument("evaluate_detector: empty test set");
    int tp = 0, fp = 0, fn = 0, tn = 0;
    for (const ScoreRecord& r : test) {
        validate_record(r);
        const int pred = predict_detector(model, r.scores);
        if (r.label == -1)
            (pred == -1 ? tp : fn)++;
        else
            (pred == -1 ? fp : tn)++;
    }
    return metrics_from_counts(tp, fp, fn, tn);
}

}  // namespace advdet

#pragma once

#include <vector>

namespace advdet {

// Gap between the largest and second-largest class score; >= 0, and 0 when
// the maximum is duplicated. Requires at least two scores.
double top2_gap(const std::vector<float>& scores);

// One-feature threshold classifier: predicts `polarity` for feature >=
// threshold and -polarity below it.
struct StumpModel {
    double threshold = 0.0;
    int polarity = +1;  // label of the >= side

    int predict(double feature) const { return feature >= threshold ? polarity : -polarity; }
};

// Trains on (feature, +-1 label) pairs by scanning the midpoints of
// adjacent distinct sorted feature values and picking the split with
// minimal weighted Gini impurity; ties prefer the smaller threshold. With
// a single distinct feature value the stump degenerates to the majority
// class.
StumpModel train_stump(const std::vector<std::pair<double, int>>& samples);

// Weighted Gini impurity of splitting `samples` at `threshold` (>= side vs
// < side); exposed for the exhaustive-scan check.
double weighted_gini(const std::vector<std::pair<double, int>>& samples, double threshold);

}  // namespace advdet

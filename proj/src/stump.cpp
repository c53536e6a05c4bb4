#include "advdet/stump.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace advdet {

double top2_gap(const std::vector<float>& scores) {
    if (scores.size() < 2)
        throw std::invalid_argument("top2_gap: needs at least 2 class scores");
    double top = -std::numeric_limits<double>::infinity();
    double second = -std::numeric_limits<double>::infinity();
    for (float v : scores) {
        if (v > top) {
            second = top;
            top = v;
        } else if (v > second) {
            second = v;
        }
    }
    return top - second;
}

namespace {

double gini(int pos, int neg) {
    const int total = pos + neg;
    if (total == 0) return 0.0;
    const double p = static_cast<double>(pos) / total;
    const double q = static_cast<double>(neg) / total;
    return 1.0 - p * p - q * q;
}

}  // namespace

double weighted_gini(const std::vector<std::pair<double, int>>& samples, double threshold) {
    int above_pos = 0, above_neg = 0, below_pos = 0, below_neg = 0;
    for (const auto& [f, label] : samples) {
        if (f >= threshold)
            (label > 0 ? above_pos : above_neg)++;
        else
            (label > 0 ? below_pos : below_neg)++;
    }
    const int n = static_cast<int>(samples.size());
    const int above = above_pos + above_neg, below = below_pos + below_neg;
    return (static_cast<double>(above) / n) * gini(above_pos, above_neg) +
           (static_cast<double>(below) / n) * gini(below_pos, below_neg);
}

StumpModel train_stump(const std::vector<std::pair<double, int>>& samples) {
    if (samples.empty()) throw std::invalid_argument("train_stump: empty dataset");
    int pos = 0, neg = 0;
    for (const auto& [f, label] : samples) {
        if (label != +1 && label != -1)
            throw std::invalid_argument("train_stump: labels must be +1 or -1");
        (label > 0 ? pos : neg)++;
    }

    std::vector<std::pair<double, int>> sorted = samples;
    std::sort(sorted.begin(), sorted.end());

    // degenerate: one distinct value -> majority-class constant predictor
    if (sorted.front().first == sorted.back().first) {
        StumpModel stump;
        stump.threshold = sorted.front().first;
        stump.polarity = pos >= neg ? +1 : -1;  // everything sits on the >= side
        return stump;
    }
    if (pos == 0 || neg == 0) {
        StumpModel stump;
        stump.threshold = sorted.front().first;
        stump.polarity = pos > 0 ? +1 : -1;
        return stump;
    }

    // left-to-right sweep over midpoints of adjacent distinct values
    double best_gini = std::numeric_limits<double>::infinity();
    double best_threshold = 0.0;
    const int n = static_cast<int>(sorted.size());
    int below_pos = 0, below_neg = 0;
    for (int i = 0; i + 1 < n; ++i) {
        (sorted[i].second > 0 ? below_pos : below_neg)++;
        if (sorted[i].first == sorted[i + 1].first) continue;
        const double threshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
        const int above_pos = pos - below_pos, above_neg = neg - below_neg;
        const int above = above_pos + above_neg, below = below_pos + below_neg;
        const double wg = (static_cast<double>(above) / n) * gini(above_pos, above_neg) +
                          (static_cast<double>(below) / n) * gini(below_pos, below_neg);
        if (wg < best_gini) {  // strict: ties keep the smaller threshold
            best_gini = wg;
            best_threshold = threshold;
        }
    }

    StumpModel stump;
    stump.threshold = best_threshold;
    // polarity that maximizes training accuracy at the chosen split
    int above_pos = 0, above_neg = 0;
    for (const auto& [f, label] : sorted)
        if (f >= best_threshold) (label > 0 ? above_pos : above_neg)++;
    const int correct_plus = above_pos + (neg - above_neg);
    const int correct_minus = above_neg + (pos - above_pos);
    stump.polarity = correct_plus >= correct_minus ? +1 : -1;
    return stump;
}

}  // namespace advdet

#include "advdet/grid_search.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "advdet/parallel.hpp"
#include "advdet/util.hpp"

namespace advdet {

namespace {

bool record_less(const ScoreRecord& a, const ScoreRecord& b) {
    if (a.label != b.label) return a.label < b.label;
    if (a.scores != b.scores)
        return std::lexicographical_compare(a.scores.begin(), a.scores.end(), b.scores.begin(),
                                            b.scores.end());
    return static_cast<int>(a.provenance) < static_cast<int>(b.provenance);
}

struct Cell {
    int c_exp;
    int g_exp;
};

}  // namespace

void sort_records_canonical(std::vector<ScoreRecord>& records) {
    std::sort(records.begin(), records.end(), record_less);
}

std::vector<int> stratified_folds(const std::vector<ScoreRecord>& sorted, int folds, uint64_t seed) {
    std::vector<int> fold_of(sorted.size(), 0);
    for (int label : {-1, +1}) {
        std::vector<int> idx;
        for (size_t i = 0; i < sorted.size(); ++i)
            if (sorted[i].label == label) idx.push_back(static_cast<int>(i));
        if (static_cast<int>(idx.size()) < folds)
            throw std::invalid_argument("grid_search_svm: class " + std::to_string(label) +
                                        " has fewer samples (" + std::to_string(idx.size()) +
                                        ") than folds (" + std::to_string(folds) + ")");
        Rng rng(seed + (label > 0 ? 1 : 2));
        for (int i = static_cast<int>(idx.size()) - 1; i > 0; --i)
            std::swap(idx[i], idx[rng.uniform_int(i + 1)]);
        for (size_t i = 0; i < idx.size(); ++i) fold_of[idx[i]] = static_cast<int>(i % folds);
    }
    return fold_of;
}

double cv_cell_accuracy(const std::vector<ScoreRecord>& sorted, const std::vector<int>& fold_of,
                        int folds, double C, double gamma) {
    double acc_sum = 0.0;
    for (int f = 0; f < folds; ++f) {
        std::vector<ScoreRecord> train;
        std::vector<const ScoreRecord*> val;
        train.reserve(sorted.size());
        for (size_t i = 0; i < sorted.size(); ++i) {
            if (fold_of[i] == f)
                val.push_back(&sorted[i]);
            else
                train.push_back(sorted[i]);
        }
        SvmModel model = train_svm(train, C, gamma);
        int correct = 0;
        for (const ScoreRecord* r : val)
            if (model.predict(r->scores) == r->label) ++correct;
        acc_sum += static_cast<double>(correct) / val.size();
    }
    return acc_sum / folds;
}

GridSearchResult grid_search_svm(const std::vector<ScoreRecord>& data, int folds, int refine_rounds,
                                 uint64_t seed, int jobs) {
    if (folds < 2) throw std::invalid_argument("grid_search_svm: folds must be >= 2");
    if (static_cast<int>(data.size()) < folds)
        throw std::invalid_argument("grid_search_svm: fewer samples (" + std::to_string(data.size()) +
                                    ") than folds (" + std::to_string(folds) + ")");

    // canonical order => fold assignment is independent of input order
    std::vector<ScoreRecord> sorted = data;
    sort_records_canonical(sorted);
    const std::vector<int> fold_of = stratified_folds(sorted, folds, seed);

    std::vector<Cell> cells;
    for (int c = -5; c <= 15; c += 2)
        for (int g = -15; g <= 3; g += 2) cells.push_back({c, g});

    auto evaluate = [&](const std::vector<Cell>& batch) {
        std::vector<double> acc(batch.size());
        parallel_for(static_cast<int64_t>(batch.size()), jobs, [&](int64_t i) {
            acc[i] = cv_cell_accuracy(sorted, fold_of, folds, std::pow(2.0, batch[i].c_exp),
                                      std::pow(2.0, batch[i].g_exp));
        });
        return acc;
    };

    // best cell wins on accuracy; ties prefer smaller C, then smaller gamma
    Cell best{cells.front()};
    double best_acc = -1.0;
    auto consider = [&](const Cell& cell, double acc) {
        if (acc > best_acc ||
            (acc == best_acc && (cell.c_exp < best.c_exp ||
                                 (cell.c_exp == best.c_exp && cell.g_exp < best.g_exp)))) {
            best_acc = acc;
            best = cell;
        }
    };
    {
        std::vector<double> acc = evaluate(cells);
        for (size_t i = 0; i < cells.size(); ++i) consider(cells[i], acc[i]);
    }

    std::set<std::pair<int, int>> seen;
    for (const Cell& c : cells) seen.insert({c.c_exp, c.g_exp});
    for (int round = 0; round < refine_rounds; ++round) {
        std::vector<Cell> refine;
        for (int dc = -1; dc <= 1; ++dc)
            for (int dg = -1; dg <= 1; ++dg) {
                Cell cell{best.c_exp + dc, best.g_exp + dg};
                if (seen.insert({cell.c_exp, cell.g_exp}).second) refine.push_back(cell);
            }
        if (refine.empty()) break;
        std::vector<double> acc = evaluate(refine);
        for (size_t i = 0; i < refine.size(); ++i) consider(refine[i], acc[i]);
    }

    GridSearchResult result;
    result.C = std::pow(2.0, best.c_exp);
    result.gamma = std::pow(2.0, best.g_exp);
    result.cv_accuracy = best_acc;
    result.model = train_svm(sorted, result.C, result.gamma);
    return result;
}

}  // namespace advdet

#pragma once

#include <cstdint>
#include <vector>

#include "advdet/svm.hpp"

namespace advdet {

struct GridSearchResult {
    double C = 0.0;
    double gamma = 0.0;
    double cv_accuracy = 0.0;  // mean stratified-CV accuracy of the winner
    SvmModel model;            // retrained on all data with the winning cell
};

// Coarse-to-fine hyperparameter search: a log2 grid C in 2^-5..2^15,
// gamma in 2^-15..2^3 at powers-of-4 spacing scored by stratified
// cross-validation, then one refinement around the best cell at powers-of-2
// spacing. Ties prefer smaller C, then smaller gamma. Records are sorted
// canonically before folding, so the selection does not depend on input
// order; folds are dealt from a fixed seed.
GridSearchResult grid_search_svm(const std::vector<ScoreRecord>& data, int folds = 5,
                                 int refine_rounds = 1, uint64_t seed = 20210501, int jobs = 1);

// Pieces of the search, exposed so tests can replay the selection:
// canonical record ordering, the seeded stratified fold assignment over
// already-sorted records, and the mean CV accuracy of one (C, gamma) cell.
void sort_records_canonical(std::vector<ScoreRecord>& records);
std::vector<int> stratified_folds(const std::vector<ScoreRecord>& sorted, int folds, uint64_t seed);
double cv_cell_accuracy(const std::vector<ScoreRecord>& sorted, const std::vector<int>& fold_of,
                        int folds, double C, double gamma);

}  // namespace advdet

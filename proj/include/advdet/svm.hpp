#pragma once

#include <cstdint>
#include <vector>

#include "advdet/scores.hpp"

namespace advdet {

// exp(-gamma * ||u - v||^2); symmetric, in (0, 1] for gamma >= 0.
double rbf_kernel(const std::vector<float>& u, const std::vector<float>& v, double gamma);

// Soft-margin RBF-kernel SVM in dual form. Features are standardized with
// the training mean/std (stored in the model, so inference is
// self-contained); support vectors are kept standardized.
struct SvmModel {
    std::vector<std::vector<float>> support_vectors;
    std::vector<double> dual_coefs;  // alpha_i * y_i
    double bias = 0.0;
    double gamma = 1.0;
    double C = 1.0;
    std::vector<float> feature_mean;
    std::vector<float> feature_std;  // strictly positive

    int dimension() const { return static_cast<int>(feature_mean.size()); }
    double decision_value(const std::vector<float>& scores) const;
    int predict(const std::vector<float>& scores) const;  // sign, 0 -> +1
};

// Trains by sequential minimal optimization with maximal-violating-pair
// working-set selection: repeatedly picks the (i, j) pair with the largest
// KKT violation and solves the two-variable subproblem analytically,
// until no pair violates the KKT conditions by more than tol (or
// max_passes pair updates run out). Rejects single-class data.
SvmModel train_svm(const std::vector<ScoreRecord>& data, double C, double gamma, double tol = 1e-3,
                   int max_passes = 200000);

// Diagnostics for the feasibility / KKT invariants of a trained model.
struct SmoDiagnostics {
    std::vector<double> alpha;       // in training order
    double alpha_dot_y = 0.0;        // sum alpha_i y_i
    double max_kkt_violation = 0.0;  // over all training points
};

SvmModel train_svm_diag(const std::vector<ScoreRecord>& data, double C, double gamma, double tol,
                        int max_passes, SmoDiagnostics* diag);

}  // namespace advdet

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "advdet/net.hpp"
#include "advdet/tensor.hpp"

namespace advdet {

enum class AttackKind { Fgsm, Bim, Cw, Boundary };

const char* attack_kind_name(AttackKind k);
AttackKind attack_kind_from_name(const std::string& name);

struct AttackConfig {
    AttackKind kind = AttackKind::Fgsm;
    // FGSM: per-pixel step; BIM: Euclidean budget of the whole perturbation.
    double epsilon = 0.1;
    int steps = 0;  // 0 = attack default (BIM 100, CW 1000, boundary 25000)
    double rel_stepsize = 0.2;
    bool random_start = true;
    double cw_learning_rate = 5e-3;
    double cw_initial_const = 1e-2;
    int cw_binary_search_steps = 9;
    double cw_confidence = 0.0;
    uint64_t seed = 0;

    int effective_steps() const;
    void validate() const;
};

struct AdversarialExample {
    Tensor original;       // in [0,1]
    Tensor perturbed;      // in [0,1]
    int true_label = 0;
    int predicted_label = 0;
    double perturbation_norm = 0.0;  // ||perturbed - original||_2, flattened
    AttackKind attack = AttackKind::Fgsm;
    bool success = false;  // predicted_label != true_label
};

// Single-step sign attack: clip(x + epsilon * sign(d loss / d x), 0, 1).
AdversarialExample fgsm(const Classifier& model, const Tensor& x, int y, double epsilon);

// Iterative Euclidean-budget attack: optional random start inside the
// epsilon-ball, then `steps` moves of rel_stepsize*epsilon along the
// normalized loss gradient, each followed by projection onto the ball and
// clipping to [0,1]. The final perturbation norm never exceeds
// epsilon + 1e-4.
AdversarialExample bim(const Classifier& model, const Tensor& x, int y, double epsilon, int steps = 100,
                       double rel_stepsize = 0.2, bool random_start = true, uint64_t seed = 0);

// Untargeted Carlini-Wagner L2. The image is re-parameterized through
// tanh so iterates stay inside the box, the margin term
// max(Z_y - max_{i != y} Z_i, -confidence) is weighted by a constant c
// found by binary search, and the lowest-norm misclassified iterate over
// all rounds is returned. success=false only if no c produced a
// misclassification.
AdversarialExample carlini_wagner(const Classifier& model, const Tensor& x, int y,
                                  const AttackConfig& config);

// Decision-based walk along the class boundary. Uses model.predict() only
// (never gradients): starts from a random misclassified image (up to 1000
// draws), proposes an orthogonal spherical move (scale sigma) followed by
// a contraction toward x (scale delta), keeps only misclassified states,
// and adapts sigma/delta toward ~50% orthogonal / ~25% total acceptance
// over 10-step windows. Returns the lowest-norm accepted state. on_accept,
// when set, observes every accepted state.
AdversarialExample boundary_attack(const Classifier& model, const Tensor& x, int y, int steps = 25000,
                                   uint64_t seed = 0,
                                   const std::function<void(const Tensor&)>& on_accept = nullptr);

// Applies config.kind to every image independently (per-image seed =
// config.seed + index), preserving order. Per-image failures become
// success=false entries; the batch itself never aborts.
std::vector<AdversarialExample> attack_batch(const Classifier& model,
                                             const std::vector<Tensor>& images,
                                             const std::vector<int>& labels,
                                             const AttackConfig& config, int jobs = 1);

struct CalibrationResult {
    double epsilon = 0.0;
    double success_rate = 0.0;  // measured at the returned epsilon
};

// Bisects the FGSM step size over [0,1] (<= 20 iterations) until the
// attack succeeds on target_rate of the calibration images; returns the
// closest achievable epsilon if the rate plateaus. The calibration set
// must be non-empty and is expected to contain correctly-classified
// images.
CalibrationResult calibrate_fgsm_epsilon(const Classifier& model, const std::vector<Tensor>& images,
                                         const std::vector<int>& labels, double target_rate = 0.5,
                                         int jobs = 1);

// Same bisection for the BIM Euclidean budget, searched over
// [0, image diameter].
CalibrationResult calibrate_bim_epsilon(const Classifier& model, const std::vector<Tensor>& images,
                                        const std::vector<int>& labels, double target_rate = 0.95,
                                        int steps = 100, double rel_stepsize = 0.2, uint64_t seed = 0,
                                        int jobs = 1);

}  // namespace advdet

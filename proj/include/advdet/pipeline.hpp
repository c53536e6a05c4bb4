#pragma once

#include <string>
#include <vector>

#include "advdet/attacks.hpp"
#include "advdet/config.hpp"
#include "advdet/data.hpp"
#include "advdet/grid_search.hpp"
#include "advdet/metrics.hpp"
#include "advdet/net.hpp"
#include "advdet/scores.hpp"

namespace advdet {

struct ReportRow {
    std::string model_id;
    std::string attack_id;
    std::string detector_id;
    double accuracy = 0.0;
    double f1 = 0.0;
    double attack_success_rate = 0.0;
    double mean_perturbation_norm = 0.0;
};

struct AttackSummary {
    double post_attack_accuracy = 0.0;  // fraction still correctly classified
    double success_rate = 0.0;          // predicted != true over all emitted examples
    double success_rate_originally_correct = 0.0;
    double mean_norm = 0.0;
    int count = 0;
};

// Table-1-style fragment: post-attack accuracy and mean Euclidean
// perturbation norm over all emitted examples. Predictions are recomputed
// from the model rather than trusted from the attack records.
AttackSummary attack_summary(const Classifier& model, const std::vector<AdversarialExample>& examples);

// K-vector of detector inputs for one image: raw logits or their softmax.
std::vector<float> score_vector(const float* logits, int k, ScoreSpace space);

// Assembles the detector dataset from clean images and their attacked
// counterparts. One attack: n clean + n adversarial records (1:1). Two
// attacks: n clean + n/2 per attack on disjoint image halves (2:1:1); an
// odd n drops the last image with a warning on stderr. Records are
// shuffled with `seed`. out_examples, when set, receives the emitted
// adversarial examples (attack A first, then attack B).
std::vector<ScoreRecord> build_score_dataset(const Classifier& model,
                                             const std::vector<Tensor>& images,
                                             const std::vector<int>& labels,
                                             const std::vector<AttackConfig>& attack_configs,
                                             ScoreSpace space, uint64_t seed, int jobs = 1,
                                             std::vector<AdversarialExample>* out_examples = nullptr);

// Disjoint image pools drawn from the victim's held-out split: a
// calibration pool of correctly-classified images, then detector train
// and test pools (which keep misclassified images).
struct Pools {
    std::vector<int> calibration;
    std::vector<int> detector_train;
    std::vector<int> detector_test;
    double clean_test_accuracy = 0.0;  // victim accuracy on the detector test pool
};

Pools make_pools(const Classifier& model, const std::vector<LabeledImage>& heldout,
                 const SplitSpec& split, uint64_t seed);

struct ExperimentOutcome {
    std::vector<ReportRow> rows;
    std::vector<ScoreRecord> scores_train;
    std::vector<ScoreRecord> scores_test;
    std::string manifest_json;
};

// The end-to-end protocol for one experiment: calibrate where required,
// attack the train/test pools, assemble score datasets, train the SVM (via
// grid search) and the top-2-gap stump, evaluate both, and produce report
// rows. cfg.attacks decides single (1) vs combined (2) mode.
ExperimentOutcome run_experiment(const Classifier& model, const std::vector<LabeledImage>& heldout,
                                 const ExperimentConfig& cfg, int jobs = 1);

ExperimentOutcome run_single_attack_experiment(const Classifier& model,
                                               const std::vector<LabeledImage>& heldout,
                                               const ExperimentConfig& cfg, int jobs = 1);

ExperimentOutcome run_combined_attack_experiment(const Classifier& model,
                                                 const std::vector<LabeledImage>& heldout,
                                                 const ExperimentConfig& cfg, int jobs = 1);

std::string report_csv(const std::vector<ReportRow>& rows);
std::string report_markdown(const std::vector<ReportRow>& rows);
std::vector<ReportRow> report_rows_from_csv(const std::string& csv);

// Writes report.csv / report.md (per format: csv|md|both) under dir.
void emit_report(const std::vector<ReportRow>& rows, const std::string& format,
                 const std::string& dir);

// Loads (or, for synthetic specs, generates) the train/test dataset pair.
// Synthetic datasets with a dir are materialized there as IDX files and
// re-read, so the documented binary ingestion path is always exercised.
struct DatasetPair {
    std::vector<LabeledImage> train;
    std::vector<LabeledImage> test;
};

DatasetPair load_dataset(const DatasetSpec& spec);

// Victim classifier for a dataset of S x S grayscale images:
// conv-relu-pool x2, then two dense layers.
Classifier make_victim_classifier(const VictimSpec& spec, int image_size, int num_classes);

}  // namespace advdet

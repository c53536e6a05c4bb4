#include "advdet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <stdexcept>

#include "advdet/fsutil.hpp"
#include "advdet/train.hpp"
#include "advdet/util.hpp"
#include "json.hpp"

namespace advdet {

namespace {

using json = nlohmann::ordered_json;

// fixed offsets separating the seed streams of one experiment
constexpr uint64_t kSeedCalibration = 100000000ull;
constexpr uint64_t kSeedAttackTrainA = 101000000ull;
constexpr uint64_t kSeedAttackTestA = 102000000ull;
constexpr uint64_t kSeedAttackTrainB = 103000000ull;
constexpr uint64_t kSeedAttackTestB = 104000000ull;
constexpr uint64_t kSeedShuffleTrain = 11ull;
constexpr uint64_t kSeedShuffleTest = 12ull;
constexpr uint64_t kSeedFolds = 31ull;

Tensor pack_images(const std::vector<Tensor>& images, size_t first, size_t last) {
    const auto& shape = images[first].shape;
    Tensor batch({static_cast<int>(last - first), shape[0], shape[1], shape[2]});
    const size_t stride = images[first].data.size();
    for (size_t i = first; i < last; ++i)
        std::copy(images[i].data.begin(), images[i].data.end(),
                  batch.data.begin() + (i - first) * stride);
    return batch;
}

std::vector<int> predict_images(const Classifier& model, const std::vector<Tensor>& images) {
    std::vector<int> preds;
    preds.reserve(images.size());
    const size_t chunk = 256;
    for (size_t first = 0; first < images.size(); first += chunk) {
        const size_t last = std::min(images.size(), first + chunk);
        std::vector<int> p = model.predict_batch(pack_images(images, first, last));
        preds.insert(preds.end(), p.begin(), p.end());
    }
    return preds;
}

}  // namespace

std::vector<float> score_vector(const float* logits, int k, ScoreSpace space) {
    std::vector<float> out(k);
    if (space == ScoreSpace::Logits) {
        std::copy(logits, logits + k, out.begin());
    } else {
        std::vector<double> p = softmax(logits, k);
        for (int i = 0; i < k; ++i) out[i] = static_cast<float>(p[i]);
    }
    return out;
}

AttackSummary attack_summary(const Classifier& model, const std::vector<AdversarialExample>& examples) {
    if (examples.empty()) throw std::invalid_argument("attack_summary: no examples");
    std::vector<Tensor> perturbed, originals;
    perturbed.reserve(examples.size());
    originals.reserve(examples.size());
    for (const auto& ex : examples) {
        perturbed.push_back(ex.perturbed);
        originals.push_back(ex.original);
    }
    const std::vector<int> pred_adv = predict_images(model, perturbed);
    const std::vector<int> pred_clean = predict_images(model, originals);

    AttackSummary s;
    s.count = static_cast<int>(examples.size());
    int correct = 0, fooled = 0, orig_correct = 0, fooled_among_correct = 0;
    double norm_sum = 0.0;
    for (size_t i = 0; i < examples.size(); ++i) {
        const int truth = examples[i].true_label;
        if (pred_adv[i] == truth) ++correct;
        if (pred_adv[i] != truth) ++fooled;
        if (pred_clean[i] == truth) {
            ++orig_correct;
            if (pred_adv[i] != truth) ++fooled_among_correct;
        }
        norm_sum += examples[i].perturbation_norm;
    }
    s.post_attack_accuracy = static_cast<double>(correct) / s.count;
    s.success_rate = static_cast<double>(fooled) / s.count;
    s.success_rate_originally_correct =
        orig_correct > 0 ? static_cast<double>(fooled_among_correct) / orig_correct : 0.0;
    s.mean_norm = norm_sum / s.count;
    return s;
}

namespace {

Provenance provenance_of(AttackKind kind) {
    switch (kind) {
        case AttackKind::Fgsm: return Provenance::Fgsm;
        case AttackKind::Bim: return Provenance::Bim;
        case AttackKind::Cw: return Provenance::Cw;
        case AttackKind::Boundary: return Provenance::Boundary;
    }
    return Provenance::Fgsm;
}

void append_score_records(const Classifier& model, const std::vector<Tensor>& images,
                          ScoreSpace space, int label, Provenance prov,
                          std::vector<ScoreRecord>& out) {
    const int K = model.num_classes();
    const size_t chunk = 256;
    for (size_t first = 0; first < images.size(); first += chunk) {
        const size_t last = std::min(images.size(), first + chunk);
        Tensor scores = model.forward(pack_images(images, first, last));
        for (size_t b = 0; b < last - first; ++b) {
            ScoreRecord r;
            r.scores = score_vector(scores.data.data() + b * K, K, space);
            r.label = label;
            r.provenance = prov;
            out.push_back(std::move(r));
        }
    }
}

}  // namespace

std::vector<ScoreRecord> build_score_dataset(const Classifier& model, const std::vector<Tensor>& images,
                                             const std::vector<int>& labels,
                                             const std::vector<AttackConfig>& attack_configs,
                                             ScoreSpace space, uint64_t seed, int jobs,
                                             std::vector<AdversarialExample>* out_examples) {
    if (images.size() != labels.size())
        throw std::invalid_argument("build_score_dataset: image/label count mismatch");
    if (attack_configs.empty() || attack_configs.size() > 2)
        throw std::invalid_argument("build_score_dataset: expected 1 or 2 attack configs, got " +
                                    std::to_string(attack_configs.size()));
    if (images.empty()) throw std::invalid_argument("build_score_dataset: no images");

    size_t n = images.size();
    if (attack_configs.size() == 2 && n % 2 != 0) {
        std::fprintf(stderr, "build_score_dataset: odd image count %zu in combined mode, dropping the "
                             "last image\n",
                     n);
        --n;
        if (n == 0) throw std::invalid_argument("build_score_dataset: no images left after drop");
    }
    const std::vector<Tensor> clean(images.begin(), images.begin() + n);
    const std::vector<int> truth(labels.begin(), labels.begin() + n);

    std::vector<ScoreRecord> records;
    records.reserve(2 * n);
    append_score_records(model, clean, space, +1, Provenance::Original, records);

    std::vector<AdversarialExample> examples;
    if (attack_configs.size() == 1) {
        examples = attack_batch(model, clean, truth, attack_configs[0], jobs);
    } else {
        const size_t half = n / 2;
        std::vector<AdversarialExample> a =
            attack_batch(model, {clean.begin(), clean.begin() + half},
                         {truth.begin(), truth.begin() + half}, attack_configs[0], jobs);
        std::vector<AdversarialExample> b =
            attack_batch(model, {clean.begin() + half, clean.end()},
                         {truth.begin() + half, truth.end()}, attack_configs[1], jobs);
        examples = std::move(a);
        examples.insert(examples.end(), std::make_move_iterator(b.begin()),
                        std::make_move_iterator(b.end()));
    }

    std::vector<Tensor> perturbed;
    perturbed.reserve(examples.size());
    for (const auto& ex : examples) perturbed.push_back(ex.perturbed);
    if (attack_configs.size() == 1) {
        append_score_records(model, perturbed, space, -1, provenance_of(attack_configs[0].kind),
                             records);
    } else {
        const size_t half = n / 2;
        append_score_records(model, {perturbed.begin(), perturbed.begin() + half}, space, -1,
                             provenance_of(attack_configs[0].kind), records);
        append_score_records(model, {perturbed.begin() + half, perturbed.end()}, space, -1,
                             provenance_of(attack_configs[1].kind), records);
    }

    if (out_examples) *out_examples = std::move(examples);

    Rng rng(seed);
    for (int i = static_cast<int>(records.size()) - 1; i > 0; --i)
        std::swap(records[i], records[rng.uniform_int(i + 1)]);
    return records;
}

Pools make_pools(const Classifier& model, const std::vector<LabeledImage>& heldout,
                 const SplitSpec& split, uint64_t seed) {
    if (heldout.empty()) throw std::invalid_argument("make_pools: empty held-out set");
    std::vector<Tensor> images;
    images.reserve(heldout.size());
    for (const auto& img : heldout) images.push_back(img.pixels);
    const std::vector<int> preds = predict_images(model, images);

    std::vector<int> order(heldout.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
        std::swap(order[i], order[rng.uniform_int(i + 1)]);

    Pools pools;
    std::vector<int> remainder;
    for (int idx : order) {
        if (static_cast<int>(pools.calibration.size()) < split.calibration &&
            preds[idx] == heldout[idx].label)
            pools.calibration.push_back(idx);
        else
            remainder.push_back(idx);
    }
    if (static_cast<int>(pools.calibration.size()) < split.calibration)
        throw std::runtime_error("make_pools: only " + std::to_string(pools.calibration.size()) +
                                 " correctly-classified images available for a calibration pool of " +
                                 std::to_string(split.calibration));
    if (static_cast<int>(remainder.size()) < split.detector_train + split.detector_test)
        throw std::runtime_error("make_pools: held-out set too small: need " +
                                 std::to_string(split.detector_train + split.detector_test) +
                                 " detector images, have " + std::to_string(remainder.size()));
    pools.detector_train.assign(remainder.begin(), remainder.begin() + split.detector_train);
    pools.detector_test.assign(remainder.begin() + split.detector_train,
                               remainder.begin() + split.detector_train + split.detector_test);
    int correct = 0;
    for (int idx : pools.detector_test)
        if (preds[idx] == heldout[idx].label) ++correct;
    pools.clean_test_accuracy =
        pools.detector_test.empty() ? 0.0
                                    : static_cast<double>(correct) / pools.detector_test.size();
    return pools;
}

namespace {

void gather_pool(const std::vector<LabeledImage>& heldout, const std::vector<int>& pool,
                 std::vector<Tensor>& images, std::vector<int>& labels) {
    images.clear();
    labels.clear();
    images.reserve(pool.size());
    labels.reserve(pool.size());
    for (int idx : pool) {
        images.push_back(heldout[idx].pixels);
        labels.push_back(heldout[idx].label);
    }
}

std::string attack_list_id(const ExperimentConfig& cfg) {
    std::string id = attack_kind_name(cfg.attacks[0].config.kind);
    for (size_t i = 1; i < cfg.attacks.size(); ++i) {
        id += "+";
        id += attack_kind_name(cfg.attacks[i].config.kind);
    }
    return id;
}

std::string model_id_of(const ExperimentConfig& cfg, const Classifier& model) {
    if (!cfg.model_path.empty()) {
        std::filesystem::path p(cfg.model_path);
        return p.stem().string();
    }
    return "cnn-seed" + std::to_string(model.seed());
}

std::string fmt4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

ExperimentOutcome run_experiment(const Classifier& model, const std::vector<LabeledImage>& heldout,
                                 const ExperimentConfig& cfg, int jobs) {
    if (cfg.attacks.empty() || cfg.attacks.size() > 2)
        throw std::invalid_argument("run_experiment: config must declare 1 or 2 attacks");
    const Pools pools = make_pools(model, heldout, cfg.split, cfg.seed);

    std::vector<Tensor> calib_images, train_images, test_images;
    std::vector<int> calib_labels, train_labels, test_labels;
    gather_pool(heldout, pools.calibration, calib_images, calib_labels);
    gather_pool(heldout, pools.detector_train, train_images, train_labels);
    gather_pool(heldout, pools.detector_test, test_images, test_labels);

    // resolve budgets: calibrate fgsm to ~50% and bim to ~95% success on
    // the dedicated pool
    json calibration_log = json::array();
    std::vector<AttackConfig> resolved;
    for (const AttackBlock& block : cfg.attacks) {
        AttackConfig a = block.config;
        if (block.calibrate) {
            if (calib_images.empty())
                throw std::runtime_error("run_experiment: attack '" +
                                         std::string(attack_kind_name(a.kind)) +
                                         "' needs calibration but the calibration pool is empty");
            CalibrationResult cal;
            if (a.kind == AttackKind::Fgsm) {
                cal = calibrate_fgsm_epsilon(model, calib_images, calib_labels, 0.5, jobs);
            } else {
                cal = calibrate_bim_epsilon(model, calib_images, calib_labels, 0.95,
                                            a.effective_steps(), a.rel_stepsize,
                                            cfg.seed + kSeedCalibration, jobs);
            }
            a.epsilon = cal.epsilon;
            json entry;
            entry["attack"] = attack_kind_name(a.kind);
            entry["epsilon"] = cal.epsilon;
            entry["measured_success_rate"] = cal.success_rate;
            calibration_log.push_back(std::move(entry));
        }
        resolved.push_back(a);
    }

    // distinct seed streams per pool and attack slot
    std::vector<AttackConfig> train_configs = resolved, test_configs = resolved;
    train_configs[0].seed = cfg.seed + kSeedAttackTrainA;
    test_configs[0].seed = cfg.seed + kSeedAttackTestA;
    if (resolved.size() == 2) {
        train_configs[1].seed = cfg.seed + kSeedAttackTrainB;
        test_configs[1].seed = cfg.seed + kSeedAttackTestB;
    }

    std::vector<AdversarialExample> train_examples, test_examples;
    ExperimentOutcome outcome;
    outcome.scores_train =
        build_score_dataset(model, train_images, train_labels, train_configs, cfg.score_space,
                            cfg.seed + kSeedShuffleTrain, jobs, &train_examples);
    outcome.scores_test =
        build_score_dataset(model, test_images, test_labels, test_configs, cfg.score_space,
                            cfg.seed + kSeedShuffleTest, jobs, &test_examples);

    std::vector<AdversarialExample> all_examples = train_examples;
    all_examples.insert(all_examples.end(), test_examples.begin(), test_examples.end());
    const AttackSummary overall = attack_summary(model, all_examples);
    if (overall.success_rate == 0.0)
        std::fprintf(stderr, "run_experiment: attack produced zero successful examples; records are "
                             "still labeled -1\n");

    // per-attack summaries for the manifest (combined mode only has
    // meaning per half)
    json attack_log = json::array();
    {
        auto log_one = [&](const AttackConfig& a, const std::vector<AdversarialExample>& examples) {
            const AttackSummary s = attack_summary(model, examples);
            json entry;
            entry["kind"] = attack_kind_name(a.kind);
            if (a.kind == AttackKind::Fgsm || a.kind == AttackKind::Bim) entry["epsilon"] = a.epsilon;
            entry["steps"] = a.effective_steps();
            entry["count"] = s.count;
            entry["success_rate"] = s.success_rate;
            entry["success_rate_originally_correct"] = s.success_rate_originally_correct;
            entry["post_attack_accuracy"] = s.post_attack_accuracy;
            entry["mean_perturbation_norm"] = s.mean_norm;
            attack_log.push_back(std::move(entry));
        };
        if (resolved.size() == 1) {
            log_one(resolved[0], all_examples);
        } else {
            // halves: [train A][train B] and [test A][test B]
            std::vector<AdversarialExample> a_examples(
                train_examples.begin(), train_examples.begin() + train_examples.size() / 2);
            a_examples.insert(a_examples.end(), test_examples.begin(),
                              test_examples.begin() + test_examples.size() / 2);
            std::vector<AdversarialExample> b_examples(
                train_examples.begin() + train_examples.size() / 2, train_examples.end());
            b_examples.insert(b_examples.end(), test_examples.begin() + test_examples.size() / 2,
                              test_examples.end());
            log_one(resolved[0], a_examples);
            log_one(resolved[1], b_examples);
        }
    }

    const std::string model_id = model_id_of(cfg, model);
    const std::string attack_id = attack_list_id(cfg);

    json detector_log;
    if (cfg.detector == "svm" || cfg.detector == "both") {
        GridSearchResult grid =
            grid_search_svm(outcome.scores_train, cfg.folds, 1, cfg.seed + kSeedFolds, jobs);
        const Metrics m = evaluate_detector(grid.model, outcome.scores_test);
        outcome.rows.push_back(ReportRow{model_id, attack_id, "svm-rbf", m.accuracy, m.f1,
                                         overall.success_rate, overall.mean_norm});
        json d;
        d["C"] = grid.C;
        d["gamma"] = grid.gamma;
        d["cv_accuracy"] = grid.cv_accuracy;
        d["num_support_vectors"] = grid.model.support_vectors.size();
        detector_log["svm-rbf"] = std::move(d);
    }
    if (cfg.detector == "stump" || cfg.detector == "both") {
        std::vector<std::pair<double, int>> features;
        features.reserve(outcome.scores_train.size());
        for (const ScoreRecord& r : outcome.scores_train)
            features.emplace_back(top2_gap(r.scores), r.label);
        const StumpModel stump = train_stump(features);
        const Metrics m = evaluate_detector(stump, outcome.scores_test);
        outcome.rows.push_back(ReportRow{model_id, attack_id, "stump", m.accuracy, m.f1,
                                         overall.success_rate, overall.mean_norm});
        json d;
        d["threshold"] = stump.threshold;
        d["polarity"] = stump.polarity;
        detector_log["stump"] = std::move(d);
    }

    json manifest;
    manifest["experiment"] = cfg.id;
    manifest["model"] = model_id;
    manifest["attack"] = attack_id;
    manifest["config"] = json::parse(config_to_json(cfg));
    manifest["pools"] = {{"calibration", pools.calibration.size()},
                         {"detector_train", pools.detector_train.size()},
                         {"detector_test", pools.detector_test.size()},
                         {"clean_test_accuracy", pools.clean_test_accuracy}};
    manifest["calibration"] = std::move(calibration_log);
    manifest["attacks"] = std::move(attack_log);
    manifest["detectors"] = std::move(detector_log);
    json rows = json::array();
    for (const ReportRow& r : outcome.rows) {
        json row;
        row["model"] = r.model_id;
        row["attack"] = r.attack_id;
        row["detector"] = r.detector_id;
        row["accuracy"] = r.accuracy;
        row["f1"] = r.f1;
        row["attack_success_rate"] = r.attack_success_rate;
        row["mean_perturbation_norm"] = r.mean_perturbation_norm;
        rows.push_back(std::move(row));
    }
    manifest["results"] = std::move(rows);
    outcome.manifest_json = manifest.dump(2);
    outcome.manifest_json.push_back('\n');
    return outcome;
}

ExperimentOutcome run_single_attack_experiment(const Classifier& model,
                                               const std::vector<LabeledImage>& heldout,
                                               const ExperimentConfig& cfg, int jobs) {
    if (cfg.attacks.size() != 1)
        throw std::invalid_argument("run_single_attack_experiment: expected exactly 1 attack");
    return run_experiment(model, heldout, cfg, jobs);
}

ExperimentOutcome run_combined_attack_experiment(const Classifier& model,
                                                 const std::vector<LabeledImage>& heldout,
                                                 const ExperimentConfig& cfg, int jobs) {
    if (cfg.attacks.size() != 2)
        throw std::invalid_argument("run_combined_attack_experiment: expected exactly 2 attacks");
    return run_experiment(model, heldout, cfg, jobs);
}

std::string report_csv(const std::vector<ReportRow>& rows) {
    if (rows.empty()) throw std::invalid_argument("report_csv: no rows");
    std::string out = "model,attack,detector,accuracy,f1,attack_success_rate,mean_perturbation_norm\n";
    for (const ReportRow& r : rows) {
        out += r.model_id + "," + r.attack_id + "," + r.detector_id + "," + fmt4(r.accuracy) + "," +
               fmt4(r.f1) + "," + fmt4(r.attack_success_rate) + "," + fmt6(r.mean_perturbation_norm) +
               "\n";
    }
    return out;
}

std::string report_markdown(const std::vector<ReportRow>& rows) {
    if (rows.empty()) throw std::invalid_argument("report_markdown: no rows");
    std::string out = "# Detection report\n\n";
    out += "| Model | Attack | Detector | Accuracy | F1 | Attack success rate | Mean perturbation "
           "norm |\n";
    out += "|---|---|---|---|---|---|---|\n";
    for (const ReportRow& r : rows) {
        out += "| " + r.model_id + " | " + r.attack_id + " | " + r.detector_id + " | " +
               fmt4(r.accuracy) + " | " + fmt4(r.f1) + " | " + fmt4(r.attack_success_rate) + " | " +
               fmt6(r.mean_perturbation_norm) + " |\n";
    }
    return out;
}

std::vector<ReportRow> report_rows_from_csv(const std::string& csv) {
    std::vector<ReportRow> rows;
    size_t pos = 0;
    bool header = true;
    while (pos < csv.size()) {
        size_t end = csv.find('\n', pos);
        if (end == std::string::npos) end = csv.size();
        const std::string line = csv.substr(pos, end - pos);
        pos = end + 1;
        if (line.empty()) continue;
        if (header) {
            if (line != "model,attack,detector,accuracy,f1,attack_success_rate,mean_perturbation_norm")
                throw std::runtime_error("report CSV: unexpected header '" + line + "'");
            header = false;
            continue;
        }
        std::vector<std::string> fields;
        size_t start = 0;
        for (size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                fields.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        if (fields.size() != 7) throw std::runtime_error("report CSV: malformed row '" + line + "'");
        ReportRow r;
        r.model_id = fields[0];
        r.attack_id = fields[1];
        r.detector_id = fields[2];
        r.accuracy = std::atof(fields[3].c_str());
        r.f1 = std::atof(fields[4].c_str());
        r.attack_success_rate = std::atof(fields[5].c_str());
        r.mean_perturbation_norm = std::atof(fields[6].c_str());
        rows.push_back(std::move(r));
    }
    return rows;
}

void emit_report(const std::vector<ReportRow>& rows, const std::string& format,
                 const std::string& dir) {
    if (format != "csv" && format != "md" && format != "both")
        throw std::invalid_argument("emit_report: format must be csv|md|both");
    ensure_dir(dir);
    if (format == "csv" || format == "both")
        write_file_atomic(dir + "/report.csv", report_csv(rows));
    if (format == "md" || format == "both")
        write_file_atomic(dir + "/report.md", report_markdown(rows));
}

DatasetPair load_dataset(const DatasetSpec& spec) {
    namespace fs = std::filesystem;
    DatasetPair pair;
    if (spec.kind == "idx") {
        const fs::path dir(spec.dir);
        pair.train = read_idx_dataset((dir / "train-images-idx3-ubyte").string(),
                                      (dir / "train-labels-idx1-ubyte").string());
        pair.test = read_idx_dataset((dir / "t10k-images-idx3-ubyte").string(),
                                     (dir / "t10k-labels-idx1-ubyte").string());
        return pair;
    }
    if (spec.kind != "synthetic")
        throw std::invalid_argument("load_dataset: unknown dataset kind '" + spec.kind + "'");

    if (!spec.dir.empty()) {
        const fs::path dir(spec.dir);
        const std::string train_images = (dir / "train-images-idx3-ubyte").string();
        const std::string train_labels = (dir / "train-labels-idx1-ubyte").string();
        const std::string test_images = (dir / "t10k-images-idx3-ubyte").string();
        const std::string test_labels = (dir / "t10k-labels-idx1-ubyte").string();
        if (!file_exists(train_images)) {
            // materialize once, then always go through the binary reader
            const std::vector<LabeledImage> train =
                make_glyph_dataset(spec.train_count, spec.image_size, spec.seed);
            const std::vector<LabeledImage> test =
                make_glyph_dataset(spec.test_count, spec.image_size, spec.seed + 1000000000ull);
            ensure_dir(spec.dir);
            write_idx_images(train_images, train);
            write_idx_labels(train_labels, train);
            write_idx_images(test_images, test);
            write_idx_labels(test_labels, test);
        }
        pair.train = read_idx_dataset(train_images, train_labels);
        pair.test = read_idx_dataset(test_images, test_labels);
        return pair;
    }
    pair.train = make_glyph_dataset(spec.train_count, spec.image_size, spec.seed);
    pair.test = make_glyph_dataset(spec.test_count, spec.image_size, spec.seed + 1000000000ull);
    return pair;
}

Classifier make_victim_classifier(const VictimSpec& spec, int image_size, int num_classes) {
    const int c1 = spec.conv1_channels, c2 = spec.conv2_channels;
    const int after_conv1 = image_size - 2;
    const int after_pool1 = after_conv1 / 2;
    const int after_conv2 = after_pool1 - 2;
    const int after_pool2 = after_conv2 / 2;
    if (after_pool2 < 1)
        throw std::invalid_argument("make_victim_classifier: image size " +
                                    std::to_string(image_size) + " too small for two conv blocks");
    const int flat = c2 * after_pool2 * after_pool2;
    std::vector<LayerSpec> layers = {conv2d(1, c1, 3), relu(),   maxpool2(),
                                     conv2d(c1, c2, 3), relu(),  maxpool2(),
                                     flatten(),         dense(flat, spec.hidden), relu(),
                                     dense(spec.hidden, num_classes)};
    return Classifier({1, image_size, image_size}, std::move(layers), num_classes, spec.seed);
}

}  // namespace advdet

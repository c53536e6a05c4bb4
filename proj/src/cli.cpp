#include "advdet/cli.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <set>

#include "CLI11.hpp"
#include "advdet/detector_io.hpp"
#include "advdet/fsutil.hpp"
#include "advdet/model_io.hpp"
#include "advdet/pipeline.hpp"
#include "advdet/train.hpp"
#include "json.hpp"

namespace advdet {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct CliOptions {
    std::string config_path;
    std::string out_dir = "out";
    long long seed_override = -1;
    int jobs = 1;
    std::string score_space;
    std::string format = "both";
    bool verbose = false;
};

void apply_overrides(ExperimentConfig& cfg, const CliOptions& opt) {
    if (opt.seed_override >= 0) cfg.seed = static_cast<uint64_t>(opt.seed_override);
    if (!opt.score_space.empty()) cfg.score_space = score_space_from_name(opt.score_space);
}

Classifier load_model_checked(const std::string& path) {
    if (!file_exists(path)) throw std::invalid_argument("model file not found: " + path);
    return load_classifier(path);
}

json dataset_manifest(const DatasetSpec& spec, const DatasetPair& data) {
    json d;
    d["kind"] = spec.kind;
    if (!spec.dir.empty()) d["dir"] = spec.dir;
    d["train_count"] = data.train.size();
    d["test_count"] = data.test.size();
    if (spec.kind == "synthetic") {
        d["image_size"] = spec.image_size;
        d["seed"] = spec.seed;
    }
    return d;
}

int cmd_train_model(const ExperimentConfig& cfg_in, const CliOptions& opt) {
    ExperimentConfig cfg = cfg_in;
    DatasetPair data = load_dataset(cfg.dataset);
    int num_classes = 0;
    for (const auto& img : data.train) num_classes = std::max(num_classes, img.label + 1);
    num_classes = std::max(num_classes, 2);

    const int image_size = data.train.front().pixels.shape[1];
    Classifier model = make_victim_classifier(cfg.victim, image_size, num_classes);
    TrainConfig tc;
    tc.epochs = cfg.victim.epochs;
    tc.learning_rate = cfg.victim.learning_rate;
    tc.momentum = cfg.victim.momentum;
    tc.batch_size = cfg.victim.batch_size;
    tc.seed = cfg.victim.seed;
    tc.verbose = opt.verbose;
    TrainResult result = train(std::move(model), data.train, tc);
    const double test_acc = accuracy(result.model, data.test);

    const std::string model_path =
        cfg.model_path.empty() ? opt.out_dir + "/model.bin" : cfg.model_path;
    save_classifier(model_path, result.model);

    json manifest;
    manifest["verb"] = "train-model";
    manifest["config"] = json::parse(config_to_json(cfg));
    manifest["dataset"] = dataset_manifest(cfg.dataset, data);
    manifest["model_file"] = model_path;
    manifest["train_accuracy"] = result.final_train_accuracy;
    manifest["test_accuracy"] = test_acc;
    manifest["artifacts"] = {{"model", fnv1a64_hex(read_file(model_path))}};
    write_file_atomic(opt.out_dir + "/train-manifest.json", manifest.dump(2) + "\n");

    std::printf("trained %s: train accuracy %.4f, test accuracy %.4f\n", model_path.c_str(),
                result.final_train_accuracy, test_acc);
    return 0;
}

// calibration pool for the standalone verbs: correctly-classified images
// first, the attack pool right after it
Pools standalone_pools(const Classifier& model, const std::vector<LabeledImage>& heldout,
                       int attack_pool, int calibration, uint64_t seed) {
    SplitSpec split;
    split.detector_train = attack_pool;
    split.detector_test = 1;  // unused slot; make_pools requires a test pool
    split.calibration = calibration;
    return make_pools(model, heldout, split, seed);
}

int cmd_calibrate(const ExperimentConfig& cfg, const CliOptions& opt) {
    Classifier model = load_model_checked(cfg.model_path);
    DatasetPair data = load_dataset(cfg.dataset);
    Pools pools = standalone_pools(model, data.test, 1, cfg.split.calibration, cfg.seed);
    std::vector<Tensor> images;
    std::vector<int> labels;
    for (int idx : pools.calibration) {
        images.push_back(data.test[idx].pixels);
        labels.push_back(data.test[idx].label);
    }

    json out;
    out["verb"] = "calibrate";
    out["seed"] = cfg.seed;
    json entries = json::array();
    for (const AttackBlock& block : cfg.attacks) {
        const AttackKind kind = block.config.kind;
        if (kind != AttackKind::Fgsm && kind != AttackKind::Bim) {
            std::fprintf(stderr, "calibrate: %s needs no budget calibration, skipping\n",
                         attack_kind_name(kind));
            continue;
        }
        CalibrationResult cal =
            kind == AttackKind::Fgsm
                ? calibrate_fgsm_epsilon(model, images, labels, 0.5, opt.jobs)
                : calibrate_bim_epsilon(model, images, labels, 0.95, block.config.effective_steps(),
                                        block.config.rel_stepsize, cfg.seed + 100000000ull, opt.jobs);
        json e;
        e["attack"] = attack_kind_name(kind);
        e["target_rate"] = kind == AttackKind::Fgsm ? 0.5 : 0.95;
        e["epsilon"] = cal.epsilon;
        e["measured_success_rate"] = cal.success_rate;
        entries.push_back(e);
        std::printf("%s: epsilon %.6f (success rate %.4f)\n", attack_kind_name(kind), cal.epsilon,
                    cal.success_rate);
    }
    out["results"] = std::move(entries);
    write_file_atomic(opt.out_dir + "/calibration.json", out.dump(2) + "\n");
    return 0;
}

std::string f32_blob(const std::vector<AdversarialExample>& examples) {
    std::string blob;
    blob.reserve(examples.size() * examples.front().perturbed.data.size() * 4);
    for (const auto& ex : examples)
        for (float v : ex.perturbed.data) {
            uint32_t u;
            std::memcpy(&u, &v, 4);
            for (int s = 0; s < 32; s += 8) blob.push_back(static_cast<char>((u >> s) & 0xff));
        }
    return blob;
}

int cmd_attack(const ExperimentConfig& cfg, const CliOptions& opt) {
    Classifier model = load_model_checked(cfg.model_path);
    DatasetPair data = load_dataset(cfg.dataset);
    const AttackBlock& block = cfg.attacks.at(0);
    const int calibration = block.calibrate ? cfg.split.calibration : 0;
    Pools pools = standalone_pools(model, data.test, cfg.attack_pool, calibration, cfg.seed);

    AttackConfig attack_cfg = block.config;
    json calibration_entry;
    if (block.calibrate) {
        std::vector<Tensor> images;
        std::vector<int> labels;
        for (int idx : pools.calibration) {
            images.push_back(data.test[idx].pixels);
            labels.push_back(data.test[idx].label);
        }
        CalibrationResult cal =
            attack_cfg.kind == AttackKind::Fgsm
                ? calibrate_fgsm_epsilon(model, images, labels, 0.5, opt.jobs)
                : calibrate_bim_epsilon(model, images, labels, 0.95, attack_cfg.effective_steps(),
                                        attack_cfg.rel_stepsize, cfg.seed + 100000000ull, opt.jobs);
        attack_cfg.epsilon = cal.epsilon;
        calibration_entry["epsilon"] = cal.epsilon;
        calibration_entry["measured_success_rate"] = cal.success_rate;
    }
    attack_cfg.seed = cfg.seed + 101000000ull;

    std::vector<Tensor> images;
    std::vector<int> labels;
    for (int idx : pools.detector_train) {
        images.push_back(data.test[idx].pixels);
        labels.push_back(data.test[idx].label);
    }
    std::vector<AdversarialExample> examples = attack_batch(model, images, labels, attack_cfg, opt.jobs);
    const AttackSummary summary = attack_summary(model, examples);

    const std::string dir =
        opt.out_dir + "/attack-" + attack_kind_name(attack_cfg.kind);
    json manifest;
    manifest["verb"] = "attack";
    manifest["attack"] = {{"kind", attack_kind_name(attack_cfg.kind)},
                          {"epsilon", attack_cfg.epsilon},
                          {"steps", attack_cfg.effective_steps()},
                          {"rel_stepsize", attack_cfg.rel_stepsize},
                          {"seed", attack_cfg.seed}};
    if (!calibration_entry.is_null()) manifest["calibration"] = calibration_entry;
    manifest["model"] = cfg.model_path;
    manifest["dataset"] = dataset_manifest(cfg.dataset, data);
    manifest["score_space"] = score_space_name(cfg.score_space);
    manifest["pool_indices"] = pools.detector_train;
    manifest["image_shape"] = {images.front().shape[0], images.front().shape[1],
                               images.front().shape[2]};
    manifest["summary"] = {{"count", summary.count},
                           {"success_rate", summary.success_rate},
                           {"success_rate_originally_correct", summary.success_rate_originally_correct},
                           {"post_attack_accuracy", summary.post_attack_accuracy},
                           {"mean_perturbation_norm", summary.mean_norm}};
    json per_image = json::array();
    for (size_t i = 0; i < examples.size(); ++i) {
        json e;
        e["index"] = pools.detector_train[i];
        e["true_label"] = examples[i].true_label;
        e["predicted_label"] = examples[i].predicted_label;
        e["success"] = examples[i].success;
        e["norm"] = examples[i].perturbation_norm;
        per_image.push_back(std::move(e));
    }
    manifest["examples"] = std::move(per_image);

    write_file_atomic(dir + "/perturbed.f32", f32_blob(examples));
    manifest["artifacts"] = {{"perturbed.f32", fnv1a64_hex(read_file(dir + "/perturbed.f32"))}};
    write_file_atomic(dir + "/manifest.json", manifest.dump(2) + "\n");
    std::printf("%s: %d images, success rate %.4f, mean norm %.6f -> %s\n",
                attack_kind_name(attack_cfg.kind), summary.count, summary.success_rate,
                summary.mean_norm, dir.c_str());
    return 0;
}

struct AttackArtifact {
    AttackKind kind;
    std::vector<int> pool;
    std::vector<Tensor> perturbed;
};

AttackArtifact read_attack_dir(const std::string& dir) {
    const std::string manifest_text = read_file(dir + "/manifest.json");
    json manifest = json::parse(manifest_text);
    AttackArtifact art;
    art.kind = attack_kind_from_name(manifest.at("attack").at("kind").get<std::string>());
    art.pool = manifest.at("pool_indices").get<std::vector<int>>();
    const auto shape = manifest.at("image_shape").get<std::vector<int>>();
    const size_t stride = static_cast<size_t>(shape.at(0)) * shape.at(1) * shape.at(2);
    const std::string blob = read_file(dir + "/perturbed.f32");
    if (blob.size() != art.pool.size() * stride * 4)
        throw std::runtime_error(dir + ": perturbed.f32 size does not match the manifest pool");
    size_t off = 0;
    for (size_t i = 0; i < art.pool.size(); ++i) {
        Tensor t({shape.at(0), shape.at(1), shape.at(2)});
        for (float& v : t.data) {
            uint32_t u = 0;
            for (int b = 3; b >= 0; --b) u = (u << 8) | static_cast<unsigned char>(blob[off + b]);
            std::memcpy(&v, &u, 4);
            off += 4;
        }
        art.perturbed.push_back(std::move(t));
    }
    return art;
}

int cmd_build_scores(const ExperimentConfig& cfg, const CliOptions& opt) {
    Classifier model = load_model_checked(cfg.model_path);
    DatasetPair data = load_dataset(cfg.dataset);

    std::vector<AttackArtifact> artifacts;
    for (const std::string& dir : cfg.attack_dirs) artifacts.push_back(read_attack_dir(dir));
    if (artifacts.size() == 2) {
        if (artifacts[0].pool.size() != artifacts[1].pool.size())
            throw std::runtime_error("build-scores: combined mode needs equally-sized attack pools");
        std::set<int> a(artifacts[0].pool.begin(), artifacts[0].pool.end());
        for (int idx : artifacts[1].pool)
            if (a.count(idx))
                throw std::runtime_error("build-scores: attack pools overlap at image " +
                                         std::to_string(idx));
    }

    std::vector<ScoreRecord> records;
    const int K = model.num_classes();
    for (const AttackArtifact& art : artifacts) {
        std::vector<Tensor> clean;
        for (int idx : art.pool) clean.push_back(data.test.at(idx).pixels);
        Tensor clean_scores, adv_scores;
        for (size_t first = 0; first < clean.size(); first += 256) {
            const size_t last = std::min(clean.size(), first + 256);
            Tensor cs = model.forward([&] {
                Tensor b({static_cast<int>(last - first), clean[0].shape[0], clean[0].shape[1],
                          clean[0].shape[2]});
                for (size_t i = first; i < last; ++i)
                    std::copy(clean[i].data.begin(), clean[i].data.end(),
                              b.data.begin() + (i - first) * clean[i].data.size());
                return b;
            }());
            Tensor as = model.forward([&] {
                Tensor b({static_cast<int>(last - first), clean[0].shape[0], clean[0].shape[1],
                          clean[0].shape[2]});
                for (size_t i = first; i < last; ++i)
                    std::copy(art.perturbed[i].data.begin(), art.perturbed[i].data.end(),
                              b.data.begin() + (i - first) * clean[i].data.size());
                return b;
            }());
            for (size_t b = 0; b < last - first; ++b) {
                ScoreRecord rc;
                rc.scores = score_vector(cs.data.data() + b * K, K, cfg.score_space);
                rc.label = +1;
                rc.provenance = Provenance::Original;
                records.push_back(std::move(rc));
                ScoreRecord ra;
                ra.scores = score_vector(as.data.data() + b * K, K, cfg.score_space);
                ra.label = -1;
                switch (art.kind) {
                    case AttackKind::Fgsm: ra.provenance = Provenance::Fgsm; break;
                    case AttackKind::Bim: ra.provenance = Provenance::Bim; break;
                    case AttackKind::Cw: ra.provenance = Provenance::Cw; break;
                    case AttackKind::Boundary: ra.provenance = Provenance::Boundary; break;
                }
                records.push_back(std::move(ra));
            }
        }
    }
    save_scores_csv(opt.out_dir + "/scores.csv", records);
    std::printf("wrote %zu score records -> %s/scores.csv\n", records.size(), opt.out_dir.c_str());
    return 0;
}

int cmd_train_detector(const ExperimentConfig& cfg, const CliOptions& opt) {
    std::vector<ScoreRecord> records = load_scores_csv(cfg.scores_train_path);
    json manifest;
    manifest["verb"] = "train-detector";
    manifest["scores_train"] = cfg.scores_train_path;
    manifest["records"] = records.size();
    json artifacts;
    if (cfg.detector == "svm" || cfg.detector == "both") {
        GridSearchResult grid = grid_search_svm(records, cfg.folds, 1, cfg.seed + 31, opt.jobs);
        save_detector(opt.out_dir + "/detector-svm.bin", grid.model);
        manifest["svm"] = {{"C", grid.C},
                           {"gamma", grid.gamma},
                           {"cv_accuracy", grid.cv_accuracy},
                           {"num_support_vectors", grid.model.support_vectors.size()}};
        artifacts["detector-svm.bin"] = fnv1a64_hex(read_file(opt.out_dir + "/detector-svm.bin"));
        std::printf("svm-rbf: C=%g gamma=%g cv_accuracy=%.4f\n", grid.C, grid.gamma,
                    grid.cv_accuracy);
    }
    if (cfg.detector == "stump" || cfg.detector == "both") {
        std::vector<std::pair<double, int>> features;
        for (const ScoreRecord& r : records) features.emplace_back(top2_gap(r.scores), r.label);
        StumpModel stump = train_stump(features);
        save_detector(opt.out_dir + "/detector-stump.bin", stump);
        manifest["stump"] = {{"threshold", stump.threshold}, {"polarity", stump.polarity}};
        artifacts["detector-stump.bin"] =
            fnv1a64_hex(read_file(opt.out_dir + "/detector-stump.bin"));
        std::printf("stump: threshold=%g polarity=%+d\n", stump.threshold, stump.polarity);
    }
    manifest["artifacts"] = std::move(artifacts);
    write_file_atomic(opt.out_dir + "/train-detector-manifest.json", manifest.dump(2) + "\n");
    return 0;
}

int cmd_evaluate(const ExperimentConfig& cfg, const CliOptions& opt) {
    DetectorModel detector = load_detector(cfg.detector_path);
    std::vector<ScoreRecord> records = load_scores_csv(cfg.scores_test_path);
    Metrics m = evaluate_detector(detector, records);
    json out;
    out["verb"] = "evaluate";
    out["detector"] = detector_name(detector);
    out["scores_test"] = cfg.scores_test_path;
    out["records"] = records.size();
    out["accuracy"] = m.accuracy;
    out["f1"] = m.f1;
    out["confusion"] = {{"true_positive", m.true_positive},
                        {"false_positive", m.false_positive},
                        {"false_negative", m.false_negative},
                        {"true_negative", m.true_negative}};
    write_file_atomic(opt.out_dir + "/metrics.json", out.dump(2) + "\n");
    std::printf("%s: accuracy %.4f, f1 %.4f (tp %d fp %d fn %d tn %d)\n", detector_name(detector),
                m.accuracy, m.f1, m.true_positive, m.false_positive, m.false_negative,
                m.true_negative);
    return 0;
}

int cmd_run_experiment(const ExperimentConfig& cfg, const CliOptions& opt) {
    Classifier model = load_model_checked(cfg.model_path);
    DatasetPair data = load_dataset(cfg.dataset);
    ExperimentOutcome outcome = run_experiment(model, data.test, cfg, opt.jobs);

    const std::string dir = opt.out_dir + "/" + cfg.id;
    const std::string scores_train = scores_to_csv(outcome.scores_train);
    const std::string scores_test = scores_to_csv(outcome.scores_test);
    const std::string csv = report_csv(outcome.rows);
    const std::string md = report_markdown(outcome.rows);
    write_file_atomic(dir + "/scores_train.csv", scores_train);
    write_file_atomic(dir + "/scores_test.csv", scores_test);
    if (opt.format == "csv" || opt.format == "both") write_file_atomic(dir + "/report.csv", csv);
    if (opt.format == "md" || opt.format == "both") write_file_atomic(dir + "/report.md", md);

    json manifest = json::parse(outcome.manifest_json);
    json artifacts;
    artifacts["scores_train.csv"] = fnv1a64_hex(scores_train);
    artifacts["scores_test.csv"] = fnv1a64_hex(scores_test);
    if (opt.format == "csv" || opt.format == "both") artifacts["report.csv"] = fnv1a64_hex(csv);
    if (opt.format == "md" || opt.format == "both") artifacts["report.md"] = fnv1a64_hex(md);
    manifest["artifacts"] = std::move(artifacts);
    write_file_atomic(dir + "/manifest.json", manifest.dump(2) + "\n");

    for (const ReportRow& r : outcome.rows)
        std::printf("%s | %s | %s: accuracy %.4f, f1 %.4f\n", r.model_id.c_str(),
                    r.attack_id.c_str(), r.detector_id.c_str(), r.accuracy, r.f1);
    return 0;
}

int cmd_report(const CliOptions& opt) {
    std::vector<std::string> csv_files;
    if (file_exists(opt.out_dir + "/report.csv")) {
        csv_files.push_back(opt.out_dir + "/report.csv");
    } else {
        if (!fs::exists(opt.out_dir))
            throw std::invalid_argument("report: directory not found: " + opt.out_dir);
        for (const auto& entry : fs::recursive_directory_iterator(opt.out_dir))
            if (entry.is_regular_file() && entry.path().filename() == "report.csv")
                csv_files.push_back(entry.path().string());
        std::sort(csv_files.begin(), csv_files.end());
    }
    if (csv_files.empty())
        throw std::invalid_argument("report: no report.csv found under " + opt.out_dir);
    std::vector<ReportRow> rows;
    for (const std::string& f : csv_files) {
        std::vector<ReportRow> part = report_rows_from_csv(read_file(f));
        rows.insert(rows.end(), part.begin(), part.end());
    }
    emit_report(rows, opt.format, opt.out_dir);
    std::printf("aggregated %zu rows from %zu report(s) -> %s\n", rows.size(), csv_files.size(),
                opt.out_dir.c_str());
    return 0;
}

}  // namespace

int cli_run(const std::vector<std::string>& args) {
    CLI::App app{"adversarial-example generation and class-score detection toolkit"};
    app.require_subcommand(1);

    CliOptions opt;
    const std::vector<std::string> verbs = {"train-model", "calibrate",      "attack",
                                            "build-scores", "train-detector", "evaluate",
                                            "run-experiment", "report"};
    const std::vector<std::string> descriptions = {
        "train the victim classifier",
        "calibrate attack budgets to their target success rates",
        "run one attack over an image pool and persist the results",
        "assemble a labeled score dataset from attack results",
        "train detectors on a score dataset",
        "evaluate a detector on a score dataset",
        "run a full single- or combined-attack experiment",
        "re-emit reports from previous runs"};
    std::vector<CLI::App*> subs;
    for (size_t i = 0; i < verbs.size(); ++i) {
        CLI::App* sub = app.add_subcommand(verbs[i], descriptions[i]);
        if (verbs[i] != "report")
            sub->add_option("--config", opt.config_path, "path to the JSON config")->required();
        sub->add_option("--out", opt.out_dir, "output directory (default: out)");
        sub->add_option("--seed", opt.seed_override, "override the config seed");
        sub->add_option("--jobs", opt.jobs, "worker threads (results are identical for any value)");
        sub->add_option("--score-space", opt.score_space, "detector input space: logits|softmax")
            ->check(CLI::IsMember({"logits", "softmax"}));
        sub->add_option("--format", opt.format, "report format: csv|md|both")
            ->check(CLI::IsMember({"csv", "md", "both"}));
        sub->add_flag("--verbose", opt.verbose, "chatty progress on stderr");
        subs.push_back(sub);
    }

    std::vector<const char*> argv;
    argv.push_back("advdet");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help
            std::printf("%s", app.help().c_str());
            return 0;
        }
        std::fprintf(stderr, "advdet: %s\n", e.what());
        std::fprintf(stderr, "%s", app.help().c_str());
        return 1;
    }

    std::string verb;
    for (size_t i = 0; i < subs.size(); ++i)
        if (subs[i]->parsed()) verb = verbs[i];

    try {
        if (opt.jobs < 1) throw std::invalid_argument("--jobs must be >= 1");
        if (verb == "report") return cmd_report(opt);

        ExperimentConfig cfg = validate_config(opt.config_path, verb);
        apply_overrides(cfg, opt);
        if (verb == "train-model") return cmd_train_model(cfg, opt);
        if (verb == "calibrate") return cmd_calibrate(cfg, opt);
        if (verb == "attack") return cmd_attack(cfg, opt);
        if (verb == "build-scores") return cmd_build_scores(cfg, opt);
        if (verb == "train-detector") return cmd_train_detector(cfg, opt);
        if (verb == "evaluate") return cmd_evaluate(cfg, opt);
        if (verb == "run-experiment") return cmd_run_experiment(cfg, opt);
        throw std::runtime_error("unhandled verb " + verb);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "advdet %s: %s\n", verb.c_str(), e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "advdet %s: %s\n", verb.c_str(), e.what());
        return 2;
    }
}

}  // namespace advdet

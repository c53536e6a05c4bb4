// Acceptance suite: runs every gate end to end against the bundled
// synthetic dataset and prints one PASS/FAIL line per criterion. Exits
// nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "advdet/attacks.hpp"
#include "advdet/cli.hpp"
#include "advdet/data.hpp"
#include "advdet/fsutil.hpp"
#include "advdet/model_io.hpp"
#include "advdet/pipeline.hpp"
#include "advdet/train.hpp"
#include "advdet/util.hpp"
#include "oracle_net.hpp"
#include "oracle_svm.hpp"

using namespace advdet;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Criterion {
    int id;
    std::string name;
    bool pass = false;
    std::string detail;
};

std::vector<Criterion> results;

void record(int id, const std::string& name, bool pass, const std::string& detail) {
    results.push_back({id, name, pass, detail});
    std::printf("%s  criterion %2d: %-38s  %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
}

double elapsed(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

// --- shared fixtures -------------------------------------------------------

constexpr int kImageSize = 16;
constexpr uint64_t kDatasetSeed = 11;
constexpr uint64_t kExperimentSeed = 7;
// single-attack experiments get the larger detector pool; combined runs
// keep the smaller one (their margins are wide and four of them run)
const SplitSpec kSplit{2000, 500, 500};
const SplitSpec kCombinedSplit{1000, 500, 500};

AttackBlock fgsm_block() {
    AttackBlock b;
    b.config.kind = AttackKind::Fgsm;
    b.calibrate = true;
    return b;
}

AttackBlock bim_block() {
    AttackBlock b;
    b.config.kind = AttackKind::Bim;
    b.calibrate = true;  // 100 steps, rel step 0.2 via defaults
    return b;
}

AttackBlock cw_block() {
    AttackBlock b;
    b.config.kind = AttackKind::Cw;
    b.config.steps = 150;  // reduced budget; the success gate stays as stated
    b.config.cw_binary_search_steps = 5;
    b.config.cw_learning_rate = 1e-2;
    return b;
}

AttackBlock boundary_block(int steps) {
    AttackBlock b;
    b.config.kind = AttackKind::Boundary;
    b.config.steps = steps;
    return b;
}

ExperimentConfig experiment_config(const std::string& id, std::vector<AttackBlock> attacks,
                                   const SplitSpec& split) {
    ExperimentConfig cfg;
    cfg.id = id;
    cfg.attacks = std::move(attacks);
    cfg.split = split;
    cfg.seed = kExperimentSeed;
    return cfg;
}

struct PoolData {
    std::vector<Tensor> images;
    std::vector<int> labels;
};

PoolData gather(const std::vector<LabeledImage>& heldout, const std::vector<int>& pool) {
    PoolData d;
    for (int i : pool) {
        d.images.push_back(heldout[i].pixels);
        d.labels.push_back(heldout[i].label);
    }
    return d;
}

double accuracy_of(const std::vector<ReportRow>& rows, const std::string& detector) {
    for (const auto& r : rows)
        if (r.detector_id == detector) return r.accuracy;
    return -1.0;
}

}  // namespace

// --- criteria --------------------------------------------------------------

// Runs against the trained victim (it exercises every layer type); a
// trained model also has healthy gradient magnitudes, which keeps the
// float32-noise floor far below the tolerance.
static void criterion_1_gradients(const Classifier& model, const LabeledImage& sample) {
    const auto start = Clock::now();
    advdet::testing::RefNet ref(model);
    Rng rng(999);
    const Tensor& img = sample.pixels;
    const std::vector<double> x = advdet::testing::to_double(img);
    // an off-label target keeps the loss (and its gradients) well away
    // from the confident-model zero-gradient regime
    const int label = (sample.label + 1) % model.num_classes();

    Tensor analytic = input_gradient(model, img, label);
    const double g_scale = advdet::testing::max_abs(analytic.data);
    int bad = 0;
    double worst = 0.0;
    // central differences are meaningful only where the ReLU/maxpool
    // activation pattern is stable inside the stencil; kinked coordinates
    // are resampled
    int checked = 0, attempts = 0;
    while (checked < 100 && attempts < 2000) {
        ++attempts;
        const size_t i = static_cast<size_t>(rng.uniform_int(static_cast<int>(x.size())));
        const auto fd = advdet::testing::fd_input(ref, x, label, i, 1e-3);
        if (!fd.smooth) continue;
        const double err = advdet::testing::rel_err(analytic.data[i], fd.value, g_scale);
        worst = std::max(worst, err);
        if (err > 1e-3) ++bad;
        ++checked;
    }
    if (checked < 100) ++bad;

    // parameter gradients per layer type
    ForwardTape tape = model.forward_tape(Tensor({1, 1, kImageSize, kImageSize}, img.data));
    auto grads = model.backward_params(tape, cross_entropy_grad(tape.acts.back(), {label}));
    for (size_t li = 0; li < model.layers().size(); ++li) {
        if (grads[li].weight.data.empty()) continue;
        const double w_scale = advdet::testing::max_abs(grads[li].weight.data);
        int layer_checked = 0, layer_attempts = 0;
        while (layer_checked < 100 && layer_attempts < 2000) {
            ++layer_attempts;
            const size_t wi =
                static_cast<size_t>(rng.uniform_int(static_cast<int>(grads[li].weight.data.size())));
            const auto fd = advdet::testing::fd_param(ref, x, label, li, true, wi, 1e-3);
            if (!fd.smooth) continue;
            const double err = advdet::testing::rel_err(grads[li].weight.data[wi], fd.value, w_scale);
            worst = std::max(worst, err);
            if (err > 1e-3) ++bad;
            ++layer_checked;
        }
        if (layer_checked < 100) ++bad;
    }
    record(1, "gradient correctness", bad == 0,
           fmt("worst rel err %.2e over input+param coords (%.1fs)", worst, elapsed(start)));
}

int main() {
    const auto suite_start = Clock::now();
    const fs::path work = fs::temp_directory_path() / "advdet_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);

    std::printf("== fixtures: synthetic dataset + victim classifier ==\n");
    auto fixture_start = Clock::now();
    DatasetSpec dataset_spec;
    dataset_spec.train_count = 6000;
    dataset_spec.test_count = 4000;
    dataset_spec.image_size = kImageSize;
    dataset_spec.seed = kDatasetSeed;
    dataset_spec.dir = (work / "dataset").string();  // exercises the IDX ingestion path
    DatasetPair data = load_dataset(dataset_spec);

    VictimSpec victim_spec;
    TrainConfig tc;
    tc.epochs = 12;
    tc.learning_rate = 0.05;
    tc.seed = 1;
    TrainResult trained = train(make_victim_classifier(victim_spec, kImageSize, 10), data.train, tc);
    Classifier& model = trained.model;
    const double test_accuracy = accuracy(model, data.test);
    const std::string model_path = (work / "model.bin").string();
    save_classifier(model_path, model);
    std::printf("victim: train acc %.4f, test acc %.4f (gate: >= 0.85) [%.1fs]\n",
                trained.final_train_accuracy, test_accuracy, elapsed(fixture_start));
    if (test_accuracy < 0.85) {
        std::printf("FAIL  fixtures: victim accuracy below the 0.85 gate\n");
        return 1;
    }

    const Pools pools = make_pools(model, data.test, kSplit, kExperimentSeed);
    const PoolData calib = gather(data.test, pools.calibration);
    const PoolData test_pool = gather(data.test, pools.detector_test);

    criterion_1_gradients(model, data.test[pools.detector_test[0]]);

    // --- criterion 2: FGSM calibration ------------------------------------
    CalibrationResult fgsm_cal;
    {
        const auto start = Clock::now();
        fgsm_cal = calibrate_fgsm_epsilon(model, calib.images, calib.labels, 0.5, 1);
        record(2, "fgsm 50% calibration", std::abs(fgsm_cal.success_rate - 0.5) <= 0.05,
               fmt("epsilon %.5f, success %.4f on %zu images (%.1fs)", fgsm_cal.epsilon,
                   fgsm_cal.success_rate, calib.images.size(), elapsed(start)));
    }

    // --- criterion 3: BIM calibration + budget ------------------------------
    CalibrationResult bim_cal;
    {
        const auto start = Clock::now();
        bim_cal = calibrate_bim_epsilon(model, calib.images, calib.labels, 0.95, 100, 0.2,
                                        kExperimentSeed + 100000000ull, 1);
        AttackConfig bim_cfg;
        bim_cfg.kind = AttackKind::Bim;
        bim_cfg.epsilon = bim_cal.epsilon;
        bim_cfg.seed = kExperimentSeed + 102000000ull;
        auto examples = attack_batch(model, test_pool.images, test_pool.labels, bim_cfg, 1);
        int over_budget = 0;
        for (const auto& ex : examples)
            if (ex.perturbation_norm > bim_cal.epsilon + 1e-4) ++over_budget;
        const bool pass = std::abs(bim_cal.success_rate - 0.95) <= 0.03 && over_budget == 0;
        record(3, "bim 95% calibration + L2 budget", pass,
               fmt("epsilon %.4f, success %.4f, %d/%zu over budget (%.1fs)", bim_cal.epsilon,
                   bim_cal.success_rate, over_budget, examples.size(), elapsed(start)));
    }

    // --- criterion 4: CW success and norm dominance -------------------------
    {
        const auto start = Clock::now();
        AttackConfig cw_cfg = cw_block().config;
        cw_cfg.seed = kExperimentSeed + 102000000ull;
        auto cw_examples = attack_batch(model, test_pool.images, test_pool.labels, cw_cfg, 1);
        AttackConfig fgsm_cfg;
        fgsm_cfg.kind = AttackKind::Fgsm;
        fgsm_cfg.epsilon = fgsm_cal.epsilon;
        fgsm_cfg.seed = kExperimentSeed + 102000000ull;
        auto fgsm_examples = attack_batch(model, test_pool.images, test_pool.labels, fgsm_cfg, 1);
        const AttackSummary cw_sum = attack_summary(model, cw_examples);
        const AttackSummary fgsm_sum = attack_summary(model, fgsm_examples);
        const bool pass = cw_sum.success_rate >= 0.99 && cw_sum.mean_norm < fgsm_sum.mean_norm;
        record(4, "cw >=99% success, norm < fgsm", pass,
               fmt("cw success %.4f on %zu imgs, cw norm %.4f vs fgsm %.4f (%.1fs)",
                   cw_sum.success_rate, cw_examples.size(), cw_sum.mean_norm, fgsm_sum.mean_norm,
                   elapsed(start)));
    }

    // --- criterion 5: decision-only boundary attack -------------------------
    {
        const auto start = Clock::now();
        const int pool_size = 300;
        std::vector<Tensor> images(test_pool.images.begin(), test_pool.images.begin() + pool_size);
        std::vector<int> labels(test_pool.labels.begin(), test_pool.labels.begin() + pool_size);

        const uint64_t grads_before = model.gradient_calls();
        // full accepted-state audit on a subsample
        int audited = 0, audit_failures = 0;
        for (int i = 0; i < 20; ++i) {
            std::vector<Tensor> accepted;
            AdversarialExample ex =
                boundary_attack(model, images[i], labels[i], 5000, kExperimentSeed + 900 + i,
                                [&](const Tensor& t) { accepted.push_back(t); });
            if (!ex.success) continue;
            ++audited;
            for (const Tensor& t : accepted)
                if (model.predict(t) == labels[i]) ++audit_failures;
        }
        AttackConfig bd_cfg = boundary_block(5000).config;
        bd_cfg.seed = kExperimentSeed + 905000000ull;
        auto bd_examples = attack_batch(model, images, labels, bd_cfg, 1);
        const uint64_t grad_delta = model.gradient_calls() - grads_before;

        AttackConfig bim_cfg;
        bim_cfg.kind = AttackKind::Bim;
        bim_cfg.epsilon = bim_cal.epsilon;
        bim_cfg.seed = kExperimentSeed + 905000000ull;
        auto bim_examples = attack_batch(model, images, labels, bim_cfg, 1);

        auto mean_success_norm = [](const std::vector<AdversarialExample>& v) {
            double sum = 0.0;
            int n = 0;
            for (const auto& ex : v)
                if (ex.success) {
                    sum += ex.perturbation_norm;
                    ++n;
                }
            return n > 0 ? sum / n : 1e300;
        };
        const double bd_norm = mean_success_norm(bd_examples);
        const double bim_norm = mean_success_norm(bim_examples);
        double bd_success = 0.0, bim_success = 0.0;
        for (const auto& ex : bd_examples) bd_success += ex.success;
        for (const auto& ex : bim_examples) bim_success += ex.success;
        bd_success /= bd_examples.size();
        bim_success /= bim_examples.size();

        const bool pass = grad_delta == 0 && audit_failures == 0 && audited >= 15 &&
                          bd_norm < bim_norm && bd_success >= bim_success - 0.03;
        record(5, "boundary: decision-only, norm < bim", pass,
               fmt("grad calls %llu, audit %d states ok, norms %.4f < %.4f, success %.3f vs %.3f "
                   "(%.0fs)",
                   static_cast<unsigned long long>(grad_delta), audited, bd_norm, bim_norm,
                   bd_success, bim_success, elapsed(start)));
    }

    // --- criterion 6: SMO vs brute-force dual oracle -------------------------
    {
        const auto start = Clock::now();
        Rng rng(6060);
        int bad_decisions = 0, bad_feasibility = 0;
        double worst_gap = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            const int n = 4 + rng.uniform_int(9);
            const int d = 2 + rng.uniform_int(4);
            const double C = std::vector<double>{0.5, 1.0, 10.0}[rng.uniform_int(3)];
            const double gamma = std::vector<double>{0.1, 0.5, 2.0}[rng.uniform_int(3)];
            std::vector<ScoreRecord> instance;
            for (int i = 0; i < n; ++i) {
                ScoreRecord r;
                r.label = i % 2 == 0 ? +1 : -1;
                r.provenance = r.label > 0 ? Provenance::Original : Provenance::Cw;
                for (int j = 0; j < d; ++j)
                    r.scores.push_back(
                        static_cast<float>(rng.normal() + (trial % 2 == 0 ? r.label * 1.5 : 0.0)));
                instance.push_back(std::move(r));
            }
            SmoDiagnostics diag;
            SvmModel svm = train_svm_diag(instance, C, gamma, 1e-3, 200000, &diag);
            auto oracle = advdet::testing::solve_dual_brute_force(instance, C, gamma);
            double ady = 0.0;
            for (size_t i = 0; i < diag.alpha.size(); ++i) {
                if (diag.alpha[i] < -1e-12 || diag.alpha[i] > C + 1e-12) ++bad_feasibility;
                ady += diag.alpha[i] * instance[i].label;
            }
            if (std::abs(ady) > 1e-6) ++bad_feasibility;
            if (diag.max_kkt_violation > 1e-3 + 1e-6) ++bad_feasibility;
            for (const auto& r : instance) {
                std::vector<float> z(r.scores.size());
                for (size_t j = 0; j < z.size(); ++j)
                    z[j] = (r.scores[j] - svm.feature_mean[j]) / svm.feature_std[j];
                const double gap = std::abs(svm.decision_value(r.scores) - oracle.decision(z));
                worst_gap = std::max(worst_gap, gap);
                if (gap > 1e-3) ++bad_decisions;
            }
        }
        record(6, "smo matches brute-force dual oracle", bad_decisions == 0 && bad_feasibility == 0,
               fmt("50 instances, worst decision gap %.2e (%.1fs)", worst_gap, elapsed(start)));
    }

    // --- criterion 7: stump optimality ---------------------------------------
    {
        const auto start = Clock::now();
        Rng rng(7070);
        int violations = 0;
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<std::pair<double, int>> samples;
            const int n = 6 + rng.uniform_int(40);
            for (int i = 0; i < n; ++i) {
                const int label = rng.uniform() < 0.5 ? +1 : -1;
                samples.emplace_back(rng.normal() + 0.7 * label, label);
            }
            bool pos = false, neg = false;
            for (auto& [f, l] : samples) (l > 0 ? pos : neg) = true;
            if (!pos) samples.emplace_back(3.0, +1);
            if (!neg) samples.emplace_back(-3.0, -1);
            StumpModel stump = train_stump(samples);
            const double trained = weighted_gini(samples, stump.threshold);
            std::vector<double> values;
            for (const auto& [f, l] : samples) values.push_back(f);
            std::sort(values.begin(), values.end());
            for (size_t i = 0; i + 1 < values.size(); ++i) {
                if (values[i] == values[i + 1]) continue;
                if (weighted_gini(samples, 0.5 * (values[i] + values[i + 1])) < trained - 1e-12)
                    ++violations;
            }
        }
        record(7, "stump gini optimality", violations == 0,
               fmt("100 datasets, %d scan wins (%.1fs)", violations, elapsed(start)));
    }

    // --- criteria 8 + 9: trend reproduction ----------------------------------
    std::vector<ExperimentOutcome> single_outcomes;
    std::vector<std::string> single_names = {"fgsm", "bim", "cw", "boundary"};
    {
        const auto start = Clock::now();
        single_outcomes.push_back(run_single_attack_experiment(
            model, data.test, experiment_config("fgsm", {fgsm_block()}, kSplit), 1));
        single_outcomes.push_back(run_single_attack_experiment(
            model, data.test, experiment_config("bim", {bim_block()}, kSplit), 1));
        single_outcomes.push_back(run_single_attack_experiment(
            model, data.test, experiment_config("cw", {cw_block()}, kSplit), 1));
        single_outcomes.push_back(run_single_attack_experiment(
            model, data.test, experiment_config("boundary", {boundary_block(2000)}, kSplit), 1));

        bool pass = true;
        std::string detail;
        for (size_t i = 0; i < single_outcomes.size(); ++i) {
            const double svm = accuracy_of(single_outcomes[i].rows, "svm-rbf");
            const double stump = accuracy_of(single_outcomes[i].rows, "stump");
            const bool ok = single_names[i] == "boundary" ? std::abs(svm - stump) <= 0.05
                                                          : svm >= stump - 0.01;
            pass = pass && ok;
            detail += fmt("%s %.3f/%.3f ", single_names[i].c_str(), svm, stump);
        }
        record(8, "single-attack trends (table 2 analog)", pass,
               detail + fmt("(%.0fs)", elapsed(start)));
    }

    std::vector<ExperimentOutcome> combined_outcomes;
    std::vector<std::string> combined_names = {"cw+bim", "cw+fgsm", "boundary+bim", "boundary+fgsm"};
    {
        const auto start = Clock::now();
        combined_outcomes.push_back(run_combined_attack_experiment(
            model, data.test, experiment_config("cw+bim", {cw_block(), bim_block()}, kCombinedSplit),
            1));
        combined_outcomes.push_back(run_combined_attack_experiment(
            model, data.test,
            experiment_config("cw+fgsm", {cw_block(), fgsm_block()}, kCombinedSplit), 1));
        combined_outcomes.push_back(run_combined_attack_experiment(
            model, data.test,
            experiment_config("boundary+bim", {boundary_block(2000), bim_block()}, kCombinedSplit),
            1));
        combined_outcomes.push_back(run_combined_attack_experiment(
            model, data.test,
            experiment_config("boundary+fgsm", {boundary_block(2000), fgsm_block()}, kCombinedSplit),
            1));

        bool pass = true;
        std::string detail;
        for (size_t i = 0; i < combined_outcomes.size(); ++i) {
            const double svm = accuracy_of(combined_outcomes[i].rows, "svm-rbf");
            const double stump = accuracy_of(combined_outcomes[i].rows, "stump");
            bool ok = svm >= stump - 0.01;
            if (combined_names[i] == "cw+bim") ok = ok && svm >= stump + 0.05;
            pass = pass && ok;
            detail += fmt("%s %.3f/%.3f ", combined_names[i].c_str(), svm, stump);
        }
        record(9, "combined-attack trends (table 3 analog)", pass,
               detail + fmt("(%.0fs)", elapsed(start)));
    }

    // --- criterion 10: CLI determinism ---------------------------------------
    {
        const auto start = Clock::now();
        const std::string cfg_path = (work / "exp.cfg").string();
        std::ofstream cfg_out(cfg_path);
        cfg_out << R"({
  "id": "det",
  "model": ")" << model_path << R"(",
  "dataset": {"kind": "idx", "dir": ")" << dataset_spec.dir << R"("},
  "attacks": [{"kind": "fgsm"}],
  "split": {"detector_train": 300, "detector_test": 150, "calibration": 200},
  "seed": 21
})";
        cfg_out.close();

        const std::string out_a = (work / "run_a").string();
        const std::string out_b = (work / "run_b").string();
        const std::string out_c = (work / "run_c").string();
        bool pass = true;
        pass = pass && cli_run({"run-experiment", "--config", cfg_path, "--out", out_a, "--seed",
                                "21", "--jobs", "1"}) == 0;
        pass = pass && cli_run({"run-experiment", "--config", cfg_path, "--out", out_b, "--seed",
                                "21", "--jobs", "1"}) == 0;
        pass = pass && cli_run({"run-experiment", "--config", cfg_path, "--out", out_c, "--seed",
                                "21", "--jobs", "8"}) == 0;
        std::string mismatch;
        if (pass) {
            for (const char* f : {"report.csv", "report.md", "manifest.json", "scores_train.csv",
                                  "scores_test.csv"}) {
                const std::string a = read_file(out_a + "/det/" + f);
                if (a != read_file(out_b + "/det/" + f)) mismatch += std::string(f) + "(rerun) ";
                if (a != read_file(out_c + "/det/" + f)) mismatch += std::string(f) + "(jobs8) ";
            }
            pass = mismatch.empty();
        }
        record(10, "byte-identical reruns incl. --jobs 8", pass,
               (mismatch.empty() ? "all artifacts identical " : mismatch) +
                   fmt("(%.0fs)", elapsed(start)));
    }

    // --- criterion 11: ratio exactness via CSV re-parse ----------------------
    {
        const auto start = Clock::now();
        bool pass = true;
        std::string detail;
        // single: 1:1 on the bim experiment's emitted CSVs
        {
            auto parsed = scores_from_csv(scores_to_csv(single_outcomes[1].scores_train));
            int clean = 0, adv = 0;
            for (const auto& r : parsed) (r.label == +1 ? clean : adv)++;
            pass = pass && clean == kSplit.detector_train && adv == kSplit.detector_train;
            detail += fmt("single %d:%d ", clean, adv);
        }
        // combined: 2:1:1 by provenance on cw+bim
        {
            auto parsed = scores_from_csv(scores_to_csv(combined_outcomes[0].scores_test));
            int clean = 0, cw_n = 0, bim_n = 0;
            for (const auto& r : parsed) {
                if (r.provenance == Provenance::Original) ++clean;
                if (r.provenance == Provenance::Cw) ++cw_n;
                if (r.provenance == Provenance::Bim) ++bim_n;
            }
            pass = pass && clean == kCombinedSplit.detector_test &&
                   cw_n == kCombinedSplit.detector_test / 2 &&
                   bim_n == kCombinedSplit.detector_test / 2;
            detail += fmt("combined %d:%d:%d ", clean, cw_n, bim_n);
        }
        // and on the files criterion 10 wrote through the CLI
        {
            auto parsed = load_scores_csv((work / "run_a/det/scores_train.csv").string());
            int clean = 0, adv = 0;
            for (const auto& r : parsed) (r.label == +1 ? clean : adv)++;
            pass = pass && clean == 300 && adv == 300;
            detail += fmt("cli %d:%d ", clean, adv);
        }
        record(11, "ratio exactness from re-parsed CSVs", pass,
               detail + fmt("(%.1fs)", elapsed(start)));
    }

    int failures = 0;
    for (const auto& c : results) failures += c.pass ? 0 : 1;
    std::printf("== %zu criteria, %d failed, total %.0fs ==\n", results.size(), failures,
                elapsed(suite_start));
    fs::remove_all(work);
    return failures == 0 ? 0 : 1;
}

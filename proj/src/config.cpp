#include "advdet/config.hpp"

#include <set>
#include <stdexcept>

#include "advdet/fsutil.hpp"
#include "json.hpp"

namespace advdet {

namespace {

using json = nlohmann::ordered_json;

struct Violations {
    std::vector<std::string> items;
    void add(const std::string& msg) { items.push_back(msg); }
    bool empty() const { return items.empty(); }
    std::string joined() const {
        std::string all;
        for (size_t i = 0; i < items.size(); ++i) {
            if (i) all += "; ";
            all += items[i];
        }
        return all;
    }
};

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed,
                Violations& v) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) v.add(where + ": unknown field '" + it.key() + "'");
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback, Violations& v, const std::string& where) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        v.add(where + ": field '" + key + "' has the wrong type");
        return fallback;
    }
}

DatasetSpec parse_dataset(const json& j, Violations& v) {
    DatasetSpec d;
    check_keys(j, "dataset", {"kind", "dir", "train_count", "test_count", "image_size", "seed"}, v);
    d.kind = get_or<std::string>(j, "kind", d.kind, v, "dataset");
    d.dir = get_or<std::string>(j, "dir", d.dir, v, "dataset");
    d.train_count = get_or<int>(j, "train_count", d.train_count, v, "dataset");
    d.test_count = get_or<int>(j, "test_count", d.test_count, v, "dataset");
    d.image_size = get_or<int>(j, "image_size", d.image_size, v, "dataset");
    d.seed = get_or<uint64_t>(j, "seed", d.seed, v, "dataset");
    if (d.kind != "synthetic" && d.kind != "idx")
        v.add("dataset.kind: expected synthetic|idx, got '" + d.kind + "'");
    if (d.kind == "idx" && d.dir.empty()) v.add("dataset.dir: required for kind=idx");
    if (d.kind == "synthetic") {
        if (d.train_count <= 0) v.add("dataset.train_count: must be positive");
        if (d.test_count <= 0) v.add("dataset.test_count: must be positive");
        if (d.image_size < 8) v.add("dataset.image_size: must be >= 8");
    }
    return d;
}

VictimSpec parse_victim(const json& j, Violations& v) {
    VictimSpec m;
    check_keys(j, "victim",
               {"conv1_channels", "conv2_channels", "hidden", "epochs", "learning_rate", "momentum",
                "batch_size", "seed"},
               v);
    m.conv1_channels = get_or<int>(j, "conv1_channels", m.conv1_channels, v, "victim");
    m.conv2_channels = get_or<int>(j, "conv2_channels", m.conv2_channels, v, "victim");
    m.hidden = get_or<int>(j, "hidden", m.hidden, v, "victim");
    m.epochs = get_or<int>(j, "epochs", m.epochs, v, "victim");
    m.learning_rate = get_or<double>(j, "learning_rate", m.learning_rate, v, "victim");
    m.momentum = get_or<double>(j, "momentum", m.momentum, v, "victim");
    m.batch_size = get_or<int>(j, "batch_size", m.batch_size, v, "victim");
    m.seed = get_or<uint64_t>(j, "seed", m.seed, v, "victim");
    if (m.epochs < 0) v.add("victim.epochs: must be >= 0");
    if (m.learning_rate < 0) v.add("victim.learning_rate: must be >= 0");
    if (m.batch_size <= 0) v.add("victim.batch_size: must be positive");
    return m;
}

AttackBlock parse_attack(const json& j, size_t index, Violations& v) {
    AttackBlock block;
    const std::string where = "attacks[" + std::to_string(index) + "]";
    check_keys(j, where,
               {"kind", "epsilon", "steps", "rel_stepsize", "random_start", "cw_learning_rate",
                "cw_initial_const", "cw_binary_search_steps", "cw_confidence", "seed"},
               v);
    const std::string kind = get_or<std::string>(j, "kind", "", v, where);
    if (kind.empty()) {
        v.add(where + ".kind: required (fgsm|bim|cw|boundary)");
        return block;
    }
    try {
        block.config.kind = attack_kind_from_name(kind);
    } catch (const std::exception& e) {
        v.add(where + ".kind: " + e.what());
        return block;
    }
    AttackConfig& a = block.config;
    a.steps = get_or<int>(j, "steps", 0, v, where);  // 0 = paper default for the kind
    a.rel_stepsize = get_or<double>(j, "rel_stepsize", a.rel_stepsize, v, where);
    a.random_start = get_or<bool>(j, "random_start", a.random_start, v, where);
    a.cw_learning_rate = get_or<double>(j, "cw_learning_rate", a.cw_learning_rate, v, where);
    a.cw_initial_const = get_or<double>(j, "cw_initial_const", a.cw_initial_const, v, where);
    a.cw_binary_search_steps = get_or<int>(j, "cw_binary_search_steps", a.cw_binary_search_steps, v, where);
    a.cw_confidence = get_or<double>(j, "cw_confidence", a.cw_confidence, v, where);
    a.seed = get_or<uint64_t>(j, "seed", a.seed, v, where);
    if (j.contains("epsilon")) {
        a.epsilon = get_or<double>(j, "epsilon", 0.0, v, where);
        if (a.epsilon <= 0) v.add(where + ".epsilon: must be positive when given");
    } else {
        // fgsm/bim calibrate at run time; cw/boundary have no budget
        block.calibrate = a.kind == AttackKind::Fgsm || a.kind == AttackKind::Bim;
        a.epsilon = 0.0;
    }
    if (a.steps < 0) v.add(where + ".steps: must be >= 1");
    if (a.rel_stepsize <= 0) v.add(where + ".rel_stepsize: must be positive");
    if (a.cw_binary_search_steps < 1) v.add(where + ".cw_binary_search_steps: must be >= 1");
    return block;
}

ExperimentConfig parse_config(const json& root, const std::string& verb, const std::string& path) {
    Violations v;
    check_keys(root, "config",
               {"id", "model", "dataset", "victim", "attacks", "detector", "score_space", "split",
                "folds", "seed", "scores_train", "scores_test", "detector_file", "attack_dirs",
                "attack_pool"},
               v);

    ExperimentConfig c;
    c.id = get_or<std::string>(root, "id", "", v, "config");
    c.model_path = get_or<std::string>(root, "model", "", v, "config");
    if (root.contains("dataset")) c.dataset = parse_dataset(root.at("dataset"), v);
    if (root.contains("victim")) c.victim = parse_victim(root.at("victim"), v);
    if (root.contains("attacks")) {
        const json& attacks = root.at("attacks");
        if (!attacks.is_array()) {
            v.add("attacks: must be an array of attack blocks");
        } else {
            for (size_t i = 0; i < attacks.size(); ++i)
                c.attacks.push_back(parse_attack(attacks.at(i), i, v));
        }
    }
    c.detector = get_or<std::string>(root, "detector", c.detector, v, "config");
    if (c.detector != "svm" && c.detector != "stump" && c.detector != "both")
        v.add("detector: expected svm|stump|both, got '" + c.detector + "'");
    const std::string space = get_or<std::string>(root, "score_space", "logits", v, "config");
    if (space == "logits" || space == "softmax")
        c.score_space = space == "logits" ? ScoreSpace::Logits : ScoreSpace::Softmax;
    else
        v.add("score_space: expected logits|softmax, got '" + space + "'");
    if (root.contains("split")) {
        const json& s = root.at("split");
        check_keys(s, "split", {"detector_train", "detector_test", "calibration"}, v);
        c.split.detector_train = get_or<int>(s, "detector_train", c.split.detector_train, v, "split");
        c.split.detector_test = get_or<int>(s, "detector_test", c.split.detector_test, v, "split");
        c.split.calibration = get_or<int>(s, "calibration", c.split.calibration, v, "split");
        if (c.split.detector_train <= 0) v.add("split.detector_train: must be positive");
        if (c.split.detector_test <= 0) v.add("split.detector_test: must be positive");
        if (c.split.calibration < 0) v.add("split.calibration: must be >= 0");
    }
    c.folds = get_or<int>(root, "folds", c.folds, v, "config");
    if (c.folds < 2) v.add("folds: must be >= 2");
    c.seed = get_or<uint64_t>(root, "seed", c.seed, v, "config");
    c.scores_train_path = get_or<std::string>(root, "scores_train", "", v, "config");
    c.scores_test_path = get_or<std::string>(root, "scores_test", "", v, "config");
    c.detector_path = get_or<std::string>(root, "detector_file", "", v, "config");
    if (root.contains("attack_dirs"))
        c.attack_dirs = get_or<std::vector<std::string>>(root, "attack_dirs", {}, v, "config");
    c.attack_pool = get_or<int>(root, "attack_pool", c.attack_pool, v, "config");
    if (c.attack_pool <= 0) v.add("attack_pool: must be positive");

    // verb-specific requirements
    if (verb == "train-model") {
        // dataset + victim defaults suffice
    } else if (verb == "calibrate" || verb == "attack" || verb == "run-experiment") {
        if (c.model_path.empty()) v.add("model: required for verb " + verb);
        if (c.attacks.empty()) v.add("attacks: at least one attack block required for verb " + verb);
        if (verb == "attack" && c.attacks.size() != 1)
            v.add("attacks: verb attack takes exactly one attack block, got " +
                  std::to_string(c.attacks.size()));
        if (verb == "run-experiment" && c.attacks.size() > 2)
            v.add("attacks: run-experiment takes 1 (single) or 2 (combined) attacks, got " +
                  std::to_string(c.attacks.size()));
    } else if (verb == "build-scores") {
        if (c.model_path.empty()) v.add("model: required for verb build-scores");
        if (c.attack_dirs.empty() || c.attack_dirs.size() > 2)
            v.add("attack_dirs: build-scores takes 1 or 2 attack result directories");
    } else if (verb == "train-detector") {
        if (c.scores_train_path.empty()) v.add("scores_train: required for verb train-detector");
    } else if (verb == "evaluate") {
        if (c.detector_path.empty()) v.add("detector_file: required for verb evaluate");
        if (c.scores_test_path.empty()) v.add("scores_test: required for verb evaluate");
    }

    if (c.id.empty()) {
        c.id = verb == "run-experiment" && !c.attacks.empty()
                   ? (c.attacks.size() == 2 ? std::string(attack_kind_name(c.attacks[0].config.kind)) +
                                                  "+" + attack_kind_name(c.attacks[1].config.kind)
                                            : std::string(attack_kind_name(c.attacks[0].config.kind))) +
                         "-seed" + std::to_string(c.seed)
                   : verb;
    }

    if (!v.empty()) throw std::invalid_argument(path + ": " + v.joined());
    return c;
}

json attack_to_json(const AttackBlock& block) {
    json a;
    a["kind"] = attack_kind_name(block.config.kind);
    if (block.calibrate)
        a["epsilon"] = "calibrated";
    else if (block.config.kind == AttackKind::Fgsm || block.config.kind == AttackKind::Bim)
        a["epsilon"] = block.config.epsilon;
    a["steps"] = block.config.effective_steps();
    if (block.config.kind == AttackKind::Bim) {
        a["rel_stepsize"] = block.config.rel_stepsize;
        a["random_start"] = block.config.random_start;
    }
    if (block.config.kind == AttackKind::Cw) {
        a["cw_learning_rate"] = block.config.cw_learning_rate;
        a["cw_initial_const"] = block.config.cw_initial_const;
        a["cw_binary_search_steps"] = block.config.cw_binary_search_steps;
        a["cw_confidence"] = block.config.cw_confidence;
    }
    return a;
}

}  // namespace

const char* score_space_name(ScoreSpace s) { return s == ScoreSpace::Logits ? "logits" : "softmax"; }

ScoreSpace score_space_from_name(const std::string& name) {
    if (name == "logits") return ScoreSpace::Logits;
    if (name == "softmax") return ScoreSpace::Softmax;
    throw std::invalid_argument("unknown score space '" + name + "' (expected logits|softmax)");
}

ExperimentConfig validate_config(const std::string& path, const std::string& verb) {
    if (!file_exists(path)) throw std::invalid_argument("config file not found: " + path);
    return validate_config_text(read_file(path), verb, path);
}

ExperimentConfig validate_config_text(const std::string& text, const std::string& verb,
                                      const std::string& path) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(path + ": invalid JSON: " + e.what());
    }
    if (!root.is_object()) throw std::invalid_argument(path + ": config must be a JSON object");
    return parse_config(root, verb, path);
}

std::string config_to_json(const ExperimentConfig& c) {
    json root;
    root["id"] = c.id;
    if (!c.model_path.empty()) root["model"] = c.model_path;
    json d;
    d["kind"] = c.dataset.kind;
    if (!c.dataset.dir.empty()) d["dir"] = c.dataset.dir;
    if (c.dataset.kind == "synthetic") {
        d["train_count"] = c.dataset.train_count;
        d["test_count"] = c.dataset.test_count;
        d["image_size"] = c.dataset.image_size;
        d["seed"] = c.dataset.seed;
    }
    root["dataset"] = std::move(d);
    json m;
    m["conv1_channels"] = c.victim.conv1_channels;
    m["conv2_channels"] = c.victim.conv2_channels;
    m["hidden"] = c.victim.hidden;
    m["epochs"] = c.victim.epochs;
    m["learning_rate"] = c.victim.learning_rate;
    m["momentum"] = c.victim.momentum;
    m["batch_size"] = c.victim.batch_size;
    m["seed"] = c.victim.seed;
    root["victim"] = std::move(m);
    json attacks = json::array();
    for (const AttackBlock& b : c.attacks) attacks.push_back(attack_to_json(b));
    root["attacks"] = std::move(attacks);
    root["detector"] = c.detector;
    root["score_space"] = score_space_name(c.score_space);
    json s;
    s["detector_train"] = c.split.detector_train;
    s["detector_test"] = c.split.detector_test;
    s["calibration"] = c.split.calibration;
    root["split"] = std::move(s);
    root["folds"] = c.folds;
    root["seed"] = c.seed;
    return root.dump(2);
}

}  // namespace advdet

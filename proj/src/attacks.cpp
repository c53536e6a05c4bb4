#include "advdet/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "advdet/parallel.hpp"
#include "advdet/util.hpp"

namespace advdet {

const char* attack_kind_name(AttackKind k) {
    switch (k) {
        case AttackKind::Fgsm: return "fgsm";
        case AttackKind::Bim: return "bim";
        case AttackKind::Cw: return "cw";
        case AttackKind::Boundary: return "boundary";
    }
    return "?";
}

AttackKind attack_kind_from_name(const std::string& name) {
    if (name == "fgsm") return AttackKind::Fgsm;
    if (name == "bim") return AttackKind::Bim;
    if (name == "cw") return AttackKind::Cw;
    if (name == "boundary") return AttackKind::Boundary;
    throw std::invalid_argument("unknown attack '" + name + "' (expected fgsm|bim|cw|boundary)");
}

int AttackConfig::effective_steps() const {
    if (steps > 0) return steps;
    switch (kind) {
        case AttackKind::Fgsm: return 1;
        case AttackKind::Bim: return 100;
        case AttackKind::Cw: return 1000;
        case AttackKind::Boundary: return 25000;
    }
    return 1;
}

void AttackConfig::validate() const {
    if (epsilon < 0) throw std::invalid_argument("attack config: epsilon must be >= 0");
    if (steps < 0) throw std::invalid_argument("attack config: steps must be >= 1 (or 0 for default)");
    if (rel_stepsize <= 0) throw std::invalid_argument("attack config: rel_stepsize must be > 0");
    if (cw_learning_rate <= 0) throw std::invalid_argument("attack config: cw_learning_rate must be > 0");
    if (cw_initial_const <= 0) throw std::invalid_argument("attack config: cw_initial_const must be > 0");
    if (cw_binary_search_steps < 1)
        throw std::invalid_argument("attack config: cw_binary_search_steps must be >= 1");
    if (cw_confidence < 0) throw std::invalid_argument("attack config: cw_confidence must be >= 0");
}

namespace {

Tensor as_batch(const Tensor& image) {
    if (image.dim() == 3) return Tensor({1, image.shape[0], image.shape[1], image.shape[2]}, image.data);
    if (image.dim() == 4 && image.shape[0] == 1) return image;
    throw std::invalid_argument("attack: expected a single image, got " + image.shape_str());
}

int argmax_row(const float* row, int k) {
    int best = 0;
    for (int i = 1; i < k; ++i)
        if (row[i] > row[best]) best = i;
    return best;
}

AdversarialExample finish(const Classifier& model, const Tensor& original, Tensor perturbed, int y,
                          AttackKind kind) {
    AdversarialExample ex;
    ex.original = original;
    ex.true_label = y;
    ex.attack = kind;
    ex.predicted_label = model.predict(perturbed);
    ex.perturbation_norm = l2_distance(perturbed, original);
    ex.perturbed = std::move(perturbed);
    ex.success = ex.predicted_label != y;
    return ex;
}

}  // namespace

AdversarialExample fgsm(const Classifier& model, const Tensor& x, int y, double epsilon) {
    if (epsilon < 0) throw std::invalid_argument("fgsm: epsilon must be >= 0");
    Tensor grad = input_gradient(model, x, y);
    Tensor perturbed = x;
    const float e = static_cast<float>(epsilon);
    for (size_t i = 0; i < perturbed.data.size(); ++i) {
        const float g = grad.data[i];
        if (g > 0.0f)
            perturbed.data[i] += e;
        else if (g < 0.0f)
            perturbed.data[i] -= e;
    }
    return finish(model, x, clip01(std::move(perturbed)), y, AttackKind::Fgsm);
}

namespace {

// Scales delta so that ||delta|| <= radius.
void project_l2_ball(std::vector<float>& delta, double radius) {
    double norm2 = 0.0;
    for (float v : delta) norm2 += static_cast<double>(v) * v;
    const double norm = std::sqrt(norm2);
    if (norm > radius && norm > 0.0) {
        const float scale = static_cast<float>(radius / norm);
        for (float& v : delta) v *= scale;
    }
}

}  // namespace

AdversarialExample bim(const Classifier& model, const Tensor& x, int y, double epsilon, int steps,
                       double rel_stepsize, bool random_start, uint64_t seed) {
    if (epsilon <= 0 && (steps > 0 || random_start))
        throw std::invalid_argument("bim: epsilon must be > 0");
    if (steps < 0) throw std::invalid_argument("bim: steps must be >= 0");
    const size_t n = x.data.size();
    Tensor cur = x;

    if (random_start) {
        // uniform point in the epsilon-ball: uniform direction, radius
        // epsilon * U^(1/n)
        Rng rng(seed);
        std::vector<double> u(n);
        double un = 0.0;
        for (size_t i = 0; i < n; ++i) {
            u[i] = rng.normal();
            un += u[i] * u[i];
        }
        un = std::sqrt(un);
        if (un > 0.0) {
            const double radius = epsilon * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
            for (size_t i = 0; i < n; ++i)
                cur.data[i] = static_cast<float>(cur.data[i] + radius * u[i] / un);
        }
        cur = clip01(std::move(cur));
    }

    for (int step = 0; step < steps; ++step) {
        Tensor grad = input_gradient(model, cur, y);
        const double gnorm = l2_norm(grad);
        if (gnorm < 1e-12) break;  // flat loss surface, nothing to follow
        const float scale = static_cast<float>(rel_stepsize * epsilon / gnorm);
        std::vector<float> delta(n);
        for (size_t i = 0; i < n; ++i) delta[i] = cur.data[i] + scale * grad.data[i] - x.data[i];
        project_l2_ball(delta, epsilon);
        for (size_t i = 0; i < n; ++i) cur.data[i] = x.data[i] + delta[i];
        cur = clip01(std::move(cur));
    }
    return finish(model, x, std::move(cur), y, AttackKind::Bim);
}

AdversarialExample carlini_wagner(const Classifier& model, const Tensor& x, int y,
                                  const AttackConfig& config) {
    config.validate();
    const size_t n = x.data.size();
    const int K = model.num_classes();
    const int inner_steps = config.effective_steps();

    // boxing transform, clamped away from the open-interval endpoints
    std::vector<float> w0(n);
    for (size_t i = 0; i < n; ++i) {
        const double xi = std::clamp(static_cast<double>(x.data[i]), 1e-6, 1.0 - 1e-6);
        w0[i] = static_cast<float>(std::atanh(2.0 * xi - 1.0));
    }

    double c = config.cw_initial_const;
    double c_low = 0.0;
    double c_high = std::numeric_limits<double>::infinity();

    Tensor best_perturbed;
    int best_pred = y;
    double best_norm = std::numeric_limits<double>::infinity();

    Tensor batch({1, x.shape[0], x.shape[1], x.shape[2]});
    for (int round = 0; round < config.cw_binary_search_steps; ++round) {
        std::vector<float> w = w0;
        std::vector<float> adam_m(n, 0.0f), adam_v(n, 0.0f);
        bool round_success = false;

        for (int step = 1; step <= inner_steps; ++step) {
            for (size_t i = 0; i < n; ++i)
                batch.data[i] = static_cast<float>((std::tanh(static_cast<double>(w[i])) + 1.0) * 0.5);

            ForwardTape tape = model.forward_tape(batch);
            const float* scores = tape.acts.back().data.data();

            int other = -1;
            for (int k = 0; k < K; ++k) {
                if (k == y) continue;
                if (other < 0 || scores[k] > scores[other]) other = k;
            }
            const int pred = argmax_row(scores, K);

            double norm2 = 0.0;
            for (size_t i = 0; i < n; ++i) {
                const double d = static_cast<double>(batch.data[i]) - x.data[i];
                norm2 += d * d;
            }

            if (pred != y) {
                round_success = true;
                const double norm = std::sqrt(norm2);
                if (norm < best_norm) {
                    best_norm = norm;
                    best_pred = pred;
                    best_perturbed = Tensor({x.shape[0], x.shape[1], x.shape[2]},
                                            std::vector<float>(batch.data));
                }
            }

            const double margin = static_cast<double>(scores[y]) - scores[other];
            const double hinge = std::max(margin, -config.cw_confidence);
            const double loss = norm2 + c * hinge;
            if (!std::isfinite(loss)) break;  // abort this c-branch, keep searching

            Tensor dimage;
            if (margin > -config.cw_confidence) {
                Tensor dscores({1, K});
                dscores.data[y] = static_cast<float>(c);
                dscores.data[other] = static_cast<float>(-c);
                dimage = model.backward_input(tape, dscores);
            }

            for (size_t i = 0; i < n; ++i) {
                double g = 2.0 * (static_cast<double>(batch.data[i]) - x.data[i]);
                if (!dimage.data.empty()) g += dimage.data[i];
                // d perturbed / d w = 2 p (1 - p)
                const double p = batch.data[i];
                g *= 2.0 * p * (1.0 - p);
                adam_m[i] = static_cast<float>(0.9 * adam_m[i] + 0.1 * g);
                adam_v[i] = static_cast<float>(0.999 * adam_v[i] + 0.001 * g * g);
                const double mhat = adam_m[i] / (1.0 - std::pow(0.9, step));
                const double vhat = adam_v[i] / (1.0 - std::pow(0.999, step));
                w[i] = static_cast<float>(w[i] -
                                          config.cw_learning_rate * mhat / (std::sqrt(vhat) + 1e-8));
            }
        }

        if (round_success)
            c_high = c;
        else
            c_low = std::max(c_low, c);
        if (std::isfinite(c_high))
            c = 0.5 * (c_low + c_high);
        else
            c *= 10.0;
    }

    if (best_perturbed.data.empty()) {
        // no constant produced a misclassification
        return finish(model, x, x, y, AttackKind::Cw);
    }
    AdversarialExample ex;
    ex.original = x;
    ex.true_label = y;
    ex.attack = AttackKind::Cw;
    ex.predicted_label = best_pred;
    ex.perturbation_norm = best_norm;
    ex.perturbed = std::move(best_perturbed);
    ex.success = true;
    return ex;
}

AdversarialExample boundary_attack(const Classifier& model, const Tensor& x, int y, int steps,
                                   uint64_t seed, const std::function<void(const Tensor&)>& on_accept) {
    if (steps < 0) throw std::invalid_argument("boundary_attack: steps must be >= 0");
    Rng rng(seed);
    const size_t n = x.data.size();

    Tensor z({1, x.shape[0], x.shape[1], x.shape[2]});
    bool found_start = false;
    for (int attempt = 0; attempt < 1000 && !found_start; ++attempt) {
        for (size_t i = 0; i < n; ++i) z.data[i] = static_cast<float>(rng.uniform());
        found_start = model.predict(z) != y;
    }
    if (!found_start) {
        AdversarialExample ex = finish(model, x, x, y, AttackKind::Boundary);
        ex.success = ex.predicted_label != y;  // attack failed unless x was already misclassified
        return ex;
    }
    if (on_accept) on_accept(z);

    auto distance_to_x = [&](const Tensor& t) {
        double acc = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double d = static_cast<double>(t.data[i]) - x.data[i];
            acc += d * d;
        }
        return std::sqrt(acc);
    };

    Tensor best = z;
    double best_norm = distance_to_x(z);
    int best_pred = model.predict(z);

    double sigma = 1e-2, delta = 1e-2;
    int orth_trials = 0, orth_hits = 0;
    int total_trials = 0, total_hits = 0;

    Tensor sphere({1, x.shape[0], x.shape[1], x.shape[2]});
    Tensor contracted({1, x.shape[0], x.shape[1], x.shape[2]});

    for (int step = 0; step < steps; ++step) {
        const double dist = distance_to_x(z);
        if (dist < 1e-7) break;  // effectively at the original image

        // orthogonal spherical proposal
        std::vector<double> noise(n);
        double dot = 0.0;
        for (size_t i = 0; i < n; ++i) noise[i] = rng.normal();
        std::vector<double> dir(n);
        for (size_t i = 0; i < n; ++i) dir[i] = (static_cast<double>(x.data[i]) - z.data[i]) / dist;
        for (size_t i = 0; i < n; ++i) dot += noise[i] * dir[i];
        double nn = 0.0;
        for (size_t i = 0; i < n; ++i) {
            noise[i] -= dot * dir[i];
            nn += noise[i] * noise[i];
        }
        nn = std::sqrt(nn);
        if (nn < 1e-12) continue;
        const double noise_scale = sigma * dist / nn;
        double cand_dist2 = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double v = z.data[i] + noise_scale * noise[i] - x.data[i];
            cand_dist2 += v * v;
        }
        const double reproject = dist / std::sqrt(cand_dist2);
        for (size_t i = 0; i < n; ++i) {
            const double v =
                x.data[i] + (z.data[i] + noise_scale * noise[i] - x.data[i]) * reproject;
            sphere.data[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }

        ++orth_trials;
        const int sphere_pred = model.predict(sphere);
        if (sphere_pred != y) {
            ++orth_hits;
            // contract toward the original
            ++total_trials;
            for (size_t i = 0; i < n; ++i)
                contracted.data[i] =
                    static_cast<float>(sphere.data[i] + delta * (x.data[i] - sphere.data[i]));
            const int contracted_pred = model.predict(contracted);
            if (contracted_pred != y) {
                ++total_hits;
                z.data = contracted.data;
                if (on_accept) on_accept(z);
                const double d2 = distance_to_x(z);
                if (d2 < best_norm) {
                    best_norm = d2;
                    best.data = z.data;
                    best_pred = contracted_pred;
                }
            } else {
                z.data = sphere.data;
                if (on_accept) on_accept(z);
                const double d2 = distance_to_x(z);
                if (d2 < best_norm) {
                    best_norm = d2;
                    best.data = z.data;
                    best_pred = sphere_pred;
                }
            }
        }

        // multiplicative adaptation over 10-trial windows
        if (orth_trials >= 10) {
            const double rate = static_cast<double>(orth_hits) / orth_trials;
            if (rate > 0.7)
                sigma *= 1.5;
            else if (rate < 0.3)
                sigma /= 1.5;
            sigma = std::clamp(sigma, 1e-7, 1e2);
            orth_trials = orth_hits = 0;
        }
        if (total_trials >= 10) {
            const double rate = static_cast<double>(total_hits) / total_trials;
            if (rate > 0.35)
                delta *= 1.5;
            else if (rate < 0.15)
                delta /= 1.5;
            delta = std::clamp(delta, 1e-7, 0.5);
            total_trials = total_hits = 0;
        }
    }

    AdversarialExample ex;
    ex.original = x;
    ex.true_label = y;
    ex.attack = AttackKind::Boundary;
    ex.predicted_label = best_pred;
    ex.perturbation_norm = best_norm;
    ex.perturbed = Tensor({x.shape[0], x.shape[1], x.shape[2]}, std::move(best.data));
    ex.success = best_pred != y;
    return ex;
}

std::vector<AdversarialExample> attack_batch(const Classifier& model, const std::vector<Tensor>& images,
                                             const std::vector<int>& labels, const AttackConfig& config,
                                             int jobs) {
    config.validate();
    if (images.size() != labels.size())
        throw std::invalid_argument("attack_batch: image/label count mismatch");
    std::vector<AdversarialExample> out(images.size());
    parallel_for(static_cast<int64_t>(images.size()), jobs, [&](int64_t i) {
        const uint64_t seed = derived_seed(config.seed, i);
        try {
            switch (config.kind) {
                case AttackKind::Fgsm:
                    out[i] = fgsm(model, images[i], labels[i], config.epsilon);
                    break;
                case AttackKind::Bim:
                    out[i] = bim(model, images[i], labels[i], config.epsilon, config.effective_steps(),
                                 config.rel_stepsize, config.random_start, seed);
                    break;
                case AttackKind::Cw: {
                    AttackConfig per_image = config;
                    per_image.seed = seed;
                    out[i] = carlini_wagner(model, images[i], labels[i], per_image);
                    break;
                }
                case AttackKind::Boundary:
                    out[i] = boundary_attack(model, images[i], labels[i], config.effective_steps(), seed);
                    break;
            }
        } catch (const std::exception&) {
            // per-image failure must not abort the batch
            AdversarialExample ex;
            ex.original = images[i];
            ex.perturbed = images[i];
            ex.true_label = labels[i];
            ex.predicted_label = labels[i];
            ex.perturbation_norm = 0.0;
            ex.attack = config.kind;
            ex.success = false;
            out[i] = ex;
        }
    });
    return out;
}

namespace {

double measure_success_rate(const Classifier& model, const std::vector<Tensor>& images,
                            const std::vector<int>& labels, const AttackConfig& config, int jobs) {
    std::vector<AdversarialExample> results = attack_batch(model, images, labels, config, jobs);
    int hits = 0;
    for (const auto& ex : results) hits += ex.success ? 1 : 0;
    return static_cast<double>(hits) / results.size();
}

CalibrationResult bisect_epsilon(const Classifier& model, const std::vector<Tensor>& images,
                                 const std::vector<int>& labels, AttackConfig config, double target_rate,
                                 double epsilon_hi, bool evaluate_zero, int jobs) {
    if (images.empty()) throw std::invalid_argument("calibration: empty calibration set");
    double lo = 0.0, hi = epsilon_hi;
    CalibrationResult best;
    best.epsilon = -1.0;
    double best_gap = std::numeric_limits<double>::infinity();
    auto consider = [&](double eps, double rate) {
        const double gap = std::abs(rate - target_rate);
        if (gap < best_gap) {
            best_gap = gap;
            best.epsilon = eps;
            best.success_rate = rate;
        }
    };
    if (evaluate_zero) {
        config.epsilon = 0.0;
        consider(0.0, measure_success_rate(model, images, labels, config, jobs));
    }
    for (int iter = 0; iter < 20; ++iter) {
        const double mid = 0.5 * (lo + hi);
        config.epsilon = mid;
        const double rate = measure_success_rate(model, images, labels, config, jobs);
        consider(mid, rate);
        if (best_gap == 0.0 && iter >= 4) break;
        if (rate < target_rate)
            lo = mid;
        else
            hi = mid;
    }
    return best;
}

}  // namespace

CalibrationResult calibrate_fgsm_epsilon(const Classifier& model, const std::vector<Tensor>& images,
                                         const std::vector<int>& labels, double target_rate, int jobs) {
    AttackConfig config;
    config.kind = AttackKind::Fgsm;
    return bisect_epsilon(model, images, labels, config, target_rate, 1.0, true, jobs);
}

CalibrationResult calibrate_bim_epsilon(const Classifier& model, const std::vector<Tensor>& images,
                                        const std::vector<int>& labels, double target_rate, int steps,
                                        double rel_stepsize, uint64_t seed, int jobs) {
    if (images.empty()) throw std::invalid_argument("calibration: empty calibration set");
    AttackConfig config;
    config.kind = AttackKind::Bim;
    config.steps = steps;
    config.rel_stepsize = rel_stepsize;
    config.seed = seed;
    const double diameter = std::sqrt(static_cast<double>(images.front().numel()));
    return bisect_epsilon(model, images, labels, config, target_rate, diameter, false, jobs);
}

}  // namespace advdet

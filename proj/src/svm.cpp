#include "advdet/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace advdet {

double rbf_kernel(const std::vector<float>& u, const std::vector<float>& v, double gamma) {
    if (u.size() != v.size())
        throw std::invalid_argument("rbf_kernel: dimension mismatch " + std::to_string(u.size()) +
                                    " vs " + std::to_string(v.size()));
    if (gamma < 0) throw std::invalid_argument("rbf_kernel: gamma must be >= 0");
    double d2 = 0.0;
    for (size_t i = 0; i < u.size(); ++i) {
        const double d = static_cast<double>(u[i]) - v[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

double SvmModel::decision_value(const std::vector<float>& scores) const {
    if (static_cast<int>(scores.size()) != dimension())
        throw std::invalid_argument("svm predict: expected " + std::to_string(dimension()) +
                                    " scores, got " + std::to_string(scores.size()));
    std::vector<float> z(scores.size());
    for (size_t i = 0; i < scores.size(); ++i)
        z[i] = (scores[i] - feature_mean[i]) / feature_std[i];
    double f = bias;
    for (size_t s = 0; s < support_vectors.size(); ++s)
        f += dual_coefs[s] * rbf_kernel(support_vectors[s], z, gamma);
    return f;
}

int SvmModel::predict(const std::vector<float>& scores) const {
    return decision_value(scores) >= 0.0 ? +1 : -1;
}

namespace {

struct Standardization {
    std::vector<float> mean, std;
};

Standardization standardize(const std::vector<ScoreRecord>& data, std::vector<float>& x_out) {
    const size_t n = data.size();
    const size_t d = data.front().scores.size();
    Standardization st;
    st.mean.assign(d, 0.0f);
    st.std.assign(d, 0.0f);
    std::vector<double> mean(d, 0.0), var(d, 0.0);
    for (const auto& r : data) {
        if (r.scores.size() != d)
            throw std::invalid_argument("train_svm: inconsistent score dimensions");
        for (size_t j = 0; j < d; ++j) mean[j] += r.scores[j];
    }
    for (size_t j = 0; j < d; ++j) mean[j] /= n;
    for (const auto& r : data)
        for (size_t j = 0; j < d; ++j) {
            const double dv = r.scores[j] - mean[j];
            var[j] += dv * dv;
        }
    for (size_t j = 0; j < d; ++j) {
        double s = std::sqrt(var[j] / n);
        if (s < 1e-12) s = 1.0;  // constant feature: leave it centered
        st.mean[j] = static_cast<float>(mean[j]);
        st.std[j] = static_cast<float>(s);
    }
    x_out.assign(n * d, 0.0f);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < d; ++j)
            x_out[i * d + j] = static_cast<float>((data[i].scores[j] - st.mean[j]) / st.std[j]);
    return st;
}

// Kernel matrix with full precomputation for small problems and on-demand rows
// beyond it.
class KernelTable {
public:
    KernelTable(const std::vector<float>& x, size_t n, size_t d, double gamma)
        : x_(x), n_(n), d_(d), gamma_(gamma) {
        if (n_ <= 6000) {
            full_.assign(n_ * n_, 0.0f);
            for (size_t i = 0; i < n_; ++i) {
                full_[i * n_ + i] = 1.0f;
                for (size_t j = i + 1; j < n_; ++j) {
                    const float k = kernel(i, j);
                    full_[i * n_ + j] = k;
                    full_[j * n_ + i] = k;
                }
            }
        }
    }

    // row valid until the next get_row call with the same slot
    const float* get_row(size_t i, int slot) {
        if (!full_.empty()) return full_.data() + i * n_;
        auto& row = scratch_[slot];
        row.resize(n_);
        for (size_t j = 0; j < n_; ++j) row[j] = kernel(i, j);
        return row.data();
    }

private:
    float kernel(size_t i, size_t j) const {
        const float* a = x_.data() + i * d_;
        const float* b = x_.data() + j * d_;
        double d2 = 0.0;
        for (size_t t = 0; t < d_; ++t) {
            const double dv = static_cast<double>(a[t]) - b[t];
            d2 += dv * dv;
        }
        return static_cast<float>(std::exp(-gamma_ * d2));
    }

    const std::vector<float>& x_;
    size_t n_, d_;
    double gamma_;
    std::vector<float> full_;
    std::vector<float> scratch_[2];
};

}  // namespace

SvmModel train_svm_diag(const std::vector<ScoreRecord>& data, double C, double gamma, double tol,
                        int max_passes, SmoDiagnostics* diag) {
    if (data.empty()) throw std::invalid_argument("train_svm: empty dataset");
    if (C <= 0 || gamma <= 0) throw std::invalid_argument("train_svm: C and gamma must be > 0");
    if (tol <= 0) throw std::invalid_argument("train_svm: tol must be > 0");
    const size_t n = data.size();
    bool has_pos = false, has_neg = false;
    std::vector<double> y(n);
    for (size_t i = 0; i < n; ++i) {
        validate_record(data[i]);
        y[i] = data[i].label;
        (data[i].label > 0 ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg)
        throw std::invalid_argument("train_svm: training data contains a single class");

    std::vector<float> x;
    Standardization st = standardize(data, x);
    const size_t d = data.front().scores.size();
    KernelTable kernels(x, n, d, gamma);

    std::vector<double> alpha(n, 0.0);
    std::vector<double> grad(n, -1.0);  // gradient of 1/2 a'Qa - e'a at a=0

    auto in_up = [&](size_t i) { return (y[i] > 0 && alpha[i] < C) || (y[i] < 0 && alpha[i] > 0); };
    auto in_low = [&](size_t i) { return (y[i] < 0 && alpha[i] < C) || (y[i] > 0 && alpha[i] > 0); };

    for (int pass = 0; pass < max_passes; ++pass) {
        // maximal violating pair
        double m = -std::numeric_limits<double>::infinity();
        double M = std::numeric_limits<double>::infinity();
        size_t i = n, j = n;
        for (size_t k = 0; k < n; ++k) {
            const double v = -y[k] * grad[k];
            if (in_up(k) && v > m) {
                m = v;
                i = k;
            }
            if (in_low(k) && v < M) {
                M = v;
                j = k;
            }
        }
        if (i == n || j == n || m - M <= tol) break;

        const float* Ki = kernels.get_row(i, 0);
        const float* Kj = kernels.get_row(j, 1);

        // two-variable subproblem; eta can only degenerate for duplicate
        // points, where the clipped step still makes progress
        double eta = static_cast<double>(Ki[i]) + Kj[j] - 2.0 * Ki[j];
        if (eta <= 0) eta = 1e-12;
        const double Ei = y[i] * grad[i];  // u_i - y_i
        const double Ej = y[j] * grad[j];

        double L, H;
        const double ai_old = alpha[i], aj_old = alpha[j];
        if (y[i] != y[j]) {
            L = std::max(0.0, aj_old - ai_old);
            H = std::min(C, C + aj_old - ai_old);
        } else {
            L = std::max(0.0, ai_old + aj_old - C);
            H = std::min(C, ai_old + aj_old);
        }
        double aj = aj_old + y[j] * (Ei - Ej) / eta;
        aj = std::clamp(aj, L, H);
        double ai = ai_old + y[i] * y[j] * (aj_old - aj);
        // snap to exact bounds so the working-set membership tests stay
        // crisp; a float-epsilon distance to a bound would otherwise yield
        // degenerate zero-progress pairs
        auto snap = [C](double a) {
            if (a < 1e-12 * C) return 0.0;
            if (a > C * (1.0 - 1e-12)) return C;
            return a;
        };
        ai = snap(std::clamp(ai, 0.0, C));
        aj = snap(aj);
        if (std::abs(aj - aj_old) < 1e-15 && std::abs(ai - ai_old) < 1e-15) break;  // stalled

        alpha[i] = ai;
        alpha[j] = aj;
        const double di = ai - ai_old, dj = aj - aj_old;
        for (size_t k = 0; k < n; ++k)
            grad[k] += y[k] * (y[i] * di * Ki[k] + y[j] * dj * Kj[k]);
    }

    // bias from free support vectors, midpoint of the KKT interval otherwise
    double b = 0.0;
    {
        double sum = 0.0;
        int free_count = 0;
        double m = -std::numeric_limits<double>::infinity();
        double M = std::numeric_limits<double>::infinity();
        for (size_t k = 0; k < n; ++k) {
            const double v = -y[k] * grad[k];
            if (alpha[k] > 1e-12 && alpha[k] < C - 1e-12) {
                sum += v;
                ++free_count;
            }
            if (in_up(k)) m = std::max(m, v);
            if (in_low(k)) M = std::min(M, v);
        }
        b = free_count > 0 ? sum / free_count : 0.5 * (m + M);
    }

    SvmModel model;
    model.gamma = gamma;
    model.C = C;
    model.bias = b;
    model.feature_mean = st.mean;
    model.feature_std = st.std;
    for (size_t k = 0; k < n; ++k) {
        if (alpha[k] > 1e-12) {
            model.support_vectors.emplace_back(x.begin() + k * d, x.begin() + (k + 1) * d);
            model.dual_coefs.push_back(alpha[k] * y[k]);
        }
    }

    if (diag) {
        diag->alpha = alpha;
        diag->alpha_dot_y = 0.0;
        for (size_t k = 0; k < n; ++k) diag->alpha_dot_y += alpha[k] * y[k];
        diag->max_kkt_violation = 0.0;
        for (size_t k = 0; k < n; ++k) {
            // u_k = y_k (grad_k + 1)
            const double fk = y[k] * (grad[k] + 1.0) + b;
            const double margin = y[k] * fk;
            double viol = 0.0;
            if (alpha[k] <= 1e-12)
                viol = std::max(0.0, 1.0 - margin);
            else if (alpha[k] >= C - 1e-12)
                viol = std::max(0.0, margin - 1.0);
            else
                viol = std::abs(margin - 1.0);
            diag->max_kkt_violation = std::max(diag->max_kkt_violation, viol);
        }
    }
    return model;
}

SvmModel train_svm(const std::vector<ScoreRecord>& data, double C, double gamma, double tol,
                   int max_passes) {
    return train_svm_diag(data, C, gamma, tol, max_passes, nullptr);
}

}  // namespace advdet

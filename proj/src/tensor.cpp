#include "advdet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace advdet {

int64_t shape_numel(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) {
        if (d <= 0) throw std::invalid_argument("Tensor: shape entries must be positive");
        n *= d;
    }
    return n;
}

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(shape_numel(shape)), 0.0f);
}

Tensor::Tensor(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
    if (shape_numel(shape) != static_cast<int64_t>(data.size()))
        throw std::invalid_argument("Tensor: shape " + shape_str() + " does not match data length " +
                                    std::to_string(data.size()));
}

Tensor Tensor::zeros(const std::vector<int>& s) { return Tensor(s); }

Tensor Tensor::full(const std::vector<int>& s, float value) {
    Tensor t(s);
    std::fill(t.data.begin(), t.data.end(), value);
    return t;
}

bool Tensor::finite() const {
    for (float v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

void Tensor::require_finite(const char* context) const {
    if (!finite()) throw std::runtime_error(std::string(context) + ": tensor contains NaN or Inf");
}

std::string Tensor::shape_str() const {
    std::string s = "(";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    s += ")";
    return s;
}

double l2_norm(const Tensor& t) {
    double acc = 0.0;
    for (float v : t.data) acc += static_cast<double>(v) * v;
    return std::sqrt(acc);
}

double l2_distance(const Tensor& a, const Tensor& b) {
    if (a.data.size() != b.data.size())
        throw std::invalid_argument("l2_distance: size mismatch " + a.shape_str() + " vs " + b.shape_str());
    double acc = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        double d = static_cast<double>(a.data[i]) - b.data[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

Tensor clip01(Tensor t) {
    for (float& v : t.data) v = std::min(1.0f, std::max(0.0f, v));
    return t;
}

}  // namespace advdet

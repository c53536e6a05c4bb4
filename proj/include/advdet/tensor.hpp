#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace advdet {

// Dense row-major float32 tensor. Shapes stay small (images, batches of
// class scores), so a flat std::vector is all the storage we need.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s);
    Tensor(std::vector<int> s, std::vector<float> d);

    static Tensor zeros(const std::vector<int>& s);
    static Tensor full(const std::vector<int>& s, float value);

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int dim() const { return static_cast<int>(shape.size()); }

    bool finite() const;
    void require_finite(const char* context) const;
    std::string shape_str() const;
};

int64_t shape_numel(const std::vector<int>& s);

// Euclidean norms with 64-bit accumulation.
double l2_norm(const Tensor& t);
double l2_distance(const Tensor& a, const Tensor& b);

Tensor clip01(Tensor t);

}  // namespace advdet

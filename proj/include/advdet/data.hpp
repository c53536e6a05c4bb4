#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advdet/tensor.hpp"

namespace advdet {

// A single image with pixels in [0,1] and a class index in [0,K).
struct LabeledImage {
    Tensor pixels;  // (C,H,W)
    int label = 0;
};

// Procedural 10-class glyph dataset: grayscale shapes (ring, bars, cross,
// X, outlines, disk, ...) rendered with random rotation, scale, offset,
// stroke width and pixel noise. Fully determined by (count, image_size,
// seed); image i depends only on seed + i, so train/test streams with
// different seeds never overlap.
std::vector<LabeledImage> make_glyph_dataset(int count, int image_size, uint64_t seed);

int glyph_class_count();

// IDX (MNIST-layout) binary files: big-endian magic + dims header, uint8
// payload. Pixels are stored as round(v*255) and read back as v/255.
void write_idx_images(const std::string& path, const std::vector<LabeledImage>& images);
void write_idx_labels(const std::string& path, const std::vector<LabeledImage>& images);
std::vector<LabeledImage> read_idx_dataset(const std::string& images_path,
                                           const std::string& labels_path);

}  // namespace advdet

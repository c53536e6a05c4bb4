#include "advdet/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "advdet/fsutil.hpp"
#include "advdet/util.hpp"

namespace advdet {

namespace {

struct Vec2 {
    double x, y;
};

double dist_segment(Vec2 p, Vec2 a, Vec2 b) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double ex = a.x + t * dx - p.x, ey = a.y + t * dy - p.y;
    return std::sqrt(ex * ex + ey * ey);
}

double dist_ring(Vec2 p, double r) { return std::abs(std::sqrt(p.x * p.x + p.y * p.y) - r); }

double dist_disk(Vec2 p, double r) {
    return std::max(0.0, std::sqrt(p.x * p.x + p.y * p.y) - r);
}

// Signed-distance sketch of each class in unit coordinates [-1,1]^2.
double glyph_distance(int cls, Vec2 q) {
    auto seg = [&](double ax, double ay, double bx, double by) {
        return dist_segment(q, {ax, ay}, {bx, by});
    };
    switch (cls) {
        case 0: return dist_ring(q, 0.62);
        case 1: return seg(0.0, -0.7, 0.0, 0.7);
        case 2: return seg(-0.7, 0.0, 0.7, 0.0);
        case 3: return std::min(seg(0.0, -0.7, 0.0, 0.7), seg(-0.7, 0.0, 0.7, 0.0));
        case 4:
            return std::min(seg(-0.6, -0.6, 0.6, 0.6), seg(-0.6, 0.6, 0.6, -0.6));
        case 5: {
            const double s = 0.55;
            double d = seg(-s, -s, s, -s);
            d = std::min(d, seg(s, -s, s, s));
            d = std::min(d, seg(s, s, -s, s));
            return std::min(d, seg(-s, s, -s, -s));
        }
        case 6: {
            double d = seg(0.0, -0.65, 0.6, 0.55);
            d = std::min(d, seg(0.6, 0.55, -0.6, 0.55));
            return std::min(d, seg(-0.6, 0.55, 0.0, -0.65));
        }
        case 7: return seg(-0.6, -0.6, 0.6, 0.6);
        case 8: return std::min(seg(-0.45, -0.65, -0.45, 0.65), seg(0.45, -0.65, 0.45, 0.65));
        case 9: return dist_disk(q, 0.38);
        default: throw std::invalid_argument("glyph_distance: unknown class");
    }
}

}  // namespace

int glyph_class_count() { return 10; }

std::vector<LabeledImage> make_glyph_dataset(int count, int image_size, uint64_t seed) {
    if (count < 0) throw std::invalid_argument("make_glyph_dataset: negative count");
    if (image_size < 8) throw std::invalid_argument("make_glyph_dataset: image_size must be >= 8");
    std::vector<LabeledImage> out;
    out.reserve(count);
    const int S = image_size;
    for (int idx = 0; idx < count; ++idx) {
        Rng rng(derived_seed(seed, idx));
        const int cls = idx % glyph_class_count();
        const double theta = rng.uniform(-0.40, 0.40);
        const double scale = rng.uniform(0.70, 1.25);
        const double tx = rng.uniform(-0.20, 0.20);
        const double ty = rng.uniform(-0.20, 0.20);
        const double fg = rng.uniform(0.50, 1.0);
        const double bg = rng.uniform(0.0, 0.28);
        const double thickness = rng.uniform(0.08, 0.18);
        const double edge = 0.12;
        const double noise = 0.14;
        const double ct = std::cos(-theta), st = std::sin(-theta);

        Tensor pixels({1, S, S});
        for (int i = 0; i < S; ++i) {
            for (int j = 0; j < S; ++j) {
                const double px = (j + 0.5) / S * 2.0 - 1.0 - tx;
                const double py = (i + 0.5) / S * 2.0 - 1.0 - ty;
                const Vec2 q{(ct * px - st * py) / scale, (st * px + ct * py) / scale};
                const double d = glyph_distance(cls, q);
                const double cov = std::clamp((thickness - d) / edge + 0.5, 0.0, 1.0);
                double v = bg + (fg - bg) * cov + noise * rng.normal();
                // quantize like the on-disk uint8 layout so in-memory and
                // round-tripped datasets are bit-equal
                int u = static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
                pixels.data[static_cast<size_t>(i) * S + j] = static_cast<float>(u) / 255.0f;
            }
        }
        out.push_back(LabeledImage{std::move(pixels), cls});
    }
    return out;
}

namespace {

void put_u32_be(std::string& s, uint32_t v) {
    s.push_back(static_cast<char>((v >> 24) & 0xff));
    s.push_back(static_cast<char>((v >> 16) & 0xff));
    s.push_back(static_cast<char>((v >> 8) & 0xff));
    s.push_back(static_cast<char>(v & 0xff));
}

uint32_t get_u32_be(const std::string& s, size_t off) {
    if (off + 4 > s.size()) throw std::runtime_error("IDX file truncated");
    return (static_cast<uint32_t>(static_cast<unsigned char>(s[off])) << 24) |
           (static_cast<uint32_t>(static_cast<unsigned char>(s[off + 1])) << 16) |
           (static_cast<uint32_t>(static_cast<unsigned char>(s[off + 2])) << 8) |
           static_cast<uint32_t>(static_cast<unsigned char>(s[off + 3]));
}

}  // namespace

void write_idx_images(const std::string& path, const std::vector<LabeledImage>& images) {
    if (images.empty()) throw std::invalid_argument("write_idx_images: empty dataset");
    const auto& shape = images.front().pixels.shape;
    if (shape.size() != 3 || shape[0] != 1)
        throw std::invalid_argument("write_idx_images: expected single-channel (1,H,W) images");
    const int H = shape[1], W = shape[2];
    std::string buf;
    buf.reserve(16 + images.size() * static_cast<size_t>(H) * W);
    put_u32_be(buf, 0x00000803);  // idx3, uint8
    put_u32_be(buf, static_cast<uint32_t>(images.size()));
    put_u32_be(buf, static_cast<uint32_t>(H));
    put_u32_be(buf, static_cast<uint32_t>(W));
    for (const auto& img : images) {
        if (img.pixels.shape != shape)
            throw std::invalid_argument("write_idx_images: inconsistent image shapes");
        for (float v : img.pixels.data) {
            int u = static_cast<int>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
            buf.push_back(static_cast<char>(u));
        }
    }
    write_file_atomic(path, buf);
}

void write_idx_labels(const std::string& path, const std::vector<LabeledImage>& images) {
    std::string buf;
    put_u32_be(buf, 0x00000801);  // idx1, uint8
    put_u32_be(buf, static_cast<uint32_t>(images.size()));
    for (const auto& img : images) buf.push_back(static_cast<char>(img.label));
    write_file_atomic(path, buf);
}

std::vector<LabeledImage> read_idx_dataset(const std::string& images_path,
                                           const std::string& labels_path) {
    const std::string ib = read_file(images_path);
    const std::string lb = read_file(labels_path);
    if (get_u32_be(ib, 0) != 0x00000803)
        throw std::runtime_error(images_path + ": not an idx3-ubyte image file");
    if (get_u32_be(lb, 0) != 0x00000801)
        throw std::runtime_error(labels_path + ": not an idx1-ubyte label file");
    const uint32_t n = get_u32_be(ib, 4);
    const uint32_t H = get_u32_be(ib, 8);
    const uint32_t W = get_u32_be(ib, 12);
    if (get_u32_be(lb, 4) != n)
        throw std::runtime_error("IDX image/label counts differ: " + std::to_string(n) + " vs " +
                                 std::to_string(get_u32_be(lb, 4)));
    const size_t stride = static_cast<size_t>(H) * W;
    if (ib.size() != 16 + n * stride) throw std::runtime_error(images_path + ": truncated payload");
    if (lb.size() != 8 + n) throw std::runtime_error(labels_path + ": truncated payload");
    std::vector<LabeledImage> out;
    out.reserve(n);
    for (uint32_t i = 0; i < n; ++i) {
        Tensor pixels({1, static_cast<int>(H), static_cast<int>(W)});
        const unsigned char* src = reinterpret_cast<const unsigned char*>(ib.data()) + 16 + i * stride;
        for (size_t j = 0; j < stride; ++j) pixels.data[j] = static_cast<float>(src[j]) / 255.0f;
        out.push_back(LabeledImage{std::move(pixels), static_cast<unsigned char>(lb[8 + i])});
    }
    return out;
}

}  // namespace advdet

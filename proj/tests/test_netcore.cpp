#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "advdet/data.hpp"
#include "advdet/model_io.hpp"
#include "advdet/net.hpp"
#include "advdet/train.hpp"
#include "advdet/util.hpp"
#include "oracle_net.hpp"

using namespace advdet;
using advdet::testing::RefNet;

namespace {

Tensor random_image(Rng& rng, int c, int h, int w) {
    Tensor t({c, h, w});
    for (float& v : t.data) v = static_cast<float>(rng.uniform());
    return t;
}

Classifier small_conv_net(uint64_t seed) {
    // conv + pool + conv + dense over an 8x8 input
    return Classifier({1, 8, 8},
                      {conv2d(1, 3, 3), relu(), maxpool2(), conv2d(3, 4, 2), relu(), flatten(),
                       dense(4 * 2 * 2, 5)},
                      5, seed);
}

}  // namespace

TEST_CASE("tensor shape/data consistency is enforced") {
    CHECK_THROWS_AS(Tensor({2, 3}, {1.0f, 2.0f}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor({0, 3}), std::invalid_argument);
    Tensor t({2, 2}, {1, 2, 3, 4});
    CHECK(t.numel() == 4);
    t.data[1] = std::numeric_limits<float>::quiet_NaN();
    CHECK_FALSE(t.finite());
    CHECK_THROWS_AS(t.require_finite("test"), std::runtime_error);
}

TEST_CASE("identity dense layer passes scores through") {
    Classifier model({1, 1, 4}, {flatten(), dense(4, 4)}, 4, 0);
    auto& p = model.params()[1];
    std::fill(p.weight.data.begin(), p.weight.data.end(), 0.0f);
    for (int i = 0; i < 4; ++i) p.weight.data[i * 4 + i] = 1.0f;
    Tensor batch({1, 1, 1, 4}, {0.3f, -1.5f, 2.0f, 0.0f});
    Tensor scores = model.forward(batch);
    for (int i = 0; i < 4; ++i) CHECK(scores.data[i] == doctest::Approx(batch.data[i]));
}

TEST_CASE("forward returns (B, K) scores") {
    Classifier model = small_conv_net(3);
    Rng rng(4);
    Tensor batch({4, 1, 8, 8});
    for (float& v : batch.data) v = static_cast<float>(rng.uniform());
    Tensor scores = model.forward(batch);
    CHECK(scores.shape == std::vector<int>{4, 5});
}

TEST_CASE("forward rejects shape mismatches with a layer diagnostic") {
    Classifier model = small_conv_net(3);
    Tensor wrong({1, 1, 7, 7});
    CHECK_THROWS_WITH_AS(model.forward(wrong), doctest::Contains("layer 0"), std::invalid_argument);
    CHECK_THROWS_AS(model.forward(Tensor({4, 4})), std::invalid_argument);
}

TEST_CASE("layer chain validation names the offending layer") {
    CHECK_THROWS_WITH_AS(Classifier({1, 8, 8}, {conv2d(2, 3, 3)}, 5, 0),
                         doctest::Contains("layer 0 (conv2d)"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(Classifier({1, 8, 8}, {flatten(), dense(64, 5), conv2d(1, 2, 3)}, 5, 0),
                         doctest::Contains("layer 2"), std::invalid_argument);
    CHECK_THROWS_AS(Classifier({1, 8, 8}, {flatten(), dense(63, 5)}, 5, 0), std::invalid_argument);
    // final width must equal the class count
    CHECK_THROWS_AS(Classifier({1, 8, 8}, {flatten(), dense(64, 7)}, 5, 0), std::invalid_argument);
}

TEST_CASE("seeded net matches the scalar-loop reference forward") {
    Classifier model = small_conv_net(17);
    RefNet ref(model);
    Rng rng(18);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor img = random_image(rng, 1, 8, 8);
        Tensor batch({1, 1, 8, 8}, img.data);
        Tensor scores = model.forward(batch);
        std::vector<double> expected = ref.forward(advdet::testing::to_double(img));
        for (int k = 0; k < 5; ++k)
            CHECK(std::abs(scores.data[k] - expected[k]) < 1e-5);
    }
}

TEST_CASE("cross-entropy matches hand-computed values") {
    Tensor equal({1, 10});
    CHECK(cross_entropy_loss(equal, {3}) == doctest::Approx(std::log(10.0)).epsilon(1e-9));
    Tensor two({1, 2});
    CHECK(cross_entropy_loss(two, {0}) == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    // dominant true-class score drives the loss to zero
    Tensor dominant({1, 3}, {30.0f, 0.0f, 0.0f});
    CHECK(cross_entropy_loss(dominant, {0}) < 1e-8);
    CHECK(cross_entropy_loss(dominant, {0}) > 0.0);
    CHECK_THROWS_AS(cross_entropy_loss(two, {2}), std::invalid_argument);
    CHECK_THROWS_AS(cross_entropy_loss(two, {-1}), std::invalid_argument);
}

TEST_CASE("zero-weight model has zero input gradient") {
    Classifier model({1, 2, 2}, {flatten(), dense(4, 3)}, 3, 0);
    for (auto& p : model.params()) {
        std::fill(p.weight.data.begin(), p.weight.data.end(), 0.0f);
        std::fill(p.bias.data.begin(), p.bias.data.end(), 0.0f);
    }
    Tensor x({1, 2, 2}, {0.1f, 0.2f, 0.3f, 0.4f});
    Tensor g = input_gradient(model, x, 1);
    for (float v : g.data) CHECK(v == 0.0f);
}

TEST_CASE("linear-model input gradient matches the analytic formula") {
    // single dense layer + softmax, K=2: grad = W^T (softmax - onehot)
    Classifier model({1, 1, 3}, {flatten(), dense(3, 2)}, 2, 99);
    Tensor x({1, 1, 3}, {0.2f, 0.8f, 0.5f});
    Tensor scores = model.forward(Tensor({1, 1, 1, 3}, x.data));
    std::vector<double> p = softmax(scores.data.data(), 2);
    const auto& w = model.params()[1].weight;  // (2,3)
    Tensor g = input_gradient(model, x, 0);
    for (int i = 0; i < 3; ++i) {
        const double expected = (p[0] - 1.0) * w.data[0 * 3 + i] + p[1] * w.data[1 * 3 + i];
        CHECK(std::abs(g.data[i] - expected) < 1e-6);
    }
}

TEST_CASE("input gradients match central finite differences per layer type") {
    Classifier model = small_conv_net(23);  // exercises conv, relu, maxpool, flatten, dense
    RefNet ref(model);
    Rng rng(24);
    Tensor img = random_image(rng, 1, 8, 8);
    const std::vector<double> x = advdet::testing::to_double(img);
    const int label = 2;
    Tensor g = input_gradient(model, img, label);
    const double g_scale = advdet::testing::max_abs(g.data);
    int checked = 0, attempts = 0;
    while (checked < 100 && attempts < 1000) {
        ++attempts;
        const size_t i = static_cast<size_t>(rng.uniform_int(static_cast<int>(x.size())));
        const auto fd = advdet::testing::fd_input(ref, x, label, i, 1e-3);
        if (!fd.smooth) continue;  // activation-pattern kink inside the stencil
        CHECK(advdet::testing::rel_err(g.data[i], fd.value, g_scale) < 1e-3);
        ++checked;
    }
    CHECK(checked == 100);
}

TEST_CASE("parameter gradients match central finite differences") {
    Classifier model = small_conv_net(31);
    RefNet ref(model);
    Rng rng(32);
    Tensor img = random_image(rng, 1, 8, 8);
    const std::vector<double> x = advdet::testing::to_double(img);
    const int label = 4;

    ForwardTape tape = model.forward_tape(Tensor({1, 1, 8, 8}, img.data));
    auto grads = model.backward_params(tape, cross_entropy_grad(tape.acts.back(), {label}));
    for (size_t li = 0; li < model.layers().size(); ++li) {
        if (grads[li].weight.data.empty()) continue;
        const double w_scale = advdet::testing::max_abs(grads[li].weight.data);
        const double b_scale = advdet::testing::max_abs(grads[li].bias.data);
        int checked = 0, attempts = 0;
        while (checked < 20 && attempts < 200) {
            ++attempts;
            const size_t wi = static_cast<size_t>(rng.uniform_int(
                static_cast<int>(grads[li].weight.data.size())));
            const auto fd = advdet::testing::fd_param(ref, x, label, li, true, wi, 1e-3);
            if (!fd.smooth) continue;
            CHECK(advdet::testing::rel_err(grads[li].weight.data[wi], fd.value, w_scale) < 1e-3);
            ++checked;
        }
        CHECK(checked == 20);
        const size_t bi = static_cast<size_t>(rng.uniform_int(
            static_cast<int>(grads[li].bias.data.size())));
        const auto fd = advdet::testing::fd_param(ref, x, label, li, false, bi, 1e-3);
        if (fd.smooth) CHECK(advdet::testing::rel_err(grads[li].bias.data[bi], fd.value, b_scale) < 1e-3);
    }
}

TEST_CASE("predict takes the argmax with lowest-index ties") {
    Classifier model({1, 1, 3}, {flatten(), dense(3, 3)}, 3, 0);
    auto& p = model.params()[1];
    std::fill(p.weight.data.begin(), p.weight.data.end(), 0.0f);
    p.weight.data[0 * 3 + 0] = 0.1f;
    p.weight.data[1 * 3 + 0] = 0.9f;
    p.weight.data[2 * 3 + 0] = 0.3f;
    Tensor x({1, 1, 3}, {1.0f, 0.0f, 0.0f});
    CHECK(model.predict(x) == 1);  // scores (0.1, 0.9, 0.3)

    std::fill(p.weight.data.begin(), p.weight.data.end(), 0.0f);
    CHECK(model.predict(x) == 0);  // all-equal scores tie-break to class 0
}

TEST_CASE("predict agrees with forward argmax on random inputs") {
    Classifier model = small_conv_net(41);
    Rng rng(42);
    for (int i = 0; i < 1000; ++i) {
        Tensor img = random_image(rng, 1, 8, 8);
        Tensor scores = model.forward(Tensor({1, 1, 8, 8}, img.data));
        int best = 0;
        for (int k = 1; k < 5; ++k)
            if (scores.data[k] > scores.data[best]) best = k;
        CHECK(model.predict(img) == best);
    }
}

TEST_CASE("forward is pure") {
    Classifier model = small_conv_net(51);
    Rng rng(52);
    Tensor img = random_image(rng, 1, 8, 8);
    Tensor batch({1, 1, 8, 8}, img.data);
    std::vector<std::vector<float>> before;
    for (const auto& p : model.params()) {
        before.push_back(p.weight.data);
        before.push_back(p.bias.data);
    }
    const std::vector<float> input_before = batch.data;
    model.forward(batch);
    model.forward_tape(batch);
    size_t bi = 0;
    for (const auto& p : model.params()) {
        CHECK(p.weight.data == before[bi++]);
        CHECK(p.bias.data == before[bi++]);
    }
    CHECK(batch.data == input_before);
}

TEST_CASE("maxpool routes gradient to the first maximum on ties") {
    Classifier model({1, 2, 2}, {maxpool2(), flatten(), dense(1, 2)}, 2, 0);
    auto& p = model.params()[2];
    p.weight.data = {1.0f, -1.0f};
    Tensor x({1, 2, 2}, {0.7f, 0.7f, 0.7f, 0.7f});  // four-way tie
    Tensor g = input_gradient(model, x, 0);
    CHECK(g.data[0] != 0.0f);
    CHECK(g.data[1] == 0.0f);
    CHECK(g.data[2] == 0.0f);
    CHECK(g.data[3] == 0.0f);
}

namespace {

std::vector<LabeledImage> separable_blobs(int count, uint64_t seed) {
    // two linearly separable 8x8 intensity blobs
    Rng rng(seed);
    std::vector<LabeledImage> data;
    for (int i = 0; i < count; ++i) {
        const int label = i % 2;
        const double base = label == 0 ? 0.25 : 0.75;
        Tensor img({1, 8, 8});
        for (float& v : img.data)
            v = static_cast<float>(std::clamp(base + 0.08 * rng.normal(), 0.0, 1.0));
        data.push_back({std::move(img), label});
    }
    return data;
}

Classifier blob_classifier(uint64_t seed) {
    return Classifier({1, 8, 8}, {flatten(), dense(64, 2)}, 2, seed);
}

}  // namespace

TEST_CASE("training separates linearly separable blobs") {
    auto data = separable_blobs(200, 7);
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.learning_rate = 0.05;
    cfg.seed = 3;
    TrainResult r = train(blob_classifier(1), data, cfg);
    CHECK(r.final_train_accuracy >= 0.99);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
    auto data = separable_blobs(50, 9);
    Classifier model = blob_classifier(2);
    const auto before = model.params();
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.learning_rate = 0.0;
    TrainResult r = train(std::move(model), data, cfg);
    for (size_t i = 0; i < before.size(); ++i) {
        CHECK(r.model.params()[i].weight.data == before[i].weight.data);
        CHECK(r.model.params()[i].bias.data == before[i].bias.data);
    }
}

TEST_CASE("training is bit-deterministic for a fixed seed") {
    auto data = separable_blobs(120, 13);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.learning_rate = 0.05;
    cfg.seed = 21;
    TrainResult a = train(blob_classifier(5), data, cfg);
    TrainResult b = train(blob_classifier(5), data, cfg);
    for (size_t i = 0; i < a.model.params().size(); ++i) {
        CHECK(a.model.params()[i].weight.data == b.model.params()[i].weight.data);
        CHECK(a.model.params()[i].bias.data == b.model.params()[i].bias.data);
    }
}

TEST_CASE("divergence aborts with a diagnostic") {
    auto data = separable_blobs(64, 15);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.learning_rate = 1e18;
    // two dense layers so the runaway weights compound into non-finite scores
    Classifier deep({1, 8, 8}, {flatten(), dense(64, 8), relu(), dense(8, 2)}, 2, 6);
    CHECK_THROWS_AS(train(std::move(deep), data, cfg), std::runtime_error);
}

TEST_CASE("training rejects bad inputs") {
    TrainConfig cfg;
    CHECK_THROWS_AS(train(blob_classifier(6), {}, cfg), std::invalid_argument);
    auto data = separable_blobs(10, 1);
    data[3].label = 9;  // K=2 model
    CHECK_THROWS_AS(train(blob_classifier(6), data, cfg), std::invalid_argument);
}

TEST_CASE("model serialization round-trips") {
    auto data = separable_blobs(80, 33);
    TrainConfig cfg;
    cfg.epochs = 4;
    TrainResult r = train(blob_classifier(8), data, cfg);
    const std::string path = (std::filesystem::temp_directory_path() / "advdet_model_rt.bin").string();
    save_classifier(path, r.model);
    Classifier loaded = load_classifier(path);
    for (size_t i = 0; i < r.model.params().size(); ++i) {
        CHECK(loaded.params()[i].weight.data == r.model.params()[i].weight.data);
        CHECK(loaded.params()[i].bias.data == r.model.params()[i].bias.data);
    }
    Rng rng(55);
    for (int i = 0; i < 20; ++i) {
        Tensor img = random_image(rng, 1, 8, 8);
        CHECK(loaded.predict(img) == r.model.predict(img));
    }
    std::filesystem::remove(path);
}

TEST_CASE("glyph dataset is deterministic and in range") {
    auto a = make_glyph_dataset(40, 16, 5);
    auto b = make_glyph_dataset(40, 16, 5);
    auto c = make_glyph_dataset(40, 16, 6);
    REQUIRE(a.size() == 40);
    bool all_equal_other_seed = true;
    for (int i = 0; i < 40; ++i) {
        CHECK(a[i].pixels.data == b[i].pixels.data);
        CHECK(a[i].label == i % 10);
        for (float v : a[i].pixels.data) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
        if (a[i].pixels.data != c[i].pixels.data) all_equal_other_seed = false;
    }
    CHECK_FALSE(all_equal_other_seed);
}

TEST_CASE("IDX files round-trip the dataset") {
    auto data = make_glyph_dataset(25, 16, 8);
    const auto dir = std::filesystem::temp_directory_path() / "advdet_idx_rt";
    std::filesystem::create_directories(dir);
    const std::string images = (dir / "imgs").string(), labels = (dir / "lbls").string();
    write_idx_images(images, data);
    write_idx_labels(labels, data);
    auto loaded = read_idx_dataset(images, labels);
    REQUIRE(loaded.size() == data.size());
    for (size_t i = 0; i < data.size(); ++i) {
        CHECK(loaded[i].pixels.data == data[i].pixels.data);
        CHECK(loaded[i].label == data[i].label);
    }
    std::filesystem::remove_all(dir);
}

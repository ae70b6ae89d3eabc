#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "advtrans/models/classifier.hpp"
#include "advtrans/models/discriminator.hpp"
#include "advtrans/models/generator.hpp"
#include "test_util.hpp"

using namespace advtrans;
using advtest::gradient_check;

namespace {

template <class S>
TensorT<S> random_images(int n, int size, Rng& rng) {
    return TensorT<S>::uniform({n, 3, size, size}, rng, S(-1), S(1));
}

// Closed-form parameter counts for the committed architectures (see
// docs/parameters.md). f = base channels, d = domains, r = residual blocks.
std::int64_t generator_param_count(int f, int d, int r) {
    std::int64_t n = 0;
    n += static_cast<std::int64_t>(f) * (3 + d) * 49 + 2 * f;            // in conv + norm
    n += static_cast<std::int64_t>(2 * f) * f * 16 + 2 * (2 * f);        // down1 + norm
    n += static_cast<std::int64_t>(4 * f) * (2 * f) * 16 + 2 * (4 * f);  // down2 + norm
    n += static_cast<std::int64_t>(r) * (2 * (static_cast<std::int64_t>(4 * f) * (4 * f) * 9 + 2 * (4 * f)));
    n += static_cast<std::int64_t>(4 * f) * (2 * f) * 16 + 2 * (2 * f);  // up1 + norm
    n += static_cast<std::int64_t>(2 * f) * f * 16 + 2 * f;              // up2 + norm
    n += static_cast<std::int64_t>(3) * f * 49 + 3;                      // out conv (+bias)
    return n;
}

std::int64_t discriminator_param_count(int f, int d, int blocks, int image_size) {
    std::int64_t n = 0;
    int c_in = 3, c = f;
    for (int i = 0; i < blocks; ++i) {
        n += static_cast<std::int64_t>(c) * c_in * 16 + c;
        c_in = c;
        c *= 2;
    }
    n += static_cast<std::int64_t>(1) * c_in * 9 + 1;  // source head
    const int fs = image_size >> blocks;
    n += static_cast<std::int64_t>(d) * c_in * fs * fs + d;  // domain head
    return n;
}

std::int64_t plain_backbone_param_count(int f) {
    return static_cast<std::int64_t>(f) * 3 * 9 + f + static_cast<std::int64_t>(2 * f) * f * 9 + 2 * f +
           static_cast<std::int64_t>(4 * f) * 2 * f * 9 + 4 * f + static_cast<std::int64_t>(4 * f) * 4 * f * 9 + 4 * f;
}

}  // namespace

TEST_CASE("generator shape contract, tanh range, determinism") {
    Rng rng(101);
    GeneratorT<float> g({.image_size = 64, .domains = 3, .base_channels = 4, .res_blocks = 6}, rng);
    Rng drng(5);
    auto x = VarT<float>(random_images<float>(2, 64, drng));
    auto c = VarT<float>(TensorT<float>({2, 3}, {1, 0, 0, 0, 1, 1}));
    NoGradGuard guard(false);
    auto y = g.forward(x, c);
    CHECK(y.value().shape() == std::vector<int>{2, 3, 64, 64});
    float lo = 1e9f, hi = -1e9f;
    for (std::int64_t i = 0; i < y.value().numel(); ++i) {
        lo = std::min(lo, y.value()[i]);
        hi = std::max(hi, y.value()[i]);
    }
    CHECK(lo >= -1.0f);
    CHECK(hi <= 1.0f);

    auto y2 = g.forward(x, c);
    for (std::int64_t i = 0; i < y.value().numel(); ++i) REQUIRE(y.value()[i] == y2.value()[i]);

    CHECK_THROWS_AS(g.forward(VarT<float>(random_images<float>(1, 66, drng)), VarT<float>(TensorT<float>({1, 3}))),
                    ContractError);
    CHECK_THROWS_AS(g.forward(x, VarT<float>(TensorT<float>({2, 2}))), ContractError);
}

TEST_CASE("discriminator heads: patch map geometry and domain logit count") {
    Rng rng(102);
    DiscriminatorT<float> d({.image_size = 64, .domains = 3, .base_channels = 8, .blocks = 5}, rng);
    Rng drng(6);
    NoGradGuard guard(false);
    auto [src, cls] = d.forward(VarT<float>(random_images<float>(2, 64, drng)));
    CHECK(src.value().shape() == std::vector<int>{2, 2, 2});  // five stride-2 halvings of 64
    CHECK(cls.value().shape() == std::vector<int>{2, 3});

    CHECK_THROWS_AS(d.forward(VarT<float>(random_images<float>(1, 16, drng))), ContractError);
}

TEST_CASE("classifier: logit count, softmax normalization, argmax tie-break") {
    Rng rng(103);
    auto backbone = std::make_shared<PlainConvBackboneT<float>>(64, 4, rng);
    TargetClassifierT<float> clf(backbone, 10, rng);
    Rng drng(7);
    NoGradGuard guard(false);
    auto z = clf.logits(VarT<float>(random_images<float>(3, 64, drng)));
    CHECK(z.value().shape() == std::vector<int>{3, 10});
    auto probs = softmax_tensor(z.value());
    for (int i = 0; i < 3; ++i) {
        double s = 0;
        for (int j = 0; j < 10; ++j) s += probs[i * 10 + j];
        CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    }

    TensorT<float> tied({1, 6}, {0.f, 0.f, 3.f, 1.f, 0.f, 3.f});
    CHECK(argmax_row(tied, 0) == 2);

    // smaller input images are bilinearly resized up to the backbone size
    auto z_small = clf.logits(VarT<float>(random_images<float>(2, 32, drng)));
    CHECK(z_small.value().shape() == std::vector<int>{2, 10});
    CHECK(clf.forward_count() == 2);
}

TEST_CASE("parameter counts match the documented closed forms") {
    Rng rng(104);
    GeneratorT<float> g({.image_size = 64, .domains = 3, .base_channels = 4, .res_blocks = 6}, rng);
    CHECK(parameter_count(g.params()) == generator_param_count(4, 3, 6));

    DiscriminatorT<float> d({.image_size = 64, .domains = 3, .base_channels = 8, .blocks = 5}, rng);
    CHECK(parameter_count(d.params()) == discriminator_param_count(8, 3, 5, 64));

    auto bb = std::make_shared<PlainConvBackboneT<float>>(64, kBackboneBase, rng);
    TargetClassifierT<float> clf(bb, 8, rng);
    CHECK(parameter_count(clf.params()) ==
          plain_backbone_param_count(kBackboneBase) + static_cast<std::int64_t>(8) * 64 + 8);
}

TEST_CASE("model forwards are differentiable: finite differences at 8x8, reduced depth") {
    for (std::uint64_t seed : {11u, 12u, 13u, 14u, 15u}) {
        Rng rng(seed);
        GeneratorT<double> g({.image_size = 8, .domains = 2, .base_channels = 2, .res_blocks = 1}, rng);
        auto x = VarT<double>(random_images<double>(1, 8, rng), true);
        auto c = VarT<double>(TensorT<double>({1, 2}, {1, 0}), false);
        auto leaves = g.params();
        std::vector<VarT<double>> all{x};
        for (auto* p : leaves) all.push_back(*p);
        const double err = gradient_check([&] { return sum_all(vsquare(g.forward(x, c))); }, all, 1e-6);
        CHECK(err < 1e-4);
    }

    for (std::uint64_t seed : {21u, 22u, 23u, 24u, 25u}) {
        Rng rng(seed);
        DiscriminatorT<double> d({.image_size = 8, .domains = 2, .base_channels = 2, .blocks = 2}, rng);
        auto x = VarT<double>(random_images<double>(2, 8, rng), true);
        std::vector<VarT<double>> all{x};
        for (auto* p : d.params()) all.push_back(*p);
        const double err = gradient_check(
            [&] {
                auto [src, cls] = d.forward(x);
                return add(mean_all(src), sum_all(vsquare(cls)));
            },
            all, 1e-6);
        CHECK(err < 1e-4);
    }

    for (std::uint64_t seed : {31u, 32u, 33u, 34u, 35u}) {
        Rng rng(seed);
        auto bb = std::make_shared<ResidualBackboneT<double>>(8, 2, rng);
        TargetClassifierT<double> clf(bb, 3, rng);
        auto x = VarT<double>(random_images<double>(2, 8, rng), true);
        std::vector<VarT<double>> all{x};
        for (auto* p : clf.params()) all.push_back(*p);
        const double err = gradient_check([&] { return sum_all(vsquare(clf.logits(x))); }, all, 1e-6);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("head-only scope exposes only head parameters as trainable") {
    Rng rng(105);
    auto bb = std::make_shared<PlainConvBackboneT<float>>(32, 4, rng);
    TargetClassifierT<float> clf(bb, 5, rng, TrainableScope::kHeadOnly);
    CHECK(clf.trainable_params().size() == 2);
    CHECK(clf.params().size() > clf.trainable_params().size());
}

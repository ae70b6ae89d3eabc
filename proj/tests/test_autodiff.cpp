#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "advtrans/core/conv.hpp"
#include "advtrans/core/ops.hpp"
#include "test_util.hpp"

using namespace advtrans;
using advtest::gradient_check;

namespace {
VarT<double> rand_leaf(std::vector<int> shape, Rng& rng, bool rg = true, double lo = -1.0, double hi = 1.0) {
    return VarT<double>(TensorT<double>::uniform(std::move(shape), rng, lo, hi), rg);
}
}  // namespace

TEST_CASE("elementwise and reduction gradients match finite differences") {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        Rng rng(seed);
        auto a = rand_leaf({3, 4}, rng);
        auto b = rand_leaf({3, 4}, rng);

        CHECK(gradient_check([&] { return sum_all(mul(add(a, b), sub(a, b))); }, {a, b}) < 1e-6);
        CHECK(gradient_check([&] { return mean_all(vtanh(mul_scalar(a, 2.0))); }, {a}) < 1e-6);
        CHECK(gradient_check([&] { return sum_all(vsigmoid(a)); }, {a}) < 1e-6);
        CHECK(gradient_check([&] { return sum_all(vsquare(vabs(a))); }, {a}) < 1e-6);
        CHECK(gradient_check([&] { return sum_all(leaky_relu(a, 0.2)); }, {a}) < 1e-6);

        auto pos = rand_leaf({2, 5}, rng, true, 0.3, 2.0);
        CHECK(gradient_check([&] { return sum_all(vlog(pos)); }, {pos}) < 1e-6);
        CHECK(gradient_check([&] { return sum_all(vsqrt(pos)); }, {pos}) < 1e-6);
        CHECK(gradient_check([&] { return sum_all(recip(pos)); }, {pos}) < 1e-6);
        CHECK(gradient_check([&] { return sum_all(vexp(a)); }, {a}) < 1e-6);
    }
}

TEST_CASE("broadcast/reduction pairs are exact adjoints") {
    Rng rng(7);
    auto x = rand_leaf({2, 3, 4, 4}, rng);
    auto m = rand_leaf({2, 3}, rng);
    auto v = rand_leaf({2}, rng);
    auto c = rand_leaf({3}, rng);

    CHECK(gradient_check([&] { return sum_all(vsquare(sub_nc(x, m))); }, {x, m}) < 1e-6);
    CHECK(gradient_check([&] { return sum_all(vsquare(mul_nc(x, m))); }, {x, m}) < 1e-6);
    CHECK(gradient_check([&] { return sum_all(vsquare(mul_per_image(x, v))); }, {x, v}) < 1e-6);
    CHECK(gradient_check([&] { return sum_all(vsquare(bias_add_channels(x, c))); }, {x, c}) < 1e-6);
    CHECK(gradient_check([&] { return sum_all(vsquare(sum_hw(x))); }, {x}) < 1e-6);
    CHECK(gradient_check([&] { return sum_all(vsquare(sum_per_image(x))); }, {x}) < 1e-6);
    CHECK(gradient_check([&] { return sum_all(vsquare(tile_to_channels(m, 3, 3))); }, {m}) < 1e-6);
}

TEST_CASE("matmul, linear selection, and concat gradients") {
    Rng rng(11);
    auto A = rand_leaf({3, 4}, rng);
    auto B = rand_leaf({4, 2}, rng);
    CHECK(gradient_check([&] { return sum_all(vsquare(matmul(A, B))); }, {A, B}) < 1e-6);

    auto X = rand_leaf({4, 5}, rng);
    CHECK(gradient_check([&] { return sum_all(vsquare(take_column(X, 2))); }, {X}) < 1e-6);
    CHECK(gradient_check([&] { return sum_all(vsquare(masked_row_max(X, 1))); }, {X}) < 1e-6);

    auto p = rand_leaf({2, 2, 3, 3}, rng);
    auto q = rand_leaf({2, 3, 3, 3}, rng);
    CHECK(gradient_check([&] { return sum_all(vsquare(concat_channels(p, q))); }, {p, q}) < 1e-6);
    CHECK(gradient_check([&] { return sum_all(vsquare(slice_channels(q, 1, 3))); }, {q}) < 1e-6);
}

TEST_CASE("conv2d forward equals the naive oracle") {
    Rng rng(13);
    for (const auto& [stride, pad, k] : std::vector<std::tuple<int, int, int>>{{1, 1, 3}, {2, 1, 4}, {1, 3, 7}, {1, 0, 2}}) {
        auto x = TensorT<double>::uniform({2, 3, 8, 8}, rng, -1, 1);
        auto w = TensorT<double>::uniform({4, 3, k, k}, rng, -0.5, 0.5);
        VarT<double> xv(x), wv(w);
        auto y = conv2d(xv, wv, stride, pad);
        auto ref = advtest::conv2d_oracle(x, w, stride, pad);
        CHECK(y.value().same_shape(ref));
        CHECK(advtest::max_abs_diff(y.value(), ref) < 1e-12);
    }
}

TEST_CASE("conv2d / conv_transpose gradients match finite differences") {
    Rng rng(17);
    auto x = rand_leaf({2, 2, 6, 6}, rng);
    auto w = rand_leaf({3, 2, 3, 3}, rng, true, -0.5, 0.5);
    CHECK(gradient_check([&] { return sum_all(vsquare(conv2d(x, w, 1, 1))); }, {x, w}, 1e-5) < 1e-5);
    CHECK(gradient_check([&] { return sum_all(vsquare(conv2d(x, w, 2, 1))); }, {x, w}, 1e-5) < 1e-5);

    auto z = rand_leaf({2, 3, 3, 3}, rng);
    auto wt = rand_leaf({3, 2, 4, 4}, rng, true, -0.5, 0.5);
    CHECK(gradient_check([&] { return sum_all(vsquare(conv_transpose2d(z, wt, 2, 1, 6, 6))); }, {z, wt}, 1e-5) < 1e-5);
}

TEST_CASE("double backprop: gradient-norm penalty differentiates through grad()") {
    // Scalar critic D(x) = sum(tanh(conv(x, w))); penalty = (||dD/dx|| - 1)^2.
    // Finite differences on w validate the create_graph path end to end.
    Rng rng(23);
    auto w = rand_leaf({1, 2, 3, 3}, rng, true, -0.6, 0.6);
    auto x = rand_leaf({2, 2, 5, 5}, rng, false);

    auto penalty = [&]() -> VarT<double> {
        VarT<double> xin(x.value(), true);
        auto score = sum_all(vtanh(conv2d(xin, w, 1, 1)));
        auto g = grad(score, {xin}, /*create_graph=*/true)[0];
        auto norm = vsqrt(sum_per_image(vsquare(g)));
        return mean_all(vsquare(add_scalar(norm, -1.0)));
    };
    CHECK(gradient_check(penalty, {w}, 1e-5) < 1e-5);
}

TEST_CASE("backward accumulates across shared subexpressions") {
    Rng rng(29);
    auto a = rand_leaf({4}, rng);
    // f = sum(a*a) + 2*sum(a)  ->  df/da = 2a + 2
    auto f = add(sum_all(mul(a, a)), mul_scalar(sum_all(a), 2.0));
    backward(f);
    for (int i = 0; i < 4; ++i) CHECK(a.grad()[i] == doctest::Approx(2 * a.value()[i] + 2).epsilon(1e-12));
}

TEST_CASE("no-grad mode detaches computation") {
    auto a = VarT<double>(TensorT<double>::full({2}, 1.5), true);
    {
        NoGradGuard guard(false);
        auto y = mul(a, a);
        CHECK_FALSE(y.requires_grad());
    }
    auto y = mul(a, a);
    CHECK(y.requires_grad());
}

TEST_CASE("bilinear resize: identity when size matches, adjoint otherwise") {
    Rng rng(31);
    auto x = rand_leaf({1, 2, 4, 4}, rng);
    auto same = resize_bilinear(x, 4, 4);
    CHECK(same.raw() == x.raw());
    CHECK(gradient_check([&] { return sum_all(vsquare(resize_bilinear(x, 7, 7))); }, {x}) < 1e-6);
    CHECK(gradient_check([&] { return sum_all(vsquare(resize_bilinear(x, 2, 3))); }, {x}) < 1e-6);
}

TEST_CASE("classification losses match direct formulas and gradients") {
    Rng rng(37);
    auto logits = rand_leaf({3, 4}, rng, true, -2, 2);
    std::vector<int> labels{0, 2, 3};
    CHECK(gradient_check([&] { return softmax_cross_entropy(logits, labels); }, {logits}) < 1e-6);

    TensorT<double> target({3, 4});
    for (int i = 0; i < 3; ++i) {
        double z = 0;
        for (int j = 0; j < 4; ++j) {
            target[i * 4 + j] = rng.uniform(0.05, 1.0);
            z += target[i * 4 + j];
        }
        for (int j = 0; j < 4; ++j) target[i * 4 + j] /= z;
    }
    CHECK(gradient_check([&] { return soft_cross_entropy(logits, target); }, {logits}) < 1e-6);

    auto bits = VarT<double>(TensorT<double>({2, 3}, {1, 0, 1, 0, 1, 0}), false);
    auto dl = rand_leaf({2, 3}, rng, true, -3, 3);
    CHECK(gradient_check([&] { return mean_all(bce_with_logits(dl, bits)); }, {dl}) < 1e-6);

    // soft targets equal to the model's own softmax: loss is mean entropy
    TensorT<double> own = softmax_tensor(logits.value());
    const double loss = soft_cross_entropy(logits, own).value().item();
    double ent = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) ent -= own[i * 4 + j] * std::log(own[i * 4 + j]);
    CHECK(loss == doctest::Approx(ent / 3).epsilon(1e-10));
}

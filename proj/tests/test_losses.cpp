#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "advtrans/losses/losses.hpp"
#include "advtrans/nn/optim.hpp"
#include "test_util.hpp"

using namespace advtrans;
using advtest::gradient_check;

namespace {
template <class S>
VarT<S> leafv(std::vector<int> shape, std::vector<S> vals, bool rg = false) {
    return VarT<S>(TensorT<S>(std::move(shape), std::move(vals)), rg);
}
}  // namespace

TEST_CASE("vanilla GAN loss closed forms") {
    auto half = VarT<double>(TensorT<double>::full({2, 2}, 0.5));
    CHECK(vanilla_gan_loss(half, half).value().item() == doctest::Approx(2 * std::log(0.5)).epsilon(1e-12));

    auto ones = VarT<double>(TensorT<double>::full({2, 2}, 1.0));
    auto zeros = VarT<double>(TensorT<double>::full({2, 2}, 0.0));
    const double v = vanilla_gan_loss(ones, zeros).value().item();
    CHECK(v < 0.0);          // approaches 0 from below at the clamp
    CHECK(v > -1e-6);
}

TEST_CASE("vanilla GAN loss gradients (random 2x2 maps, 5 seeds)") {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        Rng rng(seed);
        auto r = VarT<double>(TensorT<double>::uniform({2, 2}, rng, 0.1, 0.9), true);
        auto f = VarT<double>(TensorT<double>::uniform({2, 2}, rng, 0.1, 0.9), true);
        CHECK(gradient_check([&] { return vanilla_gan_loss(r, f); }, {r, f}) < 1e-4);
    }
}

TEST_CASE("gradient penalty closed forms") {
    // score_i = <v, x_i> with ||v|| = 1: gradient is v, penalty is 0
    Rng rng(9);
    TensorT<double> v({1, 3, 2, 2});
    double norm2 = 0;
    for (std::int64_t i = 0; i < v.numel(); ++i) {
        v[i] = rng.uniform(-1, 1);
        norm2 += v[i] * v[i];
    }
    for (std::int64_t i = 0; i < v.numel(); ++i) v[i] /= std::sqrt(norm2);
    auto unit_score = [&v](const VarT<double>& x) {
        const int n = x.value().dim(0);
        TensorT<double> vb(x.value().shape());
        const std::int64_t per = v.numel();
        for (int i = 0; i < n; ++i)
            for (std::int64_t k = 0; k < per; ++k) vb[i * per + k] = v[k];
        return sum_per_image(mul(x, VarT<double>(vb)));
    };
    Rng xr(10);
    auto xq = VarT<double>(TensorT<double>::uniform({4, 3, 2, 2}, xr, -1, 1), true);
    CHECK(gradient_penalty_at<double>(unit_score, xq).value().item() == doctest::Approx(0.0).epsilon(1e-12));

    // score = 3 * designated pixel on a 1-pixel image: penalty (3-1)^2 = 4
    auto pixel_score = [](const VarT<double>& x) { return mul_scalar(sum_per_image(x), 3.0); };
    auto one_px = VarT<double>(TensorT<double>({1, 1, 1, 1}, {0.37}), true);
    CHECK(gradient_penalty_at<double>(pixel_score, one_px).value().item() == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("gradient penalty matches an explicit-Jacobian oracle on 4x4 images") {
    Rng rng(77);
    DiscriminatorT<double> critic({.image_size = 4, .domains = 2, .base_channels = 2, .blocks = 2}, rng);
    auto xq = VarT<double>(TensorT<double>::uniform({3, 3, 4, 4}, rng, -1, 1), true);
    const double analytic = gradient_penalty_at(critic, xq).value().item();

    // independent path: materialize each image's full gradient by central
    // finite differences of the mean patch score
    NoGradGuard guard(false);
    const int n = 3;
    const std::int64_t per = xq.value().numel() / n;
    double penalty = 0;
    const double h = 1e-6;
    TensorT<double> work = xq.value().clone();
    for (int i = 0; i < n; ++i) {
        double sq = 0;
        for (std::int64_t k = 0; k < per; ++k) {
            const std::int64_t idx = i * per + k;
            const double orig = work[idx];
            work[idx] = orig + h;
            const double fp = critic.mean_source_score(VarT<double>(work)).value()[i];
            work[idx] = orig - h;
            const double fm = critic.mean_source_score(VarT<double>(work)).value()[i];
            work[idx] = orig;
            const double gk = (fp - fm) / (2 * h);
            sq += gk * gk;
        }
        const double d = std::sqrt(sq) - 1.0;
        penalty += d * d;
    }
    penalty /= n;
    CHECK(std::abs(analytic - penalty) < 1e-8);
}

TEST_CASE("gradient penalty differentiates w.r.t. critic parameters and interpolates") {
    for (std::uint64_t seed : {41u, 42u, 43u, 44u, 45u}) {
        Rng rng(seed);
        DiscriminatorT<double> critic({.image_size = 4, .domains = 2, .base_channels = 2, .blocks = 2}, rng);
        auto xq = VarT<double>(TensorT<double>::uniform({2, 3, 4, 4}, rng, -1, 1), true);
        std::vector<VarT<double>> leaves{xq};
        for (auto* p : critic.params()) leaves.push_back(*p);
        const double err = gradient_check([&] { return gradient_penalty_at(critic, xq); }, leaves, 1e-5);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("wgan loss closed forms and linear gradient") {
    auto real = VarT<double>(TensorT<double>::full({4}, 2.0), true);
    auto fake = VarT<double>(TensorT<double>::full({4}, 0.5), true);
    auto zero = VarT<double>(TensorT<double>::scalar(0.0));
    CHECK(wgan_loss(real, fake, zero, 10.0).value().item() == doctest::Approx(1.5).epsilon(1e-12));

    auto same = VarT<double>(TensorT<double>({4}, {0.3, -0.8, 1.2, 0.1}));
    CHECK(wgan_loss(same, same, zero, 10.0).value().item() == doctest::Approx(0.0).epsilon(1e-12));

    backward(wgan_loss(real, fake, zero, 10.0));
    for (int i = 0; i < 4; ++i) CHECK(fake.grad()[i] == doctest::Approx(-0.25).epsilon(1e-12));
}

TEST_CASE("printed-form wgan variant: value offset exactly 1, identical gradients") {
    for (std::uint64_t seed : {51u, 52u, 53u}) {
        Rng rng(seed);
        auto real = VarT<double>(TensorT<double>::uniform({3, 2, 2}, rng, -2, 2), true);
        auto fake = VarT<double>(TensorT<double>::uniform({3, 2, 2}, rng, -2, 2), true);
        auto pen = VarT<double>(TensorT<double>::scalar(rng.uniform(0, 1)), false);

        const double a = wgan_loss(real, fake, pen, 10.0).value().item();
        const double b = wgan_loss_printed_form(real, fake, pen, 10.0).value().item();
        CHECK(b - a == doctest::Approx(1.0).epsilon(1e-12));

        backward(wgan_loss(real, fake, pen, 10.0));
        TensorT<double> gr = real.grad().clone(), gf = fake.grad().clone();
        real.zero_grad();
        fake.zero_grad();
        backward(wgan_loss_printed_form(real, fake, pen, 10.0));
        for (std::int64_t i = 0; i < gr.numel(); ++i) {
            CHECK(real.grad()[i] == gr[i]);
            CHECK(fake.grad()[i] == gf[i]);
        }
    }
}

TEST_CASE("domain classification loss: closed forms and direct-formula oracle") {
    auto zeros = VarT<double>(TensorT<double>::zeros({2, 3}), false);
    TensorT<double> bits({2, 3}, {1, 0, 1, 0, 1, 0});
    CHECK(domain_classification_loss(zeros, bits).value().item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    auto sat = leafv<double>({1, 1}, {20.0});
    TensorT<double> one({1, 1}, {1.0});
    CHECK(domain_classification_loss(sat, one).value().item() == doctest::Approx(0.0).epsilon(1e-8));

    for (std::uint64_t seed : {61u, 62u, 63u, 64u, 65u}) {
        Rng rng(seed);
        auto logits = VarT<double>(TensorT<double>::uniform({4, 3}, rng, -4, 4), true);
        TensorT<double> c({4, 3});
        for (std::int64_t i = 0; i < c.numel(); ++i) c[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;

        double ref = 0;
        for (std::int64_t i = 0; i < c.numel(); ++i) {
            const double s = 1.0 / (1.0 + std::exp(-logits.value()[i]));
            ref -= c[i] * std::log(s) + (1 - c[i]) * std::log(1 - s);
        }
        ref /= static_cast<double>(c.numel());
        CHECK(std::abs(domain_classification_loss(logits, c).value().item() - ref) < 1e-10);
        CHECK(gradient_check([&] { return domain_classification_loss(logits, c); }, {logits}) < 1e-4);
    }
}

TEST_CASE("reconstruction loss: identity, constant offset, symmetry") {
    Rng rng(71);
    auto a = VarT<double>(TensorT<double>::uniform({2, 3, 4, 4}, rng, -1, 1), true);
    CHECK(reconstruction_loss(a, a).value().item() == doctest::Approx(0.0));

    auto b = add_scalar(a, 0.5);
    CHECK(reconstruction_loss(a, b).value().item() == doctest::Approx(0.5).epsilon(1e-12));

    auto c = VarT<double>(TensorT<double>::uniform({2, 3, 4, 4}, rng, -1, 1));
    CHECK(reconstruction_loss(a, c).value().item() == doctest::Approx(reconstruction_loss(c, a).value().item()));
    CHECK(gradient_check([&] { return reconstruction_loss(a, c); }, {a}) < 1e-4);
}

TEST_CASE("target loss: closed forms, floor, contract") {
    auto z0 = VarT<double>(TensorT<double>::zeros({2, 5}));
    CHECK(target_loss(z0, 3, -0.3).value().item() == doctest::Approx(0.0));

    auto zwin = leafv<double>({1, 4}, {5.0, 1.0, 0.5, -1.0});
    CHECK(target_loss(zwin, 0, -0.3).value().item() == doctest::Approx(-0.3).epsilon(1e-12));

    auto z2 = leafv<double>({1, 2}, {1.0, 2.0});
    CHECK(target_loss(z2, 0, -0.3).value().item() == doctest::Approx(1.0).epsilon(1e-12));

    auto z1 = leafv<double>({1, 1}, {1.0});
    CHECK_THROWS_AS(target_loss(z1, 0, -0.3), ContractError);

    for (std::uint64_t seed : {81u, 82u, 83u, 84u, 85u}) {
        Rng rng(seed);
        auto z = VarT<double>(TensorT<double>::uniform({4, 6}, rng, -2, 2), true);
        CHECK(gradient_check([&] { return target_loss(z, 2, -0.3); }, {z}) < 1e-4);
        CHECK(target_loss(z, 2, -0.3).value().item() >= -0.3);
    }
}

TEST_CASE("composite objectives: term elimination and affinity in each lambda") {
    Rng rng(91);
    GeneratorLossPartsT<double> parts{
        VarT<double>(TensorT<double>::scalar(rng.uniform(-1, 1))),
        VarT<double>(TensorT<double>::scalar(rng.uniform(0, 1))),
        VarT<double>(TensorT<double>::scalar(rng.uniform(0, 1))),
        VarT<double>(TensorT<double>::scalar(rng.uniform(-0.3, 1))),
    };

    LossWeightsT<double> w0{.lambda_wgan = 10, .lambda_alpha = 1, .lambda_beta = 10, .lambda_gamma = 0, .kappa = -0.3};
    GeneratorLossPartsT<double> no_tar = parts;
    no_tar.tar = VarT<double>();  // with lambda_gamma = 0 the target term is never formed
    const double translation_only = generator_objective(no_tar, w0).value().item();
    const double manual = parts.wgan_g_term.value().item() + 1 * parts.cls_fake.value().item() +
                          10 * parts.rec.value().item();
    CHECK(translation_only == doctest::Approx(manual).epsilon(1e-12));

    LossWeightsT<double> all_zero{.lambda_wgan = 0, .lambda_alpha = 0, .lambda_beta = 0, .lambda_gamma = 0};
    no_tar.tar = VarT<double>();
    CHECK(generator_objective(no_tar, all_zero).value().item() ==
          doctest::Approx(parts.wgan_g_term.value().item()).epsilon(1e-12));

    // affinity: evaluate at lambda in {0,1,2}; second differences must vanish
    auto eval_g = [&](double la, double lb, double lg) {
        LossWeightsT<double> w{.lambda_wgan = 10, .lambda_alpha = la, .lambda_beta = lb, .lambda_gamma = lg};
        GeneratorLossPartsT<double> p = parts;
        if (lg == 0) p.tar = VarT<double>();
        return generator_objective(p, w).value().item();
    };
    for (int axis = 0; axis < 3; ++axis) {
        double v[3];
        for (int l = 0; l <= 2; ++l) {
            const double la = axis == 0 ? l : 1, lb = axis == 1 ? l : 1, lg = axis == 2 ? l : 1;
            v[l] = eval_g(la, lb, lg);
        }
        CHECK(std::abs(v[2] - 2 * v[1] + v[0]) < 1e-12);
    }
    // doubling lambda_beta doubles the reconstruction contribution
    CHECK(eval_g(1, 2, 1) - eval_g(1, 0, 1) ==
          doctest::Approx(2 * (eval_g(1, 1, 1) - eval_g(1, 0, 1))).epsilon(1e-12));

    LossWeightsT<double> w{.lambda_alpha = 1};
    auto wv = VarT<double>(TensorT<double>::scalar(1.5));
    auto cr = VarT<double>(TensorT<double>::scalar(0.7));
    CHECK(discriminator_objective(wv, cr, w).value().item() == doctest::Approx(-0.8).epsilon(1e-12));
    LossWeightsT<double> wz{.lambda_alpha = 0};
    CHECK(discriminator_objective(wv, cr, wz).value().item() == doctest::Approx(-1.5).epsilon(1e-12));

    CHECK_THROWS_AS((LossWeightsT<double>{.lambda_beta = -1}.validate()), ContractError);
}

TEST_CASE("minimizing L_D strictly decreases it on a frozen tiny fixture") {
    Rng rng(1234);
    DiscriminatorT<double> critic({.image_size = 8, .domains = 2, .base_channels = 2, .blocks = 2}, rng);
    LossWeightsT<double> w;
    auto real = TensorT<double>::uniform({4, 3, 8, 8}, rng, -1, 1);
    auto fake = TensorT<double>::uniform({4, 3, 8, 8}, rng, -1, 1);
    TensorT<double> bits({4, 2}, {1, 0, 0, 1, 1, 1, 0, 0});

    AdamT<double> opt(critic.params(), 0.5, 0.999);
    auto compute = [&] {
        auto [rs, rc] = critic.forward(VarT<double>(real));
        auto [fs, fc] = critic.forward(VarT<double>(fake));
        (void)fc;
        auto pen = gradient_penalty(critic, real, fake, /*seed=*/99);
        auto wl = wgan_loss(rs, fs, pen, w.lambda_wgan);
        auto cls = domain_classification_loss(rc, bits);
        return discriminator_objective(wl, cls, w);
    };

    double prev = std::numeric_limits<double>::infinity();
    for (int step = 0; step < 10; ++step) {
        opt.zero_grad();
        auto loss = compute();
        const double v = loss.value().item();
        CHECK(v < prev);
        prev = v;
        backward(loss);
        opt.step(1e-3);
    }
}

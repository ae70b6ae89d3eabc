#pragma once

#include "advtrans/models/discriminator.hpp"

namespace advtrans {

template <class S>
struct LossWeightsT {
    S lambda_wgan = S(10);
    S lambda_alpha = S(1);
    S lambda_beta = S(10);
    S lambda_gamma = S(0.2);  // 0.5 for the larger identity-count setting
    S kappa = S(-0.3);

    void validate() const {
        if (lambda_wgan < S(0) || lambda_alpha < S(0) || lambda_beta < S(0) || lambda_gamma < S(0))
            throw ContractError("loss weights must be nonnegative");
    }
};

using LossWeights = LossWeightsT<float>;

/// Saturating GAN loss on post-sigmoid probabilities. Selectable variant;
/// the critic objective used by default is wgan_loss. Probabilities are
/// clamped to [1e-7, 1 - 1e-7] before the logs.
template <class S>
VarT<S> vanilla_gan_loss(const VarT<S>& real_probs, const VarT<S>& fake_probs) {
    constexpr S eps = S(1e-7);
    VarT<S> r = clamp(real_probs, eps, S(1) - eps);
    VarT<S> f = clamp(fake_probs, eps, S(1) - eps);
    return add(mean_all(vlog(r)), mean_all(vlog(add_scalar(neg(f), S(1)))));
}

/// Penalty evaluated at given interpolates for an arbitrary per-image score
/// function [N,C,H,W] -> [N]: mean over the batch of
/// (||d/dx score||_2 - 1)^2, the norm taken over all pixels of each image.
template <class S>
VarT<S> gradient_penalty_at(const std::function<VarT<S>(const VarT<S>&)>& per_image_score,
                            const VarT<S>& interpolates) {
    VarT<S> total = sum_all(per_image_score(interpolates));
    VarT<S> g = grad(total, {interpolates}, /*create_graph=*/true)[0];
    VarT<S> norm = vsqrt(sum_per_image(vsquare(g)));
    return mean_all(vsquare(add_scalar(norm, S(-1))));
}

/// Penalty at given interpolates for the critic's mean patch score.
/// Differentiable in the critic parameters (double backprop).
template <class S>
VarT<S> gradient_penalty_at(const DiscriminatorT<S>& critic, const VarT<S>& interpolates) {
    return gradient_penalty_at<S>([&critic](const VarT<S>& x) { return critic.mean_source_score(x); }, interpolates);
}

/// Draws one uniform scalar per pair, forms u*real + (1-u)*fake, and
/// evaluates the penalty there. The interpolate enters as an independent
/// input: no gradient flows back to whatever produced `fake`.
template <class S>
VarT<S> gradient_penalty(const DiscriminatorT<S>& critic, const TensorT<S>& real, const TensorT<S>& fake,
                         std::uint64_t seed) {
    detail::check(real.same_shape(fake), "gradient_penalty: real/fake shape mismatch");
    const int n = real.dim(0);
    Rng rng(seed);
    TensorT<S> xq(real.shape());
    const std::int64_t per = real.numel() / n;
    for (int i = 0; i < n; ++i) {
        const S u = static_cast<S>(rng.uniform());
        for (std::int64_t k = 0; k < per; ++k)
            xq[i * per + k] = u * real[i * per + k] + (S(1) - u) * fake[i * per + k];
    }
    return gradient_penalty_at(critic, VarT<S>(std::move(xq), true));
}

/// Critic-side Wasserstein objective (to be maximized):
/// mean(real) - mean(fake) - lambda * penalty.
template <class S>
VarT<S> wgan_loss(const VarT<S>& real_scores, const VarT<S>& fake_scores, const VarT<S>& penalty, S lambda_wgan) {
    VarT<S> v = sub(mean_all(real_scores), mean_all(fake_scores));
    return sub(v, mul_scalar(penalty, lambda_wgan));
}

/// Variant with the printed constant: mean(real) + mean(1 - fake) - lambda *
/// penalty. Differs from wgan_loss by the additive constant 1; gradients are
/// identical.
template <class S>
VarT<S> wgan_loss_printed_form(const VarT<S>& real_scores, const VarT<S>& fake_scores, const VarT<S>& penalty,
                               S lambda_wgan) {
    VarT<S> v = add(mean_all(real_scores), add_scalar(neg(mean_all(fake_scores)), S(1)));
    return sub(v, mul_scalar(penalty, lambda_wgan));
}

/// Generator-side Wasserstein term: -mean(fake_scores).
template <class S>
VarT<S> wgan_generator_term(const VarT<S>& fake_scores) {
    return neg(mean_all(fake_scores));
}

/// Per-bit binary cross-entropy between domain logits and 0/1 targets, mean
/// over batch and components. Serves both the real-image and generated-image
/// classification terms.
template <class S>
VarT<S> domain_classification_loss(const VarT<S>& domain_logits, const TensorT<S>& target_bits) {
    return mean_all(bce_with_logits(domain_logits, VarT<S>(target_bits, false)));
}

/// Mean absolute difference (cycle reconstruction).
template <class S>
VarT<S> reconstruction_loss(const VarT<S>& original, const VarT<S>& reconstructed) {
    detail::check(original.value().same_shape(reconstructed.value()), "reconstruction_loss: shape mismatch");
    return mean_all(vabs(sub(original, reconstructed)));
}

/// Targeted logit-margin loss: mean over the batch of
/// max(max_{i != t} z_i - z_t, kappa).
template <class S>
VarT<S> target_loss(const VarT<S>& logits, int t, S kappa) {
    const int k = logits.value().dim(1);
    detail::check(k >= 2, "target_loss: needs at least 2 classes (no non-target class exists)");
    detail::check(0 <= t && t < k, "target_loss: target class out of range");
    VarT<S> margin = sub(masked_row_max(logits, t), take_column(logits, t));
    return mean_all(maximum_scalar(margin, kappa));
}

template <class S>
struct GeneratorLossPartsT {
    VarT<S> wgan_g_term;  // -mean(fake_scores); penalty excluded by the detached-interpolant convention
    VarT<S> cls_fake;
    VarT<S> rec;
    VarT<S> tar;  // may be undefined when lambda_gamma == 0
};

/// Full generator objective: wgan_g + a*cls_fake + b*rec + g*tar.
template <class S>
VarT<S> generator_objective(const GeneratorLossPartsT<S>& parts, const LossWeightsT<S>& w) {
    VarT<S> v = add(parts.wgan_g_term, mul_scalar(parts.cls_fake, w.lambda_alpha));
    v = add(v, mul_scalar(parts.rec, w.lambda_beta));
    if (w.lambda_gamma != S(0)) {
        detail::check(parts.tar.defined(), "generator_objective: target term required when lambda_gamma > 0");
        v = add(v, mul_scalar(parts.tar, w.lambda_gamma));
    }
    return v;
}

/// Full critic objective (minimized by the critic): -wgan + a*cls_real.
template <class S>
VarT<S> discriminator_objective(const VarT<S>& wgan, const VarT<S>& cls_real, const LossWeightsT<S>& w) {
    return add(neg(wgan), mul_scalar(cls_real, w.lambda_alpha));
}

}  // namespace advtrans

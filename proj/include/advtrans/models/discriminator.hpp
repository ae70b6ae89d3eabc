#pragma once

#include <string>
#include <utility>

#include "advtrans/nn/layers.hpp"

namespace advtrans {

struct DiscriminatorConfig {
    int image_size = 64;
    int domains = 3;
    int base_channels = 8;  // doubles per block
    int blocks = 5;

    std::string describe() const {
        return "critic(size=" + std::to_string(image_size) + ",d=" + std::to_string(domains) + ",base=" +
               std::to_string(base_channels) + ",blocks=" + std::to_string(blocks) + ")";
    }
};

/// Two-headed critic: a PatchGAN source head emitting a raw score map (no
/// sigmoid; Wasserstein objective) and a domain head emitting d logits.
/// No normalization layers anywhere: the gradient penalty requires the
/// critic to stay free of batch coupling.
template <class S>
class DiscriminatorT {
public:
    DiscriminatorT(DiscriminatorConfig cfg, Rng& rng) : cfg_(cfg) {
        int c_in = 3;
        int f = cfg.base_channels;
        for (int i = 0; i < cfg.blocks; ++i) {
            trunk_.push_back(Conv2dT<S>(c_in, f, 4, 2, 1, true, rng));
            c_in = f;
            f *= 2;
        }
        const int final_spatial = cfg.image_size >> cfg.blocks;
        detail::check(final_spatial >= 1, "critic: image_size too small for block count");
        src_head_ = Conv2dT<S>(c_in, 1, 3, 1, 1, true, rng);
        cls_head_ = Conv2dT<S>(c_in, cfg.domains, final_spatial, 1, 0, true, rng);
    }

    /// Returns (source scores [N,h,w], domain logits [N,d]).
    std::pair<VarT<S>, VarT<S>> forward(const VarT<S>& x) const {
        detail::check(x.value().rank() == 4 && x.value().dim(1) == 3,
                      "critic: expected [N,3,H,W], got " + x.value().shape_str());
        const int h = x.value().dim(2);
        detail::check(h >= (1 << cfg_.blocks), "critic: input " + std::to_string(h) + "x" + std::to_string(h) +
                                                   " would collapse below 1x1 after " + std::to_string(cfg_.blocks) +
                                                   " halvings (minimum " + std::to_string(1 << cfg_.blocks) + ")");
        VarT<S> v = x;
        for (const auto& conv : trunk_) v = leaky_relu(conv.forward(v), S(0.01));
        VarT<S> src = src_head_.forward(v);
        const int n = src.value().dim(0), sh = src.value().dim(2), sw = src.value().dim(3);
        src = reshape(src, {n, sh, sw});
        VarT<S> cls = reshape(cls_head_.forward(v), {n, cfg_.domains});
        return {src, cls};
    }

    /// Mean patch score per image, [N]. This is the scalar the gradient
    /// penalty differentiates.
    VarT<S> mean_source_score(const VarT<S>& x) const {
        return mean_per_image(forward(x).first);
    }

    ParamRefs<S> params() {
        ParamRefs<S> out;
        for (auto& c : trunk_) c.collect(out);
        src_head_.collect(out);
        cls_head_.collect(out);
        return out;
    }

    const DiscriminatorConfig& config() const { return cfg_; }

private:
    DiscriminatorConfig cfg_;
    std::vector<Conv2dT<S>> trunk_;
    Conv2dT<S> src_head_, cls_head_;
};

using Discriminator = DiscriminatorT<float>;

}  // namespace advtrans

#pragma once

#include <string>

#include "advtrans/nn/layers.hpp"

namespace advtrans {

struct GeneratorConfig {
    int image_size = 64;
    int domains = 3;
    int base_channels = 4;  // desk-scale trunk width; channels double per downsampling
    int res_blocks = 6;

    std::string describe() const {
        return "generator(size=" + std::to_string(image_size) + ",d=" + std::to_string(domains) + ",base=" +
               std::to_string(base_channels) + ",res=" + std::to_string(res_blocks) + ")";
    }
};

/// Image-to-image translator conditioned on a target domain vector. The
/// domain bits are replicated into constant channels and concatenated with
/// the input image, so one generator serves every domain combination.
template <class S>
class GeneratorT {
public:
    GeneratorT(GeneratorConfig cfg, Rng& rng) : cfg_(cfg) {
        const int f = cfg.base_channels;
        in_conv_ = Conv2dT<S>(3 + cfg.domains, f, 7, 1, 3, false, rng);
        in_norm_ = InstanceNorm2dT<S>(f);
        down1_ = Conv2dT<S>(f, 2 * f, 4, 2, 1, false, rng);
        down1_norm_ = InstanceNorm2dT<S>(2 * f);
        down2_ = Conv2dT<S>(2 * f, 4 * f, 4, 2, 1, false, rng);
        down2_norm_ = InstanceNorm2dT<S>(4 * f);
        for (int i = 0; i < cfg.res_blocks; ++i) {
            res_.push_back({Conv2dT<S>(4 * f, 4 * f, 3, 1, 1, false, rng), InstanceNorm2dT<S>(4 * f),
                            Conv2dT<S>(4 * f, 4 * f, 3, 1, 1, false, rng), InstanceNorm2dT<S>(4 * f)});
        }
        up1_ = ConvTranspose2dT<S>(4 * f, 2 * f, 4, 2, 1, rng);
        up1_norm_ = InstanceNorm2dT<S>(2 * f);
        up2_ = ConvTranspose2dT<S>(2 * f, f, 4, 2, 1, rng);
        up2_norm_ = InstanceNorm2dT<S>(f);
        out_conv_ = Conv2dT<S>(f, 3, 7, 1, 3, true, rng);
    }

    /// x: [N,3,H,W] in [-1,1]; c_out: [N,d] with 0/1 entries. Returns the
    /// translated batch, same spatial size, tanh range.
    VarT<S> forward(const VarT<S>& x, const VarT<S>& c_out) const {
        detail::check(x.value().rank() == 4 && x.value().dim(1) == 3,
                      "generator: expected [N,3,H,W], got " + x.value().shape_str());
        const int h = x.value().dim(2), w = x.value().dim(3);
        detail::check(h % 4 == 0 && w % 4 == 0, "generator: H and W must be divisible by 4, got " +
                                                    std::to_string(h) + "x" + std::to_string(w));
        detail::check(c_out.value().rank() == 2 && c_out.value().dim(0) == x.value().dim(0) &&
                          c_out.value().dim(1) == cfg_.domains,
                      "generator: domain vector must be [N," + std::to_string(cfg_.domains) + "], got " +
                          c_out.value().shape_str());

        VarT<S> v = concat_channels(x, tile_to_channels(c_out, h, w));
        v = relu(in_norm_.forward(in_conv_.forward(v)));
        v = relu(down1_norm_.forward(down1_.forward(v)));
        v = relu(down2_norm_.forward(down2_.forward(v)));
        for (const auto& blk : res_) {
            VarT<S> r = relu(blk.norm1.forward(blk.conv1.forward(v)));
            r = blk.norm2.forward(blk.conv2.forward(r));
            v = add(v, r);
        }
        v = relu(up1_norm_.forward(up1_.forward(v)));
        v = relu(up2_norm_.forward(up2_.forward(v)));
        return vtanh(out_conv_.forward(v));
    }

    ParamRefs<S> params() {
        ParamRefs<S> out;
        in_conv_.collect(out);
        in_norm_.collect(out);
        down1_.collect(out);
        down1_norm_.collect(out);
        down2_.collect(out);
        down2_norm_.collect(out);
        for (auto& blk : res_) {
            blk.conv1.collect(out);
            blk.norm1.collect(out);
            blk.conv2.collect(out);
            blk.norm2.collect(out);
        }
        up1_.collect(out);
        up1_norm_.collect(out);
        up2_.collect(out);
        up2_norm_.collect(out);
        out_conv_.collect(out);
        return out;
    }

    const GeneratorConfig& config() const { return cfg_; }

private:
    struct ResidualBlock {
        Conv2dT<S> conv1;
        InstanceNorm2dT<S> norm1;
        Conv2dT<S> conv2;
        InstanceNorm2dT<S> norm2;
    };

    GeneratorConfig cfg_;
    Conv2dT<S> in_conv_, down1_, down2_, out_conv_;
    InstanceNorm2dT<S> in_norm_, down1_norm_, down2_norm_, up1_norm_, up2_norm_;
    std::vector<ResidualBlock> res_;
    ConvTranspose2dT<S> up1_, up2_;
};

using Generator = GeneratorT<float>;

}  // namespace advtrans

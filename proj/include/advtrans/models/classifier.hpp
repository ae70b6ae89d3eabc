#pragma once

#include <atomic>
#include <memory>
#include <string>

#include "advtrans/nn/layers.hpp"

namespace advtrans {

/// Face-descriptor backbone: image batch -> descriptor matrix [N, dim].
/// Pluggable so externally trained descriptors can slot in behind the same
/// classifier head.
template <class S>
class BackboneT {
public:
    virtual ~BackboneT() = default;
    virtual VarT<S> forward(const VarT<S>& images) const = 0;
    virtual ParamRefs<S> params() = 0;
    virtual int input_size() const = 0;
    virtual int descriptor_dim() const = 0;
    virtual std::string arch_name() const = 0;
};

/// "arch-a": four plain convolution blocks with stride 2, then global
/// average pooling to a 64-dim descriptor.
template <class S>
class PlainConvBackboneT final : public BackboneT<S> {
public:
    PlainConvBackboneT(int input_size, int base, Rng& rng) : input_size_(input_size), base_(base) {
        conv_ = {Conv2dT<S>(3, base, 3, 2, 1, true, rng), Conv2dT<S>(base, 2 * base, 3, 2, 1, true, rng),
                 Conv2dT<S>(2 * base, 4 * base, 3, 2, 1, true, rng), Conv2dT<S>(4 * base, 4 * base, 3, 2, 1, true, rng)};
    }

    VarT<S> forward(const VarT<S>& x) const override {
        VarT<S> v = x;
        for (const auto& c : conv_) v = relu(c.forward(v));
        const int h = v.value().dim(2), w = v.value().dim(3);
        return mul_scalar(sum_hw(v), S(1) / static_cast<S>(h * w));
    }

    ParamRefs<S> params() override {
        ParamRefs<S> out;
        for (auto& c : conv_) c.collect(out);
        return out;
    }

    int input_size() const override { return input_size_; }
    int descriptor_dim() const override { return 4 * base_; }
    std::string arch_name() const override { return "arch-a"; }

private:
    int input_size_, base_;
    std::vector<Conv2dT<S>> conv_;
};

/// "arch-b": a stem plus four residual blocks (three of them downsampling
/// with projection shortcuts). Distinct topology from arch-a so transfer
/// experiments cross a genuine architecture gap.
template <class S>
class ResidualBackboneT final : public BackboneT<S> {
public:
    ResidualBackboneT(int input_size, int base, Rng& rng) : input_size_(input_size), base_(base) {
        stem_ = Conv2dT<S>(3, base, 3, 2, 1, true, rng);
        blocks_ = {Block(base, 2 * base, 2, rng), Block(2 * base, 4 * base, 2, rng), Block(4 * base, 4 * base, 2, rng),
                   Block(4 * base, 4 * base, 1, rng)};
    }

    VarT<S> forward(const VarT<S>& x) const override {
        VarT<S> v = relu(stem_.forward(x));
        for (const auto& b : blocks_) {
            VarT<S> main = b.conv2.forward(relu(b.conv1.forward(v)));
            VarT<S> skip = b.projected ? b.proj.forward(v) : v;
            v = relu(add(main, skip));
        }
        const int h = v.value().dim(2), w = v.value().dim(3);
        return mul_scalar(sum_hw(v), S(1) / static_cast<S>(h * w));
    }

    ParamRefs<S> params() override {
        ParamRefs<S> out;
        stem_.collect(out);
        for (auto& b : blocks_) {
            b.conv1.collect(out);
            b.conv2.collect(out);
            if (b.projected) b.proj.collect(out);
        }
        return out;
    }

    int input_size() const override { return input_size_; }
    int descriptor_dim() const override { return 4 * base_; }
    std::string arch_name() const override { return "arch-b"; }

private:
    struct Block {
        Block(int c_in, int c_out, int stride, Rng& rng)
            : conv1(c_in, c_out, 3, stride, 1, true, rng),
              conv2(c_out, c_out, 3, 1, 1, true, rng),
              projected(stride != 1 || c_in != c_out) {
            if (projected) proj = Conv2dT<S>(c_in, c_out, 1, stride, 0, true, rng);
        }
        Conv2dT<S> conv1, conv2, proj;
        bool projected;
    };

    int input_size_, base_;
    Conv2dT<S> stem_;
    std::vector<Block> blocks_;
};

enum class TrainableScope { kHeadOnly, kFull };

/// Identity classifier: descriptor backbone + fully connected head emitting
/// K logits. Keeps a forward counter so callers can probe how often an
/// attack consulted the model.
template <class S>
class TargetClassifierT {
public:
    TargetClassifierT(std::shared_ptr<BackboneT<S>> backbone, int num_classes, Rng& rng,
                      TrainableScope scope = TrainableScope::kFull)
        : backbone_(std::move(backbone)), num_classes_(num_classes), scope_(scope) {
        head_ = LinearT<S>(backbone_->descriptor_dim(), num_classes, rng);
    }

    /// Raw logits [N,K]. Images in [-1,1]; resized (bilinear, differentiable)
    /// when their spatial size differs from the backbone's expected input.
    VarT<S> logits(const VarT<S>& images) const {
        forward_count_.fetch_add(1, std::memory_order_relaxed);
        VarT<S> x = resize_bilinear(images, backbone_->input_size(), backbone_->input_size());
        return head_.forward(backbone_->forward(x));
    }

    /// Argmax class per image; ties break to the lowest index.
    std::vector<int> predict(const TensorT<S>& images) const {
        NoGradGuard guard(false);
        VarT<S> z = logits(VarT<S>(images, false));
        std::vector<int> out(static_cast<size_t>(images.dim(0)));
        for (int i = 0; i < images.dim(0); ++i) out[static_cast<size_t>(i)] = argmax_row(z.value(), i);
        return out;
    }

    ParamRefs<S> params() {
        ParamRefs<S> out = backbone_->params();
        head_.collect(out);
        return out;
    }

    ParamRefs<S> trainable_params() {
        if (scope_ == TrainableScope::kHeadOnly) {
            ParamRefs<S> out;
            head_.collect(out);
            return out;
        }
        return params();
    }

    ParamRefs<S> backbone_params() { return backbone_->params(); }

    int num_classes() const { return num_classes_; }
    TrainableScope scope() const { return scope_; }
    void set_scope(TrainableScope s) { scope_ = s; }
    const BackboneT<S>& backbone() const { return *backbone_; }

    std::int64_t forward_count() const { return forward_count_.load(std::memory_order_relaxed); }
    void reset_forward_count() { forward_count_.store(0, std::memory_order_relaxed); }

    std::string describe() const {
        return "classifier(" + backbone_->arch_name() + ",in=" + std::to_string(backbone_->input_size()) + ",desc=" +
               std::to_string(backbone_->descriptor_dim()) + ",k=" + std::to_string(num_classes_) + ")";
    }

private:
    std::shared_ptr<BackboneT<S>> backbone_;
    int num_classes_;
    TrainableScope scope_;
    LinearT<S> head_;
    mutable std::atomic<std::int64_t> forward_count_{0};
};

using TargetClassifier = TargetClassifierT<float>;

/// Desk-scale defaults: both backbones produce 64-dim descriptors.
constexpr int kBackboneBase = 16;

template <class S>
std::shared_ptr<BackboneT<S>> make_backbone(const std::string& arch, int input_size, Rng& rng) {
    if (arch == "arch-a") return std::make_shared<PlainConvBackboneT<S>>(input_size, kBackboneBase, rng);
    if (arch == "arch-b") return std::make_shared<ResidualBackboneT<S>>(input_size, kBackboneBase, rng);
    throw ContractError("unknown backbone architecture '" + arch + "' (expected arch-a or arch-b)");
}

}  // namespace advtrans

#pragma once

#include <algorithm>
#include <atomic>
#include <functional>
#include <memory>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "advtrans/core/tensor.hpp"

namespace advtrans {

/// Node in a define-by-run autodiff graph. Backward functions are written in
/// terms of graph ops themselves, so a backward pass executed with grad
/// recording enabled yields a differentiable gradient (double backprop, as
/// needed by the critic's gradient penalty).
template <class S>
class VarT {
public:
    struct Node;
    using BackwardFn = std::function<std::vector<VarT>(const VarT& grad_out)>;

    struct Node {
        TensorT<S> value;
        TensorT<S> grad;  // leaf gradient accumulator, lazily allocated
        bool requires_grad = false;
        std::uint64_t id = 0;
        std::vector<VarT> parents;
        BackwardFn backward_fn;  // empty for leaves
    };

    VarT() = default;

    explicit VarT(TensorT<S> value, bool requires_grad = false) : node_(std::make_shared<Node>()) {
        node_->value = std::move(value);
        node_->requires_grad = requires_grad;
        node_->id = next_id();
    }

    static VarT leaf(TensorT<S> value, bool requires_grad = false) { return VarT(std::move(value), requires_grad); }

    bool defined() const { return static_cast<bool>(node_); }
    const TensorT<S>& value() const { return node_->value; }
    TensorT<S>& value() { return node_->value; }
    const std::vector<int>& shape() const { return node_->value.shape(); }
    bool requires_grad() const { return node_ && node_->requires_grad; }

    /// Accumulated gradient of a leaf after backward(). Undefined tensor if
    /// backward never reached this node.
    const TensorT<S>& grad() const { return node_->grad; }

    void zero_grad() {
        if (node_->grad.defined())
            node_->grad.fill(S(0));
    }

    /// Same value, detached from the graph.
    VarT detach() const { return VarT(node_->value, false); }

    std::shared_ptr<Node> node() const { return node_; }
    Node* raw() const { return node_.get(); }

    bool same_node(const VarT& o) const { return node_.get() == o.node_.get(); }

    static std::uint64_t next_id() {
        static std::atomic<std::uint64_t> counter{1};
        return counter.fetch_add(1, std::memory_order_relaxed);
    }

private:
    std::shared_ptr<Node> node_;
};

/// Thread-local switch controlling whether ops record autodiff metadata.
class GradMode {
public:
    static bool enabled() { return flag(); }
    static void set(bool v) { flag() = v; }

private:
    static bool& flag() {
        thread_local bool f = true;
        return f;
    }
};

class GradModeGuard {
public:
    explicit GradModeGuard(bool enable) : prev_(GradMode::enabled()) { GradMode::set(enable); }
    ~GradModeGuard() { GradMode::set(prev_); }
    GradModeGuard(const GradModeGuard&) = delete;
    GradModeGuard& operator=(const GradModeGuard&) = delete;

private:
    bool prev_;
};

using NoGradGuard = GradModeGuard;

/// Wraps an op result: records parents and the backward function only when
/// grad mode is on and some parent needs gradients.
template <class S>
VarT<S> make_op(TensorT<S> out, std::vector<VarT<S>> parents, typename VarT<S>::BackwardFn backward_fn) {
    bool needs = false;
    if (GradMode::enabled())
        for (const auto& p : parents)
            if (p.requires_grad()) {
                needs = true;
                break;
            }
    VarT<S> r(std::move(out), needs);
    if (needs) {
        r.node()->parents = std::move(parents);
        r.node()->backward_fn = std::move(backward_fn);
    }
    return r;
}

namespace detail {

template <class S>
void collect_reachable(typename VarT<S>::Node* root, std::vector<typename VarT<S>::Node*>& order) {
    std::unordered_set<typename VarT<S>::Node*> seen;
    std::vector<typename VarT<S>::Node*> stack{root};
    seen.insert(root);
    while (!stack.empty()) {
        auto* n = stack.back();
        stack.pop_back();
        order.push_back(n);
        for (const auto& p : n->parents) {
            auto* pn = p.raw();
            if (pn->requires_grad && seen.insert(pn).second) stack.push_back(pn);
        }
    }
    // Creation ids increase from parents to children in a define-by-run
    // graph, so descending id is a valid reverse-topological order.
    std::sort(order.begin(), order.end(),
              [](const auto* a, const auto* b) { return a->id > b->id; });
}

template <class S>
VarT<S> add_grads(const VarT<S>& a, const VarT<S>& b);  // defined in ops.hpp

/// Shared engine behind backward() and grad().
template <class S>
std::unordered_map<typename VarT<S>::Node*, VarT<S>> run_backward(const VarT<S>& root, bool create_graph,
                                                                  bool accumulate_leaf_grads) {
    using Node = typename VarT<S>::Node;
    if (root.value().numel() != 1) throw ContractError("backward: root must be a scalar");
    std::vector<Node*> order;
    collect_reachable<S>(root.raw(), order);

    std::unordered_map<Node*, VarT<S>> grads;
    grads.emplace(root.raw(), VarT<S>(TensorT<S>::full(root.value().shape(), S(1)), false));

    GradModeGuard guard(create_graph);
    for (Node* n : order) {
        auto it = grads.find(n);
        if (it == grads.end()) continue;
        const VarT<S> g = it->second;
        if (n->backward_fn) {
            std::vector<VarT<S>> parent_grads = n->backward_fn(g);
            for (size_t i = 0; i < n->parents.size(); ++i) {
                const auto& p = n->parents[i];
                if (!p.requires_grad() || !parent_grads[i].defined()) continue;
                auto pit = grads.find(p.raw());
                if (pit == grads.end())
                    grads.emplace(p.raw(), parent_grads[i]);
                else
                    pit->second = add_grads<S>(pit->second, parent_grads[i]);
            }
        } else if (accumulate_leaf_grads && n->requires_grad) {
            if (!n->grad.defined()) n->grad = TensorT<S>::zeros(n->value.shape());
            const TensorT<S>& gv = g.value();
            for (std::int64_t k = 0; k < gv.numel(); ++k) n->grad[k] += gv[k];
        }
    }
    return grads;
}

}  // namespace detail

/// Backpropagates from a scalar root, accumulating gradients into the .grad
/// field of every reachable leaf that requires them.
template <class S>
void backward(const VarT<S>& root) {
    detail::run_backward<S>(root, /*create_graph=*/false, /*accumulate_leaf_grads=*/true);
}

/// Returns d(root)/d(inputs) as graph variables without touching any .grad
/// field. With create_graph=true the result is itself differentiable.
template <class S>
std::vector<VarT<S>> grad(const VarT<S>& root, const std::vector<VarT<S>>& inputs, bool create_graph) {
    auto grads = detail::run_backward<S>(root, create_graph, /*accumulate_leaf_grads=*/false);
    std::vector<VarT<S>> out;
    out.reserve(inputs.size());
    for (const auto& in : inputs) {
        auto it = grads.find(in.raw());
        if (it != grads.end())
            out.push_back(it->second);
        else
            out.push_back(VarT<S>(TensorT<S>::zeros(in.value().shape()), false));
    }
    return out;
}

using Var = VarT<float>;

}  // namespace advtrans

#include "advtrans/data/types.hpp"

#include <map>
#include <set>

#include "advtrans/core/errors.hpp"

namespace advtrans {

void DatasetSplit::validate(int train_per_identity) const {
    std::map<int, int> per_identity;
    std::set<std::string> train_sources;
    for (const auto& inst : train) {
        if (inst.identity < 0 || inst.identity >= identity_count)
            throw ContractError("split: identity " + std::to_string(inst.identity) + " out of range");
        ++per_identity[inst.identity];
        train_sources.insert(inst.source);
        for (const auto b : inst.domains)
            if (b != 0 && b != 1) throw ContractError("split: non-binary domain entry");
    }
    for (const auto& [id, count] : per_identity)
        if (count != train_per_identity)
            throw ContractError("split: identity " + std::to_string(id) + " has " + std::to_string(count) +
                                " train images, expected " + std::to_string(train_per_identity));
    for (const auto& inst : test) {
        if (train_sources.count(inst.source))
            throw ContractError("split: source '" + inst.source + "' appears in both train and test");
        if (!per_identity.count(inst.identity))
            throw ContractError("split: test identity " + std::to_string(inst.identity) + " missing from train");
    }
}

Batch make_batch(const std::vector<LabeledFaceInstance>& instances, const std::vector<int>& indices) {
    if (indices.empty()) throw ContractError("make_batch: empty index list");
    const auto& first = instances[static_cast<size_t>(indices[0])];
    const int h = first.image.dim(1), w = first.image.dim(2);
    const int d = static_cast<int>(first.domains.size());
    const int n = static_cast<int>(indices.size());

    Batch b;
    b.images = Tensor({n, 3, h, w});
    b.domain_bits = Tensor({n, d});
    b.labels.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto& inst = instances[static_cast<size_t>(indices[static_cast<size_t>(i)])];
        if (inst.image.dim(1) != h || inst.image.dim(2) != w) throw ContractError("make_batch: mixed image sizes");
        std::copy(inst.image.data(), inst.image.data() + inst.image.numel(),
                  b.images.data() + static_cast<std::int64_t>(i) * 3 * h * w);
        b.labels[static_cast<size_t>(i)] = inst.identity;
        for (int j = 0; j < d; ++j) b.domain_bits[static_cast<std::int64_t>(i) * d + j] = inst.domains[static_cast<size_t>(j)];
    }
    return b;
}

}  // namespace advtrans

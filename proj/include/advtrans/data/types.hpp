#pragma once

#include <string>
#include <vector>

#include "advtrans/core/tensor.hpp"

namespace advtrans {

/// One labeled face: image [3,H,W] in [-1,1], identity in {0..K-1}, and a
/// binary domain vector (bit j set iff attribute j is present).
struct LabeledFaceInstance {
    Tensor image;
    int identity = 0;
    std::vector<std::uint8_t> domains;
    std::string source;  // originating filename or synthesis tag

    int image_size() const { return image.dim(1); }
};

struct DatasetSplit {
    std::vector<LabeledFaceInstance> train;
    std::vector<LabeledFaceInstance> test;
    int identity_count = 0;
    std::vector<std::string> domain_names;
    int image_size = 0;
    std::uint64_t seed = 0;

    int domain_count() const { return static_cast<int>(domain_names.size()); }

    /// Enforces the split invariants: fixed train count per identity,
    /// train/test disjoint by source, every test identity trained on.
    void validate(int train_per_identity) const;
};

/// Gathers instances into batch tensors: images [N,3,H,W], labels, and
/// domain bits [N,d].
struct Batch {
    Tensor images;
    std::vector<int> labels;
    Tensor domain_bits;
};

Batch make_batch(const std::vector<LabeledFaceInstance>& instances, const std::vector<int>& indices);

constexpr int kTrainImagesPerIdentity = 20;

}  // namespace advtrans

#pragma once

#include "advtrans/data/types.hpp"

namespace advtrans {

/// Writes PNGs named `{index}_{identity}_{domainbits}.png` into `dir`.
/// Returns the number of files written.
int export_images(const std::vector<LabeledFaceInstance>& instances, const std::string& dir);

/// Persists a split as train/ and test/ PNG directories plus manifest.json
/// (identity_count, domain_names, seed, file lists).
void save_dataset(const DatasetSplit& split, const std::string& dir);

DatasetSplit load_dataset(const std::string& dir);

/// CelebA-layout ingestion. attr_file: line 1 image count, line 2 attribute
/// names, then one line per image of `filename v1 .. v40` with values +1/-1.
/// identity_file: `filename<TAB>identity` per line. Selected identities are
/// remapped to contiguous labels in the given order.
DatasetSplit ingest_celeba_layout(const std::string& image_dir, const std::string& attr_file,
                                  const std::string& identity_file, const std::vector<int>& selected_identities,
                                  const std::vector<std::string>& selected_domains, int image_size,
                                  std::uint64_t seed = 0, int train_per_identity = kTrainImagesPerIdentity);

}  // namespace advtrans

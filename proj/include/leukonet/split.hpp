#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "leukonet/dataset.hpp"
#include "leukonet/errors.hpp"
#include "leukonet/rng.hpp"

namespace leukonet {

struct SplitRatios {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

/// Assigns train/val/test membership by a deterministic seeded shuffle.
/// Sizes use floor(ratio * n) for val and test with the remainder going to
/// train; with stratify each class is partitioned independently, keeping
/// class proportions within one sample of the ratios. Records come back in
/// their input order with splits filled in.
inline std::vector<DatasetRecord> split_dataset(std::vector<DatasetRecord> records,
                                                const SplitRatios& ratios,
                                                std::uint64_t seed,
                                                bool stratify = true) {
  if (ratios.train <= 0 || ratios.val <= 0 || ratios.test <= 0)
    throw std::invalid_argument("split ratios must be positive");
  if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
    throw std::invalid_argument("split ratios must sum to 1");
  if (records.empty()) throw EmptyClass("cannot split an empty record list");

  std::vector<std::vector<std::size_t>> groups;
  if (stratify) {
    groups.assign(2, {});
    for (std::size_t i = 0; i < records.size(); ++i)
      groups[static_cast<std::size_t>(records[i].label)].push_back(i);
  } else {
    groups.assign(1, {});
    groups[0].resize(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) groups[0][i] = i;
  }

  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    auto& idx = groups[gi];
    if (idx.empty()) continue;
    CounterRng rng(seed, 0x5b17u, gi);
    rng.shuffle(idx.begin(), idx.end());

    const std::size_t n = idx.size();
    const auto val_n = static_cast<std::size_t>(std::floor(ratios.val * static_cast<double>(n)));
    const auto test_n = static_cast<std::size_t>(std::floor(ratios.test * static_cast<double>(n)));
    const std::size_t train_n = n - val_n - test_n;

    for (std::size_t k = 0; k < n; ++k) {
      Split s = Split::train;
      if (k >= train_n) s = k < train_n + val_n ? Split::val : Split::test;
      records[idx[k]].split = s;
    }
  }
  return records;
}

/// (train, val, test) sizes of a manifest.
inline std::array<std::size_t, 3> split_sizes(const std::vector<DatasetRecord>& records) {
  std::array<std::size_t, 3> sizes{0, 0, 0};
  for (const auto& r : records) {
    if (r.split == Split::train) ++sizes[0];
    else if (r.split == Split::val) ++sizes[1];
    else if (r.split == Split::test) ++sizes[2];
  }
  return sizes;
}

}  // namespace leukonet

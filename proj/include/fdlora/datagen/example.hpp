// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fdlora/numerics/matrix.hpp"

namespace fdlora {

struct LabeledExample {
    std::vector<double> features;
    int label = 0;

    friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

using Dataset = std::vector<LabeledExample>;

/// Feature matrix (one row per example) plus labels.
struct Batch {
    Matrix x;
    std::vector<int> labels;
};

Batch make_batch(std::span<const LabeledExample> examples);
Batch make_batch(std::span<const LabeledExample> examples, std::span<const std::size_t> indices);

/// 1 + the largest label (0 for an empty dataset).
std::size_t num_classes(std::span<const LabeledExample> examples);
/// Per-class example counts, padded to `classes` entries.
std::vector<std::size_t> class_counts(std::span<const LabeledExample> examples,
                                      std::size_t classes);

}  // namespace fdlora

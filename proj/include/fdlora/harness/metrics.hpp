// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

#include "fdlora/datagen/example.hpp"
#include "fdlora/lora/model.hpp"

namespace fdlora {

struct ClassificationMetrics {
    double accuracy = 0.0;
    double f1 = 0.0;
    /// Mean cross-entropy; 0 when computed from labels alone.
    double loss = 0.0;
    /// Binary task with no positives in truth or predictions; f1 is then 0.
    bool f1_degenerate = false;
};

/// Accuracy plus F1: binary F1 with class 1 as positive when
/// `num_classes` == 2, otherwise macro-F1 over every class that occurs in
/// `truth` or `predicted`. Throws ContractError on empty or unequal inputs.
ClassificationMetrics classification_metrics(std::span<const int> truth,
                                             std::span<const int> predicted,
                                             std::size_t num_classes);

/// Scores `model` with `adapters` on `test`.
ClassificationMetrics evaluate(const BaseModel& model, const AdapterSet& adapters,
                               std::span<const LabeledExample> test);

}  // namespace fdlora

// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdlora/datagen/example.hpp"

#include <algorithm>

#include "fdlora/errors.hpp"

namespace fdlora {

Batch make_batch(std::span<const LabeledExample> examples) {
    std::vector<std::size_t> idx(examples.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return make_batch(examples, idx);
}

Batch make_batch(std::span<const LabeledExample> examples, std::span<const std::size_t> indices) {
    if (indices.empty()) throw ContractError("make_batch: empty batch");
    const std::size_t dim = examples[indices[0]].features.size();
    if (dim == 0) throw InputError("make_batch: example has no features");
    std::vector<double> data;
    data.reserve(indices.size() * dim);
    Batch out;
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) {
        if (i >= examples.size()) throw ContractError("make_batch: index out of range");
        const LabeledExample& ex = examples[i];
        if (ex.features.size() != dim) throw InputError("make_batch: ragged feature lengths");
        data.insert(data.end(), ex.features.begin(), ex.features.end());
        out.labels.push_back(ex.label);
    }
    out.x = Matrix(indices.size(), dim, std::move(data));
    return out;
}

std::size_t num_classes(std::span<const LabeledExample> examples) {
    int top = -1;
    for (const LabeledExample& ex : examples) top = std::max(top, ex.label);
    return static_cast<std::size_t>(top + 1);
}

std::vector<std::size_t> class_counts(std::span<const LabeledExample> examples,
                                      std::size_t classes) {
    std::vector<std::size_t> counts(classes, 0);
    for (const LabeledExample& ex : examples) {
        if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= classes) {
            throw InputError("class_counts: label " + std::to_string(ex.label) + " out of range");
        }
        ++counts[static_cast<std::size_t>(ex.label)];
    }
    return counts;
}

}  // namespace fdlora

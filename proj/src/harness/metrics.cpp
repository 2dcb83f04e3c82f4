// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdlora/harness/metrics.hpp"

#include <algorithm>
#include <vector>

#include "fdlora/errors.hpp"

namespace fdlora {

namespace {

struct Counts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
};

Counts counts_for(std::span<const int> truth, std::span<const int> predicted, int cls) {
    Counts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool t = truth[i] == cls;
        const bool p = predicted[i] == cls;
        if (t && p) ++c.tp;
        if (!t && p) ++c.fp;
        if (t && !p) ++c.fn;
    }
    return c;
}

double f1_of(const Counts& c) {
    const std::size_t denom = 2 * c.tp + c.fp + c.fn;
    return denom == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

}  // namespace

ClassificationMetrics classification_metrics(std::span<const int> truth,
                                             std::span<const int> predicted,
                                             std::size_t num_classes) {
    if (truth.empty()) throw ContractError("evaluate: empty test set");
    if (truth.size() != predicted.size()) {
        throw ContractError("evaluate: " + std::to_string(truth.size()) + " labels but " +
                            std::to_string(predicted.size()) + " predictions");
    }
    ClassificationMetrics m;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == predicted[i] ? 1 : 0;
    m.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());

    if (num_classes == 2) {
        const Counts c = counts_for(truth, predicted, 1);
        m.f1_degenerate = c.tp + c.fp + c.fn == 0;
        m.f1 = f1_of(c);
        return m;
    }
    std::vector<int> present(truth.begin(), truth.end());
    present.insert(present.end(), predicted.begin(), predicted.end());
    std::sort(present.begin(), present.end());
    present.erase(std::unique(present.begin(), present.end()), present.end());
    double total = 0.0;
    for (int cls : present) total += f1_of(counts_for(truth, predicted, cls));
    m.f1 = total / static_cast<double>(present.size());
    return m;
}

ClassificationMetrics evaluate(const BaseModel& model, const AdapterSet& adapters,
                               std::span<const LabeledExample> test) {
    if (test.empty()) throw ContractError("evaluate: empty test set");
    const Batch batch = make_batch(test);
    const std::vector<int> predicted = model.predict(batch.x, adapters);
    ClassificationMetrics m = classification_metrics(batch.labels, predicted, model.num_classes());
    m.loss = model_loss(model, adapters, batch.x, batch.labels).scalar;
    return m;
}

}  // namespace fdlora

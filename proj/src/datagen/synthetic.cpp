// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdlora/datagen/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "fdlora/errors.hpp"
#include "fdlora/numerics/random.hpp"

namespace fdlora {

std::vector<std::vector<double>> class_means(std::size_t num_classes, std::size_t dim) {
    if (num_classes < 2) throw ConfigError("synthetic task needs at least 2 classes");
    if (dim < 2) throw ConfigError("synthetic task needs at least 2 feature dimensions");
    const double step = 2.0 * std::numbers::pi / static_cast<double>(num_classes);
    const double radius = 0.5 / std::sin(step / 2.0);
    std::vector<std::vector<double>> means(num_classes, std::vector<double>(dim, 0.0));
    for (std::size_t c = 0; c < num_classes; ++c) {
        means[c][0] = radius * std::cos(step * static_cast<double>(c));
        means[c][1] = radius * std::sin(step * static_cast<double>(c));
    }
    return means;
}

Dataset make_synthetic_task(std::size_t num_classes, std::size_t dim, std::size_t per_class,
                            double noise, std::uint64_t seed) {
    if (per_class == 0) throw ConfigError("synthetic task needs per_class >= 1");
    if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("noise must be finite and >= 0");
    const auto means = class_means(num_classes, dim);
    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Dataset out;
    out.reserve(num_classes * per_class);
    for (std::size_t c = 0; c < num_classes; ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            LabeledExample ex;
            ex.label = static_cast<int>(c);
            ex.features = means[c];
            for (double& v : ex.features) v += noise * gauss(rng);
            out.push_back(std::move(ex));
        }
    }
    return out;
}

FederatedTask make_two_skill_task(const TwoSkillSpec& spec) {
    if (spec.num_clients == 0) throw ConfigError("two-skill task needs at least one client");
    if (spec.private_per_client == 0) throw ConfigError("two-skill task needs private examples");
    if (spec.private_dim < 2) throw ConfigError("two-skill task needs private_dim >= 2");

    const std::size_t classes = spec.num_classes;
    const Dataset shared = make_synthetic_task(classes, spec.shared_dim, spec.shared_per_class,
                                               spec.shared_noise, derive_seed(spec.seed, 1));
    const auto private_centres = class_means(classes, spec.private_dim);
    Rng rng(derive_seed(spec.seed, 2));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick_cluster(0, classes - 1);

    FederatedTask task;
    task.num_classes = classes;
    const std::size_t dim = spec.shared_dim + spec.private_dim;

    for (const LabeledExample& ex : shared) {
        LabeledExample full;
        full.label = ex.label;
        full.features = ex.features;
        for (std::size_t k = 0; k < spec.private_dim; ++k)
            full.features.push_back(spec.private_noise * gauss(rng));
        task.data.push_back(std::move(full));
    }

    PartitionSpec pspec;
    pspec.alpha = spec.alpha;
    pspec.num_clients = spec.num_clients;
    pspec.seed = derive_seed(spec.seed, 3);
    pspec.equal_size = spec.equal_size;
    const std::vector<ClientShard> shared_shards = dirichlet_partition(task.data, pspec);

    for (std::size_t client = 0; client < spec.num_clients; ++client) {
        std::vector<int> relabel(classes);
        std::iota(relabel.begin(), relabel.end(), 0);
        std::shuffle(relabel.begin(), relabel.end(), rng);

        std::vector<std::size_t> private_idx;
        for (std::size_t i = 0; i < spec.private_per_client; ++i) {
            const std::size_t cluster = pick_cluster(rng);
            LabeledExample ex;
            ex.label = relabel[cluster];
            ex.features.assign(dim, 0.0);
            for (std::size_t k = 0; k < spec.shared_dim; ++k)
                ex.features[k] = spec.shared_noise * gauss(rng);
            for (std::size_t k = 0; k < spec.private_dim; ++k) {
                ex.features[spec.shared_dim + k] =
                    spec.private_separation * private_centres[cluster][k] +
                    spec.private_noise * gauss(rng);
            }
            private_idx.push_back(task.data.size());
            task.data.push_back(std::move(ex));
        }

        ClientShard priv = split_shard(task.data, client, private_idx, pspec.test_fraction, rng);
        ClientShard merged = shared_shards[client];
        merged.train.insert(merged.train.end(), priv.train.begin(), priv.train.end());
        merged.test.insert(merged.test.end(), priv.test.begin(), priv.test.end());
        merged.train_index.insert(merged.train_index.end(), priv.train_index.begin(),
                                  priv.train_index.end());
        merged.test_index.insert(merged.test_index.end(), priv.test_index.begin(),
                                 priv.test_index.end());

        // Interleave the two skills so batches and the fusion set see both.
        std::vector<std::size_t> order(merged.train.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        ClientShard shuffled = merged;
        for (std::size_t k = 0; k < order.size(); ++k) {
            shuffled.train[k] = merged.train[order[k]];
            shuffled.train_index[k] = merged.train_index[order[k]];
        }
        task.shards.push_back(std::move(shuffled));
    }
    return task;
}

}  // namespace fdlora

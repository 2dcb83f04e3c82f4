// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "fdlora/datagen/example.hpp"
#include "fdlora/datagen/partition.hpp"

namespace fdlora {

/// Class means on a circle in the first two coordinates, spaced so that
/// neighbouring means are exactly 1 apart. Remaining coordinates are 0.
std::vector<std::vector<double>> class_means(std::size_t num_classes, std::size_t dim);

/// Gaussian clusters: per_class examples of each class drawn from
/// N(mean_c, noise^2 I), emitted class by class. Deterministic in `seed`.
Dataset make_synthetic_task(std::size_t num_classes, std::size_t dim, std::size_t per_class,
                            double noise, std::uint64_t seed);

/// Federated task in which every client needs two skills.
///
/// Features are [shared block | private block]. Shared-skill examples come
/// from make_synthetic_task in the shared block (private block is noise) and
/// are split across clients by dirichlet_partition. Private-skill examples
/// sit on fixed clusters in the private block (shared block is noise) but
/// each client labels those clusters through its own permutation, so the
/// rule cannot be learned from pooled data.
struct TwoSkillSpec {
    std::size_t num_clients = 5;
    std::size_t num_classes = 4;
    std::size_t shared_dim = 6;
    std::size_t private_dim = 4;
    std::size_t shared_per_class = 60;
    std::size_t private_per_client = 60;
    double shared_noise = 0.3;
    double private_noise = 0.3;
    /// Spacing of neighbouring private cluster centres.
    double private_separation = 2.0;
    double alpha = 0.5;
    bool equal_size = true;
    std::uint64_t seed = 0;
};

struct FederatedTask {
    Dataset data;
    std::vector<ClientShard> shards;
    std::size_t num_classes = 0;
};

FederatedTask make_two_skill_task(const TwoSkillSpec& spec);

}  // namespace fdlora

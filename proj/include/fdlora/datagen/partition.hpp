// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fdlora/datagen/example.hpp"
#include "fdlora/numerics/random.hpp"

namespace fdlora {

/// One client's local data, already split into train and test. The index
/// vectors point into the dataset the shard was carved from.
struct ClientShard {
    std::size_t client_id = 0;
    Dataset train;
    Dataset test;
    std::vector<std::size_t> train_index;
    std::vector<std::size_t> test_index;

    std::size_t size() const { return train.size() + test.size(); }
};

struct PartitionSpec {
    double alpha = 0.5;
    std::size_t num_clients = 5;
    std::uint64_t seed = 0;
    /// Equal-size shards whose label mix follows the Dirichlet draws;
    /// otherwise shard sizes follow the drawn proportions directly.
    bool equal_size = true;
    double test_fraction = 0.2;
    int max_retries = 100;
};

/// Label-skewed split: for each class a proportion vector over clients is
/// drawn from Dir(alpha * 1_N) and the class's examples are dealt out
/// accordingly (largest-remainder rounding). Each shard is then shuffled and
/// split train/test. A draw that leaves a client empty is redrawn up to
/// `max_retries` times before a ConfigError.
std::vector<ClientShard> dirichlet_partition(const Dataset& data, const PartitionSpec& spec);

/// Shuffles `indices` and splits off round(test_fraction * n) test examples.
ClientShard split_shard(const Dataset& data, std::size_t client_id,
                        std::vector<std::size_t> indices, double test_fraction, Rng& rng);

/// Integer counts summing to `total` that follow `weights` by largest remainder.
std::vector<std::size_t> largest_remainder(std::span<const double> weights, std::size_t total);

/// Mean over clients of the (population) standard deviation of that
/// client's class proportions. 0 for perfectly balanced shards.
double class_proportion_std(const std::vector<ClientShard>& shards, std::size_t classes);

/// Partition manifest: {"clients": [{"client_id", "train": [...], "test": [...]}]}.
std::string partition_manifest_json(const std::vector<ClientShard>& shards);

struct ManifestEntry {
    std::size_t client_id = 0;
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};
std::vector<ManifestEntry> parse_partition_manifest(const std::string& text);

}  // namespace fdlora

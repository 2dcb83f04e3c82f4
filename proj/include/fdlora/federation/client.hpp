// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "fdlora/datagen/partition.hpp"
#include "fdlora/federation/config.hpp"
#include "fdlora/lora/model.hpp"

namespace fdlora {

struct ClientState {
    std::size_t client_id = 0;
    std::shared_ptr<const ClientShard> shard;
    /// Tail of shard->train reserved for fusion scoring; the rest trains.
    std::size_t few_shot_count = 0;
    AdapterSet personalized;
    AdapterSet global_copy;
    FusionWeights fusion_weights;
    InnerOptState inner_opt;
    Rng rng;

    std::span<const LabeledExample> train_examples() const;
    /// The fusion set Q. Equals the whole train split when nothing is held out.
    std::span<const LabeledExample> few_shot_examples() const;
};

/// Number of train examples held out for fusion: min(set_size, n/2),
/// with 0 meaning none.
std::size_t few_shot_size(std::size_t train_size, std::size_t set_size);

/// One client per shard. Every client starts from the same adapter
/// initialisation (`initial`); its RNG is seeded with cfg.seed ^ client_id.
std::vector<ClientState> make_clients(std::span<const ClientShard> shards,
                                      const AdapterSet& initial, const FederationConfig& cfg);

/// `count` distinct indices below `n` drawn from `rng`, or 0..n-1 in order
/// when count >= n.
std::vector<std::size_t> sample_batch_indices(std::size_t n, std::size_t count, Rng& rng);

/// Fine-tunes each client's personalized adapter for cfg.local_epochs epochs
/// of shuffled mini-batches. The learning rate drops by lr_decay once 80% of
/// the steps are done. Throws ConfigError for a client with no train data.
std::vector<ClientState> stage1_local_learning(std::vector<ClientState> clients,
                                               const BaseModel& base,
                                               const FederationConfig& cfg);

/// Runs fn(0..n-1) on up to `jobs` threads. If any call throws, the
/// exception of the lowest index is rethrown after all calls finish.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn);

}  // namespace fdlora

#include "fdlora/federation/parallel.inl"

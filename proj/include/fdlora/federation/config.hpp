// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "fdlora/lora/fusion.hpp"
#include "fdlora/optim/inner.hpp"

namespace fdlora {

struct FederationConfig {
    std::size_t num_clients = 5;
    std::int64_t outer_rounds = 30;
    std::int64_t inner_steps = 3;
    /// Rounds between personalized <- global copies; nullopt means never.
    std::optional<std::int64_t> sync_every = 1;
    double dirichlet_alpha = 0.5;
    double inner_lr = 2e-4;
    double outer_lr = 1e-3;
    double outer_momentum = 0.5;
    double weight_decay = 0.01;
    double lr_decay = 0.1;
    double fusion_lambda = 0.05;
    FusionMode fusion_mode = FusionMode::kAdaFusion;
    std::int64_t batch_size = 1;
    std::int64_t local_epochs = 3;
    std::size_t rank = 4;
    std::uint64_t seed = 0;

    InnerOptimizerKind inner_optimizer = InnerOptimizerKind::kAdamW;
    /// Coordinate-search passes of the fusion optimizer.
    int fusion_steps = 5;
    /// Few-shot examples held out of each client's train split for fusion;
    /// 0 scores fusion on the whole train split and holds nothing out.
    std::size_t fusion_set_size = 32;
    /// Test share of each shard for datasets loaded from file.
    double test_fraction = 0.2;
    /// Hidden widths of the frozen MLP.
    std::vector<std::size_t> hidden_dims = {16};
    /// Worker threads for client-local work. Results do not depend on it.
    std::size_t jobs = 1;

    /// Throws ConfigError naming the first offending field.
    void validate() const;
    InnerOptConfig inner_opt_config() const;
    /// 1-based round t triggers a personalized copy when t % H == 0.
    bool syncs_at(std::int64_t round) const;
    std::int64_t expected_sync_events() const;

    /// Rates tuned for the small synthetic tasks: the defaults above are the
    /// large-model settings and barely move a 16-unit MLP in 30 rounds.
    static FederationConfig desk_preset();
};

nlohmann::ordered_json to_json(const FederationConfig& cfg);
/// Missing keys keep `base` values; unknown keys raise ConfigError.
FederationConfig config_from_json(const nlohmann::json& j, FederationConfig base = {});

}  // namespace fdlora

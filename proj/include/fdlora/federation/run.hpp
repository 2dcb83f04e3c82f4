// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdlora/datagen/partition.hpp"
#include "fdlora/federation/server.hpp"
#include "fdlora/harness/metrics.hpp"

namespace fdlora {

struct ClientReport {
    std::size_t client_id = 0;
    std::size_t train_size = 0;
    std::size_t few_shot_size = 0;
    std::size_t test_size = 0;
    FusionWeights fusion_weights;
    ClassificationMetrics metrics;
};

struct StageTiming {
    double stage1_seconds = 0.0;
    double stage2_seconds = 0.0;
    double stage3_seconds = 0.0;
    double evaluate_seconds = 0.0;
};

struct RunReport {
    FederationConfig config;
    std::vector<ClientReport> clients;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
    double mean_f1 = 0.0;
    double std_f1 = 0.0;
    double mean_loss = 0.0;
    CommLedger ledger;
    std::int64_t global_adapter_bytes = 0;
    std::uint64_t base_checksum = 0;
    StageTiming timing;

    /// Everything but wall-clock times and the thread count lives outside
    /// the "timing" key.
    nlohmann::ordered_json to_json(bool include_timing = true) const;
};

struct RunOptions {
    /// When set, round_<t>/global.json and round_<t>/client_<i>_personalized.json
    /// are written for t = 0..T.
    std::optional<std::filesystem::path> checkpoint_dir;
};

struct RunResult {
    RunReport report;
    nlohmann::ordered_json manifest;
    BaseModel base;
    AdapterSet initial_adapters;
    ServerState server;
    std::vector<ClientState> clients;
};

/// Frozen MLP sized {input_dim, hidden_dims..., num_classes}.
BaseModel make_base_model(const FederationConfig& cfg, std::size_t input_dim,
                          std::size_t num_classes);

/// The shared starting adapter of every client.
AdapterSet initial_adapters(const BaseModel& base, const FederationConfig& cfg);

/// Stages 1-3 on pre-split shards, then each client is scored on its own
/// test split with its fused adapter. Throws NumericError if the frozen
/// base changed.
RunResult run_fdlora(const FederationConfig& cfg, std::span<const ClientShard> shards,
                     std::size_t num_classes, const RunOptions& options = {});

/// Dirichlet-partitions `data` across cfg.num_clients clients first.
RunResult run_fdlora(const FederationConfig& cfg, const Dataset& data,
                     const RunOptions& options = {});

/// Partition used by the dataset overload.
PartitionSpec partition_spec(const FederationConfig& cfg);

/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
double sample_std(std::span<const double> values);
double mean_of(std::span<const double> values);

}  // namespace fdlora

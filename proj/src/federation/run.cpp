// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdlora/federation/run.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "fdlora/common/digest.hpp"
#include "fdlora/datagen/jsonl.hpp"
#include "fdlora/errors.hpp"
#include "fdlora/lora/checkpoint.hpp"

namespace fdlora {

namespace {

constexpr std::uint64_t kBaseStream = 1;
constexpr std::uint64_t kAdapterStream = 2;
constexpr std::uint64_t kPartitionStream = 3;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void write_checkpoints(const std::filesystem::path& dir, std::int64_t round,
                       const ServerState& server, const std::vector<ClientState>& clients,
                       std::uint64_t seed) {
    const std::filesystem::path round_dir = dir / ("round_" + std::to_string(round));
    save_checkpoint(round_dir / "global.json",
                    AdapterSetCheckpoint{server.global_adapter, seed, round});
    for (const ClientState& c : clients) {
        save_checkpoint(round_dir / ("client_" + std::to_string(c.client_id) + "_personalized.json"),
                        AdapterSetCheckpoint{c.personalized, seed, round});
    }
}

std::size_t infer_input_dim(std::span<const ClientShard> shards) {
    for (const ClientShard& s : shards) {
        if (!s.train.empty()) return s.train.front().features.size();
        if (!s.test.empty()) return s.test.front().features.size();
    }
    throw ConfigError("run: every shard is empty");
}

RunResult run_impl(const FederationConfig& cfg, std::span<const ClientShard> shards,
                   std::size_t num_classes, const std::string& dataset_digest,
                   const RunOptions& options) {
    cfg.validate();
    if (shards.size() != cfg.num_clients) {
        throw ConfigError("run: " + std::to_string(shards.size()) + " shards for " +
                          std::to_string(cfg.num_clients) + " clients");
    }
    if (num_classes < 2) throw ConfigError("run: need at least 2 classes");
    for (const ClientShard& s : shards) {
        if (s.test.empty()) {
            throw ConfigError("run: client " + std::to_string(s.client_id) + " has no test data");
        }
    }

    BaseModel base = make_base_model(cfg, infer_input_dim(shards), num_classes);
    const std::uint64_t checksum_before = base.checksum();
    AdapterSet initial = initial_adapters(base, cfg);

    RunReport report;
    report.config = cfg;

    nlohmann::ordered_json manifest;
    manifest["config"] = to_json(cfg);
    manifest["dataset_digest"] = dataset_digest;
    manifest["initial_adapters_hash"] =
        git_blob_hash(dump_checkpoint(AdapterSetCheckpoint{initial, cfg.seed, 0}));
    manifest["base_checksum"] = checksum_before;
    manifest["partition_imbalance"] = class_proportion_std(
        std::vector<ClientShard>(shards.begin(), shards.end()), num_classes);

    auto start = Clock::now();
    std::vector<ClientState> clients =
        stage1_local_learning(make_clients(shards, initial, cfg), base, cfg);
    report.timing.stage1_seconds = seconds_since(start);

    start = Clock::now();
    ServerState server = stage2_init_global(clients, cfg);
    CommLedger ledger;
    if (options.checkpoint_dir) {
        write_checkpoints(*options.checkpoint_dir, 0, server, clients, cfg.seed);
    }
    while (server.round < cfg.outer_rounds) {
        RoundResult r = stage2_round(server, clients, base, cfg, ledger);
        server = std::move(r.server);
        clients = std::move(r.clients);
        ledger = r.ledger;
        if (options.checkpoint_dir) {
            write_checkpoints(*options.checkpoint_dir, server.round, server, clients, cfg.seed);
        }
    }
    report.timing.stage2_seconds = seconds_since(start);

    start = Clock::now();
    clients = stage3_fusion(std::move(clients), server, base, cfg);
    report.timing.stage3_seconds = seconds_since(start);

    start = Clock::now();
    report.clients.resize(clients.size());
    parallel_for(clients.size(), cfg.jobs, [&](std::size_t i) {
        const ClientState& c = clients[i];
        ClientReport& cr = report.clients[i];
        cr.client_id = c.client_id;
        cr.train_size = c.train_examples().size();
        cr.few_shot_size = c.few_shot_count;
        cr.test_size = c.shard->test.size();
        cr.fusion_weights = c.fusion_weights;
        cr.metrics = evaluate(base, fused_adapters(c, server), c.shard->test);
    });
    report.timing.evaluate_seconds = seconds_since(start);

    std::vector<double> acc;
    std::vector<double> f1;
    std::vector<double> loss;
    for (const ClientReport& cr : report.clients) {
        acc.push_back(cr.metrics.accuracy);
        f1.push_back(cr.metrics.f1);
        loss.push_back(cr.metrics.loss);
    }
    report.mean_accuracy = mean_of(acc);
    report.std_accuracy = sample_std(acc);
    report.mean_f1 = mean_of(f1);
    report.std_f1 = sample_std(f1);
    report.mean_loss = mean_of(loss);
    report.ledger = ledger;
    report.global_adapter_bytes = static_cast<std::int64_t>(serialized_size(server.global_adapter));
    report.base_checksum = base.checksum();
    if (report.base_checksum != checksum_before) {
        throw NumericError("run: frozen base model changed during the run");
    }

    return RunResult{std::move(report), std::move(manifest), std::move(base), std::move(initial),
                     std::move(server), std::move(clients)};
}

nlohmann::ordered_json weights_json(const FusionWeights& w) {
    return nlohmann::ordered_json::array({w.w1, w.w2});
}

}  // namespace

nlohmann::ordered_json RunReport::to_json(bool include_timing) const {
    nlohmann::ordered_json j;
    j["config"] = fdlora::to_json(config);
    // Thread count is an execution detail; results do not depend on it.
    j["config"].erase("jobs");
    nlohmann::ordered_json per_client = nlohmann::ordered_json::array();
    for (const ClientReport& c : clients) {
        nlohmann::ordered_json cj;
        cj["client_id"] = c.client_id;
        cj["train_size"] = c.train_size;
        cj["few_shot_size"] = c.few_shot_size;
        cj["test_size"] = c.test_size;
        cj["fusion_weights"] = weights_json(c.fusion_weights);
        cj["accuracy"] = c.metrics.accuracy;
        cj["f1"] = c.metrics.f1;
        cj["f1_degenerate"] = c.metrics.f1_degenerate;
        cj["loss"] = c.metrics.loss;
        per_client.push_back(std::move(cj));
    }
    j["clients"] = std::move(per_client);
    nlohmann::ordered_json summary;
    summary["mean_accuracy"] = mean_accuracy;
    summary["std_accuracy"] = std_accuracy;
    summary["mean_f1"] = mean_f1;
    summary["std_f1"] = std_f1;
    summary["mean_loss"] = mean_loss;
    j["summary"] = std::move(summary);
    j["ledger"] = fdlora::to_json(ledger);
    j["global_adapter_bytes"] = global_adapter_bytes;
    j["base_checksum"] = base_checksum;
    if (include_timing) {
        nlohmann::ordered_json t;
        t["stage1_seconds"] = timing.stage1_seconds;
        t["stage2_seconds"] = timing.stage2_seconds;
        t["stage3_seconds"] = timing.stage3_seconds;
        t["evaluate_seconds"] = timing.evaluate_seconds;
        t["jobs"] = config.jobs;
        j["timing"] = std::move(t);
    }
    return j;
}

BaseModel make_base_model(const FederationConfig& cfg, std::size_t input_dim,
                          std::size_t num_classes) {
    std::vector<std::size_t> dims{input_dim};
    dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
    dims.push_back(num_classes);
    return BaseModel::mlp(dims, derive_seed(cfg.seed, kBaseStream));
}

AdapterSet initial_adapters(const BaseModel& base, const FederationConfig& cfg) {
    Rng rng(derive_seed(cfg.seed, kAdapterStream));
    return base.init_adapters(cfg.rank, rng);
}

PartitionSpec partition_spec(const FederationConfig& cfg) {
    PartitionSpec spec;
    spec.alpha = cfg.dirichlet_alpha;
    spec.num_clients = cfg.num_clients;
    spec.seed = derive_seed(cfg.seed, kPartitionStream);
    spec.test_fraction = cfg.test_fraction;
    return spec;
}

RunResult run_fdlora(const FederationConfig& cfg, std::span<const ClientShard> shards,
                     std::size_t num_classes, const RunOptions& options) {
    Dataset pooled;
    for (const ClientShard& s : shards) {
        pooled.insert(pooled.end(), s.train.begin(), s.train.end());
        pooled.insert(pooled.end(), s.test.begin(), s.test.end());
    }
    return run_impl(cfg, shards, num_classes, dataset_digest(pooled), options);
}

RunResult run_fdlora(const FederationConfig& cfg, const Dataset& data, const RunOptions& options) {
    cfg.validate();
    const std::vector<ClientShard> shards = dirichlet_partition(data, partition_spec(cfg));
    return run_impl(cfg, shards, num_classes(data), dataset_digest(data), options);
}

double mean_of(std::span<const double> values) {
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    const double m = mean_of(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

}  // namespace fdlora

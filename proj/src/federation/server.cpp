// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdlora/federation/server.hpp"

#include <utility>

#include "fdlora/datagen/example.hpp"
#include "fdlora/errors.hpp"

namespace fdlora {

namespace {

constexpr std::uint64_t kFusionStream = 0x66757369;

ClientState run_inner_loop(ClientState c, const AdapterSet& global, const BaseModel& base,
                           const FederationConfig& cfg, bool sync) {
    const std::span<const LabeledExample> train = c.train_examples();
    if (train.empty()) {
        throw ConfigError("client " + std::to_string(c.client_id) + " has no training data");
    }
    c.global_copy = global;
    c.inner_opt = InnerOptState::fresh(cfg.inner_opt_config(), c.global_copy);
    for (std::int64_t k = 0; k < cfg.inner_steps; ++k) {
        const std::vector<std::size_t> idx =
            sample_batch_indices(train.size(), static_cast<std::size_t>(cfg.batch_size), c.rng);
        const Batch batch = make_batch(train, idx);
        const LossAndGrads lg = loss_and_grads(base, c.global_copy, batch.x, batch.labels);
        c.global_copy = inner_step(c.global_copy, lg.grads, c.inner_opt);
    }
    if (sync) c.personalized = c.global_copy;
    return c;
}

}  // namespace

nlohmann::ordered_json to_json(const CommLedger& ledger) {
    nlohmann::ordered_json j;
    j["rounds_sent"] = ledger.rounds_sent;
    j["bytes_up"] = ledger.bytes_up;
    j["bytes_down"] = ledger.bytes_down;
    j["inner_steps_total"] = ledger.inner_steps_total;
    j["sync_events"] = ledger.sync_events;
    return j;
}

ServerState stage2_init_global(const std::vector<ClientState>& clients,
                               const FederationConfig& cfg) {
    std::vector<AdapterSet> personalized;
    personalized.reserve(clients.size());
    for (const ClientState& c : clients) personalized.push_back(c.personalized);
    ServerState s;
    s.global_adapter = average_adapters(personalized);
    s.outer_opt = OuterOptState::fresh(s.global_adapter, cfg.outer_lr, cfg.outer_momentum);
    s.round = 0;
    return s;
}

RoundResult stage2_round(const ServerState& server, const std::vector<ClientState>& clients,
                         const BaseModel& base, const FederationConfig& cfg,
                         const CommLedger& ledger) {
    cfg.validate();
    if (server.round >= cfg.outer_rounds) {
        throw ContractError("stage2_round: round " + std::to_string(server.round) +
                            " is not below T = " + std::to_string(cfg.outer_rounds));
    }
    if (clients.empty()) throw ContractError("stage2_round: no clients");
    base.validate(server.global_adapter);

    const std::int64_t t = server.round + 1;
    const bool sync = cfg.syncs_at(t);
    const std::int64_t n = static_cast<std::int64_t>(clients.size());
    const std::int64_t size = static_cast<std::int64_t>(serialized_size(server.global_adapter));

    RoundResult r;
    r.ledger = ledger;
    r.ledger.bytes_down += n * size;

    r.clients.resize(clients.size());
    parallel_for(clients.size(), cfg.jobs, [&](std::size_t i) {
        r.clients[i] = run_inner_loop(clients[i], server.global_adapter, base, cfg, sync);
    });
    r.ledger.inner_steps_total += n * cfg.inner_steps;
    if (sync) r.ledger.sync_events += 1;

    std::vector<AdapterSet> uploads;
    uploads.reserve(r.clients.size());
    for (const ClientState& c : r.clients) uploads.push_back(c.global_copy);
    r.ledger.bytes_up += n * size;

    r.server = server;
    const AdapterSet delta = outer_delta(server.global_adapter, uploads);
    r.server.global_adapter = outer_step(server.global_adapter, delta, r.server.outer_opt);
    r.server.round = t;
    r.ledger.rounds_sent += 1;
    return r;
}

double fusion_loss(const ClientState& client, const AdapterSet& global, const BaseModel& base,
                   const FusionWeights& w) {
    const Batch q = make_batch(client.few_shot_examples());
    return model_loss(base, ada_fuse(client.personalized, global, w), q.x, q.labels).scalar;
}

std::vector<ClientState> stage3_fusion(std::vector<ClientState> clients,
                                       const ServerState& server, const BaseModel& base,
                                       const FederationConfig& cfg) {
    cfg.validate();
    parallel_for(clients.size(), cfg.jobs, [&](std::size_t i) {
        ClientState& c = clients[i];
        if (cfg.fusion_mode != FusionMode::kAdaFusion) {
            c.fusion_weights = baseline_fusion(cfg.fusion_mode, c.rng);
            return;
        }
        if (c.few_shot_examples().empty()) {
            throw ConfigError("client " + std::to_string(c.client_id) + " has no fusion examples");
        }
        FusionBudget budget;
        budget.max_steps = cfg.fusion_steps;
        budget.lambda_reg = cfg.fusion_lambda;
        budget.seed = derive_seed(cfg.seed ^ static_cast<std::uint64_t>(c.client_id), kFusionStream);
        const FusionResult res = fusion_opt(
            [&](const FusionWeights& w) { return fusion_loss(c, server.global_adapter, base, w); },
            budget);
        c.fusion_weights = res.weights;
    });
    return clients;
}

AdapterSet fused_adapters(const ClientState& client, const ServerState& server) {
    return ada_fuse(client.personalized, server.global_adapter, client.fusion_weights);
}

}  // namespace fdlora

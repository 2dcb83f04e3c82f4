// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "fdlora/federation/client.hpp"
#include "fdlora/optim/fusion_opt.hpp"
#include "fdlora/optim/outer.hpp"

namespace fdlora {

struct ServerState {
    AdapterSet global_adapter;
    OuterOptState outer_opt;
    std::int64_t round = 0;
};

/// Only global-adapter traffic is ever recorded here.
struct CommLedger {
    std::int64_t rounds_sent = 0;
    std::int64_t bytes_up = 0;
    std::int64_t bytes_down = 0;
    std::int64_t inner_steps_total = 0;
    /// Rounds in which clients copied their global adapter into the
    /// personalized one.
    std::int64_t sync_events = 0;

    friend bool operator==(const CommLedger&, const CommLedger&) = default;
};

nlohmann::ordered_json to_json(const CommLedger& ledger);

/// Server starting point: the factor-wise mean of the personalized adapters,
/// zero momentum, round 0.
ServerState stage2_init_global(const std::vector<ClientState>& clients,
                               const FederationConfig& cfg);

struct RoundResult {
    ServerState server;
    std::vector<ClientState> clients;
    CommLedger ledger;
};

/// One outer round on copies of the inputs:
///  1. broadcast the global adapter into every client's global copy;
///  2. each client runs K inner steps on fresh batches of size b drawn
///     without replacement (optimizer state reset per round);
///  3. with t = round + 1, clients copy global -> personalized if t % H == 0;
///  4. the server averages (global - client) and takes a Nesterov step.
/// The inputs are untouched, so a throwing client leaves nothing half-done.
RoundResult stage2_round(const ServerState& server, const std::vector<ClientState>& clients,
                         const BaseModel& base, const FederationConfig& cfg,
                         const CommLedger& ledger);

/// Cross-entropy of the fused model on the client's fusion set.
double fusion_loss(const ClientState& client, const AdapterSet& global, const BaseModel& base,
                   const FusionWeights& w);

/// Chooses each client's fusion weights against the server's final global
/// adapter: the fusion search for AdaFusion, baseline_fusion otherwise.
std::vector<ClientState> stage3_fusion(std::vector<ClientState> clients,
                                       const ServerState& server, const BaseModel& base,
                                       const FederationConfig& cfg);

/// The adapter a client serves with after stage 3.
AdapterSet fused_adapters(const ClientState& client, const ServerState& server);

}  // namespace fdlora

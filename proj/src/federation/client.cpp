// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdlora/federation/client.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "fdlora/datagen/example.hpp"
#include "fdlora/errors.hpp"

namespace fdlora {

namespace {

ClientState train_local(ClientState c, const BaseModel& base, const FederationConfig& cfg) {
    const std::span<const LabeledExample> train = c.train_examples();
    if (train.empty()) {
        throw ConfigError("client " + std::to_string(c.client_id) + " has no training data");
    }
    c.inner_opt = InnerOptState::fresh(cfg.inner_opt_config(), c.personalized);
    const std::size_t n = train.size();
    const std::size_t b = std::min(static_cast<std::size_t>(cfg.batch_size), n);
    const std::size_t per_epoch = (n + b - 1) / b;
    const std::size_t total = per_epoch * static_cast<std::size_t>(cfg.local_epochs);
    const double drop_at = 0.8 * static_cast<double>(total);

    std::vector<std::size_t> order(n);
    std::size_t step = 0;
    for (std::int64_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), c.rng);
        for (std::size_t start = 0; start < n; start += b) {
            const std::span<const std::size_t> idx(order.data() + start, std::min(b, n - start));
            const Batch batch = make_batch(train, idx);
            const LossAndGrads lg = loss_and_grads(base, c.personalized, batch.x, batch.labels);
            const double scale = static_cast<double>(step) >= drop_at ? cfg.lr_decay : 1.0;
            c.personalized = inner_step(c.personalized, lg.grads, c.inner_opt, scale);
            ++step;
        }
    }
    return c;
}

}  // namespace

std::span<const LabeledExample> ClientState::train_examples() const {
    const Dataset& train = shard->train;
    return {train.data(), train.size() - few_shot_count};
}

std::span<const LabeledExample> ClientState::few_shot_examples() const {
    const Dataset& train = shard->train;
    if (few_shot_count == 0) return {train.data(), train.size()};
    return {train.data() + (train.size() - few_shot_count), few_shot_count};
}

std::size_t few_shot_size(std::size_t train_size, std::size_t set_size) {
    return std::min(set_size, train_size / 2);
}

std::vector<ClientState> make_clients(std::span<const ClientShard> shards,
                                      const AdapterSet& initial, const FederationConfig& cfg) {
    std::vector<ClientState> clients;
    clients.reserve(shards.size());
    for (const ClientShard& shard : shards) {
        ClientState c;
        c.client_id = shard.client_id;
        c.shard = std::make_shared<const ClientShard>(shard);
        c.few_shot_count = few_shot_size(shard.train.size(), cfg.fusion_set_size);
        c.personalized = initial;
        c.inner_opt = InnerOptState::fresh(cfg.inner_opt_config(), initial);
        c.rng.seed(cfg.seed ^ static_cast<std::uint64_t>(shard.client_id));
        clients.push_back(std::move(c));
    }
    return clients;
}

std::vector<std::size_t> sample_batch_indices(std::size_t n, std::size_t count, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (count >= n) return idx;
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(count);
    return idx;
}

std::vector<ClientState> stage1_local_learning(std::vector<ClientState> clients,
                                               const BaseModel& base,
                                               const FederationConfig& cfg) {
    cfg.validate();
    for (const ClientState& c : clients) base.validate(c.personalized);
    std::vector<ClientState> out(clients.size());
    parallel_for(clients.size(), cfg.jobs,
                 [&](std::size_t i) { out[i] = train_local(std::move(clients[i]), base, cfg); });
    return out;
}

}  // namespace fdlora

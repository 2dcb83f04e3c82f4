// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

// Reference loops for the federation reductions. They reuse the verified
// primitives (gradients, AdamW, batch sampling) but not the round logic,
// the outer optimizer or the pairwise averaging.

#pragma once

#include <vector>

#include "fdlora/datagen/example.hpp"
#include "fdlora/federation/client.hpp"
#include "fdlora/federation/server.hpp"
#include "oracles.hpp"

namespace fdlora::oracle {

/// Left-to-right arithmetic mean of adapter factors.
inline AdapterSet plain_mean(const std::vector<AdapterSet>& sets) {
    AdapterSet out;
    for (const auto& [site, first] : sets.front()) {
        std::vector<Matrix> bs;
        std::vector<Matrix> as;
        for (const AdapterSet& s : sets) {
            bs.push_back(s.at(site).b_factor());
            as.push_back(s.at(site).a_factor());
        }
        out.insert(first.with_factors(entry_mean(bs), entry_mean(as)));
    }
    return out;
}

/// K local steps from `start` on one client, consuming the client's RNG
/// exactly as a federated round does.
inline AdapterSet local_steps(ClientState& c, const AdapterSet& start, const BaseModel& base,
                              const FederationConfig& cfg) {
    AdapterSet w = start;
    InnerOptState st = InnerOptState::fresh(cfg.inner_opt_config(), w);
    const auto train = c.train_examples();
    for (std::int64_t k = 0; k < cfg.inner_steps; ++k) {
        const auto idx = sample_batch_indices(train.size(), static_cast<std::size_t>(cfg.batch_size),
                                              c.rng);
        const Batch b = make_batch(train, idx);
        w = inner_step(w, loss_and_grads(base, w, b.x, b.labels).grads, st);
    }
    return w;
}

/// FedAvg: broadcast, local steps, replace the global by the client mean.
inline AdapterSet fedavg(std::vector<ClientState> clients, const BaseModel& base,
                         const FederationConfig& cfg) {
    std::vector<AdapterSet> start;
    for (const ClientState& c : clients) start.push_back(c.personalized);
    AdapterSet global = plain_mean(start);
    for (std::int64_t t = 0; t < cfg.outer_rounds; ++t) {
        std::vector<AdapterSet> locals;
        for (ClientState& c : clients) locals.push_back(local_steps(c, global, base, cfg));
        global = plain_mean(locals);
    }
    return global;
}

/// One plain gradient step on the pooled training data of all clients.
inline AdapterSet centralized_step(const AdapterSet& theta, const std::vector<ClientState>& clients,
                                   const BaseModel& base, double lr) {
    Dataset pooled;
    for (const ClientState& c : clients) {
        const auto tr = c.train_examples();
        pooled.insert(pooled.end(), tr.begin(), tr.end());
    }
    const Batch b = make_batch(pooled);
    const AdapterGrads g = loss_and_grads(base, theta, b.x, b.labels).grads;
    AdapterSet out;
    for (const auto& [site, a] : theta) {
        Matrix nb = a.b_factor();
        Matrix na = a.a_factor();
        for (std::size_t i = 0; i < nb.rows(); ++i) {
            for (std::size_t j = 0; j < nb.cols(); ++j) nb(i, j) -= lr * g.at(site).b(i, j);
        }
        for (std::size_t i = 0; i < na.rows(); ++i) {
            for (std::size_t j = 0; j < na.cols(); ++j) na(i, j) -= lr * g.at(site).a(i, j);
        }
        out.insert(a.with_factors(nb, na));
    }
    return out;
}

inline double max_abs_diff(const AdapterSet& x, const AdapterSet& y) {
    double worst = 0.0;
    for (const auto& [site, a] : x) {
        worst = std::max(worst, fdlora::max_abs_diff(a.b_factor(), y.at(site).b_factor()));
        worst = std::max(worst, fdlora::max_abs_diff(a.a_factor(), y.at(site).a_factor()));
    }
    return worst;
}

}  // namespace fdlora::oracle

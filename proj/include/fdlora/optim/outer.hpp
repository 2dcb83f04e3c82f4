// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "fdlora/lora/adapter.hpp"

namespace fdlora {

/// Server-side Nesterov momentum state over the global adapter factors.
struct OuterOptState {
    AdapterGrads momentum_buffer;
    double lr = 1e-3;
    double momentum = 0.5;

    static OuterOptState fresh(const AdapterSet& params, double lr, double momentum);
};

/// Outer gradient: per-entry mean over clients of (global_prev - client).
/// Throws ContractError for an empty client list, ConfigError on mismatch.
AdapterSet outer_delta(const AdapterSet& global_prev, std::span<const AdapterSet> client_results);

/// v <- m*v + delta;  theta <- theta - lr*(delta + m*v).
/// With m = 0 and lr = 1 this is theta - delta, i.e. plain averaging.
AdapterSet outer_step(const AdapterSet& global_prev, const AdapterSet& delta,
                      OuterOptState& state);

}  // namespace fdlora

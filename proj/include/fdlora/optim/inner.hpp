// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>

#include "fdlora/lora/adapter.hpp"

namespace fdlora {

enum class InnerOptimizerKind { kAdamW, kSgd };

std::string_view to_string(InnerOptimizerKind kind);
InnerOptimizerKind parse_inner_optimizer(std::string_view name);

struct InnerOptConfig {
    InnerOptimizerKind kind = InnerOptimizerKind::kAdamW;
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    /// Multiplier applied once the schedule reaches its drop point.
    double lr_decay = 0.1;
};

/// Per-actor optimizer state; moment buffers mirror the adapter shapes.
struct InnerOptState {
    InnerOptConfig config;
    AdapterGrads first_moment;
    AdapterGrads second_moment;
    std::size_t step_count = 0;

    static InnerOptState fresh(const InnerOptConfig& config, const AdapterSet& params);
};

/// One optimizer step on every adapter factor.
///
/// AdamW: m <- b1*m + (1-b1)*g, v <- b2*v + (1-b2)*g^2,
///        p <- p - lr * m_hat / (sqrt(v_hat) + eps), then p <- p - lr*wd*p.
/// SGD:   p <- p - lr*g, then the same decoupled decay.
/// `lr_scale` multiplies lr for this step. Throws ContractError when
/// `grads` does not cover exactly the adapter entries of `params`.
AdapterSet inner_step(const AdapterSet& params, const AdapterGrads& grads, InnerOptState& state,
                      double lr_scale = 1.0);

}  // namespace fdlora

// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

#include "fdlora/lora/adapter.hpp"
#include "fdlora/numerics/random.hpp"

namespace fdlora {

/// Coefficients of the personalized (w1) and global (w2) adapters.
struct FusionWeights {
    double w1 = 1.0;
    double w2 = 0.0;

    double l1() const;
    friend bool operator==(const FusionWeights&, const FusionWeights&) = default;
};

/// Box constraint applied to both coefficients.
struct FusionBox {
    double lo = -1.5;
    double hi = 1.5;
};

FusionWeights clamp(FusionWeights w, const FusionBox& box);

enum class FusionMode { kAdaFusion, kRandom, kAverage, kSum, kPersonalizedOnly, kGlobalOnly };

std::string_view to_string(FusionMode mode);
/// Accepts the names printed by to_string (case-insensitive); throws ConfigError.
FusionMode parse_fusion_mode(std::string_view name);

/// Parameter-space combination of two same-rank adapters:
///   B = w1*B1 + w2*B2,  A = w1*A1 + w2*A2.
/// The fused delta therefore carries the cross terms w1*w2*(B1*A2 + B2*A1).
LoraAdapter ada_fuse(const LoraAdapter& personalized, const LoraAdapter& global,
                     const FusionWeights& w);
AdapterSet ada_fuse(const AdapterSet& personalized, const AdapterSet& global,
                    const FusionWeights& w);

/// Fixed weights for the non-searching modes: Random draws both from
/// Uniform(0, 1) (exclusive), Average is (0.5, 0.5), Sum is (1, 1),
/// PersonalizedOnly (1, 0), GlobalOnly (0, 1). AdaFusion is a ContractError.
FusionWeights baseline_fusion(FusionMode mode, Rng& rng);

}  // namespace fdlora

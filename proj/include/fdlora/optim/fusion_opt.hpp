// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fdlora/lora/fusion.hpp"

namespace fdlora {

struct FusionBudget {
    /// Number of shrinking-grid passes.
    int max_steps = 5;
    double lambda_reg = 0.05;
    FusionBox bounds;
    std::uint64_t seed = 0;
    /// Candidates per coordinate per pass (odd, so the centre is included).
    int grid_points = 9;
};

struct FusionCandidate {
    FusionWeights weights;
    double objective = 0.0;
    /// objective + lambda * (|w1| + |w2|); +inf if the objective was not finite.
    double penalized = 0.0;
};

struct FusionResult {
    FusionWeights weights;
    double objective = 0.0;
    double penalized = 0.0;
    std::vector<FusionCandidate> evaluated;
};

using FusionObjective = std::function<double(const FusionWeights&)>;

/// Upper bound on objective evaluations for a budget:
/// 4 starting points + max_steps * 2 coordinates * (grid_points - 1).
std::size_t max_fusion_evaluations(const FusionBudget& budget);

/// Derivative-free minimisation of objective(w) + lambda*|w|_1 over the box.
///
/// Starts from the best of (1,0), (0,1), (0.5,0.5), (1,1), then runs
/// max_steps passes of coordinate search. Each pass scans grid_points evenly
/// spaced values per coordinate around the incumbent, clipped to the box;
/// the scan half-width starts at half the box width and halves every pass.
/// The coordinate order of each pass is drawn from `seed`. Candidates whose
/// objective is non-finite (or throws NumericError) are discarded; if none is
/// finite an OptimizationError is thrown.
FusionResult fusion_opt(const FusionObjective& objective, const FusionBudget& budget);

}  // namespace fdlora

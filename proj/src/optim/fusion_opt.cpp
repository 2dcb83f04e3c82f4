// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdlora/optim/fusion_opt.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include "fdlora/errors.hpp"
#include "fdlora/numerics/random.hpp"

namespace fdlora {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class Evaluator {
public:
    Evaluator(const FusionObjective& objective, double lambda, std::vector<FusionCandidate>& log)
        : objective_(objective), lambda_(lambda), log_(log) {}

    double penalized(const FusionWeights& w) {
        const auto key = std::make_pair(w.w1, w.w2);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        double value = kInf;
        try {
            value = objective_(w);
        } catch (const NumericError&) {
            value = kInf;
        }
        const double pen = std::isfinite(value) ? value + lambda_ * w.l1() : kInf;
        log_.push_back({w, value, pen});
        cache_.emplace(key, pen);
        return pen;
    }

private:
    const FusionObjective& objective_;
    double lambda_;
    std::vector<FusionCandidate>& log_;
    std::map<std::pair<double, double>, double> cache_;
};

}  // namespace

std::size_t max_fusion_evaluations(const FusionBudget& budget) {
    return 4 + static_cast<std::size_t>(budget.max_steps) * 2 *
                   static_cast<std::size_t>(budget.grid_points - 1);
}

FusionResult fusion_opt(const FusionObjective& objective, const FusionBudget& budget) {
    if (budget.max_steps < 1) throw ConfigError("fusion budget needs max_steps >= 1");
    if (!(budget.lambda_reg >= 0.0)) throw ConfigError("fusion lambda must be >= 0");
    if (budget.grid_points < 3 || budget.grid_points % 2 == 0) {
        throw ConfigError("fusion grid_points must be odd and >= 3");
    }
    if (!(budget.bounds.lo < budget.bounds.hi)) throw ConfigError("fusion bounds are empty");

    FusionResult result;
    Evaluator eval(objective, budget.lambda_reg, result.evaluated);

    const std::array<FusionWeights, 4> starts = {
        FusionWeights{1.0, 0.0}, FusionWeights{0.0, 1.0}, FusionWeights{0.5, 0.5},
        FusionWeights{1.0, 1.0}};
    FusionWeights best = clamp(starts[0], budget.bounds);
    double best_value = eval.penalized(best);
    for (std::size_t i = 1; i < starts.size(); ++i) {
        const FusionWeights w = clamp(starts[i], budget.bounds);
        const double v = eval.penalized(w);
        if (v < best_value) {
            best = w;
            best_value = v;
        }
    }

    Rng rng(budget.seed);
    std::bernoulli_distribution coin(0.5);
    double half_width = (budget.bounds.hi - budget.bounds.lo) / 2.0;
    const int half_points = budget.grid_points / 2;
    for (int pass = 0; pass < budget.max_steps; ++pass) {
        const bool w2_first = coin(rng);
        for (int turn = 0; turn < 2; ++turn) {
            const bool on_w1 = (turn == 0) != w2_first;
            const double centre = on_w1 ? best.w1 : best.w2;
            FusionWeights pass_best = best;
            double pass_value = best_value;
            for (int k = -half_points; k <= half_points; ++k) {
                const double offset = half_width * static_cast<double>(k) / half_points;
                const double coord =
                    std::clamp(centre + offset, budget.bounds.lo, budget.bounds.hi);
                FusionWeights w = best;
                (on_w1 ? w.w1 : w.w2) = coord;
                const double v = eval.penalized(w);
                if (v < pass_value) {
                    pass_best = w;
                    pass_value = v;
                }
            }
            best = pass_best;
            best_value = pass_value;
        }
        half_width /= 2.0;
    }

    if (!std::isfinite(best_value)) {
        throw OptimizationError("fusion_opt: every candidate produced a non-finite objective");
    }
    result.weights = best;
    result.penalized = best_value;
    result.objective = best_value - budget.lambda_reg * best.l1();
    for (const FusionCandidate& c : result.evaluated) {
        if (c.weights == best) result.objective = c.objective;
    }
    return result;
}

}  // namespace fdlora

// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdlora/optim/inner.hpp"

#include <cmath>

#include "fdlora/errors.hpp"

namespace fdlora {

namespace {

void check_coverage(const AdapterSet& params, const AdapterGrads& grads) {
    if (grads.size() != params.size()) {
        throw ContractError("inner_step: gradients cover " + std::to_string(grads.size()) +
                            " sites but parameters have " + std::to_string(params.size()));
    }
    for (const auto& [site, adapter] : params) {
        auto it = grads.find(site);
        if (it == grads.end()) throw ContractError("inner_step: no gradient for site '" + site + "'");
        if (!it->second.b.same_shape(adapter.b_factor()) ||
            !it->second.a.same_shape(adapter.a_factor())) {
            throw ContractError("inner_step: gradient shape mismatch at site '" + site + "'");
        }
    }
}

void adamw_update(Matrix& p, const Matrix& g, Matrix& m, Matrix& v, const InnerOptConfig& c,
                  double lr, double bias1, double bias2) {
    auto pd = p.data();
    auto gd = g.data();
    auto md = m.data();
    auto vd = v.data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
        md[i] = c.beta1 * md[i] + (1.0 - c.beta1) * gd[i];
        vd[i] = c.beta2 * vd[i] + (1.0 - c.beta2) * gd[i] * gd[i];
        const double m_hat = md[i] / bias1;
        const double v_hat = vd[i] / bias2;
        pd[i] -= lr * m_hat / (std::sqrt(v_hat) + c.eps);
        pd[i] -= lr * c.weight_decay * pd[i];
    }
}

void sgd_update(Matrix& p, const Matrix& g, const InnerOptConfig& c, double lr) {
    auto pd = p.data();
    auto gd = g.data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
        pd[i] -= lr * gd[i];
        pd[i] -= lr * c.weight_decay * pd[i];
    }
}

}  // namespace

std::string_view to_string(InnerOptimizerKind kind) {
    return kind == InnerOptimizerKind::kAdamW ? "adamw" : "sgd";
}

InnerOptimizerKind parse_inner_optimizer(std::string_view name) {
    if (name == "adamw" || name == "AdamW") return InnerOptimizerKind::kAdamW;
    if (name == "sgd" || name == "SGD") return InnerOptimizerKind::kSgd;
    throw ConfigError("unknown inner optimizer '" + std::string(name) + "' (expected adamw or sgd)");
}

InnerOptState InnerOptState::fresh(const InnerOptConfig& config, const AdapterSet& params) {
    InnerOptState s;
    s.config = config;
    s.first_moment = zeros_like(params);
    s.second_moment = zeros_like(params);
    return s;
}

AdapterSet inner_step(const AdapterSet& params, const AdapterGrads& grads, InnerOptState& state,
                      double lr_scale) {
    check_coverage(params, grads);
    if (state.first_moment.size() != params.size()) {
        state.first_moment = zeros_like(params);
        state.second_moment = zeros_like(params);
    }

    const InnerOptConfig& c = state.config;
    const double lr = c.lr * lr_scale;
    const std::size_t step = state.step_count + 1;
    const double bias1 = 1.0 - std::pow(c.beta1, static_cast<double>(step));
    const double bias2 = 1.0 - std::pow(c.beta2, static_cast<double>(step));

    AdapterSet out;
    for (const auto& [site, adapter] : params) {
        const FactorPair& g = grads.at(site);
        Matrix b = adapter.b_factor();
        Matrix a = adapter.a_factor();
        if (c.kind == InnerOptimizerKind::kAdamW) {
            FactorPair& m = state.first_moment.at(site);
            FactorPair& v = state.second_moment.at(site);
            adamw_update(b, g.b, m.b, v.b, c, lr, bias1, bias2);
            adamw_update(a, g.a, m.a, v.a, c, lr, bias1, bias2);
        } else {
            sgd_update(b, g.b, c, lr);
            sgd_update(a, g.a, c, lr);
        }
        b.ensure_finite("inner_step");
        a.ensure_finite("inner_step");
        out.insert(adapter.with_factors(std::move(b), std::move(a)));
    }
    state.step_count = step;
    return out;
}

}  // namespace fdlora

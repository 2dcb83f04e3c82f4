// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdlora/optim/outer.hpp"

#include <vector>

#include "fdlora/errors.hpp"

namespace fdlora {

namespace {

Matrix nesterov(const Matrix& theta, const Matrix& delta, Matrix& velocity, double lr,
                double momentum) {
    auto vd = velocity.data();
    auto dd = delta.data();
    Matrix out = theta;
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) {
        vd[i] = momentum * vd[i] + dd[i];
        od[i] -= lr * (dd[i] + momentum * vd[i]);
    }
    out.ensure_finite("outer_step");
    return out;
}

}  // namespace

OuterOptState OuterOptState::fresh(const AdapterSet& params, double lr, double momentum) {
    return OuterOptState{zeros_like(params), lr, momentum};
}

AdapterSet outer_delta(const AdapterSet& global_prev, std::span<const AdapterSet> client_results) {
    if (client_results.empty()) throw ContractError("outer_delta: no client results");
    for (const AdapterSet& c : client_results) {
        if (!c.same_structure(global_prev)) {
            throw ConfigError("outer_delta: client adapters do not match the global adapter");
        }
    }
    AdapterSet out;
    for (const auto& [site, prev] : global_prev) {
        std::vector<Matrix> db;
        std::vector<Matrix> da;
        db.reserve(client_results.size());
        da.reserve(client_results.size());
        for (const AdapterSet& c : client_results) {
            db.push_back(subtract(prev.b_factor(), c.at(site).b_factor()));
            da.push_back(subtract(prev.a_factor(), c.at(site).a_factor()));
        }
        std::vector<const Matrix*> pb;
        std::vector<const Matrix*> pa;
        for (std::size_t i = 0; i < db.size(); ++i) {
            pb.push_back(&db[i]);
            pa.push_back(&da[i]);
        }
        out.insert(prev.with_factors(pairwise_mean(pb), pairwise_mean(pa)));
    }
    return out;
}

AdapterSet outer_step(const AdapterSet& global_prev, const AdapterSet& delta,
                      OuterOptState& state) {
    if (!delta.same_structure(global_prev)) {
        throw ShapeError("outer_step: delta does not match the global adapter");
    }
    if (state.momentum_buffer.size() != global_prev.size()) {
        state.momentum_buffer = zeros_like(global_prev);
    }
    AdapterSet out;
    for (const auto& [site, prev] : global_prev) {
        const LoraAdapter& d = delta.at(site);
        FactorPair& v = state.momentum_buffer.at(site);
        if (!v.b.same_shape(d.b_factor()) || !v.a.same_shape(d.a_factor())) {
            throw ShapeError("outer_step: momentum buffer shape mismatch at site '" + site + "'");
        }
        out.insert(prev.with_factors(
            nesterov(prev.b_factor(), d.b_factor(), v.b, state.lr, state.momentum),
            nesterov(prev.a_factor(), d.a_factor(), v.a, state.lr, state.momentum)));
    }
    return out;
}

}  // namespace fdlora

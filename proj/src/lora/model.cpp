// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdlora/lora/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "fdlora/errors.hpp"

namespace fdlora {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
}

void fnv_matrix(std::uint64_t& h, const Matrix& m) {
    const std::uint64_t dims[2] = {m.rows(), m.cols()};
    fnv_bytes(h, dims, sizeof(dims));
    fnv_bytes(h, m.data().data(), m.size() * sizeof(double));
}

}  // namespace

BaseModel::BaseModel(std::vector<DenseLayer> layers, std::vector<std::string> adapted_sites)
    : layers_(std::move(layers)), adapted_sites_(std::move(adapted_sites)) {
    if (layers_.empty()) throw ConfigError("base model needs at least one layer");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const DenseLayer& l = layers_[i];
        if (l.bias.rows() != 1 || l.bias.cols() != l.weight.rows()) {
            throw ShapeError("layer '" + l.site_id + "': bias " + l.bias.shape_string() +
                             " does not match weight " + l.weight.shape_string());
        }
        if (i > 0 && l.weight.cols() != layers_[i - 1].weight.rows()) {
            throw ShapeError("layer '" + l.site_id + "': input width " +
                             std::to_string(l.weight.cols()) + " does not match previous output " +
                             std::to_string(layers_[i - 1].weight.rows()));
        }
    }
    if (adapted_sites_.empty()) {
        for (const DenseLayer& l : layers_) adapted_sites_.push_back(l.site_id);
    }
    for (const std::string& site : adapted_sites_) layer(site);
}

BaseModel BaseModel::mlp(std::span<const std::size_t> dims, std::uint64_t seed,
                         std::vector<std::string> adapted_sites) {
    if (dims.size() < 2) throw ConfigError("mlp needs at least input and output widths");
    Rng rng(seed);
    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        const std::size_t in = dims[i];
        const std::size_t out = dims[i + 1];
        if (in == 0 || out == 0) throw ConfigError("mlp layer widths must be positive");
        DenseLayer l;
        l.site_id = "fc" + std::to_string(i + 1);
        l.weight = gaussian_matrix(out, in, 1.0 / std::sqrt(static_cast<double>(in)), rng);
        l.bias = gaussian_matrix(1, out, 0.1, rng);
        layers.push_back(std::move(l));
    }
    return BaseModel(std::move(layers), std::move(adapted_sites));
}

const DenseLayer& BaseModel::layer(const std::string& site_id) const {
    for (const DenseLayer& l : layers_) {
        if (l.site_id == site_id) return l;
    }
    throw ContractError("base model has no site '" + site_id + "'");
}

std::size_t BaseModel::parameter_count() const {
    std::size_t n = 0;
    for (const DenseLayer& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
}

std::uint64_t BaseModel::checksum() const {
    std::uint64_t h = kFnvOffset;
    for (const DenseLayer& l : layers_) {
        fnv_bytes(h, l.site_id.data(), l.site_id.size());
        fnv_matrix(h, l.weight);
        fnv_matrix(h, l.bias);
    }
    return h;
}

AdapterSet BaseModel::init_adapters(std::size_t rank, Rng& rng) const {
    AdapterSet set;
    for (const std::string& site : adapted_sites_) {
        const Matrix& w = layer(site).weight;
        const std::size_t r = std::min({rank, w.rows(), w.cols()});
        set.insert(LoraAdapter::init(site, w.rows(), w.cols(), r, rng));
    }
    return set;
}

void BaseModel::validate(const AdapterSet& adapters) const {
    for (const auto& [site, adapter] : adapters) {
        if (std::find(adapted_sites_.begin(), adapted_sites_.end(), site) == adapted_sites_.end()) {
            throw ContractError("site '" + site + "' is not an adaptation site of the base model");
        }
        const Matrix& w = layer(site).weight;
        if (adapter.out_dim() != w.rows() || adapter.in_dim() != w.cols()) {
            std::ostringstream os;
            os << "site '" << site << "': adapter delta " << adapter.out_dim() << "x"
               << adapter.in_dim() << " does not match base weight " << w.shape_string();
            throw ShapeError(os.str());
        }
    }
}

Matrix BaseModel::logits(const Matrix& x, const AdapterSet& adapters) const {
    validate(adapters);
    Matrix h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const DenseLayer& l = layers_[i];
        const LoraAdapter* adapter = adapters.find(l.site_id);
        const Matrix w = adapter ? effective_weight(l.weight, *adapter) : l.weight;
        h = add_row(matmul(h, transpose(w)), l.bias);
        if (i + 1 < layers_.size()) h = fdlora::tanh(h);
    }
    return h;
}

std::vector<int> BaseModel::predict(const Matrix& x, const AdapterSet& adapters) const {
    const Matrix z = logits(x, adapters);
    std::vector<int> out(z.rows());
    for (std::size_t i = 0; i < z.rows(); ++i) {
        auto row = z.row(i);
        out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

NodeId BaseModel::record(Tape& tape, NodeId x, const AdapterSet& adapters,
                         std::map<std::string, std::pair<NodeId, NodeId>>& factor_nodes) const {
    validate(adapters);
    NodeId h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const DenseLayer& l = layers_[i];
        NodeId w = tape.constant(l.weight);
        if (const LoraAdapter* adapter = adapters.find(l.site_id)) {
            NodeId b = tape.variable(adapter->b_factor());
            NodeId a = tape.variable(adapter->a_factor());
            factor_nodes[l.site_id] = {b, a};
            w = tape.add(w, tape.matmul(b, a));
        }
        h = tape.add_row(tape.matmul(h, tape.transpose(w)), tape.constant(l.bias));
        if (i + 1 < layers_.size()) h = tape.tanh(h);
    }
    return h;
}

LossValue model_loss(const BaseModel& model, const AdapterSet& adapters, const Matrix& x,
                     std::span<const int> labels) {
    return cross_entropy(model.logits(x, adapters), labels);
}

LossAndGrads loss_and_grads(const BaseModel& model, const AdapterSet& adapters, const Matrix& x,
                            std::span<const int> labels) {
    Tape tape;
    std::map<std::string, std::pair<NodeId, NodeId>> factor_nodes;
    const NodeId input = tape.constant(x);
    const NodeId logits = model.record(tape, input, adapters, factor_nodes);
    const NodeId loss = tape.cross_entropy(logits, labels);
    const Gradients grads = tape.backward(loss);

    LossAndGrads out;
    out.loss = tape.loss(loss);
    for (const auto& [site, nodes] : factor_nodes) {
        out.grads.emplace(site, FactorPair{grads.at(nodes.first), grads.at(nodes.second)});
    }
    return out;
}

}  // namespace fdlora

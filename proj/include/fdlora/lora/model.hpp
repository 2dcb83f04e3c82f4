// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fdlora/lora/adapter.hpp"
#include "fdlora/numerics/tape.hpp"

namespace fdlora {

/// One dense layer y = x * W^T + bias with W (out x in).
struct DenseLayer {
    std::string site_id;
    Matrix weight;
    Matrix bias;  // 1 x out
};

/// Frozen classifier: dense layers with tanh between them, logits at the end.
///
/// The parameters never change after construction. Adapters attach to the
/// designated sites only, and every forward pass uses W + B*A at those sites.
class BaseModel {
public:
    BaseModel(std::vector<DenseLayer> layers, std::vector<std::string> adapted_sites);

    /// Random MLP with layer widths `dims` = {input, hidden..., classes}.
    /// Sites are named fc1, fc2, ...; an empty `adapted_sites` adapts all.
    static BaseModel mlp(std::span<const std::size_t> dims, std::uint64_t seed,
                         std::vector<std::string> adapted_sites = {});

    std::size_t input_dim() const { return layers_.front().weight.cols(); }
    std::size_t num_classes() const { return layers_.back().weight.rows(); }
    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    const std::vector<std::string>& adapted_sites() const noexcept { return adapted_sites_; }
    const DenseLayer& layer(const std::string& site_id) const;

    /// Frozen parameter count (weights and biases).
    std::size_t parameter_count() const;
    /// FNV-1a over shapes and raw parameter bytes.
    std::uint64_t checksum() const;

    /// Fresh adapters (B = 0, A ~ N(0, 0.02^2)) for every adapted site. A
    /// site narrower than `rank` gets rank min(d, k) instead.
    AdapterSet init_adapters(std::size_t rank, Rng& rng) const;
    /// Throws ShapeError/ContractError if `adapters` do not fit this model.
    void validate(const AdapterSet& adapters) const;

    Matrix logits(const Matrix& x, const AdapterSet& adapters) const;
    std::vector<int> predict(const Matrix& x, const AdapterSet& adapters) const;

    /// Records the forward pass on `tape`; adapter factors become variables
    /// (their node ids are written to `factor_nodes`), base weights constants.
    NodeId record(Tape& tape, NodeId x, const AdapterSet& adapters,
                  std::map<std::string, std::pair<NodeId, NodeId>>& factor_nodes) const;

private:
    std::vector<DenseLayer> layers_;
    std::vector<std::string> adapted_sites_;
};

struct LossAndGrads {
    LossValue loss;
    AdapterGrads grads;
};

LossValue model_loss(const BaseModel& model, const AdapterSet& adapters, const Matrix& x,
                     std::span<const int> labels);

/// Cross-entropy of the adapted model and its gradient w.r.t. every adapter
/// factor. Base parameters are constants on the tape and get no gradient.
LossAndGrads loss_and_grads(const BaseModel& model, const AdapterSet& adapters, const Matrix& x,
                            std::span<const int> labels);

}  // namespace fdlora

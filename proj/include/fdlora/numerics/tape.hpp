// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "fdlora/numerics/matrix.hpp"

namespace fdlora {

/// Handle to a value recorded on a Tape.
struct NodeId {
    std::size_t index = 0;
    friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

/// Mean cross-entropy over a batch together with the per-example terms.
struct LossValue {
    double scalar = 0.0;
    std::vector<double> per_example;
};

/// Mean negative log-softmax of the true class, computed with max subtraction.
/// Throws InputError for labels outside [0, logits.cols()).
LossValue cross_entropy(const Matrix& logits, std::span<const int> labels);

/// Gradients produced by Tape::backward. Only nodes that depend on a variable
/// appear; constants (frozen parameters, inputs) are absent.
class Gradients {
public:
    bool contains(NodeId id) const { return grads_.count(id.index) != 0; }
    const Matrix& at(NodeId id) const;
    const Matrix* find(NodeId id) const;
    std::size_t size() const noexcept { return grads_.size(); }

private:
    friend class Tape;
    std::map<std::size_t, Matrix> grads_;
};

/// Minimal reverse-mode automatic differentiation over dense matrices.
///
/// Nodes are appended in evaluation order, so every node's parents precede
/// it. A Tape is used from one thread; separate tapes are independent.
class Tape {
public:
    NodeId constant(Matrix value);
    NodeId variable(Matrix value);

    NodeId matmul(NodeId a, NodeId b);
    NodeId add(NodeId a, NodeId b);
    NodeId add_row(NodeId x, NodeId row);
    NodeId scale(NodeId x, double s);
    NodeId transpose(NodeId x);
    NodeId tanh(NodeId x);
    NodeId sum(NodeId x);
    /// Scalar node holding the mean cross-entropy of `logits` rows.
    NodeId cross_entropy(NodeId logits, std::span<const int> labels);

    const Matrix& value(NodeId id) const;
    bool requires_grad(NodeId id) const;
    /// Per-example terms of a cross_entropy node.
    LossValue loss(NodeId ce_node) const;
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Adjoints of `root` with respect to every gradient-carrying node.
    /// Throws ContractError unless `root` is 1x1.
    Gradients backward(NodeId root) const;

private:
    enum class Op { kLeaf, kMatmul, kAdd, kAddRow, kScale, kTranspose, kTanh, kSum, kCrossEntropy };

    struct Node {
        Op op = Op::kLeaf;
        std::size_t lhs = 0;
        std::size_t rhs = 0;
        Matrix value;
        bool requires_grad = false;
        double factor = 0.0;
        Matrix softmax;
        std::vector<int> labels;
        std::vector<double> per_example;
    };

    const Node& node(NodeId id) const;
    NodeId push(Node n);

    std::vector<Node> nodes_;
};

}  // namespace fdlora

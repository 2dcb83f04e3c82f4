// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdlora/numerics/tape.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "fdlora/errors.hpp"

namespace fdlora {

namespace {

void check_labels(const Matrix& logits, std::span<const int> labels) {
    if (labels.size() != logits.rows()) {
        std::ostringstream os;
        os << "cross_entropy: " << labels.size() << " labels for " << logits.rows() << " logit rows";
        throw ShapeError(os.str());
    }
    const int classes = static_cast<int>(logits.cols());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= classes) {
            std::ostringstream os;
            os << "cross_entropy: label " << labels[i] << " at row " << i << " outside [0, "
               << classes << ")";
            throw InputError(os.str());
        }
    }
}

// Row-wise softmax and per-row loss terms.
void softmax_terms(const Matrix& logits, std::span<const int> labels, Matrix& probs,
                   std::vector<double>& terms) {
    probs = Matrix(logits.rows(), logits.cols());
    terms.assign(logits.rows(), 0.0);
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        auto row = logits.row(i);
        const double peak = *std::max_element(row.begin(), row.end());
        double denom = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) {
            probs(i, j) = std::exp(row[j] - peak);
            denom += probs(i, j);
        }
        for (std::size_t j = 0; j < row.size(); ++j) probs(i, j) /= denom;
        terms[i] = peak + std::log(denom) - row[static_cast<std::size_t>(labels[i])];
    }
}

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

void accumulate(std::optional<Matrix>& slot, const Matrix& contribution) {
    if (!slot) {
        slot = contribution;
    } else {
        slot = add(*slot, contribution);
    }
}

}  // namespace

LossValue cross_entropy(const Matrix& logits, std::span<const int> labels) {
    check_labels(logits, labels);
    Matrix probs;
    LossValue out;
    softmax_terms(logits, labels, probs, out.per_example);
    out.scalar = mean_of(out.per_example);
    if (!std::isfinite(out.scalar)) throw NumericError("cross_entropy: non-finite loss");
    return out;
}

const Matrix& Gradients::at(NodeId id) const {
    auto it = grads_.find(id.index);
    if (it == grads_.end()) throw ContractError("no gradient recorded for node");
    return it->second;
}

const Matrix* Gradients::find(NodeId id) const {
    auto it = grads_.find(id.index);
    return it == grads_.end() ? nullptr : &it->second;
}

const Tape::Node& Tape::node(NodeId id) const {
    if (id.index >= nodes_.size()) throw ContractError("node id does not belong to this tape");
    return nodes_[id.index];
}

NodeId Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return NodeId{nodes_.size() - 1};
}

NodeId Tape::constant(Matrix value) {
    value.ensure_finite("tape constant");
    Node n;
    n.value = std::move(value);
    return push(std::move(n));
}

NodeId Tape::variable(Matrix value) {
    value.ensure_finite("tape variable");
    Node n;
    n.value = std::move(value);
    n.requires_grad = true;
    return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    Node n;
    n.op = Op::kMatmul;
    n.lhs = a.index;
    n.rhs = b.index;
    n.value = fdlora::matmul(node(a).value, node(b).value);
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
    Node n;
    n.op = Op::kAdd;
    n.lhs = a.index;
    n.rhs = b.index;
    n.value = fdlora::add(node(a).value, node(b).value);
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    return push(std::move(n));
}

NodeId Tape::add_row(NodeId x, NodeId row) {
    Node n;
    n.op = Op::kAddRow;
    n.lhs = x.index;
    n.rhs = row.index;
    n.value = fdlora::add_row(node(x).value, node(row).value);
    n.requires_grad = node(x).requires_grad || node(row).requires_grad;
    return push(std::move(n));
}

NodeId Tape::scale(NodeId x, double s) {
    Node n;
    n.op = Op::kScale;
    n.lhs = x.index;
    n.factor = s;
    n.value = fdlora::scale(node(x).value, s);
    n.requires_grad = node(x).requires_grad;
    return push(std::move(n));
}

NodeId Tape::transpose(NodeId x) {
    Node n;
    n.op = Op::kTranspose;
    n.lhs = x.index;
    n.value = fdlora::transpose(node(x).value);
    n.requires_grad = node(x).requires_grad;
    return push(std::move(n));
}

NodeId Tape::tanh(NodeId x) {
    Node n;
    n.op = Op::kTanh;
    n.lhs = x.index;
    n.value = fdlora::tanh(node(x).value);
    n.requires_grad = node(x).requires_grad;
    return push(std::move(n));
}

NodeId Tape::sum(NodeId x) {
    Node n;
    n.op = Op::kSum;
    n.lhs = x.index;
    n.value = Matrix(1, 1, fdlora::sum(node(x).value));
    n.requires_grad = node(x).requires_grad;
    return push(std::move(n));
}

NodeId Tape::cross_entropy(NodeId logits, std::span<const int> labels) {
    const Matrix& z = node(logits).value;
    check_labels(z, labels);
    Node n;
    n.op = Op::kCrossEntropy;
    n.lhs = logits.index;
    n.labels.assign(labels.begin(), labels.end());
    softmax_terms(z, labels, n.softmax, n.per_example);
    n.value = Matrix(1, 1, mean_of(n.per_example));
    n.requires_grad = node(logits).requires_grad;
    return push(std::move(n));
}

const Matrix& Tape::value(NodeId id) const { return node(id).value; }

bool Tape::requires_grad(NodeId id) const { return node(id).requires_grad; }

LossValue Tape::loss(NodeId ce_node) const {
    const Node& n = node(ce_node);
    if (n.op != Op::kCrossEntropy) throw ContractError("loss: node is not a cross_entropy node");
    return LossValue{n.value(0, 0), n.per_example};
}

Gradients Tape::backward(NodeId root) const {
    const Node& r = node(root);
    if (r.value.rows() != 1 || r.value.cols() != 1) {
        throw ContractError("backward: root must be a 1x1 scalar node, got " +
                            r.value.shape_string());
    }

    std::vector<std::optional<Matrix>> adj(root.index + 1);
    if (r.requires_grad) adj[root.index] = Matrix(1, 1, 1.0);

    for (std::size_t idx = root.index + 1; idx-- > 0;) {
        const Node& n = nodes_[idx];
        if (!adj[idx] || n.op == Op::kLeaf) continue;
        const Matrix& g = *adj[idx];
        const Node& lhs = nodes_[n.lhs];

        switch (n.op) {
            case Op::kMatmul: {
                const Node& rhs = nodes_[n.rhs];
                if (lhs.requires_grad)
                    accumulate(adj[n.lhs], fdlora::matmul(g, fdlora::transpose(rhs.value)));
                if (rhs.requires_grad)
                    accumulate(adj[n.rhs], fdlora::matmul(fdlora::transpose(lhs.value), g));
                break;
            }
            case Op::kAdd: {
                if (lhs.requires_grad) accumulate(adj[n.lhs], g);
                if (nodes_[n.rhs].requires_grad) accumulate(adj[n.rhs], g);
                break;
            }
            case Op::kAddRow: {
                if (lhs.requires_grad) accumulate(adj[n.lhs], g);
                if (nodes_[n.rhs].requires_grad) {
                    Matrix col_sums(1, g.cols());
                    for (std::size_t i = 0; i < g.rows(); ++i)
                        for (std::size_t j = 0; j < g.cols(); ++j) col_sums(0, j) += g(i, j);
                    accumulate(adj[n.rhs], col_sums);
                }
                break;
            }
            case Op::kScale:
                accumulate(adj[n.lhs], fdlora::scale(g, n.factor));
                break;
            case Op::kTranspose:
                accumulate(adj[n.lhs], fdlora::transpose(g));
                break;
            case Op::kTanh: {
                Matrix d = g;
                auto dv = d.data();
                auto yv = n.value.data();
                for (std::size_t i = 0; i < dv.size(); ++i) dv[i] *= 1.0 - yv[i] * yv[i];
                accumulate(adj[n.lhs], d);
                break;
            }
            case Op::kSum:
                accumulate(adj[n.lhs], Matrix(lhs.value.rows(), lhs.value.cols(), g(0, 0)));
                break;
            case Op::kCrossEntropy: {
                Matrix d = n.softmax;
                const double w = g(0, 0) / static_cast<double>(d.rows());
                for (std::size_t i = 0; i < d.rows(); ++i) {
                    d(i, static_cast<std::size_t>(n.labels[i])) -= 1.0;
                    for (std::size_t j = 0; j < d.cols(); ++j) d(i, j) *= w;
                }
                accumulate(adj[n.lhs], d);
                break;
            }
            case Op::kLeaf:
                break;
        }
    }

    Gradients out;
    for (std::size_t idx = 0; idx < adj.size(); ++idx) {
        const Node& n = nodes_[idx];
        if (!n.requires_grad) continue;
        // Variables the root does not depend on have a zero adjoint.
        out.grads_.emplace(idx, adj[idx] ? std::move(*adj[idx])
                                         : Matrix(n.value.rows(), n.value.cols()));
    }
    return out;
}

}  // namespace fdlora

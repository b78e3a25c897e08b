// Copyright (c) 2026 siplab contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "siplab/grid.hpp"

namespace siplab {

/// Reverse-mode tape. Nodes are appended in evaluation order, so walking
/// ids backwards is a reverse topological traversal that visits each node
/// exactly once. A primitive contributes either element-level adjoints or
/// one custom closure, never both.
class Tape {
  public:
    using Id = std::int32_t;
    /// Adjoint closure: receives the upstream gradient of `self` and
    /// accumulates into the gradients of its inputs via grad_buffer().
    using Vjp = std::function<void(Tape&, Id self, const Grid& upstream)>;

    Id leaf(Grid value, bool trainable) {
        nodes_.push_back(Node{std::move(value), {}, {}, trainable});
        return static_cast<Id>(nodes_.size() - 1);
    }

    Id constant(Grid value) { return leaf(std::move(value), false); }

    Id record(const char* op, Grid value, std::vector<Id> inputs, Vjp vjp) {
        check_finite(value, op);
        bool req = false;
        for (Id i : inputs) req = req || nodes_[static_cast<size_t>(i)].requires_grad;
        nodes_.push_back(Node{std::move(value), std::move(inputs), req ? std::move(vjp) : Vjp{}, req});
        return static_cast<Id>(nodes_.size() - 1);
    }

    const Grid& value(Id id) const { return nodes_[static_cast<size_t>(id)].value; }
    bool requires_grad(Id id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }
    std::int64_t size() const { return static_cast<std::int64_t>(nodes_.size()); }

    bool wants_grad(Id id) const { return in_backward_ && nodes_[static_cast<size_t>(id)].requires_grad; }

    /// Zero-initialized accumulation buffer for a node's gradient. Only
    /// valid during backward and for nodes that require grad.
    Grid& grad_buffer(Id id) {
        auto i = static_cast<size_t>(id);
        if (!has_grad_[i]) {
            grads_[i] = Grid::zeros(nodes_[i].value.shape);
            has_grad_[i] = 1;
        }
        return grads_[i];
    }

    void add_grad(Id id, const Grid& g) {
        if (!wants_grad(id)) return;
        Grid& buf = grad_buffer(id);
        if (!buf.same_shape(g)) throw std::invalid_argument("add_grad: gradient shape mismatch");
        for (size_t i = 0; i < buf.data.size(); ++i) buf.data[i] += g.data[i];
    }

    /// Backpropagates from a scalar node; returns one gradient per
    /// requested leaf. Leaves with no path to the loss get exact zeros.
    std::vector<Grid> backward(Id loss, const std::vector<Id>& leaves) {
        const Node& ln = nodes_[static_cast<size_t>(loss)];
        if (ln.value.numel() != 1)
            throw std::invalid_argument("backward: loss must be scalar, got shape " + shape_str(ln.value.shape));
        grads_.assign(nodes_.size(), Grid{});
        has_grad_.assign(nodes_.size(), 0);
        in_backward_ = true;
        grads_[static_cast<size_t>(loss)] = Grid::full(ln.value.shape, 1.0);
        has_grad_[static_cast<size_t>(loss)] = 1;
        for (Id id = loss; id >= 0; --id) {
            auto i = static_cast<size_t>(id);
            if (!has_grad_[i] || !nodes_[i].vjp || !nodes_[i].requires_grad) continue;
            nodes_[i].vjp(*this, id, grads_[i]);
        }
        in_backward_ = false;
        std::vector<Grid> out;
        out.reserve(leaves.size());
        for (Id l : leaves) {
            auto i = static_cast<size_t>(l);
            out.push_back(has_grad_[i] ? std::move(grads_[i]) : Grid::zeros(nodes_[i].value.shape));
        }
        grads_.clear();
        has_grad_.clear();
        return out;
    }

  private:
    struct Node {
        Grid value;
        std::vector<Id> inputs;
        Vjp vjp;
        bool requires_grad = false;
    };

    std::vector<Node> nodes_;
    std::vector<Grid> grads_;
    std::vector<char> has_grad_;
    bool in_backward_ = false;
};

}  // namespace siplab

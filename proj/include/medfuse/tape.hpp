#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "medfuse/tensor.hpp"

namespace medfuse {

// Handle to a node on a Tape. Only valid for the tape that produced it.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Define-by-run reverse-mode autodiff over rank-2 tensors. Nodes are appended
// in topological order; backward() walks them exactly once in reverse.
//
// A Tape is single-writer: one training step owns it exclusively. Reads of
// frozen parameters via param() do not copy; the caller keeps them alive and
// unchanged for the tape's lifetime.
class Tape {
public:
    // Leaf owning its value (inputs, constants).
    Var leaf(Tensor value);
    // Leaf referencing an external parameter tensor (no copy).
    Var param(const Tensor& external);

    const Tensor& value(Var v) const { return node_value(check(v)); }
    // Gradient of the last backward() loss w.r.t. this node. Zero tensor if
    // the node did not participate.
    const Tensor& grad(Var v);

    std::size_t node_count() const { return nodes_.size(); }

    // --- operations ------------------------------------------------------
    Var matmul(Var a, Var b);             // [m x k] * [k x n]
    Var matmul_nt(Var a, Var b);          // [m x k] * [n x k]^T -> [m x n]
    Var add(Var a, Var b);                // same shape
    Var add_rowvec(Var a, Var b);         // [r x c] + broadcast [1 x c]
    Var mul(Var a, Var b);                // elementwise
    Var scale(Var a, double alpha);
    Var relu(Var a);
    Var gelu(Var a);                      // exact x * Phi(x) via std::erf
    Var softmax(Var a, int axis);         // axis 0 = down columns, 1 = along rows
    // Row softmax over key positions with key_mask[j] in {0,1}; masked columns
    // get probability exactly 0 and rows renormalize over unmasked entries.
    Var masked_softmax_rows(Var a, const std::vector<std::uint8_t>& key_mask);
    // gamma/beta are [1 x c]; normalizes each row to mean 0 / var 1 then
    // applies the affine. eps must be positive.
    Var layer_norm(Var a, Var gamma, Var beta, double eps);
    // Gather rows of table [V x d] by ids -> [len(ids) x d].
    Var embed(Var table, const std::vector<int>& ids);
    Var slice_cols(Var a, std::size_t c0, std::size_t c1);
    Var slice_rows(Var a, std::size_t r0, std::size_t r1);
    Var concat_cols(const std::vector<Var>& xs);
    Var concat_rows(const std::vector<Var>& xs);
    // Mean of rows with mask 1 -> [1 x c]. Requires at least one masked row.
    Var masked_mean_rows(Var a, const std::vector<std::uint8_t>& row_mask);
    Var mean_rows(Var a);
    Var pick(Var a, std::size_t r, std::size_t c);  // single element -> scalar
    // Mean over the batch of class_weights[target] * (-log softmax(logits)[target]).
    // Weights are taken as given (unnormalized convention).
    Var cross_entropy(Var logits, const std::vector<int>& targets,
                      const std::vector<double>& class_weights = {});

    // Accumulates d(loss)/d(leaf) into every node's grad. loss must be scalar.
    void backward(Var loss);

private:
    struct Node {
        Tensor value;                // owned value (unset for param leaves)
        const Tensor* external = nullptr;
        Tensor grad;                 // lazily allocated during backward
        std::function<void(Tape&)> backfn;  // null for leaves
    };

    int check(Var v) const {
        if (!v.valid() || v.id >= static_cast<int>(nodes_.size())) {
            throw ContractError("Var does not belong to this tape");
        }
        return v.id;
    }

    const Tensor& node_value(int id) const {
        const Node& n = nodes_[id];
        return n.external ? *n.external : n.value;
    }

    Tensor& grad_buf(int id);  // allocate-on-first-touch gradient buffer
    bool has_grad(int id) const { return !nodes_[id].grad.empty(); }

    Var push(Tensor value, std::function<void(Tape&)> backfn);

    std::vector<Node> nodes_;
};

}  // namespace medfuse

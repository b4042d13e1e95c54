#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "scen/tensor.hpp"

namespace scen {

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One vertex of the reverse-mode tape. Leaves hold parameters or constants;
/// interior nodes keep references to their inputs plus a rule that pushes the
/// incoming gradient back to them. The parent graph is acyclic by
/// construction (ops only ever reference already-built nodes).
///
/// Gradients accumulate with += across backward passes and across multiple
/// consumers of the same node; call zero_grad explicitly between batches.
struct Node {
    Tensor value;
    Tensor grad;  // same shape as value; allocated only when needs_grad
    std::vector<NodePtr> parents;
    std::function<void(Node&)> backward_rule;
    const char* op = "leaf";
    bool trainable = false;   // leaf an optimizer may update
    bool needs_grad = false;  // a trainable leaf is reachable from here

    void ensure_grad();
    void zero_grad();
};

NodePtr constant(Tensor value);
NodePtr parameter(Tensor value);

/// Freeze or unfreeze a leaf parameter. While frozen it behaves like a
/// constant for newly built graphs: gradients flow through ops that use it
/// but never accumulate into its grad buffer.
void set_trainable(const NodePtr& leaf, bool trainable);

// ---- forward ops (shape errors name the op and both shapes) ----

NodePtr matmul(const NodePtr& a, const NodePtr& b);               // [m,k]x[k,n] -> [m,n]
NodePtr add(const NodePtr& a, const NodePtr& b);                  // same shape
NodePtr add_bias(const NodePtr& x, const NodePtr& bias);          // [m,n] + [n]
NodePtr relu(const NodePtr& x);                                   // derivative at 0 is 0
NodePtr tanh_op(const NodePtr& x);
NodePtr sigmoid(const NodePtr& x);
NodePtr log_sigmoid(const NodePtr& x);                            // -softplus(-x), overflow-safe
NodePtr log_softmax(const NodePtr& x, std::size_t axis);          // rank-1 axis 0, rank-2 axis 0/1
NodePtr dot(const NodePtr& u, const NodePtr& v);                  // rank-1 -> scalar
NodePtr rows_dot(const NodePtr& a, const NodePtr& b);             // [n,d].[n,d] -> [n]
/// rank-1 whole, rank-2 per-row. A zero-norm row is a hard error unless
/// zero_rows_pass_through is set, in which case it is copied unchanged.
NodePtr l2_normalize(const NodePtr& x, bool zero_rows_pass_through = false);
NodePtr concat(const NodePtr& a, const NodePtr& b);               // along the last axis
NodePtr scale(const NodePtr& x, double factor);
NodePtr mean(const NodePtr& x);                                   // all entries -> scalar
NodePtr repeat_rows(const NodePtr& x, std::size_t times);         // row i -> rows i*times..i*times+times-1
NodePtr reshape(const NodePtr& x, std::vector<std::size_t> shape);
NodePtr gather_rows(const NodePtr& x, std::vector<std::size_t> indices);
NodePtr pick_per_row(const NodePtr& x, std::vector<std::size_t> indices);  // out[i] = x[i, idx[i]]

/// Copy of the value as a fresh constant leaf; blocks gradient flow.
NodePtr detach(const NodePtr& x);

/// Reverse-mode sweep from a scalar loss. Seeds d(loss)/d(loss) = 1 and
/// accumulates into the grad buffer of every reachable node that needs one.
void backward(const NodePtr& loss);

}  // namespace scen

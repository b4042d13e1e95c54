#pragma once

#include <vector>

#include "scen/autodiff.hpp"
#include "scen/rng.hpp"

namespace scen {

struct LinearLayer {
    NodePtr weight;  // [in, out]
    NodePtr bias;    // [out]
};

/// Fully connected stack: relu between layers, linear output layer.
struct Mlp {
    std::vector<LinearLayer> layers;

    /// x: [n, in] -> [n, out]
    NodePtr forward(const NodePtr& x) const;

    std::vector<NodePtr> parameters() const;
    void set_trainable(bool trainable) const;
    std::size_t input_dim() const;
    std::size_t output_dim() const;
};

/// Weights uniform in [-a, a] with a = sqrt(6 / (fan_in + fan_out)); biases zero.
Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// dims = {in, hidden..., out}; at least one layer.
Mlp make_mlp(const std::vector<std::size_t>& dims, Rng& rng);

/// Deep copy with fresh parameter nodes.
Mlp clone_mlp(const Mlp& src);

}  // namespace scen

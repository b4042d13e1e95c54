#include "scen/mlp.hpp"

#include <cmath>

#include "scen/errors.hpp"

namespace scen {

NodePtr Mlp::forward(const NodePtr& x) const {
    NodePtr h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        h = add_bias(matmul(h, layers[i].weight), layers[i].bias);
        if (i + 1 < layers.size()) h = relu(h);
    }
    return h;
}

std::vector<NodePtr> Mlp::parameters() const {
    std::vector<NodePtr> out;
    out.reserve(layers.size() * 2);
    for (const auto& layer : layers) {
        out.push_back(layer.weight);
        out.push_back(layer.bias);
    }
    return out;
}

void Mlp::set_trainable(bool trainable) const {
    for (const auto& layer : layers) {
        scen::set_trainable(layer.weight, trainable);
        scen::set_trainable(layer.bias, trainable);
    }
}

std::size_t Mlp::input_dim() const { return layers.front().weight->value.rows(); }

std::size_t Mlp::output_dim() const { return layers.back().weight->value.cols(); }

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor w({fan_in, fan_out});
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-a, a);
    return w;
}

Mlp make_mlp(const std::vector<std::size_t>& dims, Rng& rng) {
    if (dims.size() < 2) throw ValidationError("make_mlp: need at least input and output dims");
    Mlp mlp;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        LinearLayer layer;
        layer.weight = parameter(glorot_uniform(dims[i], dims[i + 1], rng));
        layer.bias = parameter(Tensor({dims[i + 1]}));
        mlp.layers.push_back(std::move(layer));
    }
    return mlp;
}

Mlp clone_mlp(const Mlp& src) {
    Mlp out;
    for (const auto& layer : src.layers) {
        out.layers.push_back({parameter(layer.weight->value), parameter(layer.bias->value)});
    }
    return out;
}

}  // namespace scen

#pragma once

#include <cstdint>
#include <vector>

#include "scen/autodiff.hpp"

namespace scen {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction. Holds first/second moment buffers per
/// parameter and a shared step counter that increments by exactly one per
/// step(). A zero gradient from a fresh state is an exact no-op.
class Adam {
public:
    Adam(std::vector<NodePtr> params, const AdamConfig& cfg);

    /// Applies one update from the parameters' current grad buffers.
    void step();

    /// Explicitly clears grad buffers; gradients otherwise accumulate.
    void zero_grad();

    std::int64_t steps() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    std::vector<NodePtr> params_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    AdamConfig cfg_;
    std::int64_t t_ = 0;
};

}  // namespace scen

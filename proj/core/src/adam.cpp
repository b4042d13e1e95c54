#include "scen/adam.hpp"

#include <cmath>

#include "scen/errors.hpp"

namespace scen {

Adam::Adam(std::vector<NodePtr> params, const AdamConfig& cfg)
    : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(p->value.shape());
        v_.emplace_back(p->value.shape());
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        Node& p = *params_[k];
        if (p.grad.size() != p.value.size()) {
            throw ShapeError("Adam::step: grad shape " + p.grad.shape_str() +
                             " does not match parameter " + p.value.shape_str());
        }
        Tensor& m = m_[k];
        Tensor& v = v_[k];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i];
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            p.value[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
        }
    }
}

void Adam::zero_grad() {
    for (const auto& p : params_) p->zero_grad();
}

}  // namespace scen

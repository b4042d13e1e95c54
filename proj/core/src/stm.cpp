#include "scen/stm.hpp"

#include "scen/errors.hpp"

namespace scen {

namespace {

// soft output bound of the generator; real features live in about [-1.3, 1.3]
constexpr double kGeneratorRange = 1.5;

}  // namespace

GanMode parse_gan_mode(const std::string& name) {
    if (name == "saturating") return GanMode::saturating;
    if (name == "non-saturating") return GanMode::non_saturating;
    throw ValidationError("unknown gan mode '" + name +
                          "' (expected saturating|non-saturating)");
}

const char* gan_mode_name(GanMode mode) {
    return mode == GanMode::saturating ? "saturating" : "non-saturating";
}

std::vector<NodePtr> StmParams::parameters() const {
    std::vector<NodePtr> out = g.parameters();
    auto dp = d.parameters();
    out.insert(out.end(), dp.begin(), dp.end());
    return out;
}

StmParams init_stm(std::size_t proto_dim, std::size_t feature_dim, std::size_t hidden, Rng& rng) {
    if (proto_dim == 0 || feature_dim == 0 || hidden == 0) {
        throw ValidationError("init_stm: proto_dim, feature_dim and hidden must be positive");
    }
    StmParams stm;
    stm.proto_dim = proto_dim;
    stm.feature_dim = feature_dim;
    stm.hidden = hidden;
    stm.g = make_mlp({2 * proto_dim, hidden, feature_dim}, rng);
    stm.d = make_mlp({feature_dim, hidden, 1}, rng);
    return stm;
}

StmParams clone_stm(const StmParams& src) {
    StmParams out;
    out.proto_dim = src.proto_dim;
    out.feature_dim = src.feature_dim;
    out.hidden = src.hidden;
    out.g = clone_mlp(src.g);
    out.d = clone_mlp(src.d);
    return out;
}

NodePtr stm_generate(const StmParams& stm, const NodePtr& h_tilde_s, const NodePtr& h_o) {
    const Tensor& hs = h_tilde_s->value;
    const Tensor& ho = h_o->value;
    if (hs.ndim() != 2 || ho.ndim() != 2 || hs.cols() != stm.proto_dim ||
        ho.cols() != stm.proto_dim || hs.rows() != ho.rows()) {
        throw ShapeError("stm_generate: prototypes " + hs.shape_str() + " and " + ho.shape_str() +
                         " must both be [n x " + std::to_string(stm.proto_dim) + "]");
    }
    // inputs as unit rows (zero rows pass through), output soft-bounded to
    // the feature range
    NodePtr raw = stm.g.forward(
        concat(l2_normalize(h_tilde_s, true), l2_normalize(h_o, true)));
    return scale(tanh_op(scale(raw, 1.0 / kGeneratorRange)), kGeneratorRange);
}

NodePtr discriminator_logit(const StmParams& stm, const NodePtr& x) {
    if (x->value.ndim() != 2 || x->value.cols() != stm.feature_dim) {
        throw ShapeError("discriminator: expected [n x " + std::to_string(stm.feature_dim) +
                         "] features, got " + x->value.shape_str());
    }
    return stm.d.forward(x);
}

NodePtr discriminator_prob(const StmParams& stm, const NodePtr& x) {
    return sigmoid(discriminator_logit(stm, x));
}

NodePtr discriminator_loss(const StmParams& stm, const NodePtr& real, const NodePtr& fake) {
    NodePtr real_term = scale(mean(log_sigmoid(discriminator_logit(stm, real))), -1.0);
    NodePtr fake_term =
        scale(mean(log_sigmoid(scale(discriminator_logit(stm, detach(fake)), -1.0))), -1.0);
    return add(real_term, fake_term);
}

NodePtr generator_adversarial_loss(const StmParams& stm, const NodePtr& fake, GanMode mode) {
    NodePtr logit = discriminator_logit(stm, fake);
    switch (mode) {
        case GanMode::saturating:
            return mean(log_sigmoid(scale(logit, -1.0)));  // mean log(1 - D)
        case GanMode::non_saturating:
            return scale(mean(log_sigmoid(logit)), -1.0);  // -mean log D
    }
    throw ValidationError("generator_adversarial_loss: unknown gan mode");
}

NodePtr reclassification_loss(const ScenParams& scen, const NodePtr& x_hat,
                              const std::vector<std::size_t>& transition_states,
                              const std::vector<std::size_t>& anchor_objects) {
    const std::size_t n = x_hat->value.rows();
    if (transition_states.size() != n || anchor_objects.size() != n) {
        throw ValidationError("reclassification_loss: need one (state, object) target per row");
    }
    Prototypes protos = encode_rows(scen, x_hat);
    return add(cross_entropy_mean(scen.c_a.forward(protos.h_s), transition_states),
               cross_entropy_mean(scen.c_o.forward(protos.h_o), anchor_objects));
}

NodePtr total_loss(const NodePtr& l_cts, const NodePtr& l_stm, const StmWeights& weights) {
    if (weights.alpha < 0.0 || weights.beta < 0.0) {
        throw ValidationError("total_loss: alpha and beta must be non-negative");
    }
    return add(scale(l_cts, weights.alpha), scale(l_stm, weights.beta));
}

}  // namespace scen

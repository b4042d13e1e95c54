#pragma once

#include <span>
#include <string>

#include "scen/model.hpp"

namespace scen {

enum class GanMode { saturating, non_saturating };

GanMode parse_gan_mode(const std::string& name);  // "saturating" | "non-saturating"
const char* gan_mode_name(GanMode mode);

/// State Transition Module: the generator consumes concat(h~_s, h_o) and
/// emits a feature-space vector so generated samples re-enter FC/E_s/E_o
/// unchanged; the discriminator scores feature vectors in (0,1).
struct StmParams {
    std::size_t proto_dim = 0;
    std::size_t feature_dim = 0;
    std::size_t hidden = 0;
    Mlp g;  // 2*proto_dim -> hidden -> feature_dim
    Mlp d;  // feature_dim -> hidden -> 1 (logit; sigmoid applied at use sites)

    std::vector<NodePtr> parameters() const;
    std::vector<NodePtr> generator_parameters() const { return g.parameters(); }
    std::vector<NodePtr> discriminator_parameters() const { return d.parameters(); }
};

StmParams init_stm(std::size_t proto_dim, std::size_t feature_dim, std::size_t hidden, Rng& rng);
StmParams clone_stm(const StmParams& src);

struct StmWeights {
    double alpha = 0.1;
    double beta = 0.5;
};

/// x^ = G(h~_s, h_o): [n, proto] x [n, proto] -> [n, feature_dim].
NodePtr stm_generate(const StmParams& stm, const NodePtr& h_tilde_s, const NodePtr& h_o);

NodePtr discriminator_logit(const StmParams& stm, const NodePtr& x);  // [n, 1]
NodePtr discriminator_prob(const StmParams& stm, const NodePtr& x);   // sigmoid of the logit

/// L_D = -mean log D(real) - mean log(1 - D(fake)). The fake inputs are
/// detached internally, so gradients reach only the discriminator.
NodePtr discriminator_loss(const StmParams& stm, const NodePtr& real, const NodePtr& fake);

/// saturating: mean log(1 - D(fake)); non-saturating (default): -mean log D(fake).
/// Gradients flow through the fake samples into the generator and encoders.
NodePtr generator_adversarial_loss(const StmParams& stm, const NodePtr& fake, GanMode mode);

/// CE(C_a(E_s(FC(x^))), a~) + CE(C_o(E_o(FC(x^))), o): generated samples are
/// re-encoded through the same FC/E_s/E_o used for real data.
NodePtr reclassification_loss(const ScenParams& scen, const NodePtr& x_hat,
                              const std::vector<std::size_t>& transition_states,
                              const std::vector<std::size_t>& anchor_objects);

/// L_total = alpha * L_cts + beta * L_stm.
NodePtr total_loss(const NodePtr& l_cts, const NodePtr& l_stm, const StmWeights& weights);

}  // namespace scen

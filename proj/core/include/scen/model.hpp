#pragma once

#include <span>
#include <utility>
#include <vector>

#include "scen/dataset.hpp"
#include "scen/mlp.hpp"

namespace scen {

struct ScenDims {
    std::size_t feature_dim = 0;
    std::size_t embed_dim = 0;  // 0 -> feature_dim
    std::size_t hidden = 0;     // 0 -> 2 * proto_dim
    std::size_t proto_dim = 300;
    std::size_t n_states = 0;
    std::size_t n_objects = 0;
    std::size_t classifier_depth = 1;

    ScenDims resolved() const;  // fills the 0 defaults, validates
};

/// Feature projection, the two specific encoders, and the two classifier
/// heads. The encoders share architecture but never weights.
struct ScenParams {
    ScenDims dims;
    Mlp fc;   // feature_dim -> embed_dim, linear
    Mlp e_s;  // embed_dim -> hidden -> proto_dim
    Mlp e_o;  // embed_dim -> hidden -> proto_dim
    Mlp c_a;  // proto_dim -> ... -> n_states
    Mlp c_o;  // proto_dim -> ... -> n_objects

    std::vector<NodePtr> parameters() const;
};

ScenParams init_scen(const ScenDims& dims, Rng& rng);
ScenParams clone_scen(const ScenParams& src);

struct Prototypes {
    NodePtr h_s;
    NodePtr h_o;
};

/// x: [n, feature_dim] -> both prototype matrices [n, proto_dim].
Prototypes encode_rows(const ScenParams& params, const NodePtr& x);

/// Single feature vector convenience; returns rank-1 prototype values.
std::pair<Tensor, Tensor> encode(const ScenParams& params, const Tensor& x);

struct ContrastiveConfig {
    double tau_s = 0.1;
    double tau_o = 0.1;
    std::size_t k = 10;
    bool normalize = true;  // L2-normalize prototypes inside the contrastive losses
};

/// -log[ exp(a.p/tau) / (exp(a.p/tau) + sum_i exp(a.n_i/tau)) ], computed
/// through a max-subtracted log-sum-exp. Rank-1 vectors.
NodePtr info_nce(const NodePtr& anchor, const NodePtr& positive,
                 const std::vector<NodePtr>& negatives, double tau, bool normalize);

/// Batched form: anchors/positives [n, d], negatives [n*k, d] with row
/// i*k+j holding negative j of anchor i. Mean over the n rows.
NodePtr info_nce_rows(const NodePtr& anchors, const NodePtr& positives, const NodePtr& negatives,
                      std::size_t k, double tau, bool normalize);

/// Mean of -log_softmax(logits)[i, target_i].
NodePtr cross_entropy_mean(const NodePtr& logits, const std::vector<std::size_t>& targets);

/// CE(C_a(h_s), state) + CE(C_o(h_o), object), each a batch mean.
NodePtr classification_loss(const ScenParams& params, const NodePtr& h_s, const NodePtr& h_o,
                            std::span<const CompositionLabel> labels);

struct ContrastivePair {
    NodePtr l_scl;
    NodePtr l_ocl;
};

/// Encodes a sampled batch and evaluates both contrastive spaces. The same
/// negative images feed E_s for L_scl and E_o for L_ocl.
ContrastivePair contrastive_losses(const ScenParams& params, const ContrastiveConfig& cfg,
                                   const TrainBatch& batch, const DatasetBundle& bundle);

/// L_cts = L_scl + L_ocl + L_cls.
NodePtr cts_loss(const NodePtr& l_scl, const NodePtr& l_ocl, const NodePtr& l_cls);

/// Rows of the bundle's feature matrix as a fresh tensor.
Tensor gather_features(const DatasetBundle& bundle, std::span<const std::size_t> indices);

}  // namespace scen

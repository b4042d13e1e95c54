#include "scen/model.hpp"

#include <algorithm>
#include <string>

#include "scen/errors.hpp"

namespace scen {

ScenDims ScenDims::resolved() const {
    ScenDims out = *this;
    if (out.embed_dim == 0) out.embed_dim = out.feature_dim;
    if (out.hidden == 0) out.hidden = 2 * out.proto_dim;
    if (out.feature_dim == 0 || out.proto_dim == 0 || out.n_states == 0 || out.n_objects == 0 ||
        out.classifier_depth == 0) {
        throw ValidationError("ScenDims: feature_dim, proto_dim, n_states, n_objects and "
                              "classifier_depth must all be positive");
    }
    return out;
}

std::vector<NodePtr> ScenParams::parameters() const {
    std::vector<NodePtr> out;
    for (const Mlp* mlp : {&fc, &e_s, &e_o, &c_a, &c_o}) {
        auto p = mlp->parameters();
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

namespace {

std::vector<std::size_t> classifier_dims(const ScenDims& dims, std::size_t n_classes) {
    std::vector<std::size_t> out(dims.classifier_depth + 1, dims.proto_dim);
    out.back() = n_classes;
    return out;
}

}  // namespace

ScenParams init_scen(const ScenDims& dims, Rng& rng) {
    ScenParams params;
    params.dims = dims.resolved();
    const ScenDims& d = params.dims;
    params.fc = make_mlp({d.feature_dim, d.embed_dim}, rng);
    params.e_s = make_mlp({d.embed_dim, d.hidden, d.proto_dim}, rng);
    params.e_o = make_mlp({d.embed_dim, d.hidden, d.proto_dim}, rng);
    params.c_a = make_mlp(classifier_dims(d, d.n_states), rng);
    params.c_o = make_mlp(classifier_dims(d, d.n_objects), rng);
    return params;
}

ScenParams clone_scen(const ScenParams& src) {
    ScenParams out;
    out.dims = src.dims;
    out.fc = clone_mlp(src.fc);
    out.e_s = clone_mlp(src.e_s);
    out.e_o = clone_mlp(src.e_o);
    out.c_a = clone_mlp(src.c_a);
    out.c_o = clone_mlp(src.c_o);
    return out;
}

Prototypes encode_rows(const ScenParams& params, const NodePtr& x) {
    if (x->value.ndim() != 2 || x->value.cols() != params.dims.feature_dim) {
        throw ShapeError("encode: expected [n x " + std::to_string(params.dims.feature_dim) +
                         "] features, got " + x->value.shape_str());
    }
    NodePtr z = params.fc.forward(x);
    return {params.e_s.forward(z), params.e_o.forward(z)};
}

std::pair<Tensor, Tensor> encode(const ScenParams& params, const Tensor& x) {
    if (x.ndim() != 1) {
        throw ShapeError("encode: expected a rank-1 feature vector, got " + x.shape_str());
    }
    auto row = constant(Tensor::matrix(1, x.size(), x.values()));
    Prototypes protos = encode_rows(params, row);
    return {Tensor::vector(protos.h_s->value.values()),
            Tensor::vector(protos.h_o->value.values())};
}

NodePtr cross_entropy_mean(const NodePtr& logits, const std::vector<std::size_t>& targets) {
    return scale(mean(pick_per_row(log_softmax(logits, 1), targets)), -1.0);
}

NodePtr info_nce(const NodePtr& anchor, const NodePtr& positive,
                 const std::vector<NodePtr>& negatives, double tau, bool normalize) {
    if (tau <= 0.0) {
        throw ValidationError("info_nce: tau must be positive, got " + std::to_string(tau));
    }
    if (negatives.empty()) throw ValidationError("info_nce: need at least one negative");
    NodePtr a = normalize ? l2_normalize(anchor, true) : anchor;
    NodePtr logits = dot(a, normalize ? l2_normalize(positive, true) : positive);
    for (const NodePtr& neg : negatives) {
        logits = concat(logits, dot(a, normalize ? l2_normalize(neg, true) : neg));
    }
    logits = scale(reshape(logits, {1, negatives.size() + 1}), 1.0 / tau);
    return cross_entropy_mean(logits, {0});
}

NodePtr info_nce_rows(const NodePtr& anchors, const NodePtr& positives, const NodePtr& negatives,
                      std::size_t k, double tau, bool normalize) {
    if (tau <= 0.0) {
        throw ValidationError("info_nce: tau must be positive, got " + std::to_string(tau));
    }
    const std::size_t n = anchors->value.rows();
    if (k == 0 || negatives->value.rows() != n * k) {
        throw ShapeError("info_nce: negatives " + negatives->value.shape_str() +
                         " do not hold k=" + std::to_string(k) + " rows per anchor " +
                         anchors->value.shape_str());
    }
    NodePtr a = normalize ? l2_normalize(anchors, true) : anchors;
    NodePtr p = normalize ? l2_normalize(positives, true) : positives;
    NodePtr neg = normalize ? l2_normalize(negatives, true) : negatives;
    NodePtr pos_logit = reshape(rows_dot(a, p), {n, 1});
    NodePtr neg_logit = reshape(rows_dot(repeat_rows(a, k), neg), {n, k});
    NodePtr logits = scale(concat(pos_logit, neg_logit), 1.0 / tau);
    return cross_entropy_mean(logits, std::vector<std::size_t>(n, 0));
}

NodePtr classification_loss(const ScenParams& params, const NodePtr& h_s, const NodePtr& h_o,
                            std::span<const CompositionLabel> labels) {
    std::vector<std::size_t> states, objects;
    states.reserve(labels.size());
    objects.reserve(labels.size());
    for (const CompositionLabel& lab : labels) {
        if (lab.state < 0 || lab.state >= static_cast<int>(params.dims.n_states) ||
            lab.object < 0 || lab.object >= static_cast<int>(params.dims.n_objects)) {
            throw ValidationError("classification_loss: label (" + std::to_string(lab.state) +
                                  "," + std::to_string(lab.object) + ") out of range");
        }
        states.push_back(static_cast<std::size_t>(lab.state));
        objects.push_back(static_cast<std::size_t>(lab.object));
    }
    return add(cross_entropy_mean(params.c_a.forward(h_s), states),
               cross_entropy_mean(params.c_o.forward(h_o), objects));
}

ContrastivePair contrastive_losses(const ScenParams& params, const ContrastiveConfig& cfg,
                                   const TrainBatch& batch, const DatasetBundle& bundle) {
    if (batch.k != cfg.k) {
        throw ValidationError("contrastive_losses: batch was sampled with k=" +
                              std::to_string(batch.k) + " but config expects k=" +
                              std::to_string(cfg.k));
    }
    auto anchors = constant(gather_features(bundle, batch.anchors));
    auto state_pos = constant(gather_features(bundle, batch.state_positives));
    auto object_pos = constant(gather_features(bundle, batch.object_positives));
    auto negatives = constant(gather_features(bundle, batch.negatives));

    Prototypes anchor_p = encode_rows(params, anchors);
    Prototypes neg_p = encode_rows(params, negatives);
    NodePtr pos_s = encode_rows(params, state_pos).h_s;
    NodePtr pos_o = encode_rows(params, object_pos).h_o;

    return {info_nce_rows(anchor_p.h_s, pos_s, neg_p.h_s, batch.k, cfg.tau_s, cfg.normalize),
            info_nce_rows(anchor_p.h_o, pos_o, neg_p.h_o, batch.k, cfg.tau_o, cfg.normalize)};
}

NodePtr cts_loss(const NodePtr& l_scl, const NodePtr& l_ocl, const NodePtr& l_cls) {
    return add(add(l_scl, l_ocl), l_cls);
}

Tensor gather_features(const DatasetBundle& bundle, std::span<const std::size_t> indices) {
    const std::size_t d = bundle.feature_dim();
    Tensor out({indices.size(), d});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= bundle.n_images()) {
            throw ValidationError("gather_features: image index " + std::to_string(indices[i]) +
                                  " out of range");
        }
        const double* src = bundle.features.data() + indices[i] * d;
        std::copy(src, src + d, out.data() + i * d);
    }
    return out;
}

}  // namespace scen

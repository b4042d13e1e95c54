#include "scen/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "scen/errors.hpp"
#include "scen/evaluate.hpp"

namespace scen {

Variant parse_variant(const std::string& name) {
    if (name == "base") return Variant::base;
    if (name == "cts") return Variant::cts;
    if (name == "stm") return Variant::stm;
    if (name == "full") return Variant::full;
    throw ValidationError("unknown variant '" + name + "' (expected base|cts|stm|full)");
}

const char* variant_name(Variant variant) {
    switch (variant) {
        case Variant::base: return "base";
        case Variant::cts: return "cts";
        case Variant::stm: return "stm";
        case Variant::full: return "full";
    }
    return "?";
}

namespace {

// rng stream ids per run
constexpr std::uint64_t kScenInitStream = 1;
constexpr std::uint64_t kStmInitStream = 2;
constexpr std::uint64_t kSamplerStream = 3;

void check_finite(const NodePtr& loss, const char* term, std::size_t epoch, std::size_t batch) {
    if (!std::isfinite(loss->value[0])) {
        throw NumericError(std::string(term) + " is not finite at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch));
    }
}

void check_zero_grads(const std::vector<NodePtr>& params, const char* phase) {
    for (const NodePtr& p : params)
        for (std::size_t i = 0; i < p->grad.size(); ++i)
            if (p->grad[i] != 0.0) {
                throw std::logic_error(std::string("train: gradient leaked outside the ") + phase +
                                       " parameter set");
            }
}

std::vector<std::size_t> positions_in(const std::vector<std::size_t>& sorted_unique,
                                      std::span<const std::size_t> indices) {
    std::vector<std::size_t> out;
    out.reserve(indices.size());
    for (std::size_t idx : indices) {
        const auto it = std::lower_bound(sorted_unique.begin(), sorted_unique.end(), idx);
        out.push_back(static_cast<std::size_t>(it - sorted_unique.begin()));
    }
    return out;
}

struct TermAccumulator {
    double weighted_sum = 0.0;
    double weight = 0.0;

    void add(double value, double w) {
        weighted_sum += value * w;
        weight += w;
    }
    double mean() const { return weight > 0.0 ? weighted_sum / weight : 0.0; }
};

}  // namespace

std::string format_log_line(std::size_t epoch, const EpochStats& stats) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", epoch,
                  stats.l_cls, stats.l_scl, stats.l_ocl, stats.l_d, stats.l_g_adv, stats.l_cls_re,
                  stats.val_auc);
    return buf;
}

TrainResult train(const TrainConfig& cfg, const DatasetBundle& bundle,
                  const EpochCallback& on_epoch) {
    bundle.validate();
    if (cfg.batch_size == 0) throw ValidationError("train: batch_size must be >= 1");
    if (cfg.weights.alpha < 0.0 || cfg.weights.beta < 0.0) {
        throw ValidationError("train: alpha and beta must be non-negative");
    }

    ScenDims dims = cfg.dims;
    dims.feature_dim = bundle.feature_dim();
    dims.n_states = bundle.n_states();
    dims.n_objects = bundle.n_objects();
    dims = dims.resolved();

    const bool use_cts = cfg.variant == Variant::cts || cfg.variant == Variant::full;
    const bool use_stm = cfg.variant == Variant::stm || cfg.variant == Variant::full;
    const bool stm_active = use_stm && cfg.weights.beta > 0.0;

    Rng scen_rng(Rng::derive(cfg.seed, kScenInitStream));
    Rng stm_rng(Rng::derive(cfg.seed, kStmInitStream));
    Rng sampler_rng(Rng::derive(cfg.seed, kSamplerStream));

    ScenParams scen = init_scen(dims, scen_rng);
    std::optional<StmParams> stm;
    if (use_stm) stm = init_stm(dims.proto_dim, dims.feature_dim, dims.hidden, stm_rng);

    TrainSampler sampler(bundle);
    const auto& eligible = sampler.eligible_anchors();
    const auto& cls_only = sampler.classification_only_anchors();
    if (eligible.empty() && cls_only.empty()) {
        throw ValidationError("train: the bundle has no train-split images");
    }
    const bool cls_only_mode = eligible.empty();
    if (cls_only_mode && (use_cts || stm_active)) {
        sampler.sample(1, cfg.contrastive.k, sampler_rng);  // raises the connectivity error
    }

    std::vector<NodePtr> main_params = scen.parameters();
    if (stm_active) {
        auto g = stm->generator_parameters();
        main_params.insert(main_params.end(), g.begin(), g.end());
    }
    Adam adam_main(main_params, cfg.adam);
    std::optional<Adam> adam_d;
    if (stm_active) adam_d.emplace(stm->discriminator_parameters(), cfg.adam);

    TrainResult result;
    result.n_eligible = eligible.size();
    result.n_classification_only = cls_only.size();

    bool have_best = false;
    auto take_snapshot = [&](double val_auc, std::size_t epoch) {
        result.best_scen = clone_scen(scen);
        if (stm) result.best_stm = clone_stm(*stm);
        result.best_val_auc = val_auc;
        result.best_epoch = epoch;
        have_best = true;
    };

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<std::size_t> anchor_order = cls_only_mode ? cls_only : eligible;
        sampler_rng.shuffle(anchor_order);
        std::vector<std::size_t> extra_order = cls_only_mode ? std::vector<std::size_t>{} : cls_only;
        sampler_rng.shuffle(extra_order);

        const std::size_t n_batches =
            (anchor_order.size() + cfg.batch_size - 1) / cfg.batch_size;
        TermAccumulator acc_cls, acc_scl, acc_ocl, acc_d, acc_g_adv, acc_cls_re;

        for (std::size_t bi = 0; bi < n_batches; ++bi) {
            const std::size_t lo = bi * cfg.batch_size;
            const std::size_t hi = std::min(anchor_order.size(), lo + cfg.batch_size);
            std::span<const std::size_t> anchors(anchor_order.data() + lo, hi - lo);
            // classification-only anchors are spread across the epoch's batches
            const std::size_t ex_lo = bi * extra_order.size() / n_batches;
            const std::size_t ex_hi = (bi + 1) * extra_order.size() / n_batches;
            std::span<const std::size_t> extras(extra_order.data() + ex_lo, ex_hi - ex_lo);

            adam_main.zero_grad();

            if (cls_only_mode) {
                std::vector<std::size_t> rows(anchors.begin(), anchors.end());
                auto x = constant(gather_features(bundle, rows));
                Prototypes protos = encode_rows(scen, x);
                std::vector<CompositionLabel> labels;
                for (std::size_t idx : rows) labels.push_back(bundle.labels[idx]);
                NodePtr l_cls = classification_loss(scen, protos.h_s, protos.h_o, labels);
                check_finite(l_cls, "L_cls", epoch, bi);
                backward(scale(l_cls, cfg.weights.alpha));
                adam_main.step();
                acc_cls.add(l_cls->value[0], static_cast<double>(rows.size()));
                continue;
            }

            TrainBatch tb = sampler.sample_for_anchors(anchors, cfg.contrastive.k, sampler_rng);

            // -- discriminator step (real anchors vs detached generated samples) --
            if (stm_active) {
                adam_d->zero_grad();
                std::vector<std::size_t> d_rows = tb.anchors;
                d_rows.insert(d_rows.end(), tb.transitions.begin(), tb.transitions.end());
                std::sort(d_rows.begin(), d_rows.end());
                d_rows.erase(std::unique(d_rows.begin(), d_rows.end()), d_rows.end());
                auto xd = constant(gather_features(bundle, d_rows));
                Prototypes protos = encode_rows(scen, xd);
                NodePtr h_t = gather_rows(protos.h_s, positions_in(d_rows, tb.transitions));
                NodePtr h_o = gather_rows(protos.h_o, positions_in(d_rows, tb.anchors));
                NodePtr fake = stm_generate(*stm, h_t, h_o);
                auto real = constant(gather_features(bundle, tb.anchors));
                NodePtr l_d = discriminator_loss(*stm, real, fake);
                check_finite(l_d, "L_D", epoch, bi);
                backward(l_d);
                check_zero_grads(main_params, "discriminator");
                adam_d->step();
                adam_d->zero_grad();
                stm->d.set_trainable(false);
                acc_d.add(l_d->value[0], static_cast<double>(tb.size()));
            }

            // -- joint generator / encoder / classifier step --
            std::vector<std::size_t> cls_rows(tb.anchors);
            cls_rows.insert(cls_rows.end(), extras.begin(), extras.end());

            std::vector<std::size_t> all_rows = cls_rows;
            if (use_cts) {
                all_rows.insert(all_rows.end(), tb.state_positives.begin(),
                                tb.state_positives.end());
                all_rows.insert(all_rows.end(), tb.object_positives.begin(),
                                tb.object_positives.end());
                all_rows.insert(all_rows.end(), tb.negatives.begin(), tb.negatives.end());
            }
            if (stm_active) {
                all_rows.insert(all_rows.end(), tb.transitions.begin(), tb.transitions.end());
            }
            std::sort(all_rows.begin(), all_rows.end());
            all_rows.erase(std::unique(all_rows.begin(), all_rows.end()), all_rows.end());

            auto x = constant(gather_features(bundle, all_rows));
            Prototypes protos = encode_rows(scen, x);

            std::vector<CompositionLabel> cls_labels;
            cls_labels.reserve(cls_rows.size());
            for (std::size_t idx : cls_rows) cls_labels.push_back(bundle.labels[idx]);
            const auto cls_pos = positions_in(all_rows, cls_rows);
            NodePtr l_cls = classification_loss(scen, gather_rows(protos.h_s, cls_pos),
                                                gather_rows(protos.h_o, cls_pos), cls_labels);
            check_finite(l_cls, "L_cls", epoch, bi);
            acc_cls.add(l_cls->value[0], static_cast<double>(cls_rows.size()));

            NodePtr l_cts_node = l_cls;
            if (use_cts) {
                const auto anchor_pos = positions_in(all_rows, tb.anchors);
                const auto neg_pos = positions_in(all_rows, tb.negatives);
                NodePtr l_scl = info_nce_rows(
                    gather_rows(protos.h_s, anchor_pos),
                    gather_rows(protos.h_s, positions_in(all_rows, tb.state_positives)),
                    gather_rows(protos.h_s, neg_pos), tb.k, cfg.contrastive.tau_s,
                    cfg.contrastive.normalize);
                NodePtr l_ocl = info_nce_rows(
                    gather_rows(protos.h_o, anchor_pos),
                    gather_rows(protos.h_o, positions_in(all_rows, tb.object_positives)),
                    gather_rows(protos.h_o, neg_pos), tb.k, cfg.contrastive.tau_o,
                    cfg.contrastive.normalize);
                check_finite(l_scl, "L_scl", epoch, bi);
                check_finite(l_ocl, "L_ocl", epoch, bi);
                acc_scl.add(l_scl->value[0], static_cast<double>(tb.size()));
                acc_ocl.add(l_ocl->value[0], static_cast<double>(tb.size()));
                l_cts_node = cts_loss(l_scl, l_ocl, l_cls);
            }

            NodePtr l_total;
            if (stm_active) {
                NodePtr h_t = gather_rows(protos.h_s, positions_in(all_rows, tb.transitions));
                NodePtr h_o = gather_rows(protos.h_o, positions_in(all_rows, tb.anchors));
                NodePtr fake = stm_generate(*stm, h_t, h_o);
                NodePtr l_g_adv = generator_adversarial_loss(*stm, fake, cfg.gan_mode);
                std::vector<std::size_t> trans_states, anchor_objects;
                trans_states.reserve(tb.size());
                anchor_objects.reserve(tb.size());
                for (std::size_t i = 0; i < tb.size(); ++i) {
                    trans_states.push_back(
                        static_cast<std::size_t>(bundle.labels[tb.transitions[i]].state));
                    anchor_objects.push_back(
                        static_cast<std::size_t>(bundle.labels[tb.anchors[i]].object));
                }
                NodePtr l_cls_re = reclassification_loss(scen, fake, trans_states, anchor_objects);
                check_finite(l_g_adv, "L_G_adv", epoch, bi);
                check_finite(l_cls_re, "L_cls_re", epoch, bi);
                acc_g_adv.add(l_g_adv->value[0], static_cast<double>(tb.size()));
                acc_cls_re.add(l_cls_re->value[0], static_cast<double>(tb.size()));
                l_total = total_loss(l_cts_node, add(l_g_adv, l_cls_re), cfg.weights);
            } else {
                l_total = scale(l_cts_node, cfg.weights.alpha);
            }

            backward(l_total);
            if (stm_active) {
                check_zero_grads(stm->discriminator_parameters(), "generator");
                stm->d.set_trainable(true);
            }
            adam_main.step();
        }

        EpochStats stats;
        stats.l_cls = acc_cls.mean();
        stats.l_scl = acc_scl.mean();
        stats.l_ocl = acc_ocl.mean();
        stats.l_d = acc_d.mean();
        stats.l_g_adv = acc_g_adv.mean();
        stats.l_cls_re = acc_cls_re.mean();
        stats.val_auc = bias_sweep(score_pairs(scen, bundle, ImageSplit::val)).auc;
        result.log.push_back(stats);
        if (on_epoch) on_epoch(epoch, stats);
        if (!have_best || stats.val_auc > result.best_val_auc) take_snapshot(stats.val_auc, epoch);
    }

    if (!have_best) {
        take_snapshot(bias_sweep(score_pairs(scen, bundle, ImageSplit::val)).auc, 0);
    }
    result.final_scen = clone_scen(scen);
    if (stm) result.final_stm = clone_stm(*stm);
    return result;
}

}  // namespace scen

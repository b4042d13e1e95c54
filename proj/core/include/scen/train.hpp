#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "scen/adam.hpp"
#include "scen/dataset.hpp"
#include "scen/model.hpp"
#include "scen/stm.hpp"

namespace scen {

/// Ablation axis: base keeps only the classification loss; cts adds the two
/// contrastive terms; stm adds the adversarial module without them; full
/// enables everything.
enum class Variant { base, cts, stm, full };

Variant parse_variant(const std::string& name);
const char* variant_name(Variant variant);

struct TrainConfig {
    ScenDims dims;  // feature_dim / n_states / n_objects are taken from the bundle
    ContrastiveConfig contrastive;
    StmWeights weights;
    GanMode gan_mode = GanMode::non_saturating;
    AdamConfig adam;
    std::size_t batch_size = 128;
    std::size_t epochs = 60;
    std::uint64_t seed = 1;
    Variant variant = Variant::full;
    bool determinism = true;  // reserved; every code path here is already deterministic
};

struct EpochStats {
    double l_cls = 0.0;
    double l_scl = 0.0;
    double l_ocl = 0.0;
    double l_d = 0.0;
    double l_g_adv = 0.0;
    double l_cls_re = 0.0;
    double val_auc = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> log;  // one entry per epoch
    ScenParams final_scen;
    std::optional<StmParams> final_stm;
    ScenParams best_scen;  // highest validation AUC snapshot (init when epochs == 0)
    std::optional<StmParams> best_stm;
    double best_val_auc = 0.0;
    std::size_t best_epoch = 0;  // 1-based, 0 when no epoch ran
    std::size_t n_eligible = 0;
    std::size_t n_classification_only = 0;
};

using EpochCallback = std::function<void(std::size_t epoch, const EpochStats& stats)>;

/// One full run: alternating discriminator / joint updates per batch (when
/// the STM arm is active), an epoch pass over the eligible anchors with
/// classification-only anchors folded into L_cls, and a validation-AUC
/// checkpoint per epoch. With beta == 0 the STM arm is skipped entirely, so
/// runs are bit-identical to the matching contrastive-only variant.
TrainResult train(const TrainConfig& cfg, const DatasetBundle& bundle,
                  const EpochCallback& on_epoch = {});

inline constexpr const char* kLogHeader = "epoch,L_cls,L_scl,L_ocl,L_D,L_G_adv,L_cls_re,val_auc";

std::string format_log_line(std::size_t epoch, const EpochStats& stats);

}  // namespace scen

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "scen/dataset.hpp"
#include "scen/evaluate.hpp"
#include "scen/train.hpp"

namespace scen {

/// Everything a run needs, mirroring the CLI flags / config-file keys 1:1.
struct RunConfig {
    // file paths
    std::string meta = "data.meta";
    std::string features = "data.feat";
    std::string out = "scen-out";
    std::string checkpoint;
    std::string split = "test";
    bool force = false;

    // synthetic generator (gen-data; seed below is reused as the data seed)
    std::size_t n_states = 8;
    std::size_t n_objects = 10;
    double seen_fraction = 0.75;
    std::size_t samples_per_pair = 40;
    std::size_t feature_dim = 32;
    double noise_sigma = 0.1;

    // model dims (feature_dim, n_states, n_objects come from the data)
    std::size_t embed_dim = 0;  // 0 -> feature_dim
    std::size_t hidden = 0;     // 0 -> 2 * proto_dim
    std::size_t proto_dim = 300;
    std::size_t classifier_depth = 1;

    // contrastive space
    double tau_s = 0.1;
    double tau_o = 0.1;
    std::size_t k = 10;
    bool normalize = true;

    // loss weights and gan mode
    double alpha = 0.1;
    double beta = 0.5;
    std::string gan_mode = "non-saturating";

    // optimizer
    double lr = 4e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    std::size_t batch_size = 128;
    std::size_t epochs = 60;
    std::uint64_t seed = 1;
    std::string variant = "full";
    bool determinism = true;
    std::size_t n_seeds = 1;  // ablate

    SyntheticSpec synthetic_spec() const;
    TrainConfig train_config() const;  // validates variant/gan_mode strings
};

/// gen-data: synthesize a bundle and write the metadata/features pair.
/// Refuses to overwrite existing files unless force is set.
void run_gen_data(const RunConfig& cfg, std::ostream& out);

/// train: writes <out>/train_log.csv, <out>/best.ckpt, <out>/final.ckpt and
/// echoes each epoch log line.
TrainResult run_train(const RunConfig& cfg, std::ostream& out);

/// eval: writes <out>/report.json and <out>/curve.csv, prints a metrics row.
EvalReport run_eval(const RunConfig& cfg, std::ostream& out);

struct AblationRow {
    std::string variant;
    std::string seed;  // a number, or "mean"
    double val_auc = 0.0;
    double test_auc = 0.0;
    double best_hm = 0.0;
    double best_seen = 0.0;
    double best_unseen = 0.0;
    double state_acc = 0.0;
    double object_acc = 0.0;
};

/// ablate: trains {base, cts, stm, full} with shared seeds (cfg.seed ..
/// cfg.seed + n_seeds - 1), evaluates each best checkpoint on the test
/// split, and writes <out>/ablation.csv (per-seed rows plus per-variant
/// mean rows when n_seeds > 1).
std::vector<AblationRow> run_ablate(const RunConfig& cfg, std::ostream& out);

inline constexpr const char* kAblationHeader =
    "variant,seed,val_auc,test_auc,best_hm,best_seen,best_unseen,state_acc,object_acc";

}  // namespace scen

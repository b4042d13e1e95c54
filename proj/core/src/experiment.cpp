#include "scen/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "scen/checkpoint.hpp"
#include "scen/dataset_io.hpp"
#include "scen/errors.hpp"

namespace scen {

namespace fs = std::filesystem;

namespace {

std::string fmt_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void ensure_out_dir(const std::string& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw ValidationError("cannot create output directory " + out + ": " + ec.message());
}

DatasetBundle load_run_bundle(const RunConfig& cfg) {
    return load_bundle(cfg.meta, cfg.features);
}

std::string csv_row(const AblationRow& row) {
    std::string s = row.variant + "," + row.seed;
    for (double v : {row.val_auc, row.test_auc, row.best_hm, row.best_seen, row.best_unseen,
                     row.state_acc, row.object_acc}) {
        s += "," + fmt_g17(v);
    }
    return s;
}

}  // namespace

SyntheticSpec RunConfig::synthetic_spec() const {
    SyntheticSpec spec;
    spec.n_states = n_states;
    spec.n_objects = n_objects;
    spec.seen_fraction = seen_fraction;
    spec.samples_per_pair = samples_per_pair;
    spec.feature_dim = feature_dim;
    spec.noise_sigma = noise_sigma;
    spec.seed = seed;
    return spec;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig tc;
    tc.dims.embed_dim = embed_dim;
    tc.dims.hidden = hidden;
    tc.dims.proto_dim = proto_dim;
    tc.dims.classifier_depth = classifier_depth;
    tc.contrastive.tau_s = tau_s;
    tc.contrastive.tau_o = tau_o;
    tc.contrastive.k = k;
    tc.contrastive.normalize = normalize;
    tc.weights.alpha = alpha;
    tc.weights.beta = beta;
    tc.gan_mode = parse_gan_mode(gan_mode);
    tc.adam.lr = lr;
    tc.adam.beta1 = beta1;
    tc.adam.beta2 = beta2;
    tc.adam.eps = eps;
    tc.batch_size = batch_size;
    tc.epochs = epochs;
    tc.seed = seed;
    tc.variant = parse_variant(variant);
    tc.determinism = determinism;
    if (tau_s <= 0.0 || tau_o <= 0.0) throw ValidationError("tau_s and tau_o must be positive");
    if (k == 0) throw ValidationError("k must be >= 1");
    if (alpha < 0.0 || beta < 0.0) throw ValidationError("alpha and beta must be non-negative");
    return tc;
}

void run_gen_data(const RunConfig& cfg, std::ostream& out) {
    if (cfg.seen_fraction >= 1.0) {
        throw ValidationError("gen-data: seen_fraction=" + std::to_string(cfg.seen_fraction) +
                              " leaves no unseen pairs");
    }
    if (cfg.seen_fraction <= 0.0) {
        throw ValidationError("gen-data: seen_fraction must be positive");
    }
    if (!cfg.force && (fs::exists(cfg.meta) || fs::exists(cfg.features))) {
        throw ValidationError("gen-data: refusing to overwrite " + cfg.meta + " / " +
                              cfg.features + " (pass --force to allow)");
    }
    DatasetBundle bundle = generate_synthetic(cfg.synthetic_spec());
    save_bundle(bundle, cfg.meta, cfg.features);

    out << "pairs: " << bundle.seen_pairs.size() << " seen / " << bundle.unseen_pairs.size()
        << " unseen\n";
    out << "split      c_s    c_u      i\n";
    for (ImageSplit split : {ImageSplit::train, ImageSplit::val, ImageSplit::test}) {
        std::vector<CompositionLabel> seen_here, unseen_here;
        std::size_t images = 0;
        for (std::size_t i = 0; i < bundle.n_images(); ++i) {
            if (bundle.split[i] != split) continue;
            ++images;
            (bundle.is_seen(bundle.labels[i]) ? seen_here : unseen_here)
                .push_back(bundle.labels[i]);
        }
        for (auto* pairs : {&seen_here, &unseen_here}) {
            std::sort(pairs->begin(), pairs->end());
            pairs->erase(std::unique(pairs->begin(), pairs->end()), pairs->end());
        }
        char line[96];
        std::snprintf(line, sizeof(line), "%-8s %5zu  %5zu  %5zu", split_name(split),
                      seen_here.size(), unseen_here.size(), images);
        out << line << "\n";
    }
    out << "wrote " << cfg.meta << " and " << cfg.features << "\n";
}

TrainResult run_train(const RunConfig& cfg, std::ostream& out) {
    const TrainConfig tc = cfg.train_config();
    DatasetBundle bundle = load_run_bundle(cfg);
    ensure_out_dir(cfg.out);

    std::ofstream log(fs::path(cfg.out) / "train_log.csv");
    if (!log) throw ValidationError("cannot open " + cfg.out + "/train_log.csv for writing");
    log << kLogHeader << "\n";
    out << kLogHeader << "\n";

    TrainResult result = train(tc, bundle, [&](std::size_t epoch, const EpochStats& stats) {
        const std::string line = format_log_line(epoch, stats);
        log << line << "\n";
        out << line << "\n";
    });
    log.close();

    save_checkpoint(fs::path(cfg.out) / "best.ckpt", result.best_scen,
                    result.best_stm ? &*result.best_stm : nullptr);
    save_checkpoint(fs::path(cfg.out) / "final.ckpt", result.final_scen,
                    result.final_stm ? &*result.final_stm : nullptr);
    out << "best val_auc " << fmt_g17(result.best_val_auc) << " at epoch " << result.best_epoch
        << "; wrote " << cfg.out << "/best.ckpt and " << cfg.out << "/final.ckpt\n";
    return result;
}

EvalReport run_eval(const RunConfig& cfg, std::ostream& out) {
    if (cfg.checkpoint.empty()) throw ValidationError("eval: --checkpoint is required");
    Checkpoint ckpt = load_checkpoint(cfg.checkpoint);
    DatasetBundle bundle = load_run_bundle(cfg);
    if (ckpt.scen.dims.feature_dim != bundle.feature_dim() ||
        ckpt.scen.dims.n_states != bundle.n_states() ||
        ckpt.scen.dims.n_objects != bundle.n_objects()) {
        throw ValidationError("eval: checkpoint dims (feature " +
                              std::to_string(ckpt.scen.dims.feature_dim) + ", states " +
                              std::to_string(ckpt.scen.dims.n_states) + ", objects " +
                              std::to_string(ckpt.scen.dims.n_objects) +
                              ") do not match the bundle");
    }
    EvalReport report = evaluate(ckpt.scen, bundle, parse_split(cfg.split));
    ensure_out_dir(cfg.out);
    write_report_json(fs::path(cfg.out) / "report.json", report);
    write_curve_csv(fs::path(cfg.out) / "curve.csv", report);
    out << "  AUCv  AUCt    HM  Seen  Unsn     s     o\n";
    out << format_metrics_row(report, std::nan("")) << "\n";
    out << "wrote " << cfg.out << "/report.json and " << cfg.out << "/curve.csv\n";
    return report;
}

std::vector<AblationRow> run_ablate(const RunConfig& cfg, std::ostream& out) {
    if (cfg.n_seeds == 0) throw ValidationError("ablate: n_seeds must be >= 1");
    cfg.train_config();  // fail fast on bad strings
    DatasetBundle bundle = load_run_bundle(cfg);
    ensure_out_dir(cfg.out);

    const Variant variants[] = {Variant::base, Variant::cts, Variant::stm, Variant::full};
    std::vector<AblationRow> rows;
    for (Variant variant : variants) {
        for (std::size_t i = 0; i < cfg.n_seeds; ++i) {
            TrainConfig tc = cfg.train_config();
            tc.variant = variant;
            tc.seed = cfg.seed + i;
            TrainResult result = train(tc, bundle);
            EvalReport test = evaluate(result.best_scen, bundle, ImageSplit::test);
            AblationRow row;
            row.variant = variant_name(variant);
            row.seed = std::to_string(tc.seed);
            row.val_auc = result.best_val_auc;
            row.test_auc = test.auc;
            row.best_hm = test.best_hm;
            row.best_seen = test.best_seen;
            row.best_unseen = test.best_unseen;
            row.state_acc = test.state_acc;
            row.object_acc = test.object_acc;
            rows.push_back(row);
            out << "ablate: " << row.variant << " seed " << row.seed << " test_auc "
                << fmt_g17(row.test_auc) << "\n";
        }
        if (cfg.n_seeds > 1) {
            AblationRow mean_row;
            mean_row.variant = variant_name(variant);
            mean_row.seed = "mean";
            for (auto it = rows.end() - static_cast<std::ptrdiff_t>(cfg.n_seeds); it != rows.end();
                 ++it) {
                mean_row.val_auc += it->val_auc;
                mean_row.test_auc += it->test_auc;
                mean_row.best_hm += it->best_hm;
                mean_row.best_seen += it->best_seen;
                mean_row.best_unseen += it->best_unseen;
                mean_row.state_acc += it->state_acc;
                mean_row.object_acc += it->object_acc;
            }
            const auto n = static_cast<double>(cfg.n_seeds);
            mean_row.val_auc /= n;
            mean_row.test_auc /= n;
            mean_row.best_hm /= n;
            mean_row.best_seen /= n;
            mean_row.best_unseen /= n;
            mean_row.state_acc /= n;
            mean_row.object_acc /= n;
            rows.push_back(mean_row);
        }
    }

    std::ofstream csv(fs::path(cfg.out) / "ablation.csv");
    if (!csv) throw ValidationError("cannot open " + cfg.out + "/ablation.csv for writing");
    csv << kAblationHeader << "\n";
    for (const AblationRow& row : rows) csv << csv_row(row) << "\n";
    csv.close();

    out << "\nvariant  seed   AUCv  AUCt    HM  Seen  Unsn     s     o\n";
    for (const AblationRow& row : rows) {
        char head[32];
        std::snprintf(head, sizeof(head), "%-7s %5s", row.variant.c_str(), row.seed.c_str());
        EvalReport r;
        r.auc = row.test_auc;
        r.best_hm = row.best_hm;
        r.best_seen = row.best_seen;
        r.best_unseen = row.best_unseen;
        r.state_acc = row.state_acc;
        r.object_acc = row.object_acc;
        out << head << " " << format_metrics_row(r, row.val_auc) << "\n";
    }
    out << "wrote " << cfg.out << "/ablation.csv\n";
    return rows;
}

}  // namespace scen

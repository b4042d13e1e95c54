#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>

#include "scen/checkpoint.hpp"
#include "scen/dataset_io.hpp"
#include "scen/errors.hpp"
#include "scen/experiment.hpp"
#include "support/temp_dir.hpp"

using namespace scen;
using scen::test::TempDir;

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// small, fast run shared by the tests below
RunConfig small_run(const TempDir& tmp) {
    RunConfig cfg;
    cfg.meta = (tmp.path / "d.meta").string();
    cfg.features = (tmp.path / "d.feat").string();
    cfg.out = (tmp.path / "out").string();
    cfg.n_states = 4;
    cfg.n_objects = 4;
    cfg.seen_fraction = 0.8;
    cfg.samples_per_pair = 10;
    cfg.feature_dim = 8;
    cfg.embed_dim = 8;
    cfg.hidden = 12;
    cfg.proto_dim = 6;
    cfg.k = 4;
    cfg.lr = 1e-3;
    cfg.beta = 0.1;
    cfg.batch_size = 32;
    cfg.epochs = 2;
    return cfg;
}

}  // namespace

TEST_CASE("run config defaults match the documented recipe") {
    RunConfig cfg;
    CHECK(cfg.lr == 4e-5);
    CHECK(cfg.batch_size == 128);
    CHECK(cfg.k == 10);
    CHECK(cfg.alpha == 0.1);
    CHECK(cfg.beta == 0.5);
    CHECK(cfg.tau_s == 0.1);
    CHECK(cfg.tau_o == 0.1);
    CHECK(cfg.proto_dim == 300);
    CHECK(cfg.epochs == 60);
    CHECK(cfg.normalize);
    CHECK(cfg.determinism);
    CHECK(cfg.gan_mode == "non-saturating");
    CHECK(cfg.variant == "full");
    CHECK(cfg.n_states == 8);
    CHECK(cfg.n_objects == 10);
    CHECK(cfg.seen_fraction == 0.75);
    CHECK(cfg.samples_per_pair == 40);
    CHECK(cfg.feature_dim == 32);
    CHECK(cfg.noise_sigma == 0.1);

    TrainConfig tc = cfg.train_config();
    CHECK(tc.adam.beta1 == 0.9);
    CHECK(tc.adam.beta2 == 0.999);
    CHECK(tc.adam.eps == 1e-8);
    CHECK(tc.gan_mode == GanMode::non_saturating);
    CHECK(tc.variant == Variant::full);
}

TEST_CASE("gen-data reports the table and refuses to overwrite") {
    TempDir tmp("exp");
    RunConfig cfg;
    cfg.meta = (tmp.path / "d.meta").string();
    cfg.features = (tmp.path / "d.feat").string();

    std::ostringstream out;
    run_gen_data(cfg, out);
    CHECK(out.str().find("pairs: 60 seen / 20 unseen") != std::string::npos);
    CHECK(out.str().find("train") != std::string::npos);
    CHECK(std::filesystem::exists(cfg.meta));

    std::ostringstream again;
    CHECK_THROWS_WITH_AS(run_gen_data(cfg, again), doctest::Contains("refusing to overwrite"),
                         ValidationError);

    const std::string meta_before = slurp(cfg.meta);
    const std::string feat_before = slurp(cfg.features);
    cfg.force = true;
    run_gen_data(cfg, again);  // same seed: byte-identical files
    CHECK(slurp(cfg.meta) == meta_before);
    CHECK(slurp(cfg.features) == feat_before);
}

TEST_CASE("gen-data rejects a fraction that leaves no unseen pairs") {
    TempDir tmp("exp");
    RunConfig cfg;
    cfg.meta = (tmp.path / "d.meta").string();
    cfg.features = (tmp.path / "d.feat").string();
    cfg.seen_fraction = 1.0;
    std::ostringstream out;
    CHECK_THROWS_WITH_AS(run_gen_data(cfg, out), doctest::Contains("no unseen"), ValidationError);
    CHECK_FALSE(std::filesystem::exists(cfg.meta));
}

TEST_CASE("train writes reproducible logs and checkpoints") {
    TempDir tmp("exp");
    RunConfig cfg = small_run(tmp);
    std::ostringstream quiet;
    run_gen_data(cfg, quiet);

    run_train(cfg, quiet);
    const std::string log1 = slurp(std::filesystem::path(cfg.out) / "train_log.csv");
    const std::string best1 = slurp(std::filesystem::path(cfg.out) / "best.ckpt");
    CHECK(log1.rfind("epoch,L_cls,L_scl,L_ocl,L_D,L_G_adv,L_cls_re,val_auc\n", 0) == 0);
    CHECK(std::count(log1.begin(), log1.end(), '\n') == 3);  // header + 2 epochs

    cfg.out = (tmp.path / "out2").string();
    run_train(cfg, quiet);
    CHECK(slurp(std::filesystem::path(cfg.out) / "train_log.csv") == log1);
    CHECK(slurp(std::filesystem::path(cfg.out) / "best.ckpt") == best1);
}

TEST_CASE("full with beta zero writes the cts log byte for byte") {
    TempDir tmp("exp");
    RunConfig cfg = small_run(tmp);
    std::ostringstream quiet;
    run_gen_data(cfg, quiet);

    cfg.variant = "cts";
    cfg.out = (tmp.path / "cts").string();
    run_train(cfg, quiet);
    cfg.variant = "full";
    cfg.beta = 0.0;
    cfg.out = (tmp.path / "full0").string();
    run_train(cfg, quiet);
    CHECK(slurp(tmp.path / "cts" / "train_log.csv") ==
          slurp(tmp.path / "full0" / "train_log.csv"));
}

TEST_CASE("eval is a pure function of checkpoint and data") {
    TempDir tmp("exp");
    RunConfig cfg = small_run(tmp);
    std::ostringstream quiet;
    run_gen_data(cfg, quiet);
    run_train(cfg, quiet);

    RunConfig eval_cfg = cfg;
    eval_cfg.checkpoint = (std::filesystem::path(cfg.out) / "best.ckpt").string();
    eval_cfg.out = (tmp.path / "eval1").string();
    EvalReport r1 = run_eval(eval_cfg, quiet);
    eval_cfg.out = (tmp.path / "eval2").string();
    EvalReport r2 = run_eval(eval_cfg, quiet);
    CHECK(slurp(tmp.path / "eval1" / "report.json") == slurp(tmp.path / "eval2" / "report.json"));
    CHECK(slurp(tmp.path / "eval1" / "curve.csv") == slurp(tmp.path / "eval2" / "curve.csv"));
    CHECK(r1.auc == r2.auc);

    SUBCASE("train split is rejected for generalized evaluation") {
        eval_cfg.split = "train";
        CHECK_THROWS_WITH_AS(run_eval(eval_cfg, quiet), doctest::Contains("unseen-pair truth"),
                             ValidationError);
    }

    SUBCASE("checkpoint dims must match the bundle") {
        RunConfig other = small_run(tmp);
        other.meta = (tmp.path / "other.meta").string();
        other.features = (tmp.path / "other.feat").string();
        other.feature_dim = 5;
        run_gen_data(other, quiet);
        eval_cfg.meta = other.meta;
        eval_cfg.features = other.features;
        CHECK_THROWS_WITH_AS(run_eval(eval_cfg, quiet), doctest::Contains("dims"),
                             ValidationError);
    }

    SUBCASE("a saved-and-reloaded checkpoint evaluates identically") {
        Checkpoint ckpt = load_checkpoint(eval_cfg.checkpoint);
        DatasetBundle bundle = load_bundle(cfg.meta, cfg.features);
        EvalReport direct = evaluate(ckpt.scen, bundle, ImageSplit::test);
        CHECK(direct.auc == r1.auc);
        CHECK(direct.best_hm == r1.best_hm);
        CHECK(direct.state_acc == r1.state_acc);
    }
}

TEST_CASE("single-seed ablation emits four metric rows") {
    TempDir tmp("exp");
    RunConfig cfg = small_run(tmp);
    cfg.epochs = 1;
    std::ostringstream quiet;
    run_gen_data(cfg, quiet);
    auto rows = run_ablate(cfg, quiet);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].variant == "base");
    CHECK(rows[1].variant == "cts");
    CHECK(rows[2].variant == "stm");
    CHECK(rows[3].variant == "full");

    const std::string csv = slurp(std::filesystem::path(cfg.out) / "ablation.csv");
    CHECK(csv.rfind(std::string(kAblationHeader) + "\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);  // header + 4 rows
}

TEST_CASE("ablation with zero epochs reports identical random-init metrics") {
    TempDir tmp("exp");
    RunConfig cfg = small_run(tmp);
    cfg.epochs = 0;
    std::ostringstream quiet;
    run_gen_data(cfg, quiet);
    auto rows = run_ablate(cfg, quiet);
    REQUIRE(rows.size() == 4);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].test_auc == rows[0].test_auc);
        CHECK(rows[i].best_hm == rows[0].best_hm);
        CHECK(rows[i].state_acc == rows[0].state_acc);
        CHECK(rows[i].object_acc == rows[0].object_acc);
    }
}

TEST_CASE("multi-seed ablation appends per-variant means") {
    TempDir tmp("exp");
    RunConfig cfg = small_run(tmp);
    cfg.epochs = 1;
    cfg.n_seeds = 2;
    std::ostringstream quiet;
    run_gen_data(cfg, quiet);
    auto rows = run_ablate(cfg, quiet);
    REQUIRE(rows.size() == 4 * 3);  // per variant: seed, seed, mean
    for (std::size_t v = 0; v < 4; ++v) {
        const AblationRow& s1 = rows[v * 3];
        const AblationRow& s2 = rows[v * 3 + 1];
        const AblationRow& mean = rows[v * 3 + 2];
        CHECK(mean.seed == "mean");
        CHECK(mean.test_auc == doctest::Approx((s1.test_auc + s2.test_auc) / 2.0).epsilon(1e-15));
        CHECK(mean.val_auc == doctest::Approx((s1.val_auc + s2.val_auc) / 2.0).epsilon(1e-15));
        CHECK(s1.seed == std::to_string(cfg.seed));
        CHECK(s2.seed == std::to_string(cfg.seed + 1));
    }
}

// End-to-end checks of the scen binary: subcommands, exit codes, config file
// handling, and the SCEN_SEED override. Takes the binary path as argv[1].
#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void expect(bool ok, const std::string& what) {
    std::printf("[%s] %s\n", ok ? "ok" : "FAIL", what.c_str());
    if (!ok) ++g_failures;
}

int run(const std::string& cmd) {
    const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
    if (status == -1) return -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: scen_cli_smoke <path-to-scen>\n";
        return 2;
    }
    const std::string scen = argv[1];
    const fs::path tmp = fs::temp_directory_path() / "scen_cli_smoke";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    const std::string base = " --meta " + (tmp / "d.meta").string() + " --features " +
                             (tmp / "d.feat").string();
    const std::string small_data =
        " --n_states 4 --n_objects 4 --seen_fraction 0.8 --samples_per_pair 10 --feature_dim 8";
    const std::string small_model =
        " --embed_dim 8 --hidden 12 --proto_dim 6 --k 4 --lr 1e-3 --beta 0.1 --batch_size 32";

    expect(run(scen + " gen-data" + base + small_data) == 0, "gen-data succeeds");
    expect(run(scen + " gen-data" + base + small_data) == 1, "overwrite without --force fails");
    expect(run(scen + " gen-data --force" + base + small_data) == 0, "overwrite with --force");
    expect(run(scen + " gen-data --force" + base + small_data + " --seen_fraction 1.0") == 1,
           "seen_fraction 1.0 is a validation error");

    // seed flag and SCEN_SEED agree byte for byte
    const std::string alt = " --meta " + (tmp / "e.meta").string() + " --features " +
                            (tmp / "e.feat").string();
    expect(run(scen + " gen-data --force --seed 5" + alt + small_data) == 0, "gen with --seed 5");
    const std::string by_flag = slurp(tmp / "e.feat");
    expect(run("SCEN_SEED=5 " + scen + " gen-data --force" + alt + small_data) == 0,
           "gen with SCEN_SEED=5");
    expect(slurp(tmp / "e.feat") == by_flag, "SCEN_SEED matches --seed output");

    const std::string out1 = (tmp / "run1").string();
    expect(run(scen + " train" + base + small_model + " --epochs 2 --out " + out1) == 0,
           "train succeeds");
    expect(fs::exists(fs::path(out1) / "best.ckpt") && fs::exists(fs::path(out1) / "final.ckpt") &&
               fs::exists(fs::path(out1) / "train_log.csv"),
           "train writes log and checkpoints");

    // config file drives the run; command line overrides it
    {
        std::ofstream cfg(tmp / "run.cfg");
        cfg << "# desk-scale run\n";
        cfg << "epochs = 1\n";
        cfg << "proto_dim = 6\n";
        cfg << "hidden = 12\n";
        cfg << "embed_dim = 8\n";
        cfg << "k = 4\n";
        cfg << "lr = 1e-3\n";
        cfg << "batch_size = 32\n";
    }
    const std::string out_cfg = (tmp / "run_cfg").string();
    expect(run(scen + " train" + base + " --config " + (tmp / "run.cfg").string() + " --out " +
               out_cfg) == 0,
           "train with a config file");
    {
        const std::string log = slurp(fs::path(out_cfg) / "train_log.csv");
        expect(std::count(log.begin(), log.end(), '\n') == 2, "config epochs=1 honored");
    }
    const std::string out_cfg2 = (tmp / "run_cfg2").string();
    expect(run(scen + " train" + base + " --config " + (tmp / "run.cfg").string() +
               " --epochs 2 --out " + out_cfg2) == 0,
           "flag overrides config");
    {
        const std::string log = slurp(fs::path(out_cfg2) / "train_log.csv");
        expect(std::count(log.begin(), log.end(), '\n') == 3, "command line epochs=2 wins");
    }

    expect(run(scen + " eval" + base + " --checkpoint " + out1 + "/best.ckpt --out " +
               (tmp / "eval").string()) == 0,
           "eval succeeds");
    expect(fs::exists(tmp / "eval" / "report.json") && fs::exists(tmp / "eval" / "curve.csv"),
           "eval writes report and curve");
    expect(run(scen + " eval" + base + " --checkpoint " + out1 + "/best.ckpt --split train") == 1,
           "eval on the train split is rejected");
    expect(run(scen + " eval" + base) == 1, "eval without --checkpoint is a usage error");
    expect(run(scen + " train" + base + small_model + " --epochs 3 --lr 1e100 --out " +
               (tmp / "nan").string()) == 2,
           "numerical abort exits with code 2");
    expect(run(scen + " train" + base + small_model + " --variant nope --out " +
               (tmp / "bad").string()) == 1,
           "unknown variant is a validation error");
    expect(run(scen + " bogus-subcommand") == 1, "unknown subcommand fails");
    expect(run(scen + " --help") == 0, "--help exits zero");

    const std::string out_ab = (tmp / "ab").string();
    expect(run(scen + " ablate" + base + small_model + " --epochs 1 --out " + out_ab) == 0,
           "ablate succeeds");
    {
        const std::string csv = slurp(fs::path(out_ab) / "ablation.csv");
        expect(std::count(csv.begin(), csv.end(), '\n') == 5, "ablation csv has header + 4 rows");
    }

    fs::remove_all(tmp);
    if (g_failures) {
        std::printf("%d cli smoke check(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all cli smoke checks passed\n");
    return 0;
}

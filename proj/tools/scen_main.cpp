#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scen/errors.hpp"
#include "scen/experiment.hpp"

namespace {

// Config files are one `key = value` per line with `#` comments. Each key
// maps to the flag of the same name; expanded entries are injected right
// after the subcommand token, so anything typed on the command line takes
// precedence (every option uses the take-last policy).
std::vector<std::string> expand_config_args(const std::vector<std::string>& args) {
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (config_path.empty()) return args;

    std::ifstream in(config_path);
    if (!in) throw scen::ValidationError("cannot open config file " + config_path);
    std::vector<std::string> expanded;
    std::string line;
    std::size_t line_no = 0;
    auto trim = [](std::string s) {
        const auto begin = s.find_first_not_of(" \t\r");
        if (begin == std::string::npos) return std::string();
        const auto end = s.find_last_not_of(" \t\r");
        return s.substr(begin, end - begin + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw scen::ValidationError(config_path + ":" + std::to_string(line_no) +
                                        ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw scen::ValidationError(config_path + ":" + std::to_string(line_no) +
                                        ": expected 'key = value'");
        }
        if (key == "config") {
            throw scen::ValidationError(config_path + ":" + std::to_string(line_no) +
                                        ": config files cannot nest");
        }
        expanded.push_back("--" + key + "=" + value);
    }

    // insert after the subcommand token (the first non-flag argument)
    std::vector<std::string> out;
    bool inserted = false;
    for (const std::string& arg : args) {
        out.push_back(arg);
        if (!inserted && !arg.empty() && arg[0] != '-') {
            out.insert(out.end(), expanded.begin(), expanded.end());
            inserted = true;
        }
    }
    if (!inserted) out.insert(out.end(), expanded.begin(), expanded.end());
    return out;
}

CLI::Option* last_wins(CLI::Option* opt) {
    return opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

void add_data_file_options(CLI::App* cmd, scen::RunConfig& cfg) {
    last_wins(cmd->add_option("--meta", cfg.meta, "metadata file path"));
    last_wins(cmd->add_option("--features", cfg.features, "features file path"));
}

void add_model_options(CLI::App* cmd, scen::RunConfig& cfg) {
    last_wins(cmd->add_option("--embed_dim", cfg.embed_dim, "FC output dim (0 = feature_dim)"));
    last_wins(cmd->add_option("--hidden", cfg.hidden, "encoder/STM hidden dim (0 = 2*proto_dim)"));
    last_wins(cmd->add_option("--proto_dim", cfg.proto_dim, "prototype dim"));
    last_wins(cmd->add_option("--classifier_depth", cfg.classifier_depth,
                              "classifier layer count"));
}

void add_train_options(CLI::App* cmd, scen::RunConfig& cfg) {
    last_wins(cmd->add_option("--tau_s", cfg.tau_s, "state contrastive temperature"));
    last_wins(cmd->add_option("--tau_o", cfg.tau_o, "object contrastive temperature"));
    last_wins(cmd->add_option("--k", cfg.k, "negatives per anchor"));
    last_wins(cmd->add_flag("--normalize,!--no_normalize", cfg.normalize,
                            "L2-normalize prototypes in the contrastive losses"));
    last_wins(cmd->add_option("--alpha", cfg.alpha, "weight of L_cts"));
    last_wins(cmd->add_option("--beta", cfg.beta, "weight of L_stm"));
    last_wins(cmd->add_option("--gan_mode", cfg.gan_mode, "saturating|non-saturating"));
    last_wins(cmd->add_option("--lr", cfg.lr, "Adam learning rate"));
    last_wins(cmd->add_option("--beta1", cfg.beta1, "Adam beta1"));
    last_wins(cmd->add_option("--beta2", cfg.beta2, "Adam beta2"));
    last_wins(cmd->add_option("--eps", cfg.eps, "Adam epsilon"));
    last_wins(cmd->add_option("--batch_size", cfg.batch_size, "anchors per batch"));
    last_wins(cmd->add_option("--epochs", cfg.epochs,
                              "epochs (one pass over eligible anchors)"));
    last_wins(cmd->add_option("--variant", cfg.variant, "base|cts|stm|full"));
    last_wins(cmd->add_flag("--determinism,!--no_determinism", cfg.determinism,
                            "bitwise-reproducible runs (always on; flag reserved)"));
}

int dispatch(const std::string& name, const scen::RunConfig& cfg) {
    if (name == "gen-data") {
        scen::run_gen_data(cfg, std::cout);
    } else if (name == "train") {
        scen::run_train(cfg, std::cout);
    } else if (name == "eval") {
        scen::run_eval(cfg, std::cout);
    } else {
        scen::run_ablate(cfg, std::cout);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scen: compositional zero-shot learning with twin contrastive embedding "
                 "spaces and a state-transition GAN (training, evaluation, synthetic data)"};
    app.require_subcommand(1);

    scen::RunConfig cfg;
    std::string config_path;
    auto add_common = [&](CLI::App* cmd) {
        last_wins(cmd->add_option("--config", config_path,
                                  "config file, one 'key = value' per line"));
        last_wins(cmd->add_option("--out", cfg.out, "output directory"));
        last_wins(cmd->add_option("--seed", cfg.seed,
                                  "run seed (SCEN_SEED overrides the config value)"));
    };

    CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
    add_common(gen);
    add_data_file_options(gen, cfg);
    last_wins(gen->add_option("--n_states", cfg.n_states, "state vocabulary size"));
    last_wins(gen->add_option("--n_objects", cfg.n_objects, "object vocabulary size"));
    last_wins(gen->add_option("--seen_fraction", cfg.seen_fraction,
                              "fraction of pairs seen in training"));
    last_wins(gen->add_option("--samples_per_pair", cfg.samples_per_pair, "images per pair"));
    last_wins(gen->add_option("--feature_dim", cfg.feature_dim, "feature dimensionality"));
    last_wins(gen->add_option("--noise_sigma", cfg.noise_sigma, "feature noise sigma"));
    last_wins(gen->add_flag("--force", cfg.force, "overwrite existing output files"));

    CLI::App* train = app.add_subcommand("train", "train a model on a dataset");
    add_common(train);
    add_data_file_options(train, cfg);
    add_model_options(train, cfg);
    add_train_options(train, cfg);

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    add_common(eval);
    add_data_file_options(eval, cfg);
    last_wins(eval->add_option("--checkpoint", cfg.checkpoint, "checkpoint file"))->required();
    last_wins(eval->add_option("--split", cfg.split, "train|val|test"));

    CLI::App* ablate = app.add_subcommand("ablate", "run the base/cts/stm/full variant table");
    add_common(ablate);
    add_data_file_options(ablate, cfg);
    add_model_options(ablate, cfg);
    add_train_options(ablate, cfg);
    last_wins(ablate->add_option("--n_seeds", cfg.n_seeds, "seeds per variant (seed..seed+n-1)"));

    std::vector<std::string> args(argv + 1, argv + argc);
    bool seed_on_command_line = false;
    for (const std::string& arg : args) {
        if (arg == "--seed" || arg.rfind("--seed=", 0) == 0) seed_on_command_line = true;
    }
    try {
        args = expand_config_args(args);
    } catch (const std::exception& e) {
        std::cerr << "scen: " << e.what() << "\n";
        return 1;
    }
    try {
        // CLI11 parses the reversed vector form
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (const char* env_seed = std::getenv("SCEN_SEED"); env_seed && !seed_on_command_line) {
        try {
            cfg.seed = std::stoull(env_seed);
        } catch (const std::exception&) {
            std::cerr << "scen: SCEN_SEED='" << env_seed << "' is not an integer\n";
            return 1;
        }
    }

    try {
        return dispatch(app.get_subcommands().front()->get_name(), cfg);
    } catch (const scen::NumericError& e) {
        std::cerr << "scen: numerical abort: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "scen: " << e.what() << "\n";
        return 1;
    }
}

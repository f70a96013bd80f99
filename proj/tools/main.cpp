#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "gsim/errors.hpp"

namespace {

// Assemble the effective configuration: defaults, then the file, then every
// --set override, then the sugar flags (--seed, --splits, --step), which win.
gsim::RunConfig build_config(const std::string& config_path,
                             const std::vector<std::string>& overrides,
                             const std::string& seed_key, const std::string& seed_value) {
    gsim::RunConfig cfg = config_path.empty() ? gsim::RunConfig::defaults()
                                              : gsim::RunConfig::from_file(config_path);
    for (const std::string& expr : overrides) cfg.set_expr(expr);
    if (!seed_key.empty() && !seed_value.empty()) cfg.set(seed_key, seed_value);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gsim: learn and evaluate a cross-domain similarity measure"};
    app.require_subcommand(1);

    std::string config_path, out_path, data_path, model_path, trace_path;
    std::string x_path, y_path;
    std::string mode = "cmc";
    std::string seed, splits, step;
    std::vector<std::string> overrides;
    bool corrupt = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "Config file (key = value lines, # comments)");
        cmd->add_option("--set", overrides,
                        "Override one config key (key=value); repeatable");
        cmd->add_option("--seed", seed, "Override the command's seed key");
    };

    CLI::App* gen = app.add_subcommand("gen-data", "Generate a synthetic cross-domain dataset");
    add_common(gen);
    gen->add_option("--out", out_path, "Dataset file to write")->required();

    CLI::App* train = app.add_subcommand("train", "Train a similarity model on a dataset");
    add_common(train);
    train->add_option("--data", data_path, "Dataset file")->required();
    train->add_option("--out", out_path, "Model file to write")->required();
    train->add_option("--trace", trace_path, "Loss trace file (default: <out>.trace)");

    CLI::App* eval = app.add_subcommand("eval", "Evaluate a trained model");
    add_common(eval);
    eval->add_option("--model", model_path, "Model file")->required();
    eval->add_option("--data", data_path, "Dataset file")->required();
    eval->add_option("--mode", mode, "cmc or verify")
        ->check(CLI::IsMember({"cmc", "verify"}));
    eval->add_option("--splits", splits, "Number of random gallery splits (cmc mode)");

    CLI::App* score = app.add_subcommand("score", "Score one pair of raw input vectors");
    score->add_option("--model", model_path, "Model file")->required();
    score->add_option("--x", x_path, "X-domain raw vector file")->required();
    score->add_option("--y", y_path, "Y-domain raw vector file")->required();

    CLI::App* grad = app.add_subcommand("grad-check",
                                        "Compare analytic gradients with finite differences");
    add_common(grad);
    grad->add_option("--data", data_path, "Dataset file")->required();
    grad->add_option("--step", step, "Central-difference step size");
    grad->add_flag("--corrupt", corrupt,
                   "Negative control: corrupt the analytic gradient before checking");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // --help exits cleanly; usage errors are parse failures
    }

    try {
        if (gen->parsed()) {
            return gsim::cli::cmd_gen_data(build_config(config_path, overrides, "data.seed", seed),
                                           out_path);
        }
        if (train->parsed()) {
            return gsim::cli::cmd_train(build_config(config_path, overrides, "train.seed", seed),
                                        data_path, out_path, trace_path);
        }
        if (eval->parsed()) {
            gsim::RunConfig cfg = build_config(config_path, overrides, "eval.seed", seed);
            if (!splits.empty()) cfg.set("eval.splits", splits);
            return gsim::cli::cmd_eval(cfg, model_path, data_path, mode);
        }
        if (score->parsed()) {
            return gsim::cli::cmd_score(model_path, x_path, y_path);
        }
        if (grad->parsed()) {
            gsim::RunConfig cfg = build_config(config_path, overrides, "grad.seed", seed);
            if (!step.empty()) cfg.set("grad.step", step);
            return gsim::cli::cmd_grad_check(cfg, data_path, corrupt);
        }
    } catch (const gsim::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const gsim::IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;  // unreachable: require_subcommand guarantees one branch above
}

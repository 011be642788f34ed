#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sg/harness.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string preset;
    std::string out_dir = "run";
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t steps_override = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config JSON file");
    cmd->add_option("--preset", opts.preset, "built-in preset name");
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "RNG seed override")
        ->each([&](const std::string&) { opts.seed_set = true; });
    cmd->add_option("--steps-override", opts.steps_override,
                    "rescale the run to this many total steps");
}

sg::ExperimentConfig resolve_config(const CommonOpts& opts) {
    sg::ExperimentConfig cfg;
    if (!opts.config_path.empty())
        cfg = sg::load_config(opts.config_path);
    else if (!opts.preset.empty())
        cfg = sg::preset_config(opts.preset);
    else
        throw sg::ConfigError("either --config or --preset is required");
    if (opts.seed_set) cfg.seed = opts.seed;
    if (opts.steps_override > 0) {
        const std::size_t total = cfg.total_steps();
        if (total == 0) throw sg::ConfigError("cannot override steps of an empty run");
        std::size_t assigned = 0;
        for (std::size_t i = 0; i < cfg.phases.size(); ++i) {
            if (i + 1 == cfg.phases.size()) {
                cfg.phases[i].steps = opts.steps_override - assigned;
            } else {
                cfg.phases[i].steps = opts.steps_override * cfg.phases[i].steps / total;
                assigned += cfg.phases[i].steps;
            }
        }
    }
    return cfg;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t next = text.find(',', pos);
        if (next == std::string::npos) next = text.size();
        seeds.push_back(std::stoull(text.substr(pos, next - pos)));
        pos = next + 1;
    }
    if (seeds.empty()) throw sg::ConfigError("empty seed list");
    return seeds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"StableGrad PINN training and diagnostics harness"};
    app.require_subcommand(1);

    CommonOpts train_opts, diag_opts, lrc_opts, sweep_opts;
    auto* train_cmd = app.add_subcommand("train", "train a network on one config");
    add_common(train_cmd, train_opts);

    auto* diag_cmd =
        app.add_subcommand("diagnose", "train with periodic kernel diagnostics");
    add_common(diag_cmd, diag_opts);

    std::string panel = "fan_in";
    std::size_t sf_depth = 20, sf_width = 64;
    std::string sf_act = "tanh", sf_fan = "fan_in", sf_pre = "none";
    std::uint64_t sf_seed = 1;
    std::string sf_out = "run";
    auto* sf_cmd = app.add_subcommand("scaleflow", "per-layer forward/backward scale probe");
    sf_cmd->add_option("--panel", panel, "panel name used in the output filename");
    sf_cmd->add_option("--depth", sf_depth, "hidden depth");
    sf_cmd->add_option("--width", sf_width, "hidden width");
    sf_cmd->add_option("--activation", sf_act, "tanh | silu | identity");
    sf_cmd->add_option("--fan", sf_fan, "fan_in | fan_out");
    sf_cmd->add_option("--preprocessor", sf_pre, "none | stablegrad | sign");
    sf_cmd->add_option("--seed", sf_seed, "RNG seed");
    sf_cmd->add_option("--out", sf_out, "output directory");

    auto* lrc_cmd = app.add_subcommand(
        "lr-control", "plain vs boosted-schedule vs rescaled three-arm comparison");
    add_common(lrc_cmd, lrc_opts);
    std::string multiplier_csv;
    lrc_cmd->add_option("--multipliers", multiplier_csv,
                        "comma-separated multiplier list (default: built-in table)");

    std::string ref_problem = "burgers";
    double ref_nu = 0.05;
    std::size_t ref_points = 10'000;
    std::string ref_out = "reference.sgf";
    auto* ref_cmd = app.add_subcommand("export-ref", "write a reference solution grid");
    ref_cmd->add_option("--problem", ref_problem, "burgers | poisson | helmholtz");
    ref_cmd->add_option("--nu", ref_nu, "Burgers viscosity");
    ref_cmd->add_option("--points", ref_points, "approximate grid point budget");
    ref_cmd->add_option("--out", ref_out, "output file path");

    auto* sweep_cmd = app.add_subcommand("seed-sweep", "repeat a run over several seeds");
    add_common(sweep_cmd, sweep_opts);
    std::string seed_list = "1,2,3";
    sweep_cmd->add_option("--seeds", seed_list, "comma-separated seed list");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) {
            auto oc = sg::run_train(resolve_config(train_opts), train_opts.out_dir);
            if (oc.exit_code != 0)
                std::cerr << "numeric abort: " << oc.result.abort_reason << "\n";
            return oc.exit_code;
        }
        if (diag_cmd->parsed()) {
            auto oc = sg::run_diagnose(resolve_config(diag_opts), diag_opts.out_dir);
            if (oc.exit_code != 0)
                std::cerr << "numeric abort: " << oc.result.abort_reason << "\n";
            return oc.exit_code;
        }
        if (sf_cmd->parsed()) {
            sg::run_scaleflow(panel, sf_depth, sf_width, sg::act_kind_from_string(sf_act),
                              sf_fan == "fan_out" ? sg::FanMode::FanOut : sg::FanMode::FanIn,
                              sg::grad_transform_from_string(sf_pre), sf_seed, sf_out);
            return 0;
        }
        if (lrc_cmd->parsed()) {
            std::vector<double> mult = sg::lr_control_multipliers();
            if (!multiplier_csv.empty()) {
                mult.clear();
                std::size_t pos = 0;
                while (pos < multiplier_csv.size()) {
                    std::size_t next = multiplier_csv.find(',', pos);
                    if (next == std::string::npos) next = multiplier_csv.size();
                    mult.push_back(std::stod(multiplier_csv.substr(pos, next - pos)));
                    pos = next + 1;
                }
            }
            auto rep = sg::run_lr_control(resolve_config(lrc_opts), mult, lrc_opts.out_dir);
            return rep.exit_code;
        }
        if (ref_cmd->parsed()) {
            sg::ProblemSpec spec;
            if (ref_problem == "burgers")
                spec = sg::ProblemSpec::burgers(ref_nu);
            else if (ref_problem == "poisson")
                spec = sg::ProblemSpec::poisson();
            else if (ref_problem == "helmholtz")
                spec = sg::ProblemSpec::helmholtz();
            else
                throw sg::ConfigError("unknown problem '" + ref_problem + "'");
            sg::export_reference(spec, ref_points, ref_out);
            return 0;
        }
        if (sweep_cmd->parsed()) {
            auto sum = sg::run_seed_sweep(resolve_config(sweep_opts),
                                          parse_seed_list(seed_list), sweep_opts.out_dir);
            return sum.exit_code;
        }
    } catch (const sg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const sg::OverflowError& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "regime_q/config.hpp"
#include "regime_q/experiment.hpp"

using namespace regime_q;

int main(int argc, char** argv) {
    CLI::App app{"regime-switching q-learning experiments"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "train on a preset, config file or manifest");
    std::string preset_name, config_path, manifest_path, out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> iters;
    bool svg = false;
    auto* src = run->add_option_group("source");
    src->add_option("--preset", preset_name, "emv_p1 or emv_p2");
    src->add_option("--config", config_path, "TOML-style config file");
    src->add_option("--manifest", manifest_path, "manifest.json of an earlier run");
    src->require_option(1);
    run->add_option("--seed", seed, "override the seed");
    run->add_option("--iters", iters, "override the iteration count");
    run->add_option("--out", out_dir, "output directory")->capture_default_str();
    run->add_flag("--svg", svg, "also write convergence.svg");

    auto* ver = app.add_subcommand("verify", "run the oracle battery");
    std::string level = "fast";
    ver->add_option("--level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}))->capture_default_str();

    auto* pc = app.add_subcommand("print-config", "print a preset in config-file form");
    std::string pc_name;
    pc->add_option("--preset", pc_name, "emv_p1 or emv_p2")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            LearningConfig c;
            if (!preset_name.empty()) c = preset(preset_name);
            else if (!config_path.empty()) c = load_config(config_path);
            else c = config_from_manifest(manifest_path);
            if (seed) c.seed = *seed;
            if (iters) c.n_iters = *iters;
            validate(c);
            return run_experiment(c, RunOptions{out_dir, svg});
        }
        if (*ver) {
            const auto results = verify_suite(level == "full" ? VerifyLevel::full : VerifyLevel::fast);
            const bool ok = all_passed(results);
            std::cout << (ok ? "verify: all items passed\n" : "verify: FAILURES\n");
            return ok ? 0 : 1;
        }
        if (*pc) {
            std::cout << serialize(preset(pc_name));
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

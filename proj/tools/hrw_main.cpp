// Batch experiment runner for hierarchical random-walk analytics.
//
//   hrw <experiment> --config cfg.json [--out DIR] [--seed S] [--threads K]
//   hrw validate --config cfg.json

#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>

#include "hrw/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"hierarchical random walk laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    hrw::cli::Options opts;
    std::uint64_t seed = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--out", opts.out_dir, "output directory (default ./out)");
        auto* s = sub->add_option("--seed", seed, "seed override");
        sub->add_option("--threads", opts.threads, "worker threads (0 = auto)");
        sub->add_flag("--quiet", opts.quiet, "suppress the summary line");
        sub->parse_complete_callback([&, s]() { seed_set = s->count() > 0; });
    };

    for (const auto& name : hrw::cli::experiment_names()) add_common(app.add_subcommand(name));
    auto* val = app.add_subcommand("validate", "check a config without running it");
    val->add_option("--config", config_path, "experiment config (JSON)")->required();

    CLI11_PARSE(app, argc, argv);

    const auto* sub = app.get_subcommands().front();
    if (sub->get_name() == "validate") {
        nlohmann::json config;
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "config error: cannot open " << config_path << '\n';
            return hrw::cli::kExitValidation;
        }
        try {
            in >> config;
        } catch (const std::exception& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return hrw::cli::kExitValidation;
        }
        const auto diags = hrw::cli::validate(config);
        for (const auto& d : diags) std::cout << d << '\n';
        return diags.empty() ? hrw::cli::kExitOk : hrw::cli::kExitValidation;
    }

    if (seed_set) opts.seed_override = seed;
    return hrw::cli::run_file(config_path, sub->get_name(), opts);
}

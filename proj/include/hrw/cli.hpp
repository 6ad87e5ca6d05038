#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hrw::cli {

// Exit codes of the batch runner.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitCertificate = 3; // indeterminate numerical certificate
inline constexpr int kExitSolver = 4;

struct Options {
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed_override;
    unsigned threads = 0;
    bool quiet = false;
};

// Known experiment names.
const std::vector<std::string>& experiment_names();

// Schema and cross-field diagnostics; empty means runnable. Never throws on
// content problems, only reports them.
std::vector<std::string> validate(const nlohmann::json& config);

// Executes one experiment described by `config` (already parsed JSON) and
// writes its artifacts atomically under opts.out_dir.
int run(const nlohmann::json& config, const Options& opts);

// Convenience: load a config file, check the experiment subcommand matches,
// validate and run.
int run_file(const std::string& config_path, const std::string& experiment, const Options& opts);

} // namespace hrw::cli

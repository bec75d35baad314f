#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "stamp/eval.hpp"
#include "stamp/experiment.hpp"
#include "stamp/model.hpp"
#include "stamp/synth.hpp"
#include "stamp/train_config.hpp"

namespace stamp {

// Command-line overrides; every set field beats the config file.
struct FlagOverrides {
    std::optional<std::string> model_kind;
    std::optional<std::int64_t> seed;
    std::optional<int> patterns;
    std::optional<double> lambda;
    std::optional<int> epochs;
    std::optional<std::string> manifest;
    std::optional<std::string> out_dir;
    std::optional<std::string> checkpoint;
    std::optional<std::string> split;
    std::optional<unsigned> threads;
};

// Fully resolved run configuration for every workflow.
struct RunConfig {
    std::string model_kind = "stamp";
    ModelConfig model;
    TrainConfig train;
    SynthConfig synth;
    AblationGrid ablation;
    double eval_threshold = 0.5;
    Averaging eval_averaging = Averaging::macro;
    std::vector<std::int64_t> seeds = {0, 1, 2, 3, 4, 5};
    unsigned threads = 0; // 0 = hardware concurrency
    std::string manifest;
    std::string out_dir = "out";
    std::string checkpoint;
    std::string split = "test";

    EvalOptions eval_options() const {
        EvalOptions e;
        e.threshold = eval_threshold;
        e.averaging = eval_averaging;
        return e;
    }
    void validate() const;
};

// Defaults -> JSON file (when given) -> STAMP_OUT env var -> flags. The file
// must be a JSON object; unknown keys anywhere are ConfigErrors naming the
// key. Every constraint is checked before returning.
RunConfig parse_config(const std::optional<std::filesystem::path>& file,
                       const FlagOverrides& flags = {});

// Same, from an in-memory JSON string (used by tests).
RunConfig parse_config_string(const std::string& json_text,
                              const FlagOverrides& flags = {});

// Canonical JSON dump of the resolved config (sorted keys).
std::string config_to_json_string(const RunConfig& cfg);

// FNV-1a over the canonical dump; stable across runs on one platform.
std::uint64_t config_hash(const RunConfig& cfg);

// Writes out_dir/run.json with the command, resolved config and its hash.
void write_run_json(const RunConfig& cfg, const std::string& command,
                    const std::filesystem::path& out_dir);

} // namespace stamp

#include "stamp/config.hpp"

#include <cstdlib>
#include <fstream>

#include "stamp/errors.hpp"
#include "serde.hpp"

namespace stamp {

using nlohmann::json;

void RunConfig::validate() const {
    model.validate();
    train.validate();
    synth.validate();
    ablation.validate();
    if (!(eval_threshold > 0.0 && eval_threshold < 1.0))
        throw ConfigError("eval.threshold must be in (0,1)");
    if (seeds.empty()) throw ConfigError("seeds must not be empty");
    if (model_kind != "stamp" && model_kind != "maxpool" && model_kind != "meanpool" &&
        model_kind != "abmil")
        throw ConfigError("model_kind must be stamp, maxpool, meanpool or abmil, got '" +
                          model_kind + "'");
    if (split != "train" && split != "val" && split != "test")
        throw ConfigError("split must be train, val or test, got '" + split + "'");
}

namespace {

AblationGrid ablation_from_json(const json& j) {
    static const char* allowed[] = {"pattern_counts", "branch_modes", "embed_variants",
                                    "agg_modes", "seeds"};
    reject_unknown_keys(j, allowed, std::size(allowed), "ablation.");
    AblationGrid g;
    try {
        if (j.contains("pattern_counts"))
            g.pattern_counts = j.at("pattern_counts").get<std::vector<int>>();
        if (j.contains("seeds")) g.seeds = j.at("seeds").get<std::vector<std::int64_t>>();
        if (j.contains("branch_modes")) {
            g.branch_modes.clear();
            for (const auto& s : j.at("branch_modes"))
                g.branch_modes.push_back(branch_mode_from_name(s.get<std::string>()));
        }
        if (j.contains("embed_variants")) {
            g.embed_variants.clear();
            for (const auto& s : j.at("embed_variants"))
                g.embed_variants.push_back(embed_variant_from_name(s.get<std::string>()));
        }
        if (j.contains("agg_modes")) {
            g.agg_modes.clear();
            for (const auto& s : j.at("agg_modes"))
                g.agg_modes.push_back(agg_mode_from_name(s.get<std::string>()));
        }
    } catch (const json::exception&) {
        throw ConfigError("ablation section has a value of the wrong type");
    }
    return g;
}

json ablation_to_json(const AblationGrid& g) {
    json j;
    j["pattern_counts"] = g.pattern_counts;
    j["seeds"] = g.seeds;
    j["branch_modes"] = json::array();
    for (auto b : g.branch_modes) j["branch_modes"].push_back(branch_mode_name(b));
    j["embed_variants"] = json::array();
    for (auto v : g.embed_variants) j["embed_variants"].push_back(embed_variant_name(v));
    j["agg_modes"] = json::array();
    for (auto a : g.agg_modes) j["agg_modes"].push_back(agg_mode_name(a));
    return j;
}

RunConfig from_json_object(const json& j) {
    static const char* allowed[] = {"model_kind", "model", "train",  "synth",  "ablation",
                                    "eval",       "paths", "seeds",  "threads"};
    reject_unknown_keys(j, allowed, std::size(allowed), "");

    RunConfig cfg;
    try {
        if (j.contains("model_kind")) cfg.model_kind = j.at("model_kind").get<std::string>();
        if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::int64_t>>();
        if (j.contains("threads")) cfg.threads = j.at("threads").get<unsigned>();
    } catch (const json::exception&) {
        throw ConfigError("config key 'model_kind', 'seeds' or 'threads' has the wrong type");
    }
    if (j.contains("model")) cfg.model = model_config_from_json(j.at("model"));
    if (j.contains("train")) cfg.train = train_config_from_json(j.at("train"));
    if (j.contains("synth")) cfg.synth = synth_config_from_json(j.at("synth"));
    if (j.contains("ablation")) cfg.ablation = ablation_from_json(j.at("ablation"));
    if (j.contains("eval")) {
        static const char* eval_keys[] = {"threshold", "averaging"};
        const auto& e = j.at("eval");
        reject_unknown_keys(e, eval_keys, std::size(eval_keys), "eval.");
        try {
            if (e.contains("threshold")) cfg.eval_threshold = e.at("threshold").get<double>();
            if (e.contains("averaging"))
                cfg.eval_averaging = averaging_from_name(e.at("averaging").get<std::string>());
        } catch (const json::exception&) {
            throw ConfigError("eval section has a value of the wrong type");
        }
    }
    if (j.contains("paths")) {
        static const char* path_keys[] = {"manifest", "out_dir", "checkpoint"};
        const auto& p = j.at("paths");
        reject_unknown_keys(p, path_keys, std::size(path_keys), "paths.");
        try {
            if (p.contains("manifest")) cfg.manifest = p.at("manifest").get<std::string>();
            if (p.contains("out_dir")) cfg.out_dir = p.at("out_dir").get<std::string>();
            if (p.contains("checkpoint"))
                cfg.checkpoint = p.at("checkpoint").get<std::string>();
        } catch (const json::exception&) {
            throw ConfigError("paths section has a value of the wrong type");
        }
    }
    return cfg;
}

void apply_flags(RunConfig& cfg, const FlagOverrides& flags) {
    if (const char* env_out = std::getenv("STAMP_OUT"); env_out && *env_out)
        cfg.out_dir = env_out;
    if (flags.model_kind) cfg.model_kind = *flags.model_kind;
    if (flags.seed) {
        cfg.train.seed = static_cast<std::uint64_t>(*flags.seed);
        cfg.seeds = {*flags.seed};
    }
    if (flags.patterns) cfg.model.patterns = *flags.patterns;
    if (flags.lambda) cfg.train.lambda = *flags.lambda;
    if (flags.epochs) cfg.train.epochs = *flags.epochs;
    if (flags.manifest) cfg.manifest = *flags.manifest;
    if (flags.out_dir) cfg.out_dir = *flags.out_dir;
    if (flags.checkpoint) cfg.checkpoint = *flags.checkpoint;
    if (flags.split) cfg.split = *flags.split;
    if (flags.threads) cfg.threads = *flags.threads;
}

} // namespace

RunConfig parse_config_string(const std::string& json_text, const FlagOverrides& flags) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    RunConfig cfg = from_json_object(j);
    apply_flags(cfg, flags);
    cfg.validate();
    return cfg;
}

RunConfig parse_config(const std::optional<std::filesystem::path>& file,
                       const FlagOverrides& flags) {
    if (!file) {
        RunConfig cfg;
        apply_flags(cfg, flags);
        cfg.validate();
        return cfg;
    }
    std::ifstream is(*file);
    if (!is) throw ConfigError("cannot open config file '" + file->string() + "'");
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        // An empty config file means "all defaults".
        RunConfig cfg;
        apply_flags(cfg, flags);
        cfg.validate();
        return cfg;
    }
    return parse_config_string(text, flags);
}

std::string config_to_json_string(const RunConfig& cfg) {
    json j;
    j["model_kind"] = cfg.model_kind;
    j["model"] = model_config_to_json(cfg.model);
    j["train"] = train_config_to_json(cfg.train);
    j["synth"] = synth_config_to_json(cfg.synth);
    j["ablation"] = ablation_to_json(cfg.ablation);
    j["eval"] = {{"threshold", cfg.eval_threshold},
                 {"averaging", averaging_name(cfg.eval_averaging)}};
    j["paths"] = {{"manifest", cfg.manifest},
                  {"out_dir", cfg.out_dir},
                  {"checkpoint", cfg.checkpoint}};
    j["seeds"] = cfg.seeds;
    j["threads"] = cfg.threads;
    return j.dump(2);
}

std::uint64_t config_hash(const RunConfig& cfg) {
    const std::string s = config_to_json_string(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void write_run_json(const RunConfig& cfg, const std::string& command,
                    const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    json j;
    j["command"] = command;
    j["config"] = json::parse(config_to_json_string(cfg));
    char hex[19];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    j["config_hash"] = hex;
    std::ofstream os(out_dir / "run.json", std::ios::trunc);
    if (!os) throw FormatError("cannot write run.json in '" + out_dir.string() + "'");
    os << j.dump(2) << '\n';
}

} // namespace stamp

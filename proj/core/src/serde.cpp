#include "serde.hpp"

#include "stamp/errors.hpp"

namespace stamp {

using nlohmann::json;

namespace {

// Typed getter that reports the key on a type mismatch.
template <typename T>
void get_if(const json& j, const char* key, T& out, const std::string& scope) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + scope + key + "' has the wrong type");
    }
}

template <typename Fn>
void get_enum(const json& j, const char* key, const std::string& scope, Fn&& apply) {
    auto it = j.find(key);
    if (it == j.end()) return;
    if (!it->is_string())
        throw ConfigError("config key '" + scope + key + "' must be a string");
    apply(it->get<std::string>());
}

} // namespace

void reject_unknown_keys(const json& j, const char* const* allowed, size_t count,
                         const std::string& scope) {
    if (!j.is_object()) throw ConfigError("config section '" + scope + "' must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (size_t i = 0; i < count; ++i)
            if (it.key() == allowed[i]) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("unknown config key '" + scope + it.key() + "'");
    }
}

json model_config_to_json(const ModelConfig& c) {
    return json{{"input_dim", c.input_dim},
                {"hidden_dim", c.hidden_dim},
                {"patterns", c.patterns},
                {"attn_dim", c.attn_dim},
                {"heads", c.heads},
                {"ff_mult", c.ff_mult},
                {"branch_mode", branch_mode_name(c.branch_mode)},
                {"embed_variant", embed_variant_name(c.embed_variant)},
                {"agg_mode", agg_mode_name(c.agg_mode)},
                {"pa_level", pa_level_name(c.pa_level)},
                {"attention_mode", attention_mode_name(c.attention_mode)},
                {"nystrom_landmarks", c.nystrom_landmarks},
                {"nystrom_pinv_iters", c.nystrom_pinv_iters}};
}

ModelConfig model_config_from_json(const json& j) {
    static const char* allowed[] = {
        "input_dim", "hidden_dim",    "patterns",       "attn_dim",
        "heads",     "ff_mult",       "branch_mode",    "embed_variant",
        "agg_mode",  "pa_level",      "attention_mode", "nystrom_landmarks",
        "nystrom_pinv_iters"};
    reject_unknown_keys(j, allowed, std::size(allowed), "model.");
    ModelConfig c;
    get_if(j, "input_dim", c.input_dim, "model.");
    get_if(j, "hidden_dim", c.hidden_dim, "model.");
    get_if(j, "patterns", c.patterns, "model.");
    get_if(j, "attn_dim", c.attn_dim, "model.");
    get_if(j, "heads", c.heads, "model.");
    get_if(j, "ff_mult", c.ff_mult, "model.");
    get_enum(j, "branch_mode", "model.",
             [&](const std::string& s) { c.branch_mode = branch_mode_from_name(s); });
    get_enum(j, "embed_variant", "model.",
             [&](const std::string& s) { c.embed_variant = embed_variant_from_name(s); });
    get_enum(j, "agg_mode", "model.",
             [&](const std::string& s) { c.agg_mode = agg_mode_from_name(s); });
    get_enum(j, "pa_level", "model.",
             [&](const std::string& s) { c.pa_level = pa_level_from_name(s); });
    get_enum(j, "attention_mode", "model.",
             [&](const std::string& s) { c.attention_mode = attention_mode_from_name(s); });
    get_if(j, "nystrom_landmarks", c.nystrom_landmarks, "model.");
    get_if(j, "nystrom_pinv_iters", c.nystrom_pinv_iters, "model.");
    return c;
}

json train_config_to_json(const TrainConfig& c) {
    return json{{"epochs", c.epochs},
                {"lr0", c.lr0},
                {"lr_min", c.lr_min},
                {"weight_decay", c.weight_decay},
                {"lambda", c.lambda},
                {"seed", c.seed},
                {"lookahead_k", c.lookahead_k},
                {"lookahead_alpha", c.lookahead_alpha},
                {"beta1", c.beta1},
                {"beta2", c.beta2},
                {"eps", c.eps},
                {"class_weighted", c.class_weighted}};
}

TrainConfig train_config_from_json(const json& j) {
    static const char* allowed[] = {"epochs",      "lr0",           "lr_min",
                                    "weight_decay", "lambda",       "seed",
                                    "lookahead_k", "lookahead_alpha", "beta1",
                                    "beta2",       "eps",           "class_weighted"};
    reject_unknown_keys(j, allowed, std::size(allowed), "train.");
    TrainConfig c;
    get_if(j, "epochs", c.epochs, "train.");
    get_if(j, "lr0", c.lr0, "train.");
    get_if(j, "lr_min", c.lr_min, "train.");
    get_if(j, "weight_decay", c.weight_decay, "train.");
    get_if(j, "lambda", c.lambda, "train.");
    get_if(j, "seed", c.seed, "train.");
    get_if(j, "lookahead_k", c.lookahead_k, "train.");
    get_if(j, "lookahead_alpha", c.lookahead_alpha, "train.");
    get_if(j, "beta1", c.beta1, "train.");
    get_if(j, "beta2", c.beta2, "train.");
    get_if(j, "eps", c.eps, "train.");
    get_if(j, "class_weighted", c.class_weighted, "train.");
    return c;
}

json synth_config_to_json(const SynthConfig& c) {
    return json{{"train_bags_per_class", c.train_bags_per_class},
                {"val_bags_per_class", c.val_bags_per_class},
                {"test_bags_per_class", c.test_bags_per_class},
                {"min_instances", c.min_instances},
                {"max_instances", c.max_instances},
                {"feature_dim", c.feature_dim},
                {"motif_count", c.motif_count},
                {"witness_rate_min", c.witness_rate_min},
                {"witness_rate_max", c.witness_rate_max},
                {"motif_separation", c.motif_separation},
                {"motif_stddev", c.motif_stddev},
                {"seed", c.seed}};
}

SynthConfig synth_config_from_json(const json& j) {
    static const char* allowed[] = {
        "train_bags_per_class", "val_bags_per_class", "test_bags_per_class",
        "min_instances",        "max_instances",      "feature_dim",
        "motif_count",          "witness_rate_min",   "witness_rate_max",
        "motif_separation",     "motif_stddev",       "seed"};
    reject_unknown_keys(j, allowed, std::size(allowed), "synth.");
    SynthConfig c;
    get_if(j, "train_bags_per_class", c.train_bags_per_class, "synth.");
    get_if(j, "val_bags_per_class", c.val_bags_per_class, "synth.");
    get_if(j, "test_bags_per_class", c.test_bags_per_class, "synth.");
    get_if(j, "min_instances", c.min_instances, "synth.");
    get_if(j, "max_instances", c.max_instances, "synth.");
    get_if(j, "feature_dim", c.feature_dim, "synth.");
    get_if(j, "motif_count", c.motif_count, "synth.");
    get_if(j, "witness_rate_min", c.witness_rate_min, "synth.");
    get_if(j, "witness_rate_max", c.witness_rate_max, "synth.");
    get_if(j, "motif_separation", c.motif_separation, "synth.");
    get_if(j, "motif_stddev", c.motif_stddev, "synth.");
    get_if(j, "seed", c.seed, "synth.");
    return c;
}

json metrics_record_to_json(const MetricsRecord& r) {
    return json{{"acc", r.acc},
                {"auc", r.auc},
                {"precision", r.precision},
                {"recall", r.recall},
                {"f1", r.f1},
                {"averaging", averaging_name(r.averaging)},
                {"threshold", r.threshold},
                {"seed", r.seed},
                {"split", r.split},
                {"tag", r.tag},
                {"n_pos", r.n_pos},
                {"n_neg", r.n_neg}};
}

MetricsRecord metrics_record_from_json(const json& j) {
    MetricsRecord r;
    get_if(j, "acc", r.acc, "");
    get_if(j, "auc", r.auc, "");
    get_if(j, "precision", r.precision, "");
    get_if(j, "recall", r.recall, "");
    get_if(j, "f1", r.f1, "");
    get_enum(j, "averaging", "",
             [&](const std::string& s) { r.averaging = averaging_from_name(s); });
    get_if(j, "threshold", r.threshold, "");
    get_if(j, "seed", r.seed, "");
    get_if(j, "split", r.split, "");
    get_if(j, "tag", r.tag, "");
    get_if(j, "n_pos", r.n_pos, "");
    get_if(j, "n_neg", r.n_neg, "");
    return r;
}

} // namespace stamp

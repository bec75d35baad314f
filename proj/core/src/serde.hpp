#pragma once

// Private JSON bridges for configs and records (nlohmann). Kept out of the
// public headers so installed headers do not depend on the vendored json.

#include <json.hpp>

#include "stamp/metrics.hpp"
#include "stamp/model.hpp"
#include "stamp/synth.hpp"
#include "stamp/train_config.hpp"

namespace stamp {

nlohmann::json model_config_to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json synth_config_to_json(const SynthConfig& c);
SynthConfig synth_config_from_json(const nlohmann::json& j);

nlohmann::json metrics_record_to_json(const MetricsRecord& r);
MetricsRecord metrics_record_from_json(const nlohmann::json& j);

// Throws ConfigError naming the offending key when j holds a key outside
// `allowed`, or when a value has the wrong JSON type for its target field.
void reject_unknown_keys(const nlohmann::json& j, const char* const* allowed,
                         size_t count, const std::string& scope);

} // namespace stamp

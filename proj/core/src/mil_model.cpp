#include "stamp/mil_model.hpp"

#include "stamp/errors.hpp"

namespace stamp {

std::unique_ptr<MilModel> make_model(const std::string& kind, const ModelConfig& cfg,
                                     std::uint64_t seed) {
    if (kind == "stamp") return std::make_unique<StampModel>(cfg, seed);
    if (kind == "maxpool")
        return std::make_unique<BaselineModel>(BaselineKind::maxpool, cfg, seed);
    if (kind == "meanpool")
        return std::make_unique<BaselineModel>(BaselineKind::meanpool, cfg, seed);
    if (kind == "abmil")
        return std::make_unique<BaselineModel>(BaselineKind::abmil, cfg, seed);
    throw ConfigError("unknown model kind '" + kind +
                      "' (expected stamp, maxpool, meanpool or abmil)");
}

} // namespace stamp

#pragma once

#include <string>
#include <vector>

#include "stamp/bag.hpp"
#include "stamp/metrics.hpp"
#include "stamp/mil_model.hpp"

namespace stamp {

struct EvalOptions {
    double threshold = 0.5;
    Averaging averaging = Averaging::macro;
    std::string split = "test";
    std::int64_t seed = 0;  // provenance only
    std::string tag;        // provenance only; defaults to the model kind
};

struct EvalResult {
    MetricsRecord record;
    std::vector<BagScore> scores; // one per bag, positive-class probability
};

// Scores every bag once and computes the full metric suite.
EvalResult evaluate(MilModel& model, const std::vector<InstanceBag>& bags,
                    const EvalOptions& opts = {});

// Mean over bags of the pairwise positive-part cosine among pattern-summary
// rows; measures redundancy between learned patterns. Models without a
// pattern summary yield 0.
double pattern_redundancy(MilModel& model, const std::vector<InstanceBag>& bags);

} // namespace stamp

#include "stamp/eval.hpp"

#include "stamp/errors.hpp"
#include "stamp/losses.hpp"

namespace stamp {

EvalResult evaluate(MilModel& model, const std::vector<InstanceBag>& bags,
                    const EvalOptions& opts) {
    if (bags.empty()) throw ValueError("evaluate: no bags in split '" + opts.split + "'");
    EvalResult out;
    out.scores.reserve(bags.size());
    for (const auto& bag : bags) {
        const auto pred = model.predict(bag.features);
        out.scores.push_back(
            BagScore{bag.bag_id, bag.label, static_cast<double>(pred.probs(0, 1))});
    }
    out.record = metrics_from_scores(out.scores, opts.threshold, opts.averaging);
    out.record.split = opts.split;
    out.record.seed = opts.seed;
    out.record.tag = opts.tag.empty() ? model.kind() : opts.tag;
    return out;
}

double pattern_redundancy(MilModel& model, const std::vector<InstanceBag>& bags) {
    if (bags.empty()) throw ValueError("pattern_redundancy: no bags");
    double sum = 0.0;
    for (const auto& bag : bags) {
        const MatF H = model.pattern_summary(bag.features);
        if (H.size() == 0) continue;
        sum += similarity_loss(H);
    }
    return sum / static_cast<double>(bags.size());
}

} // namespace stamp

#include "stamp/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include <memory>

#include "stamp/baselines.hpp"
#include "stamp/errors.hpp"

namespace stamp {

namespace {

using Clock = std::chrono::steady_clock;

struct Problem {
    std::vector<std::pair<std::string, Mat<double>*>> tensors;
    std::function<double()> loss;                       // forward only
    std::function<std::map<std::string, Mat<double>>()> analytic; // forward + backward
};

GradCheckReport run_check(Problem& prob, const GradCheckOptions& opts) {
    const auto t0 = Clock::now();
    GradCheckReport report;
    report.tolerance = opts.tolerance;
    report.fd_step = opts.fd_step;

    const auto grads = prob.analytic();
    const double h = opts.fd_step;
    for (auto& [name, tensor] : prob.tensors) {
        const auto it = grads.find(name);
        if (it == grads.end()) throw ValueError("gradcheck: no gradient for '" + name + "'");
        const Mat<double>& g = it->second;
        GradCheckEntry entry{name, tensor->rows(), tensor->cols(), 0.0};
        for (Eigen::Index r = 0; r < tensor->rows(); ++r)
            for (Eigen::Index c = 0; c < tensor->cols(); ++c) {
                const double saved = (*tensor)(r, c);
                (*tensor)(r, c) = saved + h;
                const double lp = prob.loss();
                (*tensor)(r, c) = saved - h;
                const double lm = prob.loss();
                (*tensor)(r, c) = saved;
                const double fd = (lp - lm) / (2.0 * h);
                const double a = g(r, c);
                const double denom = std::max({std::abs(a), std::abs(fd), 1e-6});
                entry.max_rel_err = std::max(entry.max_rel_err, std::abs(a - fd) / denom);
            }
        report.entries.push_back(std::move(entry));
    }
    report.passed = report.max_rel_err() < opts.tolerance;
    report.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return report;
}

} // namespace

GradCheckReport gradient_check(const GradCheckOptions& opts) {
    opts.model.validate();
    if (opts.instances < 1) throw ValueError("gradcheck: instances must be >= 1");
    if (opts.label != 0 && opts.label != 1)
        throw ValueError("gradcheck: label must be 0 or 1");

    Rng rng(mix_seed(opts.seed));
    const Mat<double> features = randn<double>(opts.instances, opts.model.input_dim, 1.0, rng);

    Problem prob;
    if (opts.model_kind == "stamp") {
        auto params = std::make_shared<ModelParams<double>>(
            init_model<double>(opts.model, opts.seed));
        const double lambda = opts.lambda;
        auto build = [params, features, lambda, cfg = opts.model,
                      label = opts.label](Tape<double>& t) {
            return build_stamp_loss<double>(t, features, label, lambda, 1.0, *params, cfg);
        };
        visit_tensors(*params, [&](const std::string& n, Mat<double>& m) {
            prob.tensors.emplace_back(n, &m);
        });
        prob.loss = [build]() {
            Tape<double> t;
            return t.scalar(build(t).total);
        };
        prob.analytic = [build]() {
            Tape<double> t;
            const auto lg = build(t);
            t.backward(lg.total);
            std::map<std::string, Mat<double>> grads;
            for (const auto& [name, node] : lg.fwd.param_nodes)
                grads.emplace(name, t.grad(node));
            return grads;
        };
    } else {
        BaselineKind kind;
        if (opts.model_kind == "maxpool") kind = BaselineKind::maxpool;
        else if (opts.model_kind == "meanpool") kind = BaselineKind::meanpool;
        else if (opts.model_kind == "abmil") kind = BaselineKind::abmil;
        else throw ConfigError("gradcheck: unknown model kind '" + opts.model_kind + "'");

        auto params = std::make_shared<BaselineParams<double>>(
            init_baseline<double>(kind, opts.model, opts.seed));
        auto build = [params, features, kind, cfg = opts.model,
                      label = opts.label](Tape<double>& t) {
            auto g = build_baseline_graph<double>(t, kind, features, *params, cfg);
            struct { int total; std::vector<std::pair<std::string, int>> param_nodes; } out{
                t.pick_log_loss(g.probs, label, kProbFloor), std::move(g.param_nodes)};
            return out;
        };
        visit_tensors(*params, [&](const std::string& n, Mat<double>& m) {
            prob.tensors.emplace_back(n, &m);
        });
        prob.loss = [build]() {
            Tape<double> t;
            return t.scalar(build(t).total);
        };
        prob.analytic = [build]() {
            Tape<double> t;
            const auto lg = build(t);
            t.backward(lg.total);
            std::map<std::string, Mat<double>> grads;
            for (const auto& [name, node] : lg.param_nodes) grads.emplace(name, t.grad(node));
            return grads;
        };
    }
    return run_check(prob, opts);
}

} // namespace stamp

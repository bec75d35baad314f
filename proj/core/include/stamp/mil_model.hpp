#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "stamp/bag.hpp"
#include "stamp/baselines.hpp"
#include "stamp/model.hpp"

namespace stamp {

struct LossGraphInfo {
    int total = -1;
    int ce = -1;
    int sim = -1;              // -1 when the model has no pattern summary
    int pattern_summary = -1;  // -1 for baselines
    std::vector<std::pair<std::string, int>> param_nodes;
};

// Float-precision training/inference interface shared by STAMP and the
// baselines. Forward passes are pure; tensors are mutated only by the
// optimizer between steps.
class MilModel {
public:
    virtual ~MilModel() = default;

    virtual std::string kind() const = 0;
    virtual const ModelConfig& config() const = 0;
    // Stable name -> tensor view, in the same order build_loss emits nodes.
    virtual std::vector<std::pair<std::string, MatF*>> tensors() = 0;
    virtual LossGraphInfo build_loss(Tape<float>& tape, const MatF& features, int label,
                                     float lambda, float ce_weight) = 0;
    virtual Prediction<float> predict(const MatF& features) = 0;
    // Pattern summary H for one bag; empty matrix when not applicable.
    virtual MatF pattern_summary(const MatF& features) { (void)features; return {}; }

    Prediction<float> predict(const InstanceBag& bag) { return predict(bag.features); }
};

// kind is one of: stamp, maxpool, meanpool, abmil.
std::unique_ptr<MilModel> make_model(const std::string& kind, const ModelConfig& cfg,
                                     std::uint64_t seed);

class StampModel final : public MilModel {
public:
    StampModel(const ModelConfig& cfg, std::uint64_t seed)
        : cfg_(cfg), params_(init_model<float>(cfg, seed)) {}

    std::string kind() const override { return "stamp"; }
    const ModelConfig& config() const override { return cfg_; }

    std::vector<std::pair<std::string, MatF*>> tensors() override {
        std::vector<std::pair<std::string, MatF*>> out;
        visit_tensors(params_, [&](const std::string& n, MatF& m) {
            out.emplace_back(n, &m);
        });
        return out;
    }

    LossGraphInfo build_loss(Tape<float>& tape, const MatF& features, int label,
                             float lambda, float ce_weight) override {
        auto g = build_stamp_loss(tape, features, label, lambda, ce_weight, params_, cfg_);
        LossGraphInfo info;
        info.total = g.total;
        info.ce = g.ce;
        info.sim = g.sim;
        info.pattern_summary = g.fwd.pattern_summary;
        info.param_nodes = std::move(g.fwd.param_nodes);
        return info;
    }

    Prediction<float> predict(const MatF& features) override {
        return forward(features, params_, cfg_).pred;
    }

    MatF pattern_summary(const MatF& features) override {
        return forward(features, params_, cfg_).pattern_summary;
    }

    ModelParams<float>& params() { return params_; }

private:
    ModelConfig cfg_;
    ModelParams<float> params_;
};

class BaselineModel final : public MilModel {
public:
    BaselineModel(BaselineKind kind, const ModelConfig& cfg, std::uint64_t seed)
        : kind_(kind), cfg_(cfg), params_(init_baseline<float>(kind, cfg, seed)) {}

    std::string kind() const override { return baseline_name(kind_); }
    const ModelConfig& config() const override { return cfg_; }

    std::vector<std::pair<std::string, MatF*>> tensors() override {
        std::vector<std::pair<std::string, MatF*>> out;
        visit_tensors(params_, [&](const std::string& n, MatF& m) {
            out.emplace_back(n, &m);
        });
        return out;
    }

    // Baselines have no pattern summary; lambda is forced to 1 upstream and
    // the loss is plain (weighted) cross entropy.
    LossGraphInfo build_loss(Tape<float>& tape, const MatF& features, int label,
                             float /*lambda*/, float ce_weight) override {
        auto g = build_baseline_graph(tape, kind_, features, params_, cfg_);
        LossGraphInfo info;
        info.ce = tape.pick_log_loss(g.probs, label, float(kProbFloor));
        info.total = ce_weight == 1.0f ? info.ce : tape.scale(info.ce, ce_weight);
        info.param_nodes = std::move(g.param_nodes);
        return info;
    }

    Prediction<float> predict(const MatF& features) override {
        return baseline_forward(kind_, features, params_, cfg_);
    }

    BaselineParams<float>& params() { return params_; }
    BaselineKind baseline_kind() const { return kind_; }

private:
    BaselineKind kind_;
    ModelConfig cfg_;
    BaselineParams<float> params_;
};

} // namespace stamp

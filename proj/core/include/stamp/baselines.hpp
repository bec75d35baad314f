#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stamp/model.hpp"

namespace stamp {

enum class BaselineKind { maxpool, meanpool, abmil };

inline const char* baseline_name(BaselineKind k) {
    switch (k) {
        case BaselineKind::maxpool: return "maxpool";
        case BaselineKind::meanpool: return "meanpool";
        case BaselineKind::abmil: return "abmil";
    }
    return "?";
}

// Shared baseline parameterization: one instance projection plus a linear
// classifier head; ABMIL adds gated attention over the projected instances.
template <typename T>
struct BaselineParams {
    Mat<T> proj; // d x L
    std::optional<GatedAttnParams<T>> attn; // abmil only
    Mat<T> cls_w; // L x 2
    Mat<T> cls_b; // 1 x 2
};

template <typename T, typename Fn>
void visit_tensors(BaselineParams<T>& p, Fn&& fn) {
    fn("proj", p.proj);
    if (p.attn) {
        fn("attn.value_w", p.attn->value_w);
        fn("attn.gate_w", p.attn->gate_w);
        fn("attn.score_w", p.attn->score_w);
    }
    fn("cls.w", p.cls_w);
    fn("cls.b", p.cls_b);
}

template <typename T>
BaselineParams<T> init_baseline(BaselineKind kind, const ModelConfig& cfg,
                                std::uint64_t seed) {
    Rng rng(seed);
    const int L = cfg.hidden_dim;
    auto w = [&](int rows, int cols) {
        return randn<T>(rows, cols, 1.0 / std::sqrt(static_cast<double>(rows)), rng);
    };
    BaselineParams<T> p;
    p.proj = w(cfg.input_dim, L);
    if (kind == BaselineKind::abmil) {
        GatedAttnParams<T> g;
        g.value_w = w(L, cfg.attn_dim);
        g.gate_w = w(L, cfg.attn_dim);
        g.score_w = w(cfg.attn_dim, 1);
        p.attn = std::move(g);
    }
    p.cls_w = w(L, 2);
    p.cls_b = Mat<T>::Zero(1, 2);
    return p;
}

template <typename T>
struct BaselineGraph {
    int attention = -1; // 1 x n (meanpool/abmil); empty for maxpool
    int bag_repr = -1;  // 1 x L (meanpool/abmil); empty for maxpool
    int probs = -1;
    std::vector<std::pair<std::string, int>> param_nodes;
};

template <typename T>
BaselineGraph<T> build_baseline_graph(Tape<T>& t, BaselineKind kind,
                                      const Mat<T>& features, BaselineParams<T>& p,
                                      const ModelConfig& cfg) {
    if (features.rows() < 1) throw ValueError("forward: bag has no instances");
    if (features.cols() != cfg.input_dim)
        throw ShapeError("forward: features have d=" + std::to_string(features.cols()) +
                         " but the model expects d=" + std::to_string(cfg.input_dim));
    BaselineGraph<T> g;
    std::unordered_map<std::string, int> id;
    visit_tensors(p, [&](const std::string& name, Mat<T>& m) {
        const int node = t.param(m);
        id.emplace(name, node);
        g.param_nodes.emplace_back(name, node);
    });
    const int x = t.input(features);
    const int embed = t.relu(t.matmul(x, id.at("proj"))); // n x L
    const int cls_w = id.at("cls.w");
    const int cls_b = id.at("cls.b");

    switch (kind) {
        case BaselineKind::maxpool: {
            // Per-instance logits, element-wise max across instances.
            const int inst_logits = t.add_rowvec(t.matmul(embed, cls_w), cls_b);
            g.probs = t.softmax_rows(t.colwise_max(inst_logits));
            break;
        }
        case BaselineKind::meanpool: {
            g.bag_repr = t.mean_rows(embed);
            g.probs = build_classifier(t, g.bag_repr, cls_w, cls_b);
            break;
        }
        case BaselineKind::abmil: {
            const GatedAttnNodeIds ids{id.at("attn.value_w"), id.at("attn.gate_w"),
                                       id.at("attn.score_w")};
            auto [attn, pooled] = build_gated_attention(t, embed, ids);
            g.attention = attn;
            g.bag_repr = pooled;
            g.probs = build_classifier(t, pooled, cls_w, cls_b);
            break;
        }
    }
    return g;
}

// Gradient-free forwards. The attention field is uniform for meanpool, a
// one-hot at the instance with the top positive-class logit for maxpool, and
// the gated weights for abmil.
template <typename T>
Prediction<T> baseline_forward(BaselineKind kind, const Mat<T>& features,
                               BaselineParams<T>& params, const ModelConfig& cfg) {
    Tape<T> t;
    const auto g = build_baseline_graph(t, kind, features, params, cfg);
    Prediction<T> out;
    out.probs = t.value(g.probs);
    const Eigen::Index n = features.rows();
    if (g.attention >= 0) {
        out.attention = t.value(g.attention);
    } else if (kind == BaselineKind::meanpool) {
        out.attention = Mat<T>::Constant(1, n, T(1) / static_cast<T>(n));
    } else {
        // Maxpool: one-hot at the instance with the top positive-class logit.
        out.attention = Mat<T>::Zero(1, n);
        Mat<T> embed = (features * params.proj).cwiseMax(T(0));
        Mat<T> logits = embed * params.cls_w;
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i < n; ++i)
            if (logits(i, 1) > logits(best, 1)) best = i;
        out.attention(0, best) = T(1);
    }
    if (g.bag_repr >= 0) {
        out.bag_repr = t.value(g.bag_repr);
    } else {
        Mat<T> embed = (features * params.proj).cwiseMax(T(0));
        out.bag_repr = out.attention * embed;
    }
    return out;
}

template <typename T>
Prediction<T> max_pool_forward(const Mat<T>& features, BaselineParams<T>& params,
                               const ModelConfig& cfg) {
    return baseline_forward(BaselineKind::maxpool, features, params, cfg);
}

template <typename T>
Prediction<T> mean_pool_forward(const Mat<T>& features, BaselineParams<T>& params,
                                const ModelConfig& cfg) {
    return baseline_forward(BaselineKind::meanpool, features, params, cfg);
}

template <typename T>
Prediction<T> abmil_forward(const Mat<T>& features, BaselineParams<T>& params,
                            const ModelConfig& cfg) {
    return baseline_forward(BaselineKind::abmil, features, params, cfg);
}

} // namespace stamp

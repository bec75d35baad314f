#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stamp/errors.hpp"
#include "stamp/linalg.hpp"
#include "stamp/losses.hpp"
#include "stamp/tape.hpp"

namespace stamp {

enum class BranchMode { double_branch, head_only };
enum class EmbedVariant { joint_projection, token_append };
enum class AggMode { fa, pa }; // feature-level vs prediction-level aggregation
enum class AttentionMode { exact, nystrom };
enum class PaLevel { feature, probability };

inline const char* branch_mode_name(BranchMode m) {
    return m == BranchMode::double_branch ? "double" : "head_only";
}
inline BranchMode branch_mode_from_name(const std::string& s) {
    if (s == "double") return BranchMode::double_branch;
    if (s == "head_only") return BranchMode::head_only;
    throw ConfigError("branch_mode must be 'double' or 'head_only', got '" + s + "'");
}
inline const char* embed_variant_name(EmbedVariant v) {
    return v == EmbedVariant::joint_projection ? "joint_projection" : "token_append";
}
inline EmbedVariant embed_variant_from_name(const std::string& s) {
    if (s == "joint_projection") return EmbedVariant::joint_projection;
    if (s == "token_append") return EmbedVariant::token_append;
    throw ConfigError("embed_variant must be 'joint_projection' or 'token_append', got '" +
                      s + "'");
}
inline const char* agg_mode_name(AggMode m) { return m == AggMode::fa ? "fa" : "pa"; }
inline AggMode agg_mode_from_name(const std::string& s) {
    if (s == "fa") return AggMode::fa;
    if (s == "pa") return AggMode::pa;
    throw ConfigError("agg_mode must be 'fa' or 'pa', got '" + s + "'");
}
inline const char* attention_mode_name(AttentionMode m) {
    return m == AttentionMode::exact ? "exact" : "nystrom";
}
inline AttentionMode attention_mode_from_name(const std::string& s) {
    if (s == "exact") return AttentionMode::exact;
    if (s == "nystrom") return AttentionMode::nystrom;
    throw ConfigError("attention_mode must be 'exact' or 'nystrom', got '" + s + "'");
}
inline const char* pa_level_name(PaLevel p) {
    return p == PaLevel::feature ? "feature" : "probability";
}
inline PaLevel pa_level_from_name(const std::string& s) {
    if (s == "feature") return PaLevel::feature;
    if (s == "probability") return PaLevel::probability;
    throw ConfigError("pa_level must be 'feature' or 'probability', got '" + s + "'");
}

struct ModelConfig {
    int input_dim = 64;   // d
    int hidden_dim = 512; // L
    int patterns = 3;     // tokens per branch
    int attn_dim = 128;   // gated-attention hidden width
    int heads = 8;
    int ff_mult = 2;
    BranchMode branch_mode = BranchMode::double_branch;
    EmbedVariant embed_variant = EmbedVariant::joint_projection;
    AggMode agg_mode = AggMode::fa;
    PaLevel pa_level = PaLevel::feature;
    AttentionMode attention_mode = AttentionMode::exact;
    int nystrom_landmarks = 64;
    int nystrom_pinv_iters = 24;

    int branches() const { return branch_mode == BranchMode::double_branch ? 2 : 1; }
    // Rows of the pattern summary H.
    int summary_rows() const { return branches() * patterns; }

    void validate() const {
        if (input_dim < 1) throw ConfigError("model: input_dim must be >= 1");
        if (hidden_dim < 1) throw ConfigError("model: hidden_dim must be >= 1");
        if (patterns < 1) throw ConfigError("model: patterns must be >= 1");
        if (attn_dim < 1) throw ConfigError("model: attn_dim must be >= 1");
        if (heads < 1) throw ConfigError("model: heads must be >= 1");
        if (hidden_dim % heads != 0)
            throw ConfigError("model: hidden_dim must be divisible by heads (got " +
                              std::to_string(hidden_dim) + " / " + std::to_string(heads) +
                              ")");
        if (ff_mult < 1) throw ConfigError("model: ff_mult must be >= 1");
        if (nystrom_landmarks < 1) throw ConfigError("model: nystrom_landmarks must be >= 1");
        if (nystrom_pinv_iters < 1)
            throw ConfigError("model: nystrom_pinv_iters must be >= 1");
        if (agg_mode == AggMode::pa && branch_mode == BranchMode::head_only)
            throw ConfigError("model: prediction-level aggregation needs both branches");
    }
};

template <typename T>
struct EncoderParams {
    Mat<T> ln1_scale, ln1_shift; // 1 x L
    Mat<T> wq, wk, wv, wo;       // L x L
    Mat<T> ln2_scale, ln2_shift; // 1 x L
    Mat<T> ff1_w, ff1_b;         // L x ff, 1 x ff
    Mat<T> ff2_w, ff2_b;         // ff x L, 1 x L
};

template <typename T>
struct GatedAttnParams {
    Mat<T> value_w; // L x D, tanh path
    Mat<T> gate_w;  // L x D, sigmoid path
    Mat<T> score_w; // D x 1
};

template <typename T>
struct BranchParams {
    Mat<T> tokens; // patterns x d (joint_projection) or patterns x L (token_append)
    Mat<T> proj;   // d x L
    EncoderParams<T> encoder;
    std::optional<GatedAttnParams<T>> branch_attn; // per-branch pooling (PA mode)
};

template <typename T>
struct ModelParams {
    BranchParams<T> head;
    std::optional<BranchParams<T>> tail;
    std::optional<GatedAttnParams<T>> pooled_attn; // shared pooling over H (FA mode)
    Mat<T> cls_w; // L x 2
    Mat<T> cls_b; // 1 x 2
};

// Fixed traversal order shared by init, the optimizer, checkpoints and the
// graph builder, so tensor names and positions always agree.
template <typename T, typename Fn>
void visit_tensors(ModelParams<T>& p, Fn&& fn) {
    auto visit_gated = [&](const std::string& pre, GatedAttnParams<T>& g) {
        fn(pre + "value_w", g.value_w);
        fn(pre + "gate_w", g.gate_w);
        fn(pre + "score_w", g.score_w);
    };
    auto visit_branch = [&](const std::string& pre, BranchParams<T>& b) {
        fn(pre + "tokens", b.tokens);
        fn(pre + "proj", b.proj);
        auto& e = b.encoder;
        fn(pre + "ln1_scale", e.ln1_scale);
        fn(pre + "ln1_shift", e.ln1_shift);
        fn(pre + "wq", e.wq);
        fn(pre + "wk", e.wk);
        fn(pre + "wv", e.wv);
        fn(pre + "wo", e.wo);
        fn(pre + "ln2_scale", e.ln2_scale);
        fn(pre + "ln2_shift", e.ln2_shift);
        fn(pre + "ff1_w", e.ff1_w);
        fn(pre + "ff1_b", e.ff1_b);
        fn(pre + "ff2_w", e.ff2_w);
        fn(pre + "ff2_b", e.ff2_b);
        if (b.branch_attn) visit_gated(pre + "attn.", *b.branch_attn);
    };
    visit_branch("head.", p.head);
    if (p.tail) visit_branch("tail.", *p.tail);
    if (p.pooled_attn) visit_gated("mpaa.", *p.pooled_attn);
    fn("cls.w", p.cls_w);
    fn("cls.b", p.cls_b);
}

// Fan-in scaled Gaussian init; layer norms start at identity, biases at zero.
// Deterministic in seed: the draw order is the tensor visit order.
template <typename T>
ModelParams<T> init_model(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    const int L = cfg.hidden_dim;
    const int ff = cfg.ff_mult * L;
    auto w = [&](int rows, int cols) {
        return randn<T>(rows, cols, 1.0 / std::sqrt(static_cast<double>(rows)), rng);
    };

    auto make_gated = [&]() {
        GatedAttnParams<T> g;
        g.value_w = w(L, cfg.attn_dim);
        g.gate_w = w(L, cfg.attn_dim);
        g.score_w = w(cfg.attn_dim, 1);
        return g;
    };
    auto make_branch = [&]() {
        BranchParams<T> b;
        const int token_dim =
            cfg.embed_variant == EmbedVariant::joint_projection ? cfg.input_dim : L;
        // Tokens start at the per-coordinate scale of the rows they are
        // stacked with (instances in input space, projected rows otherwise).
        b.tokens = randn<T>(cfg.patterns, token_dim, 1.0, rng);
        b.proj = w(cfg.input_dim, L);
        auto& e = b.encoder;
        e.ln1_scale = Mat<T>::Ones(1, L);
        e.ln1_shift = Mat<T>::Zero(1, L);
        e.wq = w(L, L);
        e.wk = w(L, L);
        e.wv = w(L, L);
        e.wo = w(L, L);
        e.ln2_scale = Mat<T>::Ones(1, L);
        e.ln2_shift = Mat<T>::Zero(1, L);
        e.ff1_w = w(L, ff);
        e.ff1_b = Mat<T>::Zero(1, ff);
        e.ff2_w = w(ff, L);
        e.ff2_b = Mat<T>::Zero(1, L);
        if (cfg.agg_mode == AggMode::pa) b.branch_attn = make_gated();
        return b;
    };

    ModelParams<T> p;
    p.head = make_branch();
    if (cfg.branch_mode == BranchMode::double_branch) p.tail = make_branch();
    if (cfg.agg_mode == AggMode::fa) p.pooled_attn = make_gated();
    p.cls_w = w(L, 2);
    p.cls_b = Mat<T>::Zero(1, 2);
    return p;
}

// ---------------------------------------------------------------------------
// Graph builders. Everything below wires tape nodes; the public wrappers at
// the end of this header evaluate the same graphs without gradients.
// ---------------------------------------------------------------------------

struct EncoderNodeIds {
    int ln1_scale, ln1_shift, wq, wk, wv, wo, ln2_scale, ln2_shift, ff1_w, ff1_b,
        ff2_w, ff2_b;
};

struct GatedAttnNodeIds {
    int value_w, gate_w, score_w;
};

// Row where the token block starts inside a branch sequence of total_rows.
inline Eigen::Index token_row_start(const ModelConfig& cfg, Eigen::Index total_rows) {
    return cfg.embed_variant == EmbedVariant::joint_projection
               ? 0
               : total_rows - cfg.patterns;
}

// Token embedding for one branch: joint_projection projects [tokens; X]
// through one linear map; token_append projects X first and appends
// already-hidden-dim tokens at the end.
template <typename T>
int build_embed(Tape<T>& t, int x, int tokens, int proj, const ModelConfig& cfg) {
    if (cfg.embed_variant == EmbedVariant::joint_projection)
        return t.matmul(t.concat_rows(tokens, x), proj);
    return t.concat_rows(t.matmul(x, proj), tokens);
}

template <typename T>
int build_exact_attention(Tape<T>& t, int xn, const EncoderNodeIds& e,
                          const ModelConfig& cfg) {
    const int q = t.matmul(xn, e.wq);
    const int k = t.matmul(xn, e.wk);
    const int v = t.matmul(xn, e.wv);
    const Eigen::Index dh = cfg.hidden_dim / cfg.heads;
    const T sc = T(1) / static_cast<T>(std::sqrt(static_cast<double>(dh)));
    int heads_out = -1;
    for (int h = 0; h < cfg.heads; ++h) {
        const Eigen::Index c0 = h * dh;
        const int qh = t.slice_cols(q, c0, dh);
        const int kh = t.slice_cols(k, c0, dh);
        const int vh = t.slice_cols(v, c0, dh);
        const int attn = t.softmax_rows(t.scale(t.matmul_nt(qh, kh), sc));
        const int oh = t.matmul(attn, vh);
        heads_out = heads_out < 0 ? oh : t.concat_cols(heads_out, oh);
    }
    return t.matmul(heads_out, e.wo);
}

// Moore-Penrose pseudo-inverse via the cubic Newton-Schulz iteration
//   Z <- Z (13 I - AZ (15 I - AZ (7 I - AZ))) / 4
// started at A^T / (|A|_1 |A|_inf). The starting scale is treated as a
// constant in the backward pass.
template <typename T>
int build_ns_pinv(Tape<T>& t, int a, int iters) {
    const Mat<T>& A = t.value(a);
    const Eigen::Index l = A.rows();
    const T norm1 = A.cwiseAbs().colwise().sum().maxCoeff();
    const T norminf = A.cwiseAbs().rowwise().sum().maxCoeff();
    int z = t.scale(t.transpose(a), T(1) / (norm1 * norminf));
    const Mat<T> eye = Mat<T>::Identity(l, l);
    const int i7 = t.input(eye * T(7));
    const int i13 = t.input(eye * T(13));
    const int i15 = t.input(eye * T(15));
    for (int it = 0; it < iters; ++it) {
        const int az = t.matmul(a, z);
        const int inner = t.sub(i15, t.matmul(az, t.sub(i7, az)));
        const int outer = t.sub(i13, t.matmul(az, inner));
        z = t.scale(t.matmul(z, outer), T(0.25));
    }
    return z;
}

// Landmark attention: segment-mean landmarks over a front-zero-padded
// sequence, three softmax kernels, pseudo-inverse stitching. Padding rows are
// dropped from the output but do participate as keys, matching the reference
// construction.
template <typename T>
int build_nystrom_attention(Tape<T>& t, int xn, const EncoderNodeIds& e,
                            const ModelConfig& cfg) {
    const Eigen::Index m = t.value(xn).rows();
    const Eigen::Index l = std::min<Eigen::Index>(m, cfg.nystrom_landmarks);
    const Eigen::Index pad = (l - m % l) % l;
    const int xp = pad > 0 ? t.pad_rows_front(xn, pad) : xn;
    const Eigen::Index m2 = m + pad;
    const Eigen::Index seg = m2 / l;

    const int q = t.matmul(xp, e.wq);
    const int k = t.matmul(xp, e.wk);
    const int v = t.matmul(xp, e.wv);

    Mat<T> pool = Mat<T>::Zero(l, m2);
    for (Eigen::Index i = 0; i < l; ++i)
        pool.row(i).segment(i * seg, seg).setConstant(T(1) / static_cast<T>(seg));
    const int pool_id = t.input(std::move(pool));

    const Eigen::Index dh = cfg.hidden_dim / cfg.heads;
    const T sc = T(1) / static_cast<T>(std::sqrt(static_cast<double>(dh)));
    int heads_out = -1;
    for (int h = 0; h < cfg.heads; ++h) {
        const Eigen::Index c0 = h * dh;
        const int qh = t.slice_cols(q, c0, dh);
        const int kh = t.slice_cols(k, c0, dh);
        const int vh = t.slice_cols(v, c0, dh);
        const int q_land = t.matmul(pool_id, qh);
        const int k_land = t.matmul(pool_id, kh);
        const int f1 = t.softmax_rows(t.scale(t.matmul_nt(qh, k_land), sc));
        const int f2 = t.softmax_rows(t.scale(t.matmul_nt(q_land, k_land), sc));
        const int f3 = t.softmax_rows(t.scale(t.matmul_nt(q_land, kh), sc));
        const int z = build_ns_pinv(t, f2, cfg.nystrom_pinv_iters);
        const int oh = t.matmul(f1, t.matmul(z, t.matmul(f3, vh)));
        heads_out = heads_out < 0 ? oh : t.concat_cols(heads_out, oh);
    }
    const int o = t.matmul(heads_out, e.wo);
    return pad > 0 ? t.slice_rows(o, pad, m) : o;
}

// One pre-norm residual block: x + Attn(LN(x)), then x + FFN(LN(x)).
template <typename T>
int build_translayer(Tape<T>& t, int x, const EncoderNodeIds& e, const ModelConfig& cfg) {
    const int xn = t.layer_norm(x, e.ln1_scale, e.ln1_shift);
    const int attn = cfg.attention_mode == AttentionMode::exact
                         ? build_exact_attention(t, xn, e, cfg)
                         : build_nystrom_attention(t, xn, e, cfg);
    const int x1 = t.add(x, attn);
    const int x2n = t.layer_norm(x1, e.ln2_scale, e.ln2_shift);
    const int f1 = t.gelu(t.add_rowvec(t.matmul(x2n, e.ff1_w), e.ff1_b));
    const int f2 = t.add_rowvec(t.matmul(f1, e.ff2_w), e.ff2_b);
    return t.add(x1, f2);
}

// Gated attention pooling: A = softmax(score(tanh(HWv) * sigmoid(HWu))),
// M = A H. Returns (attention 1 x rows, pooled 1 x L).
template <typename T>
std::pair<int, int> build_gated_attention(Tape<T>& t, int h, const GatedAttnNodeIds& g) {
    const int av = t.tanh_op(t.matmul(h, g.value_w));
    const int au = t.sigmoid(t.matmul(h, g.gate_w));
    const int scores = t.matmul(t.mul(av, au), g.score_w);
    const int attn = t.softmax_rows(t.transpose(scores));
    const int pooled = t.matmul(attn, h);
    return {attn, pooled};
}

template <typename T>
int build_classifier(Tape<T>& t, int pooled, int cls_w, int cls_b) {
    return t.softmax_rows(t.add(t.matmul(pooled, cls_w), cls_b));
}

template <typename T>
struct StampGraph {
    int pattern_summary = -1; // H
    int attention = -1;       // 1 x summary_rows
    int bag_repr = -1;        // M, 1 x L
    int probs = -1;           // 1 x 2
    std::vector<std::pair<std::string, int>> param_nodes; // visit order
};

template <typename T>
StampGraph<T> build_stamp_graph(Tape<T>& t, const Mat<T>& features, ModelParams<T>& p,
                                const ModelConfig& cfg) {
    cfg.validate();
    if (features.rows() < 1) throw ValueError("forward: bag has no instances");
    if (features.cols() != cfg.input_dim)
        throw ShapeError("forward: features have d=" + std::to_string(features.cols()) +
                         " but the model expects d=" + std::to_string(cfg.input_dim));

    StampGraph<T> g;
    std::unordered_map<std::string, int> id;
    visit_tensors(p, [&](const std::string& name, Mat<T>& m) {
        const int node = t.param(m);
        id.emplace(name, node);
        g.param_nodes.emplace_back(name, node);
    });
    auto lookup = [&](const std::string& name) {
        auto it = id.find(name);
        if (it == id.end())
            throw ConfigError("model parameters are missing tensor '" + name + "'");
        return it->second;
    };
    const int x = t.input(features);

    auto encoder_ids = [&](const std::string& pre) {
        return EncoderNodeIds{lookup(pre + "ln1_scale"), lookup(pre + "ln1_shift"),
                              lookup(pre + "wq"),        lookup(pre + "wk"),
                              lookup(pre + "wv"),        lookup(pre + "wo"),
                              lookup(pre + "ln2_scale"), lookup(pre + "ln2_shift"),
                              lookup(pre + "ff1_w"),     lookup(pre + "ff1_b"),
                              lookup(pre + "ff2_w"),     lookup(pre + "ff2_b")};
    };
    auto gated_ids = [&](const std::string& pre) {
        return GatedAttnNodeIds{lookup(pre + "value_w"), lookup(pre + "gate_w"),
                                lookup(pre + "score_w")};
    };
    // Embed, encode, slice the token rows back out.
    auto branch_tokens = [&](const std::string& pre) {
        const int xb = build_embed(t, x, lookup(pre + "tokens"), lookup(pre + "proj"), cfg);
        const int hb = build_translayer(t, xb, encoder_ids(pre), cfg);
        const Eigen::Index r0 = token_row_start(cfg, t.value(hb).rows());
        return t.slice_rows(hb, r0, cfg.patterns);
    };

    const int head_tok = branch_tokens("head.");
    int tail_tok = -1;
    if (cfg.branch_mode == BranchMode::double_branch) {
        tail_tok = branch_tokens("tail.");
        g.pattern_summary = t.concat_rows(head_tok, tail_tok);
    } else {
        g.pattern_summary = head_tok;
    }

    const int cls_w = id.at("cls.w");
    const int cls_b = id.at("cls.b");
    if (cfg.agg_mode == AggMode::fa) {
        auto [attn, pooled] = build_gated_attention(t, g.pattern_summary, gated_ids("mpaa."));
        g.attention = attn;
        g.bag_repr = pooled;
        g.probs = build_classifier(t, pooled, cls_w, cls_b);
    } else {
        auto [attn_h, pooled_h] = build_gated_attention(t, head_tok, gated_ids("head.attn."));
        auto [attn_t, pooled_t] = build_gated_attention(t, tail_tok, gated_ids("tail.attn."));
        g.bag_repr = t.scale(t.add(pooled_h, pooled_t), T(0.5));
        g.attention = t.scale(t.concat_cols(attn_h, attn_t), T(0.5));
        if (cfg.pa_level == PaLevel::feature) {
            g.probs = build_classifier(t, g.bag_repr, cls_w, cls_b);
        } else {
            const int probs_h = build_classifier(t, pooled_h, cls_w, cls_b);
            const int probs_t = build_classifier(t, pooled_t, cls_w, cls_b);
            g.probs = t.scale(t.add(probs_h, probs_t), T(0.5));
        }
    }
    return g;
}

template <typename T>
struct StampLossGraph {
    StampGraph<T> fwd;
    int ce = -1;    // unweighted cross entropy node
    int sim = -1;   // similarity penalty node
    int total = -1; // lambda * weight * ce + (1 - lambda) * sim
};

template <typename T>
StampLossGraph<T> build_stamp_loss(Tape<T>& t, const Mat<T>& features, int label,
                                   T lambda, T ce_weight, ModelParams<T>& p,
                                   const ModelConfig& cfg) {
    if (label != 0 && label != 1) throw ValueError("loss: label must be 0 or 1");
    if (!(lambda >= T(0) && lambda <= T(1)))
        throw ValueError("loss: lambda must be in [0,1]");
    StampLossGraph<T> g;
    g.fwd = build_stamp_graph(t, features, p, cfg);
    g.ce = t.pick_log_loss(g.fwd.probs, label, T(kProbFloor));
    g.sim = t.pairwise_cosine_penalty(g.fwd.pattern_summary);
    g.total = t.add(t.scale(g.ce, lambda * ce_weight), t.scale(g.sim, T(1) - lambda));
    return g;
}

// ---------------------------------------------------------------------------
// Gradient-free wrappers evaluating the same graphs.
// ---------------------------------------------------------------------------

template <typename T>
struct Prediction {
    Mat<T> probs;     // 1 x 2, on the simplex
    Mat<T> attention; // 1 x summary_rows, sums to 1
    Mat<T> bag_repr;  // 1 x L
};

template <typename T>
struct ForwardResult {
    Prediction<T> pred;
    Mat<T> pattern_summary; // H
};

template <typename T>
ForwardResult<T> forward(const Mat<T>& features, ModelParams<T>& params,
                         const ModelConfig& cfg) {
    Tape<T> t;
    const auto g = build_stamp_graph(t, features, params, cfg);
    ForwardResult<T> out;
    out.pred.probs = t.value(g.probs);
    out.pred.attention = t.value(g.attention);
    out.pred.bag_repr = t.value(g.bag_repr);
    out.pattern_summary = t.value(g.pattern_summary);
    return out;
}

// Token embedding of both branches; second element is empty in head_only mode.
template <typename T>
std::pair<Mat<T>, Mat<T>> embed_tokens(const Mat<T>& features, ModelParams<T>& params,
                                       const ModelConfig& cfg) {
    cfg.validate();
    if (features.cols() != cfg.input_dim)
        throw ShapeError("embed_tokens: feature dim mismatch");
    Tape<T> t;
    const int x = t.input(features);
    auto run = [&](BranchParams<T>& b) {
        return t.value(build_embed(t, x, t.param(b.tokens), t.param(b.proj), cfg));
    };
    Mat<T> xh = run(params.head);
    Mat<T> xt;
    if (cfg.branch_mode == BranchMode::double_branch && params.tail) xt = run(*params.tail);
    return {std::move(xh), std::move(xt)};
}

// One encoder block applied to an already-embedded sequence.
template <typename T>
Mat<T> translayer_forward(const Mat<T>& xb, const EncoderParams<T>& e,
                          const ModelConfig& cfg) {
    Tape<T> t;
    const EncoderNodeIds ids{t.param(e.ln1_scale), t.param(e.ln1_shift), t.param(e.wq),
                             t.param(e.wk),        t.param(e.wv),        t.param(e.wo),
                             t.param(e.ln2_scale), t.param(e.ln2_shift), t.param(e.ff1_w),
                             t.param(e.ff1_b),     t.param(e.ff2_w),     t.param(e.ff2_b)};
    return t.value(build_translayer(t, t.input(xb), ids, cfg));
}

// Stacks the encoded token rows of the present branches into H.
template <typename T>
Mat<T> select_pattern_tokens(const Mat<T>& h_head, const Mat<T>& h_tail,
                             const ModelConfig& cfg) {
    auto tokens_of = [&](const Mat<T>& h) -> Mat<T> {
        const Eigen::Index r0 = token_row_start(cfg, h.rows());
        if (r0 < 0 || r0 + cfg.patterns > h.rows())
            throw ShapeError("select_pattern_tokens: token rows out of range");
        return h.middleRows(r0, cfg.patterns);
    };
    if (cfg.branch_mode == BranchMode::head_only) return tokens_of(h_head);
    Mat<T> H(2 * cfg.patterns, h_head.cols());
    H.topRows(cfg.patterns) = tokens_of(h_head);
    H.bottomRows(cfg.patterns) = tokens_of(h_tail);
    return H;
}

// Gated attention pooling over H; returns (attention weights, pooled feature).
template <typename T>
std::pair<Mat<T>, Mat<T>> mpaa(const Mat<T>& H, const GatedAttnParams<T>& attn) {
    Tape<T> t;
    const GatedAttnNodeIds ids{t.param(attn.value_w), t.param(attn.gate_w),
                               t.param(attn.score_w)};
    auto [attn_id, pooled_id] = build_gated_attention(t, t.input(H), ids);
    return {t.value(attn_id), t.value(pooled_id)};
}

template <typename T>
Mat<T> classify(const Mat<T>& pooled, const Mat<T>& cls_w, const Mat<T>& cls_b) {
    Tape<T> t;
    return t.value(
        build_classifier(t, t.input(pooled), t.param(cls_w), t.param(cls_b)));
}

// Prediction-level aggregation: each branch pools its own tokens with its own
// gated attention, and the two pooled features are averaged.
template <typename T>
Mat<T> pa_aggregate(const Mat<T>& head_tokens, const Mat<T>& tail_tokens,
                    ModelParams<T>& params, const ModelConfig& cfg) {
    if (cfg.branch_mode == BranchMode::head_only)
        throw ConfigError("pa_aggregate: not available in head_only mode");
    if (!params.tail || !params.head.branch_attn || !params.tail->branch_attn)
        throw ConfigError("pa_aggregate: per-branch attention parameters missing");
    const Mat<T> mh = mpaa(head_tokens, *params.head.branch_attn).second;
    const Mat<T> mt = mpaa(tail_tokens, *params.tail->branch_attn).second;
    return ((mh + mt) * T(0.5)).eval();
}

} // namespace stamp

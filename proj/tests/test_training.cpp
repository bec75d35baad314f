#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "stamp/checkpoint.hpp"
#include "stamp/errors.hpp"
#include "stamp/gradcheck.hpp"
#include "stamp/losses.hpp"
#include "stamp/optimizer.hpp"
#include "stamp/schedule.hpp"
#include "stamp/synth.hpp"
#include "stamp/train.hpp"

using namespace stamp;
namespace fs = std::filesystem;

namespace {

// Ordered-pair enumeration of the similarity penalty, written directly from
// the definition: mean over i != j of relu(cos(H_i, H_j)), scalar arithmetic
// throughout.
double similarity_oracle(const MatD& H) {
    const auto m = H.rows();
    if (m < 2) return 0.0;
    std::vector<double> norms(static_cast<size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
        double sq = 0;
        for (Eigen::Index k = 0; k < H.cols(); ++k) sq += H(i, k) * H(i, k);
        norms[static_cast<size_t>(i)] = std::sqrt(sq);
    }
    double sum = 0;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
            if (i == j) continue;
            const double denom =
                norms[static_cast<size_t>(i)] * norms[static_cast<size_t>(j)];
            double c = 0;
            if (denom > 0) {
                double dot = 0;
                for (Eigen::Index k = 0; k < H.cols(); ++k) dot += H(i, k) * H(j, k);
                c = dot / denom;
            }
            if (c > 0) sum += c;
        }
    return sum / (static_cast<double>(m) * static_cast<double>(m - 1));
}

// The published RAdam update with decoupled weight decay plus Lookahead,
// transcribed for a single scalar parameter.
struct ScalarRangerOracle {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8, wd = 1e-5;
    int k = 6;
    double alpha = 0.5;
    double theta, slow;
    double m = 0, v = 0;
    int t = 0;

    explicit ScalarRangerOracle(double init) : theta(init), slow(init) {}

    void step(double g, double lr) {
        ++t;
        m = beta1 * m + (1 - beta1) * g;
        v = beta2 * v + (1 - beta2) * g * g;
        const double mhat = m / (1 - std::pow(beta1, t));
        const double rho_inf = 2.0 / (1 - beta2) - 1.0;
        const double rho_t =
            rho_inf - 2.0 * t * std::pow(beta2, t) / (1 - std::pow(beta2, t));
        double update = mhat;
        if (rho_t > 4.0) {
            const double rect = std::sqrt(((rho_t - 4) * (rho_t - 2) * rho_inf) /
                                          ((rho_inf - 4) * (rho_inf - 2) * rho_t));
            update = rect * mhat / (std::sqrt(v / (1 - std::pow(beta2, t))) + eps);
        }
        theta -= lr * update + lr * wd * theta;
        if (t % k == 0) {
            slow += alpha * (theta - slow);
            theta = slow;
        }
    }
};

LoadedDataset tiny_dataset(std::uint64_t seed, int per_class = 6) {
    SynthConfig cfg;
    cfg.train_bags_per_class = per_class;
    cfg.val_bags_per_class = 3;
    cfg.test_bags_per_class = 3;
    cfg.min_instances = 4;
    cfg.max_instances = 8;
    cfg.feature_dim = 8;
    cfg.motif_count = 2;
    cfg.witness_rate_min = 0.2;
    cfg.witness_rate_max = 0.4;
    cfg.motif_separation = 6.0;
    cfg.seed = seed;
    return generate_synthetic_bags(cfg);
}

ModelConfig tiny_train_cfg() {
    ModelConfig c;
    c.input_dim = 8;
    c.hidden_dim = 16;
    c.patterns = 2;
    c.attn_dim = 8;
    c.heads = 4;
    return c;
}

} // namespace

TEST_CASE("cross entropy") {
    CHECK(cross_entropy(std::vector<double>{1.0 - 1e-9, 1e-9}, 0) ==
          doctest::Approx(0.0).epsilon(1e-8));
    CHECK(cross_entropy(std::vector<double>{0.5, 0.5}, 0) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(cross_entropy(std::vector<double>{0.25, 0.75}, 1) ==
          doctest::Approx(-std::log(0.75)).epsilon(1e-12));
    // The floor keeps a zero probability finite.
    CHECK(cross_entropy(std::vector<double>{0.0, 1.0}, 0) ==
          doctest::Approx(-std::log(1e-12)).epsilon(1e-12));
    CHECK_THROWS_AS(cross_entropy(std::vector<double>{1.0}, 0), ValueError);
    CHECK_THROWS_AS(cross_entropy(std::vector<double>{0.5, 0.5}, 2), ValueError);
}

TEST_CASE("similarity loss worked examples") {
    MatD orth(2, 2);
    orth << 1, 0, 0, 1;
    CHECK(similarity_loss(orth) == 0.0);

    MatD same(2, 2);
    same << 1, 0, 1, 0;
    CHECK(similarity_loss(same) == 1.0);

    MatD mix(3, 2);
    mix << 1, 0, 1, 0, 0, 1;
    CHECK(similarity_loss(mix) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    MatD with_zero(2, 2);
    with_zero << 0, 0, 1, 0;
    CHECK(similarity_loss(with_zero) == 0.0);

    bool warned = false;
    MatD single(1, 3);
    single << 1, 2, 3;
    CHECK(similarity_loss(single, &warned) == 0.0);
    CHECK(warned);
}

TEST_CASE("similarity loss equals ordered-pair enumeration exactly") {
    Rng rng(41);
    std::uniform_int_distribution<int> rows(2, 8), cols(3, 6);
    for (int t = 0; t < 100; ++t) {
        const auto H = randn<double>(rows(rng), cols(rng), 1.0, rng);
        CHECK(similarity_loss(H) == similarity_oracle(H));
    }
}

TEST_CASE("similarity loss bounds and scale invariance") {
    Rng rng(42);
    for (int t = 0; t < 100; ++t) {
        const auto H = randn<double>(5, 7, 1.0, rng);
        const double v = similarity_loss(H);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        MatD scaled = H;
        scaled.row(2) *= 3.7;
        CHECK(similarity_loss(scaled) == doctest::Approx(v).epsilon(1e-12));
    }
    // All rows positive multiples of one vector -> exactly 1.
    MatD ray(4, 3);
    for (int i = 0; i < 4; ++i) ray.row(i) = MatD::Constant(1, 3, 1.0) * double(i + 1);
    CHECK(similarity_loss(ray) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tape similarity node agrees with the scalar function") {
    Rng rng(43);
    const auto H = randn<double>(6, 5, 1.0, rng);
    Tape<double> t;
    const int node = t.pairwise_cosine_penalty(t.input(H));
    CHECK(t.scalar(node) == doctest::Approx(similarity_loss(H)).epsilon(1e-12));
}

TEST_CASE("total loss") {
    CHECK(total_loss(1.0, 0.5, 0.9) == doctest::Approx(0.95).epsilon(1e-12));
    CHECK(total_loss(1.25, 9.0, 1.0) == 1.25);
    CHECK(total_loss(9.0, 0.75, 0.0) == 0.75);
    CHECK_THROWS_AS(total_loss(1.0, 1.0, 1.5), ValueError);
}

TEST_CASE("cosine schedule") {
    CHECK(cosine_lr(0, 100, 1e-4, 5e-6) == 1e-4);
    CHECK(cosine_lr(100, 100, 1e-4, 5e-6) == 5e-6);
    CHECK(cosine_lr(50, 100, 1e-4, 5e-6) == doctest::Approx(5.25e-5).epsilon(1e-12));
    CHECK(cosine_lr(0, 0, 1e-4, 5e-6) == 1e-4);
    double prev = 1e-4;
    for (int s = 0; s <= 1000; ++s) {
        const double lr = cosine_lr(s, 1000, 1e-4, 5e-6);
        CHECK(lr <= prev + 1e-18);
        prev = lr;
    }
    CHECK_THROWS_AS(cosine_lr(-1, 10, 1e-4, 5e-6), ValueError);
    CHECK_THROWS_AS(cosine_lr(11, 10, 1e-4, 5e-6), ValueError);
}

TEST_CASE("optimizer fixed points and decay") {
    Mat<double> p = Mat<double>::Constant(2, 2, 2.0);
    const Mat<double> zero = Mat<double>::Zero(2, 2);

    SUBCASE("zero gradients and zero decay change nothing") {
        OptimizerOpts opts;
        opts.weight_decay = 0.0;
        RangerOptimizer<double> opt({{"p", &p}}, opts);
        const Mat<double> before = p;
        for (int i = 0; i < 10; ++i) opt.step(1e-3, {&zero});
        CHECK(p == before);
    }
    SUBCASE("zero gradients with decay scale by (1 - lr*wd) per step") {
        OptimizerOpts opts;
        opts.weight_decay = 0.01;
        opts.lookahead_k = 1000; // keep lookahead out of this check
        RangerOptimizer<double> opt({{"p", &p}}, opts);
        opt.step(0.1, {&zero});
        CHECK(p(0, 0) == doctest::Approx(2.0 * (1 - 0.1 * 0.01)).epsilon(1e-12));
        opt.step(0.1, {&zero});
        CHECK(p(1, 1) ==
              doctest::Approx(2.0 * std::pow(1 - 0.1 * 0.01, 2)).epsilon(1e-12));
    }
    SUBCASE("non-finite gradient aborts the step naming the tensor") {
        OptimizerOpts opts;
        RangerOptimizer<double> opt({{"spiky", &p}}, opts);
        Mat<double> bad = Mat<double>::Zero(2, 2);
        bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_WITH_AS(opt.step(1e-3, {&bad}), doctest::Contains("spiky"),
                             TrainError);
    }
}

TEST_CASE("optimizer matches the scalar RAdam+Lookahead oracle") {
    Mat<double> p = Mat<double>::Constant(1, 1, 0.8);
    OptimizerOpts opts; // defaults match the oracle fields
    RangerOptimizer<double> opt({{"w", &p}}, opts);
    ScalarRangerOracle oracle(0.8);

    Rng rng(44);
    std::uniform_real_distribution<double> g_dist(-1.0, 1.0);
    for (int t = 1; t <= 25; ++t) {
        const double g = 0.3 + 0.05 * g_dist(rng);
        const double lr = cosine_lr(t - 1, 25, 1e-3, 1e-5);
        Mat<double> grad = Mat<double>::Constant(1, 1, g);
        opt.step(lr, {&grad});
        oracle.step(g, lr);
        CHECK(p(0, 0) == doctest::Approx(oracle.theta).epsilon(1e-9));
    }
}

TEST_CASE("gradient check passes for the tiny model") {
    GradCheckOptions opts;
    const auto report = gradient_check(opts);
    CHECK(report.passed);
    CHECK(report.max_rel_err() < 1e-4);
    CHECK(report.seconds < 60.0);
    CHECK(report.entries.size() >= 30); // every tensor reported

    bool saw_cls = false, saw_tokens = false;
    for (const auto& e : report.entries) {
        if (e.tensor == "cls.w") {
            saw_cls = true;
            CHECK(e.max_rel_err < 1e-4);
        }
        if (e.tensor == "head.tokens") {
            saw_tokens = true;
            CHECK(e.max_rel_err < 1e-4);
        }
    }
    CHECK(saw_cls);
    CHECK(saw_tokens);
}

TEST_CASE("gradient check passes at the lambda boundary and for label 0") {
    GradCheckOptions opts;
    opts.lambda = 1.0;
    opts.label = 0;
    const auto report = gradient_check(opts);
    CHECK(report.passed);
}

TEST_CASE("gradient check passes for the baselines") {
    for (const char* kind : {"maxpool", "meanpool", "abmil"}) {
        GradCheckOptions opts;
        opts.model_kind = kind;
        const auto report = gradient_check(opts);
        INFO(kind);
        CHECK(report.passed);
    }
}

TEST_CASE("training is deterministic and selects by validation AUC") {
    const auto data = tiny_dataset(50);
    const auto mc = tiny_train_cfg();
    TrainConfig tc;
    tc.epochs = 3;
    tc.seed = 5;

    auto m1 = make_model("stamp", mc, tc.seed);
    auto m2 = make_model("stamp", mc, tc.seed);
    const auto r1 = train(data, *m1, tc);
    const auto r2 = train(data, *m2, tc);

    REQUIRE(r1.history.size() == 3);
    REQUIRE(r2.history.size() == 3);
    for (size_t e = 0; e < 3; ++e) {
        CHECK(r1.history[e].mean_total ==
              doctest::Approx(r2.history[e].mean_total).epsilon(1e-6));
        CHECK(r1.history[e].val.auc == r2.history[e].val.auc);
    }
    CHECK(r1.best_epoch == r2.best_epoch);

    double best = -1;
    int best_epoch = 0;
    for (const auto& h : r1.history)
        if (h.val.auc > best) {
            best = h.val.auc;
            best_epoch = h.epoch;
        }
    CHECK(r1.best_epoch == best_epoch);
    CHECK(r1.best.val_metrics.auc == best);
}

TEST_CASE("lambda = 1 reduces the total loss to the cross-entropy trace") {
    const auto data = tiny_dataset(51);
    const auto mc = tiny_train_cfg();
    TrainConfig tc;
    tc.epochs = 2;
    tc.seed = 1;
    tc.lambda = 1.0;
    auto model = make_model("stamp", mc, tc.seed);
    const auto r = train(data, *model, tc);
    for (const auto& h : r.history) {
        CHECK(h.mean_total == h.mean_ce);
        CHECK(h.mean_sim > 0.0); // still recorded
    }
}

TEST_CASE("one epoch on a tiny dataset emits one history row") {
    const auto data = tiny_dataset(52, 5);
    TrainConfig tc;
    tc.epochs = 1;
    tc.seed = 0;
    auto model = make_model("meanpool", tiny_train_cfg(), tc.seed);
    const auto r = train(data, *model, tc);
    CHECK(r.history.size() == 1);
    CHECK(r.best_epoch == 1);
}

TEST_CASE("non-finite loss aborts with epoch and bag context") {
    auto data = tiny_dataset(53, 4);
    data.train[1].features.setConstant(3.0e38f); // finite, overflows downstream
    TrainConfig tc;
    tc.epochs = 1;
    tc.seed = 2;
    auto model = make_model("stamp", tiny_train_cfg(), tc.seed);
    CHECK_THROWS_WITH_AS(train(data, *model, tc), doctest::Contains("epoch"), TrainError);
}

TEST_CASE("empty splits are rejected") {
    auto data = tiny_dataset(54, 4);
    TrainConfig tc;
    tc.epochs = 1;
    auto model = make_model("stamp", tiny_train_cfg(), 0);
    auto no_val = data;
    no_val.val.clear();
    CHECK_THROWS_AS(train(no_val, *model, tc), ValueError);
    auto no_train = data;
    no_train.train.clear();
    CHECK_THROWS_AS(train(no_train, *model, tc), ValueError);
}

TEST_CASE("checkpoint roundtrip is bit-exact") {
    const auto dir = fs::temp_directory_path() / "stamp_test_ckpt";
    fs::create_directories(dir);
    const auto mc = tiny_train_cfg();
    TrainConfig tc;
    auto model = std::make_unique<StampModel>(mc, 9);

    MetricsRecord val;
    val.auc = 0.75;
    val.split = "val";
    const auto ckpt = checkpoint_from_model(*model, tc, 4, val);
    const auto path = dir / "model.smck";
    save_checkpoint(ckpt, path);
    const auto back = load_checkpoint(path);

    CHECK(back.model_kind == "stamp");
    CHECK(back.epoch == 4);
    CHECK(back.val_metrics.auc == 0.75);
    REQUIRE(back.tensors.size() == ckpt.tensors.size());
    for (size_t i = 0; i < back.tensors.size(); ++i) {
        CHECK(back.tensors[i].first == ckpt.tensors[i].first);
        CHECK(back.tensors[i].second == ckpt.tensors[i].second);
    }

    auto restored = model_from_checkpoint(back);
    Rng rng(60);
    const MatF bag = randn<float>(6, mc.input_dim, 1.0, rng);
    const auto a = model->predict(bag);
    const auto b = restored->predict(bag);
    CHECK(a.probs == b.probs);
    CHECK(a.attention == b.attention);
}

TEST_CASE("checkpoint metadata inconsistent with tensors is rejected") {
    const auto dir = fs::temp_directory_path() / "stamp_test_ckpt_bad";
    fs::create_directories(dir);
    const auto mc = tiny_train_cfg();
    auto model = std::make_unique<StampModel>(mc, 9);
    auto ckpt = checkpoint_from_model(*model, TrainConfig{}, 1, MetricsRecord{});
    ckpt.model_cfg.patterns = 3; // tensors were built with patterns = 2
    const auto path = dir / "bad.smck";
    save_checkpoint(ckpt, path);
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
}

TEST_CASE("checkpoint with bad magic is rejected") {
    const auto dir = fs::temp_directory_path() / "stamp_test_ckpt_magic";
    fs::create_directories(dir);
    const auto path = dir / "junk.smck";
    std::ofstream os(path, std::ios::binary);
    os << "JUNKJUNKJUNK";
    os.close();
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
}

TEST_CASE("baselines train with the shared loop") {
    const auto data = tiny_dataset(55, 5);
    TrainConfig tc;
    tc.epochs = 2;
    tc.seed = 3;
    for (const char* kind : {"maxpool", "meanpool", "abmil"}) {
        auto model = make_model(kind, tiny_train_cfg(), tc.seed);
        const auto r = train(data, *model, tc);
        CHECK(r.history.size() == 2);
        for (const auto& h : r.history) {
            CHECK(h.mean_sim == 0.0);
            CHECK(h.mean_total == h.mean_ce);
        }
    }
}

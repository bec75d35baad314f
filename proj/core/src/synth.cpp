#include "stamp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "stamp/errors.hpp"

namespace stamp {

void SynthConfig::validate() const {
    if (train_bags_per_class < 1 || val_bags_per_class < 1 || test_bags_per_class < 1)
        throw ConfigError("synth: bags per class per split must be >= 1");
    if (min_instances < 1 || max_instances < min_instances)
        throw ConfigError("synth: need 1 <= min_instances <= max_instances");
    if (feature_dim < 1) throw ConfigError("synth: feature_dim must be >= 1");
    if (motif_count < 1 || motif_count > 3)
        throw ConfigError("synth: motif_count must be in {1,2,3}");
    if (feature_dim < motif_count)
        throw ConfigError("synth: feature_dim must be >= motif_count");
    if (!(witness_rate_min > 0.0) || witness_rate_max > 1.0 ||
        witness_rate_min > witness_rate_max)
        throw ConfigError("synth: witness rate range must satisfy 0 < min <= max <= 1");
    if (motif_separation < 0.0) throw ConfigError("synth: motif_separation must be >= 0");
    if (!(motif_stddev > 0.0)) throw ConfigError("synth: motif_stddev must be > 0");
}

namespace {

// Motif means: motif_separation along the first k coordinate axes, so all
// means share one norm and are mutually equidistant.
MatF motif_means(const SynthConfig& cfg) {
    MatF mu = MatF::Zero(cfg.motif_count, cfg.feature_dim);
    for (int j = 0; j < cfg.motif_count; ++j)
        mu(j, j) = static_cast<float>(cfg.motif_separation);
    return mu;
}

InstanceBag make_bag(const SynthConfig& cfg, const MatF& mu, Split split, int label,
                     int ordinal, std::uint64_t bag_seed) {
    Rng rng(bag_seed);
    std::uniform_int_distribution<int> n_dist(cfg.min_instances, cfg.max_instances);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const int n = n_dist(rng);
    InstanceBag bag;
    bag.bag_id = std::string(split_name(split)) + "_" + (label ? "pos" : "neg") + "_" +
                 std::to_string(ordinal);
    bag.label = label;
    bag.features.resize(n, cfg.feature_dim);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < cfg.feature_dim; ++j)
            bag.features(i, j) = static_cast<float>(gauss(rng));

    std::vector<std::uint8_t> labels(static_cast<size_t>(n), 0);
    if (label == 1) {
        std::uniform_real_distribution<double> rate_dist(cfg.witness_rate_min,
                                                         cfg.witness_rate_max);
        const double rate = rate_dist(rng);
        // Round to nearest, but never below one witness.
        int witnesses = static_cast<int>(std::llround(rate * n));
        witnesses = std::clamp(witnesses, 1, n);

        std::vector<int> order(static_cast<size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        std::uniform_int_distribution<int> motif_dist(0, cfg.motif_count - 1);
        for (int w = 0; w < witnesses; ++w) {
            const int idx = order[static_cast<size_t>(w)];
            const int motif = motif_dist(rng);
            for (int j = 0; j < cfg.feature_dim; ++j)
                bag.features(idx, j) =
                    mu(motif, j) +
                    static_cast<float>(cfg.motif_stddev * gauss(rng));
            labels[static_cast<size_t>(idx)] = 1;
        }
    }
    bag.instance_labels = std::move(labels);
    return bag;
}

template <typename Emit>
void generate(const SynthConfig& cfg, Emit&& emit) {
    cfg.validate();
    const MatF mu = motif_means(cfg);
    std::uint64_t counter = 0;
    const std::array<std::pair<Split, int>, 3> splits = {
        std::make_pair(Split::train, cfg.train_bags_per_class),
        std::make_pair(Split::val, cfg.val_bags_per_class),
        std::make_pair(Split::test, cfg.test_bags_per_class)};
    for (const auto& [split, count] : splits)
        for (int label : {0, 1})
            for (int i = 0; i < count; ++i) {
                // Per-bag seed stream: deterministic and order-independent.
                const std::uint64_t bag_seed = mix_seed(cfg.seed + 0x9e37 * ++counter);
                emit(make_bag(cfg, mu, split, label, i, bag_seed), split, label);
            }
}

} // namespace

DatasetIndex generate_synthetic_dataset(const SynthConfig& cfg,
                                        const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir / "bags");
    DatasetIndex index;
    index.root = out_dir;
    index.feature_dim = cfg.feature_dim;
    generate(cfg, [&](InstanceBag&& bag, Split split, int label) {
        const std::string rel = "bags/" + bag.bag_id + ".smb";
        write_bag(bag, out_dir / rel);
        index.entries.push_back(IndexEntry{bag.bag_id, rel, label, split});
    });
    write_manifest(index, out_dir / "manifest.csv");
    return index;
}

LoadedDataset generate_synthetic_bags(const SynthConfig& cfg) {
    LoadedDataset ds;
    ds.feature_dim = cfg.feature_dim;
    generate(cfg, [&](InstanceBag&& bag, Split split, int) {
        switch (split) {
            case Split::train: ds.train.push_back(std::move(bag)); break;
            case Split::val: ds.val.push_back(std::move(bag)); break;
            case Split::test: ds.test.push_back(std::move(bag)); break;
        }
    });
    return ds;
}

} // namespace stamp

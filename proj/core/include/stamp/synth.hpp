#pragma once

#include <cstdint>
#include <filesystem>

#include "stamp/dataset.hpp"

namespace stamp {

// Synthetic MIL benchmark. Negative bags draw every instance from N(0, I);
// positive bags replace a witness fraction (at least one instance) with draws
// from one of motif_count Gaussians whose means sit motif_separation away
// from the origin along mutually orthogonal axes. The separation has to clear
// the extreme values of ~100 background instances by a wide margin before a
// handful of witnesses is learnable from a few hundred bags; the default is
// calibrated for that.
struct SynthConfig {
    int train_bags_per_class = 100;
    int val_bags_per_class = 25;
    int test_bags_per_class = 50;
    int min_instances = 60;
    int max_instances = 120;
    int feature_dim = 64;
    int motif_count = 3;             // 1..3
    double witness_rate_min = 0.03;  // fraction of instances per positive bag
    double witness_rate_max = 0.05;
    double motif_separation = 10.0;  // distance of motif means from origin
    double motif_stddev = 1.0;       // within-motif spread, in background stds
    std::uint64_t seed = 7;

    void validate() const;
};

// Generates bag files under out_dir/bags plus out_dir/manifest.csv and
// returns the index. A pure function of the config: identical configs yield
// byte-identical files.
DatasetIndex generate_synthetic_dataset(const SynthConfig& cfg,
                                        const std::filesystem::path& out_dir);

// In-memory variant used by tests and experiment harnesses.
LoadedDataset generate_synthetic_bags(const SynthConfig& cfg);

} // namespace stamp

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "stamp/bag.hpp"
#include "stamp/dataset.hpp"
#include "stamp/errors.hpp"
#include "stamp/synth.hpp"

using namespace stamp;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("stamp_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

InstanceBag random_bag(Rng& rng, const std::string& id, bool with_labels) {
    std::uniform_int_distribution<int> n_dist(1, 8), d_dist(1, 6), bit(0, 1);
    std::normal_distribution<float> gauss(0.f, 1.f);
    InstanceBag bag;
    bag.bag_id = id;
    const int n = n_dist(rng), d = d_dist(rng);
    bag.features.resize(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) bag.features(i, j) = gauss(rng);
    if (with_labels) {
        std::vector<std::uint8_t> labels(static_cast<size_t>(n));
        for (auto& l : labels) l = static_cast<std::uint8_t>(bit(rng));
        bag.label = bag_label_from_instances(labels);
        bag.instance_labels = std::move(labels);
    } else {
        bag.label = bit(rng);
    }
    return bag;
}

} // namespace

TEST_CASE("bag label rule") {
    CHECK(bag_label_from_instances({0, 0, 0}) == 0);
    CHECK(bag_label_from_instances({0, 1, 0}) == 1);
    CHECK(bag_label_from_instances({1, 1, 1}) == 1);
    CHECK(bag_label_from_instances({0}) == 0);
    CHECK_THROWS_AS(bag_label_from_instances({}), ValueError);
    CHECK_THROWS_AS(bag_label_from_instances({0, 2}), ValueError);
}

TEST_CASE("bag label rule matches direct sum over random vectors") {
    Rng rng(123);
    std::uniform_int_distribution<int> len(1, 40), bit(0, 1);
    for (int t = 0; t < 10000; ++t) {
        std::vector<std::uint8_t> v(static_cast<size_t>(len(rng)));
        int sum = 0;
        for (auto& x : v) {
            x = static_cast<std::uint8_t>(bit(rng));
            sum += x;
        }
        CHECK(bag_label_from_instances(v) == (sum == 0 ? 0 : 1));
    }
}

TEST_CASE("bag file roundtrip reproduces the bag exactly") {
    const auto dir = temp_dir("bag_roundtrip");
    InstanceBag bag;
    bag.bag_id = "b0";
    bag.features.resize(3, 4);
    float v = 0.25f;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) bag.features(i, j) = (v *= -1.7f);
    bag.label = 1;
    bag.instance_labels = std::vector<std::uint8_t>{0, 1, 0};

    const auto path = dir / "b0.smb";
    write_bag(bag, path);
    const auto back = read_bag(path);
    CHECK(back.bag_id == "b0");
    CHECK(back.label == 1);
    CHECK(back.features == bag.features);
    REQUIRE(back.instance_labels.has_value());
    CHECK(*back.instance_labels == *bag.instance_labels);
}

TEST_CASE("bag file roundtrip identity over random bags") {
    const auto dir = temp_dir("bag_prop");
    Rng rng(7);
    for (int t = 0; t < 200; ++t) {
        const auto bag = random_bag(rng, "bag" + std::to_string(t), t % 2 == 0);
        const auto path = dir / (bag.bag_id + ".smb");
        write_bag(bag, path);
        const auto back = read_bag(path);
        CHECK(back.features == bag.features);
        CHECK(back.label == bag.label);
        CHECK(back.instance_labels.has_value() == bag.instance_labels.has_value());
        if (bag.instance_labels) CHECK(*back.instance_labels == *bag.instance_labels);
    }
}

TEST_CASE("bag file format errors") {
    const auto dir = temp_dir("bag_errors");

    SUBCASE("declared n larger than payload is a truncation error") {
        const auto path = dir / "trunc.smb";
        std::ofstream os(path, std::ios::binary);
        os.write("SMB1", 4);
        std::uint32_t n = 5, d = 4;
        os.write(reinterpret_cast<char*>(&n), 4);
        os.write(reinterpret_cast<char*>(&d), 4);
        char flags[2] = {1, 0};
        os.write(flags, 2);
        std::vector<float> rows(4 * 4, 1.0f); // one row short
        os.write(reinterpret_cast<char*>(rows.data()), 4 * 16);
        os.close();
        CHECK_THROWS_AS(read_bag(path), FormatError);
        CHECK_THROWS_WITH_AS(read_bag(path), doctest::Contains("feature payload"),
                             FormatError);
    }

    SUBCASE("NaN feature is a validation error") {
        const auto path = dir / "nan.smb";
        std::ofstream os(path, std::ios::binary);
        os.write("SMB1", 4);
        std::uint32_t n = 1, d = 2;
        os.write(reinterpret_cast<char*>(&n), 4);
        os.write(reinterpret_cast<char*>(&d), 4);
        char flags[2] = {0, 0};
        os.write(flags, 2);
        float vals[2] = {1.0f, std::numeric_limits<float>::quiet_NaN()};
        os.write(reinterpret_cast<char*>(vals), 8);
        os.close();
        CHECK_THROWS_AS(read_bag(path), ValueError);
    }

    SUBCASE("bad magic") {
        const auto path = dir / "magic.smb";
        std::ofstream os(path, std::ios::binary);
        os.write("NOPE", 4);
        os.close();
        CHECK_THROWS_AS(read_bag(path), FormatError);
    }

    SUBCASE("d mismatch against expected dimension") {
        const auto path = dir / "dmis.smb";
        InstanceBag bag;
        bag.bag_id = "dmis";
        bag.features = MatF::Ones(2, 3);
        bag.label = 0;
        write_bag(bag, path);
        CHECK_THROWS_WITH_AS(read_bag(path, 5), doctest::Contains("manifest"), FormatError);
    }

    SUBCASE("inconsistent bag label vs instance labels rejected on write") {
        InstanceBag bag;
        bag.bag_id = "bad";
        bag.features = MatF::Ones(2, 2);
        bag.label = 0;
        bag.instance_labels = std::vector<std::uint8_t>{0, 1};
        CHECK_THROWS_AS(write_bag(bag, dir / "bad.smb"), ValueError);
    }
}

TEST_CASE("synthetic generator basic contracts") {
    const auto dir = temp_dir("synth_basic");
    SynthConfig cfg;
    cfg.train_bags_per_class = 10;
    cfg.val_bags_per_class = 2;
    cfg.test_bags_per_class = 2;
    cfg.min_instances = 5;
    cfg.max_instances = 15;
    cfg.feature_dim = 8;
    cfg.seed = 5;

    const auto index = generate_synthetic_dataset(cfg, dir);
    CHECK(index.entries.size() == 28);

    int pos = 0, neg = 0;
    for (const auto& e : index.entries) (e.label ? pos : neg) += 1;
    CHECK(pos == 14);
    CHECK(neg == 14);

    // Every positive bag carries at least one witness and the label rule holds
    // (read_bag validates the rule; the witness check is explicit).
    for (const auto& e : index.entries) {
        const auto bag = read_bag(dir / e.path);
        REQUIRE(bag.instance_labels.has_value());
        CHECK(bag_label_from_instances(*bag.instance_labels) == bag.label);
        if (e.label == 1) {
            int witnesses = 0;
            for (auto l : *bag.instance_labels) witnesses += l;
            CHECK(witnesses >= 1);
        }
    }
}

TEST_CASE("synthetic generation is a pure function of the config") {
    const auto dir_a = temp_dir("synth_det_a");
    const auto dir_b = temp_dir("synth_det_b");
    SynthConfig cfg;
    cfg.train_bags_per_class = 4;
    cfg.val_bags_per_class = 1;
    cfg.test_bags_per_class = 1;
    cfg.min_instances = 3;
    cfg.max_instances = 9;
    cfg.feature_dim = 6;
    cfg.motif_count = 2;
    cfg.seed = 99;

    generate_synthetic_dataset(cfg, dir_a);
    generate_synthetic_dataset(cfg, dir_b);

    for (const auto& entry : fs::recursive_directory_iterator(dir_a)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), dir_a);
        std::ifstream fa(entry.path(), std::ios::binary);
        std::ifstream fb(dir_b / rel, std::ios::binary);
        REQUIRE(fb.good());
        std::string a((std::istreambuf_iterator<char>(fa)), {});
        std::string b((std::istreambuf_iterator<char>(fb)), {});
        CHECK(a == b);
    }
}

TEST_CASE("empirical witness fraction tracks the configured rate") {
    SynthConfig cfg;
    cfg.train_bags_per_class = 900;
    cfg.val_bags_per_class = 50;
    cfg.test_bags_per_class = 50;
    cfg.min_instances = 60;
    cfg.max_instances = 120;
    cfg.feature_dim = 4; // rate statistics do not depend on d
    cfg.motif_count = 3;
    cfg.witness_rate_min = 0.03;
    cfg.witness_rate_max = 0.05;
    cfg.seed = 11;

    const auto ds = generate_synthetic_bags(cfg);
    double frac_sum = 0;
    int pos_bags = 0;
    for (const auto* split : {&ds.train, &ds.val, &ds.test})
        for (const auto& bag : *split) {
            if (bag.label != 1) continue;
            int w = 0;
            for (auto l : *bag.instance_labels) w += l;
            frac_sum += static_cast<double>(w) / static_cast<double>(bag.num_instances());
            ++pos_bags;
        }
    CHECK(pos_bags == 1000);
    const double mean_rate = frac_sum / pos_bags;
    const double target = 0.04;
    CHECK(mean_rate > target * 0.8);
    CHECK(mean_rate < target * 1.2);
}

TEST_CASE("config validation for the generator") {
    SynthConfig cfg;
    SUBCASE("witness rate above 1") {
        cfg.witness_rate_max = 1.5;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("zero witness rate") {
        cfg.witness_rate_min = 0.0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("motif count out of range") {
        cfg.motif_count = 4;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
}

TEST_CASE("stratified split") {
    const auto dir = temp_dir("split");
    // 100 entries, 50 per class; files must exist for the index to be usable
    // but split assignment itself only needs the entries.
    DatasetIndex index;
    index.root = dir;
    for (int i = 0; i < 100; ++i) {
        IndexEntry e;
        e.bag_id = "bag_" + std::to_string(i);
        e.path = e.bag_id + ".smb";
        e.label = i % 2;
        e.split = Split::train;
        index.entries.push_back(e);
    }

    SUBCASE("80/10/10 with class balance") {
        split_dataset(index, {0.8, 0.1, 0.1}, 3);
        std::array<int, 3> counts{};
        std::array<int, 3> pos{};
        for (const auto& e : index.entries) {
            counts[static_cast<size_t>(e.split)] += 1;
            if (e.label) pos[static_cast<size_t>(e.split)] += 1;
        }
        CHECK(counts == std::array<int, 3>{80, 10, 10});
        CHECK(pos == std::array<int, 3>{40, 5, 5});
    }

    SUBCASE("deterministic in the seed") {
        auto a = index, b = index;
        split_dataset(a, {0.6, 0.2, 0.2}, 17);
        split_dataset(b, {0.6, 0.2, 0.2}, 17);
        for (size_t i = 0; i < a.entries.size(); ++i)
            CHECK(a.entries[i].split == b.entries[i].split);
        split_dataset(b, {0.6, 0.2, 0.2}, 18);
        int diff = 0;
        for (size_t i = 0; i < a.entries.size(); ++i)
            diff += a.entries[i].split != b.entries[i].split;
        CHECK(diff > 0);
    }

    SUBCASE("bad ratio sum") {
        CHECK_THROWS_AS(split_dataset(index, {0.5, 0.5, 0.1}, 0), ValueError);
    }

    SUBCASE("class smaller than the split count") {
        DatasetIndex tiny;
        for (int i = 0; i < 8; ++i) {
            IndexEntry e;
            e.bag_id = "b" + std::to_string(i);
            e.path = e.bag_id + ".smb";
            e.label = i < 2 ? 1 : 0; // only two positive bags
            tiny.entries.push_back(e);
        }
        CHECK_THROWS_WITH_AS(split_dataset(tiny, {0.8, 0.1, 0.1}, 0),
                             doctest::Contains("stratification"), ValueError);
    }
}

TEST_CASE("manifest roundtrip and validation") {
    const auto dir = temp_dir("manifest");
    SynthConfig cfg;
    cfg.train_bags_per_class = 3;
    cfg.val_bags_per_class = 1;
    cfg.test_bags_per_class = 1;
    cfg.min_instances = 2;
    cfg.max_instances = 4;
    cfg.feature_dim = 5;
    cfg.seed = 2;
    const auto index = generate_synthetic_dataset(cfg, dir);

    const auto back = read_manifest(dir / "manifest.csv");
    REQUIRE(back.entries.size() == index.entries.size());
    for (size_t i = 0; i < back.entries.size(); ++i) {
        CHECK(back.entries[i].bag_id == index.entries[i].bag_id);
        CHECK(back.entries[i].label == index.entries[i].label);
        CHECK(back.entries[i].split == index.entries[i].split);
    }

    SUBCASE("missing referenced file") {
        fs::remove(dir / index.entries[0].path);
        CHECK_THROWS_AS(read_manifest(dir / "manifest.csv"), FormatError);
    }

    SUBCASE("bad header") {
        std::ofstream os(dir / "bad.csv");
        os << "id,file,y,part\n";
        os.close();
        CHECK_THROWS_AS(read_manifest(dir / "bad.csv"), FormatError);
    }

    SUBCASE("duplicate bag id") {
        DatasetIndex dup = back;
        dup.entries.push_back(dup.entries[0]);
        CHECK_THROWS_AS(write_manifest(dup, dir / "dup.csv"), ValueError);
    }

    SUBCASE("loaded dataset has consistent splits and dims") {
        const auto ds = load_dataset(back);
        CHECK(ds.train.size() == 6);
        CHECK(ds.val.size() == 2);
        CHECK(ds.test.size() == 2);
        CHECK(ds.feature_dim == 5);
    }
}

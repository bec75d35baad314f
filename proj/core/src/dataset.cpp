#include "stamp/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "stamp/errors.hpp"

namespace stamp {

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "val") return Split::val;
    if (name == "test") return Split::test;
    throw FormatError("unknown split '" + name + "' (expected train/val/test)");
}

std::vector<const IndexEntry*> DatasetIndex::split_entries(Split s) const {
    std::vector<const IndexEntry*> out;
    for (const auto& e : entries)
        if (e.split == s) out.push_back(&e);
    return out;
}

void DatasetIndex::validate() const {
    if (entries.empty()) throw ValueError("dataset index is empty");
    std::set<std::string> ids;
    for (const auto& e : entries) {
        if (!ids.insert(e.bag_id).second)
            throw ValueError("duplicate bag_id '" + e.bag_id + "' in index");
        if (e.label != 0 && e.label != 1)
            throw ValueError("bag '" + e.bag_id + "': label must be 0 or 1");
    }
}

void write_manifest(const DatasetIndex& index, const std::filesystem::path& path) {
    index.validate();
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot open manifest '" + path.string() + "' for writing");
    os << "bag_id,path,label,split\n";
    for (const auto& e : index.entries)
        os << e.bag_id << ',' << e.path << ',' << e.label << ',' << split_name(e.split)
           << '\n';
    if (!os) throw FormatError("write failed for manifest '" + path.string() + "'");
}

DatasetIndex read_manifest(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open manifest '" + path.string() + "'");

    std::string line;
    if (!std::getline(is, line))
        throw FormatError("manifest '" + path.string() + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "bag_id,path,label,split")
        throw FormatError("manifest '" + path.string() +
                          "': header must be 'bag_id,path,label,split'");

    DatasetIndex index;
    index.root = path.parent_path();
    size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (fields.size() != 4)
            throw FormatError("manifest line " + std::to_string(line_no) +
                              ": expected 4 fields, got " + std::to_string(fields.size()));
        IndexEntry e;
        e.bag_id = fields[0];
        e.path = fields[1];
        try {
            size_t pos = 0;
            e.label = std::stoi(fields[2], &pos);
            if (pos != fields[2].size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw FormatError("manifest line " + std::to_string(line_no) +
                              ": label '" + fields[2] + "' is not an integer");
        }
        if (e.label != 0 && e.label != 1)
            throw FormatError("manifest line " + std::to_string(line_no) +
                              ": label must be 0 or 1");
        e.split = split_from_name(fields[3]);
        index.entries.push_back(std::move(e));
    }
    index.validate();
    for (const auto& e : index.entries) {
        auto full = index.root / e.path;
        if (!std::filesystem::exists(full))
            throw FormatError("manifest references missing file '" + full.string() + "'");
    }
    return index;
}

void split_dataset(DatasetIndex& index, const std::array<double, 3>& ratios,
                   std::uint64_t seed) {
    double sum = ratios[0] + ratios[1] + ratios[2];
    for (double r : ratios)
        if (r <= 0) throw ValueError("split ratios must be positive");
    if (std::abs(sum - 1.0) > 1e-9)
        throw ValueError("split ratios must sum to 1, got " + std::to_string(sum));
    index.validate();

    std::map<int, std::vector<size_t>> by_label;
    for (size_t i = 0; i < index.entries.size(); ++i)
        by_label[index.entries[i].label].push_back(i);

    for (auto& [label, ids] : by_label) {
        if (ids.size() < 3)
            throw ValueError("stratification failed: class " + std::to_string(label) +
                             " has " + std::to_string(ids.size()) +
                             " bags but 3 splits are requested");
        // Stable base order, then a seed- and class-keyed shuffle.
        std::sort(ids.begin(), ids.end(), [&](size_t a, size_t b) {
            return index.entries[a].bag_id < index.entries[b].bag_id;
        });
        Rng rng(mix_seed(seed ^ (0x51ab5e11u + static_cast<std::uint64_t>(label))));
        std::shuffle(ids.begin(), ids.end(), rng);

        const size_t m = ids.size();
        std::array<size_t, 3> counts{};
        std::array<double, 3> frac{};
        size_t assigned = 0;
        for (int s = 0; s < 3; ++s) {
            double exact = ratios[static_cast<size_t>(s)] * static_cast<double>(m);
            counts[static_cast<size_t>(s)] = static_cast<size_t>(exact);
            frac[static_cast<size_t>(s)] = exact - std::floor(exact);
            assigned += counts[static_cast<size_t>(s)];
        }
        while (assigned < m) { // largest remainder, ties to the earlier split
            int best = 0;
            for (int s = 1; s < 3; ++s)
                if (frac[static_cast<size_t>(s)] > frac[static_cast<size_t>(best)]) best = s;
            counts[static_cast<size_t>(best)] += 1;
            frac[static_cast<size_t>(best)] = -1;
            ++assigned;
        }
        size_t k = 0;
        for (int s = 0; s < 3; ++s)
            for (size_t c = 0; c < counts[static_cast<size_t>(s)]; ++c)
                index.entries[ids[k++]].split = static_cast<Split>(s);
    }
}

std::vector<InstanceBag> load_split(const DatasetIndex& index, Split split) {
    std::vector<InstanceBag> bags;
    std::optional<Eigen::Index> d =
        index.feature_dim > 0 ? std::optional<Eigen::Index>(index.feature_dim)
                              : std::nullopt;
    for (const auto& e : index.entries) {
        if (e.split != split) continue;
        auto bag = read_bag(index.root / e.path, d);
        if (bag.label != e.label)
            throw FormatError("bag '" + e.bag_id + "': label in file (" +
                              std::to_string(bag.label) + ") differs from manifest (" +
                              std::to_string(e.label) + ")");
        bag.bag_id = e.bag_id;
        if (!d) d = bag.feature_dim();
        bags.push_back(std::move(bag));
    }
    return bags;
}

LoadedDataset load_dataset(const DatasetIndex& index) {
    LoadedDataset ds;
    ds.train = load_split(index, Split::train);
    ds.val = load_split(index, Split::val);
    ds.test = load_split(index, Split::test);
    for (const auto* bags : {&ds.train, &ds.val, &ds.test})
        for (const auto& b : *bags) {
            if (ds.feature_dim == 0) ds.feature_dim = b.feature_dim();
            if (b.feature_dim() != ds.feature_dim)
                throw FormatError("bag '" + b.bag_id + "': d=" +
                                  std::to_string(b.feature_dim()) +
                                  " does not match manifest d=" +
                                  std::to_string(ds.feature_dim));
        }
    return ds;
}

} // namespace stamp

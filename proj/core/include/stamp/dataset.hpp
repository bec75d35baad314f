#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stamp/bag.hpp"

namespace stamp {

enum class Split { train, val, test };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct IndexEntry {
    std::string bag_id;
    std::string path; // relative to the manifest directory
    int label = 0;
    Split split = Split::train;
};

// Index of bag files plus their labels and split assignment.
struct DatasetIndex {
    std::vector<IndexEntry> entries;
    Eigen::Index feature_dim = 0;    // 0 = unknown until bags are read
    std::filesystem::path root;      // directory paths are resolved against

    std::vector<const IndexEntry*> split_entries(Split s) const;
    // Throws ValueError on duplicate ids or empty index.
    void validate() const;
};

// CSV manifest with header "bag_id,path,label,split".
void write_manifest(const DatasetIndex& index, const std::filesystem::path& path);
DatasetIndex read_manifest(const std::filesystem::path& path);

// Stratified train/val/test reassignment. Ratios must sum to 1 (within 1e-9);
// deterministic in seed; every class needs at least as many bags as splits.
void split_dataset(DatasetIndex& index, const std::array<double, 3>& ratios,
                   std::uint64_t seed);

// Bags of one split, loaded into memory in index order.
std::vector<InstanceBag> load_split(const DatasetIndex& index, Split split);

// All three splits at once; checks a consistent feature dimension.
struct LoadedDataset {
    std::vector<InstanceBag> train, val, test;
    Eigen::Index feature_dim = 0;
};
LoadedDataset load_dataset(const DatasetIndex& index);

} // namespace stamp

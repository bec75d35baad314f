#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stamp/linalg.hpp"

namespace stamp {

// One whole-slide image as a bag of patch feature vectors. Immutable after
// construction; safe to share across threads.
struct InstanceBag {
    std::string bag_id;
    MatF features; // n x d, one row per instance
    int label = 0; // {0,1}
    std::optional<std::vector<std::uint8_t>> instance_labels; // length n, {0,1}
    std::optional<std::vector<std::pair<int, int>>> coords;   // patch grid positions

    Eigen::Index num_instances() const { return features.rows(); }
    Eigen::Index feature_dim() const { return features.cols(); }

    // Throws ValueError on any violated invariant: n >= 1, finite features,
    // label in {0,1}, and the bag-label rule against instance_labels if present.
    void validate() const;
};

// Bag label from instance labels: 0 iff all instance labels are 0, else 1.
// Throws ValueError on an empty vector or entries outside {0,1}.
int bag_label_from_instances(const std::vector<std::uint8_t>& instance_labels);

// Binary bag file, magic "SMB1":
//   u32 n, u32 d (little endian), u8 label, u8 has_instance_labels,
//   n*d float32 row-major features, then n instance-label bytes when flagged.
void write_bag(const InstanceBag& bag, const std::filesystem::path& path);

// Reads and validates a bag. When expect_d is set, a differing feature
// dimension is a FormatError (manifest/bag mismatch).
InstanceBag read_bag(const std::filesystem::path& path,
                     std::optional<Eigen::Index> expect_d = std::nullopt);

} // namespace stamp

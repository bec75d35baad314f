#include "stamp/bag.hpp"

#include <cmath>
#include <fstream>

#include "stamp/errors.hpp"
#include "binio.hpp"

namespace stamp {

namespace {
constexpr char kMagic[4] = {'S', 'M', 'B', '1'};
}

int bag_label_from_instances(const std::vector<std::uint8_t>& instance_labels) {
    if (instance_labels.empty())
        throw ValueError("bag_label_from_instances: instance label vector is empty");
    int sum = 0;
    for (auto y : instance_labels) {
        if (y > 1) throw ValueError("bag_label_from_instances: labels must be 0 or 1");
        sum += y;
    }
    return sum == 0 ? 0 : 1;
}

void InstanceBag::validate() const {
    if (features.rows() < 1)
        throw ValueError("bag '" + bag_id + "': needs at least one instance");
    if (!all_finite(features))
        throw ValueError("bag '" + bag_id + "': non-finite feature value");
    if (label != 0 && label != 1)
        throw ValueError("bag '" + bag_id + "': label must be 0 or 1");
    if (instance_labels) {
        if (static_cast<Eigen::Index>(instance_labels->size()) != features.rows())
            throw ValueError("bag '" + bag_id + "': instance label count != instance count");
        if (bag_label_from_instances(*instance_labels) != label)
            throw ValueError("bag '" + bag_id +
                             "': label inconsistent with instance labels");
    }
    if (coords && static_cast<Eigen::Index>(coords->size()) != features.rows())
        throw ValueError("bag '" + bag_id + "': coord count != instance count");
}

void write_bag(const InstanceBag& bag, const std::filesystem::path& path) {
    bag.validate();
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open '" + path.string() + "' for writing");
    binio::write_bytes(os, kMagic, 4);
    binio::write_u32(os, static_cast<std::uint32_t>(bag.features.rows()));
    binio::write_u32(os, static_cast<std::uint32_t>(bag.features.cols()));
    binio::write_u8(os, static_cast<std::uint8_t>(bag.label));
    binio::write_u8(os, bag.instance_labels ? 1 : 0);
    binio::write_f32(os, bag.features.data(), static_cast<size_t>(bag.features.size()));
    if (bag.instance_labels)
        binio::write_bytes(os, bag.instance_labels->data(), bag.instance_labels->size());
    if (!os) throw FormatError("write failed for '" + path.string() + "'");
}

InstanceBag read_bag(const std::filesystem::path& path,
                     std::optional<Eigen::Index> expect_d) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open bag file '" + path.string() + "'");

    char magic[4];
    binio::read_bytes(is, magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("'" + path.string() + "': bad magic, not a bag file");

    const auto n = binio::read_u32(is, "n");
    const auto d = binio::read_u32(is, "d");
    if (n == 0) throw FormatError("'" + path.string() + "': field n is zero");
    if (d == 0) throw FormatError("'" + path.string() + "': field d is zero");
    if (expect_d && static_cast<Eigen::Index>(d) != *expect_d)
        throw FormatError("'" + path.string() + "': d=" + std::to_string(d) +
                          " does not match manifest d=" + std::to_string(*expect_d));

    const auto label = binio::read_u8(is, "label");
    if (label > 1) throw FormatError("'" + path.string() + "': field label must be 0 or 1");
    const auto has_labels = binio::read_u8(is, "has_instance_labels");
    if (has_labels > 1)
        throw FormatError("'" + path.string() + "': field has_instance_labels must be 0 or 1");

    InstanceBag bag;
    bag.bag_id = path.stem().string();
    bag.label = label;
    bag.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    binio::read_f32(is, bag.features.data(), static_cast<size_t>(n) * d,
                    "feature payload");
    if (has_labels) {
        std::vector<std::uint8_t> labels(n);
        binio::read_bytes(is, labels.data(), labels.size(), "instance labels");
        for (auto y : labels)
            if (y > 1)
                throw FormatError("'" + path.string() + "': instance label must be 0 or 1");
        bag.instance_labels = std::move(labels);
    }

    if (!all_finite(bag.features))
        throw ValueError("'" + path.string() + "': non-finite feature value");
    bag.validate();
    return bag;
}

} // namespace stamp

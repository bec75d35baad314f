#include "stamp/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "stamp/errors.hpp"
#include "binio.hpp"
#include "serde.hpp"

namespace stamp {

namespace {
constexpr char kMagic[4] = {'S', 'M', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;
} // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open '" + path.string() + "' for writing");

    binio::write_bytes(os, kMagic, 4);
    binio::write_u32(os, kVersion);

    nlohmann::json meta{{"model_kind", ckpt.model_kind},
                        {"model", model_config_to_json(ckpt.model_cfg)},
                        {"train", train_config_to_json(ckpt.train_cfg)},
                        {"epoch", ckpt.epoch},
                        {"val_metrics", metrics_record_to_json(ckpt.val_metrics)}};
    const std::string meta_str = meta.dump();
    binio::write_u32(os, static_cast<std::uint32_t>(meta_str.size()));
    binio::write_bytes(os, meta_str.data(), meta_str.size());

    binio::write_u32(os, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, tensor] : ckpt.tensors) {
        binio::write_u32(os, static_cast<std::uint32_t>(name.size()));
        binio::write_bytes(os, name.data(), name.size());
        binio::write_u32(os, 2); // rank
        binio::write_u32(os, static_cast<std::uint32_t>(tensor.rows()));
        binio::write_u32(os, static_cast<std::uint32_t>(tensor.cols()));
        binio::write_f32(os, tensor.data(), static_cast<size_t>(tensor.size()));
    }
    if (!os) throw FormatError("write failed for '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open checkpoint '" + path.string() + "'");

    char magic[4];
    binio::read_bytes(is, magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("'" + path.string() + "': bad magic, not a checkpoint");
    const auto version = binio::read_u32(is, "version");
    if (version != kVersion)
        throw FormatError("'" + path.string() + "': unsupported checkpoint version " +
                          std::to_string(version));

    const auto meta_len = binio::read_u32(is, "metadata length");
    std::string meta_str(meta_len, '\0');
    binio::read_bytes(is, meta_str.data(), meta_len, "metadata");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_str);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("'" + path.string() + "': bad metadata JSON: " + e.what());
    }

    Checkpoint ckpt;
    try {
        ckpt.model_kind = meta.at("model_kind").get<std::string>();
        ckpt.model_cfg = model_config_from_json(meta.at("model"));
        ckpt.train_cfg = train_config_from_json(meta.at("train"));
        ckpt.epoch = meta.at("epoch").get<int>();
        ckpt.val_metrics = metrics_record_from_json(meta.at("val_metrics"));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("'" + path.string() + "': incomplete metadata: " + e.what());
    }

    const auto count = binio::read_u32(is, "tensor count");
    ckpt.tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = binio::read_u32(is, "tensor name length");
        std::string name(name_len, '\0');
        binio::read_bytes(is, name.data(), name_len, "tensor name");
        const auto rank = binio::read_u32(is, "tensor rank");
        if (rank != 2)
            throw FormatError("'" + path.string() + "': tensor '" + name +
                              "' has rank " + std::to_string(rank) + ", expected 2");
        const auto rows = binio::read_u32(is, "tensor rows");
        const auto cols = binio::read_u32(is, "tensor cols");
        MatF m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        binio::read_f32(is, m.data(), static_cast<size_t>(rows) * cols,
                        "tensor '" + name + "' payload");
        ckpt.tensors.emplace_back(std::move(name), std::move(m));
    }

    // Validates tensor names and shapes against the stored config.
    model_from_checkpoint(ckpt);
    return ckpt;
}

std::unique_ptr<MilModel> model_from_checkpoint(const Checkpoint& ckpt) {
    auto model = make_model(ckpt.model_kind, ckpt.model_cfg, /*seed=*/0);
    auto views = model->tensors();
    if (views.size() != ckpt.tensors.size())
        throw FormatError("checkpoint holds " + std::to_string(ckpt.tensors.size()) +
                          " tensors but config '" + ckpt.model_kind + "' expects " +
                          std::to_string(views.size()));
    for (size_t i = 0; i < views.size(); ++i) {
        const auto& [name, stored] = ckpt.tensors[i];
        auto& [expect_name, view] = views[i];
        if (name != expect_name)
            throw FormatError("checkpoint tensor '" + name + "' does not match expected '" +
                              expect_name + "'");
        if (stored.rows() != view->rows() || stored.cols() != view->cols())
            throw FormatError("checkpoint tensor '" + name + "' has shape " +
                              std::to_string(stored.rows()) + "x" +
                              std::to_string(stored.cols()) + " but config expects " +
                              std::to_string(view->rows()) + "x" +
                              std::to_string(view->cols()));
        *view = stored;
    }
    return model;
}

Checkpoint checkpoint_from_model(MilModel& model, const TrainConfig& tc, int epoch,
                                 const MetricsRecord& val_metrics) {
    Checkpoint ckpt;
    ckpt.model_kind = model.kind();
    ckpt.model_cfg = model.config();
    ckpt.train_cfg = tc;
    ckpt.epoch = epoch;
    ckpt.val_metrics = val_metrics;
    for (auto& [name, tensor] : model.tensors()) ckpt.tensors.emplace_back(name, *tensor);
    return ckpt;
}

} // namespace stamp

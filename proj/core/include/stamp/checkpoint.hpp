#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "stamp/metrics.hpp"
#include "stamp/mil_model.hpp"
#include "stamp/train_config.hpp"

namespace stamp {

// Trained model snapshot. Tensors round-trip bit-exactly through disk.
struct Checkpoint {
    std::string model_kind = "stamp";
    ModelConfig model_cfg;
    TrainConfig train_cfg;
    int epoch = 0;
    MetricsRecord val_metrics; // at save time
    std::vector<std::pair<std::string, MatF>> tensors;
};

// File layout: magic "SMCK", u32 format version, u32 length + JSON metadata
// (model kind, configs, epoch, validation metrics), u32 tensor count, then per
// tensor: u32 name length, name bytes, u32 rank, u32 dims, float32 payload.
// All integers and floats little endian.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

// Parses and validates a checkpoint; metadata inconsistent with the stored
// tensor shapes is a FormatError.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Rebuilds a model of ckpt.model_kind and installs the stored tensors.
std::unique_ptr<MilModel> model_from_checkpoint(const Checkpoint& ckpt);

// Snapshot of a live model's tensors plus provenance metadata.
Checkpoint checkpoint_from_model(MilModel& model, const TrainConfig& tc, int epoch,
                                 const MetricsRecord& val_metrics);

} // namespace stamp

#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core/field.hpp"
#include "model/swin.hpp"

namespace scafm {

struct EpochStat {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_psnr = 0.0;
};

struct TrainingMeta {
    int epoch = 0;
    int64_t step = 0;
    std::string channel = "current";
    std::vector<EpochStat> history;
    std::string checkpoint_id;        // FNV-1a of the parameter payload
    std::vector<std::string> lineage; // ids of finetune ancestors, oldest first
};

// A trained (or in-training) model: config, named parameter tensors, and
// optionally the optimizer moments needed for exact resume.
struct Checkpoint {
    ModelConfig config;
    TrainingMeta meta;
    std::vector<std::pair<std::string, Tensor<float>>> tensors;
    std::vector<std::pair<std::string, Tensor<float>>> opt_state;
    int64_t opt_step = 0;

    static Checkpoint from_model(const SwinUpsampler<float>& model, TrainingMeta meta);
    void apply_to(SwinUpsampler<float>& model) const;
};

// "SCKP" container: magic | version u32 | json header (config + meta) |
// name-length-prefixed float32 tensor entries, little-endian.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::string compute_checkpoint_id(const Checkpoint& ckpt);

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

Tensor<float> field_to_tensor(const ScanField& f);

// Runs the upsampler on a normalized sparse field; the result is normalized,
// clamped to [0,1], and carries the input's metadata and recorded range.
ScanField upsample_field(const SwinUpsampler<float>& model, const ScanField& x);

} // namespace scafm

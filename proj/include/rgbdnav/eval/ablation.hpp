#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rgbdnav/data/dataset.hpp"
#include "rgbdnav/eval/metrics.hpp"
#include "rgbdnav/train/trainer.hpp"

namespace rgbdnav::eval {

struct AblationRow {
    models::FusionKind network = models::FusionKind::Emb;
    data::Modality kept = data::Modality::Color;  // the modality left intact
    MetricsReport metrics;
    data::Fingerprint train_fingerprint;
    double best_lr = 0.0;
    std::size_t best_epoch = 0;
};

struct AblationResult {
    AblationRow color_only;  // depth zeroed
    AblationRow depth_only;  // color zeroed
};

// Retrains from scratch on each single-modality dataset and evaluates on
// the matching zeroed test split. Artifacts go to out_dir/<arch>_<input>.
AblationResult run_ablation(models::FusionKind kind, const data::DatasetParts& parts, const train::TrainConfig& config,
                            const std::optional<std::string>& out_dir = std::nullopt,
                            const models::ModelConfig* model_config = nullptr);

// Plain-text table, one row per (network, input type) with the four metrics.
std::string format_ablation_table(const std::vector<AblationRow>& rows);

}  // namespace rgbdnav::eval

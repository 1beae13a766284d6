#include "rgbdnav/eval/ablation.hpp"

#include <cstdio>
#include <filesystem>

namespace rgbdnav::eval {

namespace {

AblationRow run_one(const models::ModelConfig& mc, const data::DatasetParts& parts, data::Modality kept,
                    const train::TrainConfig& config, const std::optional<std::string>& out_dir) {
    const auto zeroed = kept == data::Modality::Color ? data::Modality::Depth : data::Modality::Color;
    const auto tr = data::zero_modality(parts.train, zeroed);
    const auto va = data::zero_modality(parts.val, zeroed);
    const auto te = data::zero_modality(parts.test, zeroed);
    std::optional<std::string> dir;
    if (out_dir) {
        dir = (std::filesystem::path(*out_dir) /
               (std::string(models::fusion_tag(mc.fusion)) + "_" + std::string(data::modality_name(kept)))).string();
    }
    const auto result = train::run_experiment(mc, tr, va, config, dir);
    AblationRow row;
    row.network = mc.fusion;
    row.kept = kept;
    row.metrics = evaluate_offline(result.model, te, config.batch_size);
    row.train_fingerprint = data::fingerprint(tr);
    row.best_lr = result.grid.best_lr;
    row.best_epoch = result.record.best_epoch;
    return row;
}

}  // namespace

AblationResult run_ablation(models::FusionKind kind, const data::DatasetParts& parts, const train::TrainConfig& config,
                            const std::optional<std::string>& out_dir, const models::ModelConfig* model_config) {
    const models::ModelConfig mc = model_config ? *model_config : models::default_config(kind);
    if (mc.fusion != kind) throw ConfigError("model config fusion does not match the requested architecture");
    return {run_one(mc, parts, data::Modality::Color, config, out_dir),
            run_one(mc, parts, data::Modality::Depth, config, out_dir)};
}

std::string format_ablation_table(const std::vector<AblationRow>& rows) {
    std::string out = "network   input   MAE         RMSE        MedAE       VS\n";
    char buf[160];
    for (const auto& r : rows) {
        const std::string net = r.network == models::FusionKind::ConEmb ? "NetConEmb"
                                : r.network == models::FusionKind::Emb  ? "NetEmb"
                                                                        : "NetGated";
        char vs[32];
        if (r.metrics.vs_defined()) {
            std::snprintf(vs, sizeof vs, "%.4f", r.metrics.vs);
        } else {
            std::snprintf(vs, sizeof vs, "undefined");
        }
        std::snprintf(buf, sizeof buf, "%-9s %-7s %-11.4e %-11.4e %-11.4e %s\n", net.c_str(),
                      r.kept == data::Modality::Color ? "RGB" : "Depth", r.metrics.mae, r.metrics.rmse, r.metrics.medae, vs);
        out += buf;
    }
    return out;
}

}  // namespace rgbdnav::eval

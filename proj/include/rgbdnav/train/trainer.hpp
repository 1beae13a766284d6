#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rgbdnav/data/dataset.hpp"
#include "rgbdnav/error.hpp"
#include "rgbdnav/keyvalue.hpp"
#include "rgbdnav/models/fusion_net.hpp"
#include "rgbdnav/nn/checkpoint.hpp"

namespace rgbdnav::train {

struct TrainConfig {
    std::vector<double> lr_grid{1e-6, 3e-6, 3e-5, 1e-4, 3e-4};
    std::size_t grid_epochs = 5;
    double scheduler_factor = 0.2;
    std::size_t scheduler_patience = 3;
    std::size_t early_stop_patience = 5;
    double min_delta = 1e-6;
    std::size_t max_epochs = 100;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
};

// Throws ConfigError naming the violated field.
void validate(const TrainConfig& config);
KeyValue to_keyvalue(const TrainConfig& config);
// Overrides fields present under "train.*"; others keep their defaults.
TrainConfig from_keyvalue(const KeyValue& kv, TrainConfig base = {});

// Non-finite training loss; carries where it happened.
class TrainingDiverged : public InvalidState {
public:
    TrainingDiverged(std::size_t epoch, std::size_t batch, double lr);
    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t batch() const noexcept { return batch_; }
    double lr() const noexcept { return lr_; }

private:
    std::size_t epoch_, batch_;
    double lr_;
};

class GridFailure : public InvalidState {
public:
    using InvalidState::InvalidState;
};

// Shared improvement predicate driving the scheduler and early stopping.
class PlateauController {
public:
    struct Decision {
        bool improved = false;
        bool reduce_lr = false;
        bool stop = false;
    };

    explicit PlateauController(const TrainConfig& config);

    // Feeds the val loss of the epoch just finished (1-based epochs).
    Decision observe(double val_loss);

    double best() const noexcept { return best_; }
    std::size_t best_epoch() const noexcept { return best_epoch_; }
    std::size_t plateau_count() const noexcept { return plateau_; }
    std::size_t stale_count() const noexcept { return stale_; }
    std::size_t epochs_seen() const noexcept { return epoch_; }

private:
    double min_delta_;
    std::size_t sched_patience_, stop_patience_;
    double best_ = std::numeric_limits<double>::infinity();
    std::size_t best_epoch_ = 0;
    std::size_t plateau_ = 0;
    std::size_t stale_ = 0;
    std::size_t epoch_ = 0;
};

// Something that can be trained one epoch at a time.
class TrainTarget {
public:
    virtual ~TrainTarget() = default;
    // One pass with optimizer steps; returns the mean per-sample loss.
    virtual double train_epoch(std::size_t epoch, double lr) = 0;
    virtual double val_loss() = 0;
    virtual nn::Checkpoint snapshot() const = 0;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;  // in effect during the epoch
    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainRecord {
    std::vector<EpochRecord> epochs;
    std::size_t stop_epoch = 0;
    std::size_t best_epoch = 0;
    double best_val_loss = std::numeric_limits<double>::infinity();
    nn::Checkpoint best_checkpoint;
};

TrainRecord train(TrainTarget& target, double initial_lr, const TrainConfig& config);

struct GridRow {
    double lr = 0.0;
    double final_train_loss = 0.0;  // +inf when the candidate diverged
};

struct GridResult {
    double best_lr = 0.0;
    std::vector<GridRow> rows;
};

// Argmin of final training loss; ties go to the smaller LR, +inf never wins.
double select_best_lr(const std::vector<GridRow>& rows);

using TargetFactory = std::function<std::unique_ptr<TrainTarget>()>;

// Trains a fresh target per LR for exactly grid_epochs epochs.
GridResult grid_search_lr(const TargetFactory& make_target, const TrainConfig& config);

// A fusion network trained with Adam on MSE over dataset views.
class ModelTarget : public TrainTarget {
public:
    ModelTarget(models::FusionNet<float> model, data::DatasetView train, data::DatasetView val, std::size_t batch_size,
                std::uint64_t shuffle_seed);

    double train_epoch(std::size_t epoch, double lr) override;
    double val_loss() override;
    nn::Checkpoint snapshot() const override { return model_.to_checkpoint(); }

    const models::FusionNet<float>& model() const noexcept { return model_; }
    models::FusionNet<float>& model() noexcept { return model_; }

private:
    models::FusionNet<float> model_;
    data::DatasetView train_, val_;
    std::size_t batch_size_;
    std::uint64_t shuffle_seed_;
    models::ForwardCache<float> cache_;
};

// Mean squared error of the model over a view in sequential batches.
double view_loss(const models::FusionNet<float>& model, const data::DatasetView& view, std::size_t batch_size);

struct ExperimentSeeds {
    std::uint64_t init = 0;
    std::uint64_t shuffle = 0;
};
ExperimentSeeds experiment_seeds(std::uint64_t seed, models::FusionKind kind);

struct ExperimentResult {
    models::FusionNet<float> model;  // restored from the best epoch
    TrainRecord record;
    GridResult grid;
    ExperimentSeeds seeds;
};

// Grid search, then a full run from the winning LR. When out_dir is set,
// writes model.ckpt, loss_curve.csv, grid.csv and run.txt there.
ExperimentResult run_experiment(models::FusionKind kind, const data::DatasetParts& parts, const TrainConfig& config,
                                const std::optional<std::string>& out_dir = std::nullopt,
                                const models::ModelConfig* model_config = nullptr);

// Same, with explicit train and val views.
ExperimentResult run_experiment(const models::ModelConfig& model_config, const data::DatasetView& train,
                                const data::DatasetView& val, const TrainConfig& config,
                                const std::optional<std::string>& out_dir = std::nullopt);

std::string loss_curve_csv(const TrainRecord& record);
std::string grid_csv(const GridResult& grid);

// Optional progress sink (one line per epoch); silent by default.
void set_progress_sink(std::function<void(const std::string&)> sink);

}  // namespace rgbdnav::train

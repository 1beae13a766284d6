#include "rgbdnav/train/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "rgbdnav/binary_io.hpp"
#include "rgbdnav/nn/ops.hpp"
#include "rgbdnav/random.hpp"

namespace rgbdnav::train {

namespace {

std::function<void(const std::string&)>& progress_sink() {
    static std::function<void(const std::string&)> sink;
    return sink;
}

void progress(const std::string& line) {
    if (progress_sink()) progress_sink()(line);
}

}  // namespace

void set_progress_sink(std::function<void(const std::string&)> sink) { progress_sink() = std::move(sink); }

void validate(const TrainConfig& c) {
    if (c.lr_grid.empty()) throw ConfigError("train.lr_grid must not be empty");
    for (const double lr : c.lr_grid) {
        if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr_grid entries must be positive");
    }
    if (!(c.scheduler_factor > 0.0 && c.scheduler_factor < 1.0)) throw ConfigError("train.scheduler_factor must be in (0,1)");
    if (c.scheduler_patience < 1) throw ConfigError("train.scheduler_patience must be >= 1");
    if (c.early_stop_patience < 1) throw ConfigError("train.early_stop_patience must be >= 1");
    if (!(c.min_delta >= 0.0)) throw ConfigError("train.min_delta must be >= 0");
    if (c.max_epochs < 1) throw ConfigError("train.max_epochs must be >= 1");
    if (c.grid_epochs < 1) throw ConfigError("train.grid_epochs must be >= 1");
    if (c.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
}

KeyValue to_keyvalue(const TrainConfig& c) {
    KeyValue kv;
    std::string grid;
    for (std::size_t i = 0; i < c.lr_grid.size(); ++i) grid += (i ? "," : "") + format_number(c.lr_grid[i]);
    kv.set("train.lr_grid", grid);
    kv.set("train.grid_epochs", static_cast<long long>(c.grid_epochs));
    kv.set("train.scheduler_factor", c.scheduler_factor);
    kv.set("train.scheduler_patience", static_cast<long long>(c.scheduler_patience));
    kv.set("train.early_stop_patience", static_cast<long long>(c.early_stop_patience));
    kv.set("train.min_delta", c.min_delta);
    kv.set("train.max_epochs", static_cast<long long>(c.max_epochs));
    kv.set("train.batch_size", static_cast<long long>(c.batch_size));
    kv.set("train.seed", std::to_string(c.seed));
    return kv;
}

TrainConfig from_keyvalue(const KeyValue& kv, TrainConfig c) {
    const auto count = [&](const char* key, std::size_t& field) {
        if (!kv.contains(key)) return;
        const long long v = kv.get_int(key);
        if (v < 0) throw ConfigError(std::string(key) + " must be >= 0");
        field = static_cast<std::size_t>(v);
    };
    if (kv.contains("train.lr_grid")) {
        c.lr_grid.clear();
        std::stringstream ss(kv.get("train.lr_grid"));
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                std::size_t used = 0;
                c.lr_grid.push_back(std::stod(item, &used));
                if (used != item.size()) throw std::invalid_argument(item);
            } catch (const std::exception&) {
                throw ConfigError("train.lr_grid: bad entry '" + item + "'");
            }
        }
    }
    count("train.grid_epochs", c.grid_epochs);
    c.scheduler_factor = kv.get_double("train.scheduler_factor", c.scheduler_factor);
    count("train.scheduler_patience", c.scheduler_patience);
    count("train.early_stop_patience", c.early_stop_patience);
    c.min_delta = kv.get_double("train.min_delta", c.min_delta);
    count("train.max_epochs", c.max_epochs);
    count("train.batch_size", c.batch_size);
    if (kv.contains("train.seed")) {
        try {
            c.seed = std::stoull(kv.get("train.seed"));
        } catch (const std::exception&) {
            throw ConfigError("train.seed must be a non-negative integer");
        }
    }
    validate(c);
    return c;
}

TrainingDiverged::TrainingDiverged(std::size_t epoch, std::size_t batch, double lr)
    : InvalidState("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) +
                   ", lr " + format_number(lr)),
      epoch_(epoch),
      batch_(batch),
      lr_(lr) {}

PlateauController::PlateauController(const TrainConfig& config)
    : min_delta_(config.min_delta),
      sched_patience_(config.scheduler_patience),
      stop_patience_(config.early_stop_patience) {}

PlateauController::Decision PlateauController::observe(double val_loss) {
    ++epoch_;
    Decision d;
    if (std::isfinite(val_loss) && val_loss < best_ - min_delta_) {
        d.improved = true;
        best_ = val_loss;
        best_epoch_ = epoch_;
        plateau_ = 0;
        stale_ = 0;
        return d;
    }
    ++plateau_;
    ++stale_;
    if (plateau_ >= sched_patience_) {
        d.reduce_lr = true;
        plateau_ = 0;
    }
    d.stop = stale_ >= stop_patience_;
    return d;
}

TrainRecord train(TrainTarget& target, double initial_lr, const TrainConfig& config) {
    validate(config);
    if (!(initial_lr > 0.0)) throw ConfigError("initial learning rate must be positive");
    TrainRecord rec;
    PlateauController ctl(config);
    double lr = initial_lr;
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        EpochRecord er;
        er.epoch = epoch;
        er.lr = lr;
        er.train_loss = target.train_epoch(epoch, lr);
        er.val_loss = target.val_loss();
        rec.epochs.push_back(er);
        const auto d = ctl.observe(er.val_loss);
        progress("epoch " + std::to_string(epoch) + " lr=" + format_number(lr) + " train=" + format_number(er.train_loss) +
                 " val=" + format_number(er.val_loss) + (d.improved ? " *" : ""));
        if (d.improved) {
            rec.best_epoch = epoch;
            rec.best_val_loss = er.val_loss;
            rec.best_checkpoint = target.snapshot();
        }
        rec.stop_epoch = epoch;
        if (d.reduce_lr) lr *= config.scheduler_factor;
        if (d.stop) break;
    }
    if (rec.best_epoch == 0) throw TrainingDiverged(rec.stop_epoch, 0, lr);
    return rec;
}

double select_best_lr(const std::vector<GridRow>& rows) {
    const GridRow* best = nullptr;
    for (const auto& r : rows) {
        if (!std::isfinite(r.final_train_loss)) continue;
        if (!best || r.final_train_loss < best->final_train_loss ||
            (r.final_train_loss == best->final_train_loss && r.lr < best->lr)) {
            best = &r;
        }
    }
    if (!best) throw GridFailure("every learning-rate candidate diverged");
    return best->lr;
}

GridResult grid_search_lr(const TargetFactory& make_target, const TrainConfig& config) {
    validate(config);
    GridResult out;
    for (const double lr : config.lr_grid) {
        auto target = make_target();
        double loss = std::numeric_limits<double>::infinity();
        try {
            for (std::size_t e = 1; e <= config.grid_epochs; ++e) loss = target->train_epoch(e, lr);
        } catch (const TrainingDiverged&) {
            loss = std::numeric_limits<double>::infinity();
        }
        if (!std::isfinite(loss)) loss = std::numeric_limits<double>::infinity();
        progress("grid lr=" + format_number(lr) + " final_train=" + format_number(loss));
        out.rows.push_back({lr, loss});
    }
    out.best_lr = select_best_lr(out.rows);
    return out;
}

// ---- model target -----------------------------------------------------

ModelTarget::ModelTarget(models::FusionNet<float> model, data::DatasetView train, data::DatasetView val,
                         std::size_t batch_size, std::uint64_t shuffle_seed)
    : model_(std::move(model)),
      train_(std::move(train)),
      val_(std::move(val)),
      batch_size_(batch_size),
      shuffle_seed_(shuffle_seed) {
    if (train_.empty()) throw InvalidInput("training view is empty");
    if (val_.empty()) throw InvalidInput("validation view is empty");
    if (batch_size_ == 0) throw InvalidInput("batch size must be positive");
}

double ModelTarget::train_epoch(std::size_t epoch, double lr) {
    const auto order = data::batch_order(train_.size(), batch_size_, shuffle_seed_, epoch);
    double sum = 0.0;
    std::size_t n = 0;
    nn::AdamConfig adam;
    adam.lr = lr;
    for (std::size_t b = 0; b < order.size(); ++b) {
        const auto batch = data::make_batch(train_, order[b]);
        const auto pred = model_.forward(batch.color, batch.depth, cache_);
        const float loss = nn::mse_loss(pred, batch.omega);
        if (!std::isfinite(loss)) throw TrainingDiverged(epoch, b + 1, lr);
        model_.backward(cache_, nn::mse_loss_backward(pred, batch.omega));
        nn::adam_step(model_.params(), adam);
        sum += static_cast<double>(loss) * static_cast<double>(order[b].size());
        n += order[b].size();
    }
    return sum / static_cast<double>(n);
}

double ModelTarget::val_loss() { return view_loss(model_, val_, batch_size_); }

double view_loss(const models::FusionNet<float>& model, const data::DatasetView& view, std::size_t batch_size) {
    if (view.empty()) throw InvalidInput("cannot take the loss of an empty view");
    double sum = 0.0;
    for (const auto& rows : data::sequential_order(view.size(), batch_size)) {
        const auto batch = data::make_batch(view, rows);
        const auto pred = model.forward(batch.color, batch.depth);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double d = static_cast<double>(pred[i]) - static_cast<double>(batch.omega[i]);
            sum += d * d;
        }
    }
    return sum / static_cast<double>(view.size());
}

ExperimentSeeds experiment_seeds(std::uint64_t seed, models::FusionKind kind) {
    const auto k = static_cast<std::uint64_t>(kind);
    return {mix_seed(seed, 100 + k), mix_seed(seed, 200 + k)};
}

std::string loss_curve_csv(const TrainRecord& record) {
    std::ostringstream os;
    os << "epoch,train_loss,val_loss,lr\n";
    for (const auto& e : record.epochs) {
        os << e.epoch << ',' << format_number(e.train_loss) << ',' << format_number(e.val_loss) << ','
           << format_number(e.lr) << '\n';
    }
    return os.str();
}

std::string grid_csv(const GridResult& grid) {
    std::ostringstream os;
    os << "lr,final_train_loss\n";
    for (const auto& r : grid.rows) {
        os << format_number(r.lr) << ',' << (std::isfinite(r.final_train_loss) ? format_number(r.final_train_loss) : "inf")
           << '\n';
    }
    return os.str();
}

ExperimentResult run_experiment(const models::ModelConfig& model_config, const data::DatasetView& train_view,
                                const data::DatasetView& val_view, const TrainConfig& config,
                                const std::optional<std::string>& out_dir) {
    validate(config);
    models::validate(model_config);
    if (train_view.empty() || val_view.empty()) throw InvalidInput("experiment needs non-empty train and val views");
    if (train_view.image_h() != model_config.input_h || train_view.image_w() != model_config.input_w) {
        throw ShapeError("dataset images are " + std::to_string(train_view.image_h()) + "x" +
                         std::to_string(train_view.image_w()) + " but the model input is " +
                         std::to_string(model_config.input_h) + "x" + std::to_string(model_config.input_w));
    }
    const auto seeds = experiment_seeds(config.seed, model_config.fusion);
    const TargetFactory factory = [&]() -> std::unique_ptr<TrainTarget> {
        return std::make_unique<ModelTarget>(models::FusionNet<float>::build(model_config, seeds.init), train_view,
                                             val_view, config.batch_size, seeds.shuffle);
    };
    progress(std::string("experiment ") + std::string(models::fusion_tag(model_config.fusion)) + " init_seed=" +
             std::to_string(seeds.init) + " shuffle_seed=" + std::to_string(seeds.shuffle));
    GridResult grid = grid_search_lr(factory, config);
    auto target = factory();
    TrainRecord record = train(*target, grid.best_lr, config);
    auto model = models::FusionNet<float>::from_checkpoint(record.best_checkpoint);

    if (out_dir) {
        std::error_code ec;
        std::filesystem::create_directories(*out_dir, ec);
        if (ec) throw IoError("cannot create " + *out_dir + ": " + ec.message());
        const std::filesystem::path root(*out_dir);
        nn::save_checkpoint((root / "model.ckpt").string(), record.best_checkpoint);
        write_file((root / "loss_curve.csv").string(), loss_curve_csv(record));
        write_file((root / "grid.csv").string(), grid_csv(grid));
        KeyValue run = to_keyvalue(config);
        run.merge(models::to_keyvalue(model_config));
        run.set("run.init_seed", std::to_string(seeds.init));
        run.set("run.shuffle_seed", std::to_string(seeds.shuffle));
        run.set("run.best_lr", grid.best_lr);
        run.set("run.best_epoch", static_cast<long long>(record.best_epoch));
        run.set("run.stop_epoch", static_cast<long long>(record.stop_epoch));
        run.set("run.best_val_loss", record.best_val_loss);
        run.set("run.train_samples", static_cast<long long>(train_view.size()));
        run.set("run.val_samples", static_cast<long long>(val_view.size()));
        write_file((root / "run.txt").string(), run.to_string());
    }
    return {std::move(model), std::move(record), std::move(grid), seeds};
}

ExperimentResult run_experiment(models::FusionKind kind, const data::DatasetParts& parts, const TrainConfig& config,
                                const std::optional<std::string>& out_dir, const models::ModelConfig* model_config) {
    const models::ModelConfig cfg = model_config ? *model_config : models::default_config(kind);
    if (cfg.fusion != kind) throw ConfigError("model config fusion does not match the requested architecture");
    return run_experiment(cfg, parts.train, parts.val, config, out_dir);
}

}  // namespace rgbdnav::train

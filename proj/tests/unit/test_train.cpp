#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "rgbdnav/binary_io.hpp"
#include "rgbdnav/data/dataset.hpp"
#include "rgbdnav/error.hpp"
#include "rgbdnav/models/fusion_net.hpp"
#include "rgbdnav/random.hpp"
#include "rgbdnav/train/trainer.hpp"

#include <unistd.h>

using namespace rgbdnav;
using namespace rgbdnav::train;
namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Plays back a fixed val-loss sequence; snapshots record the epoch.
class ScriptedTarget : public TrainTarget {
public:
    explicit ScriptedTarget(std::vector<double> val) : val_(std::move(val)) {}
    double train_epoch(std::size_t epoch, double lr) override {
        epoch_ = epoch;
        lrs.push_back(lr);
        return 1.0 / double(epoch);
    }
    double val_loss() override { return val_.at(std::min(epoch_, val_.size()) - 1); }
    nn::Checkpoint snapshot() const override {
        nn::Checkpoint c;
        c.config.set("epoch", static_cast<long long>(epoch_));
        return c;
    }
    std::vector<double> lrs;

private:
    std::vector<double> val_;
    std::size_t epoch_ = 0;
};

// Final loss is a fixed function of the LR.
class LrTarget : public TrainTarget {
public:
    explicit LrTarget(std::function<double(double)> f) : f_(std::move(f)) {}
    double train_epoch(std::size_t, double lr) override {
        ++calls;
        return f_(lr);
    }
    double val_loss() override { return 0.0; }
    nn::Checkpoint snapshot() const override { return {}; }
    int calls = 0;

private:
    std::function<double(double)> f_;
};

std::vector<GridRow> rows(const std::vector<double>& lrs, const std::vector<double>& losses) {
    std::vector<GridRow> out;
    for (std::size_t i = 0; i < lrs.size(); ++i) out.push_back({lrs[i], losses[i]});
    return out;
}

const std::vector<double> kGrid{1e-6, 3e-6, 3e-5, 1e-4, 3e-4};

models::ModelConfig tiny_config(models::FusionKind kind) {
    models::ModelConfig c = models::default_config(kind);
    c.input_h = 8;
    c.input_w = 8;
    c.conv_spec = {{2, 3, 2, 1}, {3, 3, 2, 1}};
    c.embed_dim = 4;
    c.head_widths = {5, 1};
    return c;
}

std::vector<data::Episode> tiny_episodes(std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<data::Episode> eps;
    for (std::size_t e = 0; e < count; ++e) {
        data::Episode ep;
        ep.id = "e" + std::to_string(e);
        ep.map_id = "m";
        for (std::size_t i = 0; i < 12; ++i) {
            data::Sample s;
            s.color = nn::Tensor<float>({3, 8, 8});
            s.depth = nn::Tensor<float>({1, 8, 8});
            for (auto& v : s.color.data()) v = float(rng.uniform());
            double left = 0, right = 0;
            for (std::size_t r = 0; r < 8; ++r) {
                for (std::size_t c = 0; c < 8; ++c) {
                    const float v = float(rng.uniform());
                    s.depth[r * 8 + c] = v;
                    (c < 4 ? left : right) += v;
                }
            }
            s.omega_label = float(std::clamp((left - right) / 16.0, -1.0, 1.0));
            s.t = 0.2 * double(i);
            s.map_id = "m";
            ep.samples.push_back(std::move(s));
        }
        eps.push_back(std::move(ep));
    }
    return eps;
}

TrainConfig quick_config() {
    TrainConfig c;
    c.lr_grid = {1e-3, 1e-2};
    c.grid_epochs = 2;
    c.max_epochs = 6;
    c.batch_size = 8;
    c.seed = 5;
    return c;
}

}  // namespace

TEST_CASE("grid selection on the recorded rows") {
    CHECK(select_best_lr(rows(kGrid, {0.004212, 0.003807, 0.002483, 0.002042, 0.002245})) == 1e-4);
    CHECK(select_best_lr(rows(kGrid, {0.004170, 0.004128, 0.001919, 0.001897, 0.001543})) == 3e-4);
    CHECK(select_best_lr(rows(kGrid, {0.004328, 0.004327, 0.002787, 0.004444, 0.004257})) == 3e-5);
}

TEST_CASE("grid selection tie, divergence and failure") {
    CHECK(select_best_lr(rows({3e-4, 1e-4}, {0.5, 0.5})) == 1e-4);
    CHECK(select_best_lr(rows({1e-4, 3e-4}, {0.5, 0.5})) == 1e-4);
    CHECK(select_best_lr(rows({1e-6, 1e-4}, {0.9, kInf})) == 1e-6);
    CHECK_THROWS_AS(select_best_lr(rows({1e-6, 1e-4}, {kInf, kInf})), GridFailure);
    CHECK_THROWS_AS(select_best_lr({}), GridFailure);
}

TEST_CASE("grid search trains each candidate exactly grid_epochs on a fresh target") {
    TrainConfig cfg;
    // Each finished candidate logs how many epochs it ran.
    std::vector<int> calls;
    const TargetFactory counting = [&]() -> std::unique_ptr<TrainTarget> {
        struct Counting : LrTarget {
            std::vector<int>* log;
            Counting(std::vector<int>* l) : LrTarget([](double lr) { return std::abs(std::log10(lr) + 4.2); }), log(l) {}
            ~Counting() override { log->push_back(calls); }
        };
        return std::make_unique<Counting>(&calls);
    };
    const auto g = grid_search_lr(counting, cfg);
    CHECK(g.best_lr == 1e-4);
    REQUIRE(g.rows.size() == 5);
    REQUIRE(calls.size() == 5);
    for (const int c : calls) CHECK(c == 5);
}

TEST_CASE("grid search records non-finite candidates as infinite") {
    TrainConfig cfg;
    const TargetFactory f = []() -> std::unique_ptr<TrainTarget> {
        return std::make_unique<LrTarget>([](double lr) { return lr > 5e-5 ? std::nan("") : lr; });
    };
    const auto g = grid_search_lr(f, cfg);
    CHECK(g.best_lr == 1e-6);
    CHECK(std::isinf(g.rows[3].final_train_loss));
    CHECK(std::isinf(g.rows[4].final_train_loss));
    const TargetFactory bad = []() -> std::unique_ptr<TrainTarget> {
        return std::make_unique<LrTarget>([](double) -> double { throw TrainingDiverged(1, 1, 0.1); });
    };
    CHECK_THROWS_AS(grid_search_lr(bad, cfg), GridFailure);
    CHECK(grid_csv(g).find("inf") != std::string::npos);
}

TEST_CASE("plateau trace: reduce at 5, stop at 7, best at 2") {
    TrainConfig cfg;
    ScriptedTarget t({1.0, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9});
    const auto rec = train::train(t, 1e-4, cfg);
    CHECK(rec.stop_epoch == 7);
    CHECK(rec.best_epoch == 2);
    CHECK(rec.best_val_loss == 0.9);
    CHECK(rec.best_checkpoint.config.get_int("epoch") == 2);
    REQUIRE(rec.epochs.size() == 7);
    for (std::size_t e = 0; e < 5; ++e) CHECK(rec.epochs[e].lr == 1e-4);
    CHECK(rec.epochs[5].lr == doctest::Approx(2e-5).epsilon(1e-14));
    CHECK(rec.epochs[6].lr == rec.epochs[5].lr);
}

TEST_CASE("strictly decreasing val losses run to max_epochs") {
    TrainConfig cfg;
    cfg.max_epochs = 12;
    std::vector<double> v;
    for (int i = 0; i < 12; ++i) v.push_back(1.0 - 0.01 * i);
    ScriptedTarget t(v);
    const auto rec = train::train(t, 3e-4, cfg);
    CHECK(rec.stop_epoch == 12);
    CHECK(rec.best_epoch == 12);
    for (const auto& e : rec.epochs) CHECK(e.lr == 3e-4);
}

TEST_CASE("improvement resets both counters") {
    TrainConfig cfg;
    PlateauController ctl(cfg);
    CHECK(ctl.observe(1.0).improved);
    CHECK_FALSE(ctl.observe(1.0).improved);
    CHECK_FALSE(ctl.observe(1.0 - 5e-7).improved);
    CHECK(ctl.plateau_count() == 2);
    CHECK(ctl.stale_count() == 2);
    CHECK(ctl.observe(0.5).improved);
    CHECK(ctl.plateau_count() == 0);
    CHECK(ctl.stale_count() == 0);
    CHECK(ctl.best_epoch() == 4);
    CHECK_FALSE(ctl.observe(std::nan("")).improved);
}

TEST_CASE("random traces: non-increasing LR by exact factors, best is the minimum") {
    Rng rng(77);
    for (int trial = 0; trial < 300; ++trial) {
        TrainConfig cfg;
        cfg.max_epochs = 40;
        cfg.scheduler_patience = 1 + rng.index(4);
        cfg.early_stop_patience = 1 + rng.index(8);
        std::vector<double> v;
        double level = 1.0;
        for (int i = 0; i < 40; ++i) {
            if (rng.uniform() < 0.3) level *= rng.uniform(0.8, 1.0);
            v.push_back(level + (rng.uniform() < 0.5 ? 0.0 : rng.uniform(0, 0.05)));
        }
        ScriptedTarget t(v);
        const auto rec = train::train(t, 3e-4, cfg);
        CHECK(rec.stop_epoch <= cfg.max_epochs);
        double lr = 3e-4;
        for (const auto& e : rec.epochs) {
            if (e.lr != lr) {
                CHECK(e.lr == lr * cfg.scheduler_factor);
                lr = e.lr;
            }
        }
        double best = kInf;
        std::size_t best_epoch = 0;
        for (const auto& e : rec.epochs) {
            if (e.val_loss < best - cfg.min_delta) {
                best = e.val_loss;
                best_epoch = e.epoch;
            }
        }
        CHECK(rec.best_epoch == best_epoch);
        CHECK(rec.best_val_loss == best);
        double min_val = kInf;
        for (const auto& e : rec.epochs) min_val = std::min(min_val, e.val_loss);
        CHECK(rec.best_val_loss - min_val <= cfg.min_delta);
    }
}

TEST_CASE("train config validation and key-value round trip") {
    TrainConfig c;
    CHECK_NOTHROW(validate(c));
    auto bad = c;
    bad.lr_grid.clear();
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = c;
    bad.scheduler_factor = 1.0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = c;
    bad.scheduler_patience = 0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = c;
    bad.early_stop_patience = 0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    c.seed = 123456789012345ULL;
    c.lr_grid = {1e-3, 2.5e-4};
    const auto back = from_keyvalue(to_keyvalue(c));
    CHECK(back.lr_grid == c.lr_grid);
    CHECK(back.seed == c.seed);
    CHECK(back.scheduler_factor == c.scheduler_factor);
    KeyValue kv;
    kv.set("train.lr_grid", std::string("1e-3,abc"));
    CHECK_THROWS_AS(from_keyvalue(kv), ConfigError);
}

TEST_CASE("model training lowers the loss and is deterministic") {
    const auto eps = tiny_episodes(8, 3);
    const auto parts = data::make_parts(eps, 2);
    const auto cfg = quick_config();
    const auto a = run_experiment(tiny_config(models::FusionKind::Emb), parts.train, parts.val, cfg);
    const auto b = run_experiment(tiny_config(models::FusionKind::Emb), parts.train, parts.val, cfg);
    CHECK(a.record.epochs == b.record.epochs);
    CHECK(nn::serialize_checkpoint(a.model.to_checkpoint()) == nn::serialize_checkpoint(b.model.to_checkpoint()));
    CHECK(a.record.epochs.back().train_loss < a.record.epochs.front().train_loss);
    CHECK(train::view_loss(a.model, parts.val, 4) == doctest::Approx(a.record.best_val_loss).epsilon(1e-12));
}

TEST_CASE("run_experiment writes byte-identical artifacts") {
    const auto eps = tiny_episodes(6, 9);
    const auto parts = data::make_parts(eps, 4);
    const auto cfg = quick_config();
    const auto root = fs::temp_directory_path() / ("rgbdnav_train_" + std::to_string(::getpid()));
    fs::remove_all(root);
    const auto mc = tiny_config(models::FusionKind::Gated);
    run_experiment(models::FusionKind::Gated, parts, cfg, (root / "a").string(), &mc);
    run_experiment(models::FusionKind::Gated, parts, cfg, (root / "b").string(), &mc);
    for (const char* f : {"model.ckpt", "loss_curve.csv", "grid.csv", "run.txt"}) {
        CHECK(read_file((root / "a" / f).string()) == read_file((root / "b" / f).string()));
    }
    const auto curve = read_file((root / "a" / "loss_curve.csv").string());
    CHECK(curve.rfind("epoch,train_loss,val_loss,lr\n", 0) == 0);
    const auto loaded = models::FusionNet<float>::from_checkpoint(nn::load_checkpoint((root / "a" / "model.ckpt").string()));
    CHECK(loaded.kind() == models::FusionKind::Gated);
    fs::remove_all(root);
}

TEST_CASE("experiment input errors") {
    const auto cfg = quick_config();
    const auto mc = tiny_config(models::FusionKind::Emb);
    CHECK_THROWS_AS(run_experiment(mc, data::DatasetView{}, data::DatasetView{}, cfg), InvalidInput);
    CHECK_THROWS_AS(models::parse_fusion_kind("resnet"), ConfigError);
    const auto eps = tiny_episodes(3, 1);
    const auto parts = data::make_parts(eps, 1);
    CHECK_THROWS_AS(run_experiment(models::default_config(models::FusionKind::Emb), parts.train, parts.val, cfg), ShapeError);
    CHECK_THROWS_AS(run_experiment(models::FusionKind::ConEmb, parts, cfg, std::nullopt, &mc), ConfigError);
}

TEST_CASE("divergence reports where it happened") {
    const auto eps = tiny_episodes(3, 1);
    const auto parts = data::make_parts(eps, 1);
    auto net = models::FusionNet<float>::build(tiny_config(models::FusionKind::Emb), 1);
    for (auto& p : net.params()) p.value.fill(std::numeric_limits<float>::quiet_NaN());
    ModelTarget t(std::move(net), parts.train, parts.val, 4, 1);
    try {
        t.train_epoch(3, 1e-3);
        FAIL("expected divergence");
    } catch (const TrainingDiverged& d) {
        CHECK(d.epoch() == 3);
        CHECK(d.batch() == 1);
        CHECK(d.lr() == 1e-3);
    }
}

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "rgbdnav/kinematics.hpp"
#include "rgbdnav/nn/tensor.hpp"

namespace rgbdnav::data {

using kinematics::Pose;

enum class Source { Expert, Teleop };
std::string_view source_name(Source s);
Source parse_source(std::string_view name);

struct Sample {
    nn::Tensor<float> color;  // [3,H,W] in [0,1]
    nn::Tensor<float> depth;  // [1,H,W] in [0,1]
    float omega_label = 0.0f;  // rad/s actually commanded
    double v = 0.1;
    Pose pose;                 // at capture
    double t = 0.0;
    std::string map_id;

    friend bool operator==(const Sample&, const Sample&) = default;
};

struct Episode {
    std::string id;
    Source source = Source::Expert;
    std::string map_id;
    bool flagged = false;  // truncated by a collision
    std::vector<Sample> samples;

    friend bool operator==(const Episode&, const Episode&) = default;
};

inline constexpr double kFixedVelocity = 0.1;

// Throws InvalidInput naming the first violated invariant.
void validate_sample(const Sample& s, double omega_max = 1.0);
void validate_episode(const Episode& e, double omega_max = 1.0);

inline constexpr int kEpisodeFormatVersion = 1;
inline constexpr int kDatasetIndexVersion = 1;

// Episode directory: manifest.txt plus one little-endian buffer per field.
void save_episode(const std::string& dir, const Episode& e);
Episode load_episode(const std::string& dir);

// Dataset directory: index.txt and one sub-directory per episode id.
void save_dataset(const std::string& dir, const std::vector<Episode>& episodes);
std::vector<Episode> load_dataset(const std::string& dir);
// Adds one episode and rewrites the index.
void append_episode(const std::string& dir, const Episode& e);

struct IndexEntry {
    std::string dir;
    std::string map_id;
    Source source = Source::Expert;
    bool flagged = false;
    std::size_t samples = 0;
};
std::vector<IndexEntry> read_index(const std::string& dir);

struct SplitRatios {
    double train = 0.70, val = 0.15, test = 0.15;
};

struct DatasetSplit {
    std::vector<std::size_t> train, val, test;  // episode positions
    std::uint64_t seed = 0;
};

// Seeded shuffle of episode positions, then [train | val | test] with
// val and test rounded down but at least 1. Throws InvalidInput below 3.
DatasetSplit split_episodes(std::size_t n_episodes, std::uint64_t seed, const SplitRatios& ratios = {});

enum class Modality { Color, Depth };
std::string_view modality_name(Modality m);

// A read-only selection of samples with optional zeroed modalities.
class DatasetView {
public:
    DatasetView() = default;
    DatasetView(std::shared_ptr<const std::vector<Sample>> samples, std::vector<std::size_t> rows);

    std::size_t size() const noexcept { return rows_.size(); }
    bool empty() const noexcept { return rows_.empty(); }
    const Sample& raw(std::size_t i) const { return (*samples_)[rows_.at(i)]; }
    bool zeroed(Modality m) const noexcept { return m == Modality::Color ? zero_color_ : zero_depth_; }

    // Copies sample i's modality into dst, honoring the zero mask.
    void copy_color(std::size_t i, float* dst) const;
    void copy_depth(std::size_t i, float* dst) const;
    float label(std::size_t i) const { return raw(i).omega_label; }

    DatasetView with_zeroed(Modality m) const;
    const std::vector<std::size_t>& rows() const noexcept { return rows_; }

    std::size_t image_h() const;
    std::size_t image_w() const;

private:
    std::shared_ptr<const std::vector<Sample>> samples_;
    std::vector<std::size_t> rows_;
    bool zero_color_ = false;
    bool zero_depth_ = false;
};

DatasetView zero_modality(const DatasetView& view, Modality m);

struct DatasetParts {
    std::shared_ptr<const std::vector<Sample>> samples;
    std::vector<std::size_t> episode_of;  // per pooled sample
    DatasetView train, val, test;
    DatasetSplit split;
    std::size_t excluded_flagged = 0;
};

// Pools the samples and builds the three views. Flagged episodes are left
// out unless include_flagged; the split is over the remaining episodes.
DatasetParts make_parts(const std::vector<Episode>& episodes, std::uint64_t seed, bool include_flagged = false,
                        const SplitRatios& ratios = {});

struct Batch {
    nn::Tensor<float> color;  // [N,3,H,W]
    nn::Tensor<float> depth;  // [N,1,H,W]
    nn::Tensor<float> omega;  // [N,1]
};

// Row order for one epoch: a shuffle keyed by (seed, epoch), cut into
// batches of batch_size with the short tail kept.
std::vector<std::vector<std::size_t>> batch_order(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                  std::uint64_t epoch);
Batch make_batch(const DatasetView& view, const std::vector<std::size_t>& rows);

// Sequential batches without shuffling, for evaluation passes.
std::vector<std::vector<std::size_t>> sequential_order(std::size_t n, std::size_t batch_size);

struct Fingerprint {
    std::uint64_t color = 0, depth = 0, labels = 0;
    friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

// FNV-1a over the bytes each field contributes to batches.
Fingerprint fingerprint(const DatasetView& view);

}  // namespace rgbdnav::data

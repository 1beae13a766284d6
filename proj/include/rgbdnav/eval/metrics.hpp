#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rgbdnav/data/dataset.hpp"
#include "rgbdnav/models/fusion_net.hpp"

namespace rgbdnav::eval {

struct MetricsReport {
    double mae = 0.0;
    double rmse = 0.0;
    double medae = 0.0;
    double vs = 0.0;  // NaN when Var(truth) = 0
    std::size_t n = 0;

    bool vs_defined() const;
};

// Population variances; even-n median is the mean of the two central values.
// Throws InvalidInput on empty input or a length mismatch.
MetricsReport compute_metrics(std::span<const double> pred, std::span<const double> truth);

// Predictions over a view in sequential batches.
std::vector<double> predict(const models::FusionNet<float>& model, const data::DatasetView& view,
                            std::size_t batch_size = 64);
std::vector<double> labels(const data::DatasetView& view);

MetricsReport evaluate_offline(const models::FusionNet<float>& model, const data::DatasetView& test,
                               std::size_t batch_size = 64);

// "mae=... rmse=... medae=... vs=..." with vs printed as "undefined" when NaN.
std::string format_metrics(const MetricsReport& m);

}  // namespace rgbdnav::eval

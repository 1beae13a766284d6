#include "rgbdnav/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "rgbdnav/error.hpp"

namespace rgbdnav::eval {

bool MetricsReport::vs_defined() const { return !std::isnan(vs); }

MetricsReport compute_metrics(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size()) {
        throw InvalidInput("metrics: " + std::to_string(pred.size()) + " predictions for " +
                           std::to_string(truth.size()) + " labels");
    }
    if (pred.empty()) throw InvalidInput("metrics need at least one sample");
    const std::size_t n = pred.size();
    const double dn = static_cast<double>(n);
    std::vector<double> abs_err(n);
    double sum_abs = 0.0, sum_sq = 0.0, sum_t = 0.0, sum_r = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = truth[i] - pred[i];
        abs_err[i] = std::abs(r);
        sum_abs += abs_err[i];
        sum_sq += r * r;
        sum_t += truth[i];
        sum_r += r;
    }
    const double mean_t = sum_t / dn, mean_r = sum_r / dn;
    double var_t = 0.0, var_r = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dt = truth[i] - mean_t;
        const double dr = (truth[i] - pred[i]) - mean_r;
        var_t += dt * dt;
        var_r += dr * dr;
    }
    var_t /= dn;
    var_r /= dn;

    const std::size_t mid = n / 2;
    std::nth_element(abs_err.begin(), abs_err.begin() + mid, abs_err.end());
    double medae = abs_err[mid];
    if (n % 2 == 0) {
        const double lower = *std::max_element(abs_err.begin(), abs_err.begin() + mid);
        medae = 0.5 * (lower + medae);
    }

    MetricsReport m;
    m.n = n;
    m.mae = sum_abs / dn;
    m.rmse = std::sqrt(sum_sq / dn);
    m.medae = medae;
    m.vs = var_t > 0.0 ? 1.0 - var_r / var_t : std::numeric_limits<double>::quiet_NaN();
    return m;
}

std::vector<double> predict(const models::FusionNet<float>& model, const data::DatasetView& view, std::size_t batch_size) {
    std::vector<double> out;
    out.reserve(view.size());
    for (const auto& rows : data::sequential_order(view.size(), batch_size)) {
        const auto b = data::make_batch(view, rows);
        const auto y = model.forward(b.color, b.depth);
        for (std::size_t i = 0; i < rows.size(); ++i) out.push_back(static_cast<double>(y[i]));
    }
    return out;
}

std::vector<double> labels(const data::DatasetView& view) {
    std::vector<double> out(view.size());
    for (std::size_t i = 0; i < view.size(); ++i) out[i] = static_cast<double>(view.label(i));
    return out;
}

MetricsReport evaluate_offline(const models::FusionNet<float>& model, const data::DatasetView& test,
                               std::size_t batch_size) {
    if (test.empty()) throw InvalidInput("test split is empty");
    const auto p = predict(model, test, batch_size);
    const auto t = labels(test);
    return compute_metrics(p, t);
}

std::string format_metrics(const MetricsReport& m) {
    char buf[160];
    if (m.vs_defined()) {
        std::snprintf(buf, sizeof buf, "mae=%.6g rmse=%.6g medae=%.6g vs=%.4f n=%zu", m.mae, m.rmse, m.medae, m.vs, m.n);
    } else {
        std::snprintf(buf, sizeof buf, "mae=%.6g rmse=%.6g medae=%.6g vs=undefined n=%zu", m.mae, m.rmse, m.medae, m.n);
    }
    return buf;
}

}  // namespace rgbdnav::eval

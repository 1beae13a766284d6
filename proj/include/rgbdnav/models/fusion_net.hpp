#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rgbdnav/models/model_config.hpp"
#include "rgbdnav/nn/checkpoint.hpp"
#include "rgbdnav/nn/params.hpp"
#include "rgbdnav/nn/tensor.hpp"

namespace rgbdnav::models {

struct LayerReport {
    std::string name;
    nn::Shape input_shape;   // per sample
    nn::Shape output_shape;  // per sample
    std::size_t params = 0;
};

// Everything backward needs from one forward pass.
template <typename T>
struct ForwardCache {
    std::vector<nn::Tensor<T>> color_acts;  // [0] is the input image, then each conv+relu output
    std::vector<nn::Tensor<T>> depth_acts;
    nn::Tensor<T> color_embed;
    nn::Tensor<T> depth_embed;
    nn::Tensor<T> gate_weights;             // [N,2], Gated only
    std::vector<nn::Tensor<T>> head_acts;   // input of each head layer, then the prediction
};

template <typename T>
class FusionNet {
public:
    using Param = nn::ParamState<T>;

    // Glorot-uniform weights drawn in parameter order from Rng(seed); zero biases.
    static FusionNet build(const ModelConfig& config, std::uint64_t seed);

    // color [N,C_c,H,W], depth [N,C_d,H,W] -> [N,1].
    nn::Tensor<T> forward(const nn::Tensor<T>& color, const nn::Tensor<T>& depth) const;
    nn::Tensor<T> forward(const nn::Tensor<T>& color, const nn::Tensor<T>& depth, ForwardCache<T>& cache) const;

    // Overwrites every parameter gradient with d(loss)/d(param) given
    // grad_out = d(loss)/d(prediction).
    void backward(const ForwardCache<T>& cache, const nn::Tensor<T>& grad_out);

    const ModelConfig& config() const noexcept { return config_; }
    FusionKind kind() const noexcept { return config_.fusion; }

    std::span<Param> params() noexcept { return params_; }
    std::span<const Param> params() const noexcept { return params_; }
    Param& param(std::string_view name);
    const Param& param(std::string_view name) const;

    std::size_t count_params() const;
    std::vector<LayerReport> describe() const;

    // Stores float32 values plus the config block.
    nn::Checkpoint to_checkpoint() const;
    // Throws ShapeError unless the tensors match the stored config exactly.
    static FusionNet from_checkpoint(const nn::Checkpoint& checkpoint);

private:
    explicit FusionNet(ModelConfig config);

    struct Tower {
        std::size_t first_param = 0;  // weight, bias pairs per conv layer
    };

    void check_inputs(const nn::Tensor<T>& color, const nn::Tensor<T>& depth) const;
    void tower_forward(const Tower& tower, const nn::Tensor<T>& input, std::vector<nn::Tensor<T>>& acts) const;
    void tower_backward(const Tower& tower, const std::vector<nn::Tensor<T>>& acts, nn::Tensor<T> grad);

    ModelConfig config_;
    std::vector<Param> params_;
    Tower color_;
    Tower depth_;
    std::size_t color_embed_ = 0;
    std::size_t depth_embed_ = 0;
    std::size_t gate_ = 0;
    std::size_t head_ = 0;
};

// Width feeding the first head layer: 2F, 2E or E.
std::size_t post_fusion_width(const ModelConfig& config);

std::string format_report(const std::vector<LayerReport>& layers);

}  // namespace rgbdnav::models

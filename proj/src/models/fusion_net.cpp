#include "rgbdnav/models/fusion_net.hpp"

#include <sstream>
#include <tuple>

#include "rgbdnav/error.hpp"
#include "rgbdnav/nn/ops.hpp"

namespace rgbdnav::models {

using nn::Shape;
using nn::Tensor;

std::size_t post_fusion_width(const ModelConfig& config) {
    switch (config.fusion) {
        case FusionKind::ConEmb: return 2 * tower_output(config).flat();
        case FusionKind::Emb: return 2 * config.embed_dim;
        case FusionKind::Gated: return config.embed_dim;
    }
    return 0;
}

template <typename T>
FusionNet<T>::FusionNet(ModelConfig config) : config_(std::move(config)) {
    validate(config_);
    const auto add = [this](std::string name, Shape shape) { params_.emplace_back(std::move(name), Tensor<T>(shape)); };
    const auto add_tower = [&](const char* prefix, std::size_t in_channels, Tower& tower) {
        tower.first_param = params_.size();
        std::size_t cin = in_channels;
        for (std::size_t i = 0; i < config_.conv_spec.size(); ++i) {
            const auto& l = config_.conv_spec[i];
            const std::string base = std::string(prefix) + ".conv" + std::to_string(i);
            add(base + ".weight", {l.out_channels, cin, l.kernel, l.kernel});
            add(base + ".bias", {l.out_channels});
            cin = l.out_channels;
        }
    };
    add_tower("color", config_.color_channels, color_);
    add_tower("depth", config_.depth_channels, depth_);

    const std::size_t flat = tower_output(config_).flat();
    const std::size_t embed = config_.embed_dim;
    if (config_.fusion != FusionKind::ConEmb) {
        color_embed_ = params_.size();
        add("color.embed.weight", {flat, embed});
        add("color.embed.bias", {embed});
        depth_embed_ = params_.size();
        add("depth.embed.weight", {flat, embed});
        add("depth.embed.bias", {embed});
    }
    if (config_.fusion == FusionKind::Gated) {
        gate_ = params_.size();
        add("gate.weight", {2 * embed, 2});
        add("gate.bias", {2});
    }
    head_ = params_.size();
    std::size_t width = post_fusion_width(config_);
    for (std::size_t i = 0; i < config_.head_widths.size(); ++i) {
        const auto out = config_.head_widths[i];
        add("head" + std::to_string(i) + ".weight", {width, out});
        add("head" + std::to_string(i) + ".bias", {out});
        width = out;
    }
}

template <typename T>
FusionNet<T> FusionNet<T>::build(const ModelConfig& config, std::uint64_t seed) {
    FusionNet net(config);
    Rng rng(seed);
    for (auto& p : net.params_) {
        const auto& s = p.value.shape();
        if (s.size() == 4) {
            const std::size_t taps = s[2] * s[3];
            nn::glorot_uniform(p.value, s[1] * taps, s[0] * taps, rng);
        } else if (s.size() == 2) {
            nn::glorot_uniform(p.value, s[0], s[1], rng);
        }
    }
    return net;
}

template <typename T>
typename FusionNet<T>::Param& FusionNet<T>::param(std::string_view name) {
    for (auto& p : params_) {
        if (p.name == name) return p;
    }
    throw InvalidInput("no parameter named '" + std::string(name) + "'");
}

template <typename T>
const typename FusionNet<T>::Param& FusionNet<T>::param(std::string_view name) const {
    return const_cast<FusionNet*>(this)->param(name);
}

template <typename T>
void FusionNet<T>::check_inputs(const Tensor<T>& color, const Tensor<T>& depth) const {
    if (color.rank() != 4 || color.dim(0) == 0) throw ShapeError("color input must be [N,C,H,W]");
    const std::size_t n = color.dim(0);
    nn::require_shape(color.shape(), {n, config_.color_channels, config_.input_h, config_.input_w}, "color input");
    nn::require_shape(depth.shape(), {n, config_.depth_channels, config_.input_h, config_.input_w}, "depth input");
}

template <typename T>
void FusionNet<T>::tower_forward(const Tower& tower, const Tensor<T>& input, std::vector<Tensor<T>>& acts) const {
    acts.clear();
    acts.push_back(input);
    for (std::size_t i = 0; i < config_.conv_spec.size(); ++i) {
        const auto& l = config_.conv_spec[i];
        const auto& w = params_[tower.first_param + 2 * i];
        const auto& b = params_[tower.first_param + 2 * i + 1];
        acts.push_back(nn::relu(nn::conv2d(acts.back(), w.value, b.value, {l.stride, l.padding})));
    }
}

template <typename T>
Tensor<T> FusionNet<T>::forward(const Tensor<T>& color, const Tensor<T>& depth) const {
    ForwardCache<T> cache;
    return forward(color, depth, cache);
}

template <typename T>
Tensor<T> FusionNet<T>::forward(const Tensor<T>& color, const Tensor<T>& depth, ForwardCache<T>& cache) const {
    check_inputs(color, depth);
    const std::size_t n = color.dim(0);
    const std::size_t flat = tower_output(config_).flat();
    tower_forward(color_, color, cache.color_acts);
    tower_forward(depth_, depth, cache.depth_acts);
    const auto fc = cache.color_acts.back().reshaped({n, flat});
    const auto fd = cache.depth_acts.back().reshaped({n, flat});

    Tensor<T> fused;
    if (config_.fusion == FusionKind::ConEmb) {
        fused = nn::concat(fc, fd);
    } else {
        const auto& pc = params_;
        cache.color_embed = nn::relu(nn::linear(fc, pc[color_embed_].value, pc[color_embed_ + 1].value));
        cache.depth_embed = nn::relu(nn::linear(fd, pc[depth_embed_].value, pc[depth_embed_ + 1].value));
        fused = nn::concat(cache.color_embed, cache.depth_embed);
        if (config_.fusion == FusionKind::Gated) {
            cache.gate_weights = nn::softmax(nn::linear(fused, pc[gate_].value, pc[gate_ + 1].value));
            fused = nn::weighted_sum(cache.color_embed, cache.depth_embed, cache.gate_weights);
        }
    }

    cache.head_acts.clear();
    cache.head_acts.push_back(std::move(fused));
    const std::size_t layers = config_.head_widths.size();
    for (std::size_t i = 0; i < layers; ++i) {
        auto z = nn::linear(cache.head_acts.back(), params_[head_ + 2 * i].value, params_[head_ + 2 * i + 1].value);
        cache.head_acts.push_back(i + 1 < layers ? nn::relu(z) : std::move(z));
    }
    return cache.head_acts.back();
}

template <typename T>
void FusionNet<T>::tower_backward(const Tower& tower, const std::vector<Tensor<T>>& acts, Tensor<T> grad) {
    for (std::size_t i = config_.conv_spec.size(); i-- > 0;) {
        const auto& l = config_.conv_spec[i];
        auto& w = params_[tower.first_param + 2 * i];
        auto& b = params_[tower.first_param + 2 * i + 1];
        // relu output is positive exactly where its input was
        grad = nn::relu_backward(acts[i + 1], grad);
        auto g = nn::conv2d_backward(acts[i], w.value, grad, {l.stride, l.padding}, i > 0);
        w.grad = std::move(g.kernel);
        b.grad = std::move(g.bias);
        grad = std::move(g.input);
    }
}

template <typename T>
void FusionNet<T>::backward(const ForwardCache<T>& cache, const Tensor<T>& grad_out) {
    const std::size_t layers = config_.head_widths.size();
    if (cache.head_acts.size() != layers + 1) throw InvalidState("backward without a matching forward");
    nn::require_shape(grad_out.shape(), cache.head_acts.back().shape(), "prediction gradient");
    const std::size_t n = grad_out.dim(0);

    Tensor<T> grad = grad_out;
    for (std::size_t i = layers; i-- > 0;) {
        if (i + 1 < layers) grad = nn::relu_backward(cache.head_acts[i + 1], grad);
        auto& w = params_[head_ + 2 * i];
        auto g = nn::linear_backward(cache.head_acts[i], w.value, grad, true);
        w.grad = std::move(g.weight);
        params_[head_ + 2 * i + 1].grad = std::move(g.bias);
        grad = std::move(g.input);
    }

    const auto geom = tower_output(config_);
    const std::size_t flat = geom.flat();
    Tensor<T> grad_fc;
    Tensor<T> grad_fd;
    if (config_.fusion == FusionKind::ConEmb) {
        std::tie(grad_fc, grad_fd) = nn::concat_backward(grad, flat);
    } else {
        Tensor<T> grad_ec;
        Tensor<T> grad_ed;
        if (config_.fusion == FusionKind::Gated) {
            auto ws = nn::weighted_sum_backward(cache.color_embed, cache.depth_embed, cache.gate_weights, grad);
            const auto gate_in = nn::concat(cache.color_embed, cache.depth_embed);
            const auto grad_logits = nn::softmax_backward(cache.gate_weights, ws.weights);
            auto g = nn::linear_backward(gate_in, params_[gate_].value, grad_logits, true);
            params_[gate_].grad = std::move(g.weight);
            params_[gate_ + 1].grad = std::move(g.bias);
            auto [gc, gd] = nn::concat_backward(g.input, config_.embed_dim);
            for (std::size_t i = 0; i < gc.size(); ++i) {
                gc[i] += ws.a[i];
                gd[i] += ws.b[i];
            }
            grad_ec = std::move(gc);
            grad_ed = std::move(gd);
        } else {
            std::tie(grad_ec, grad_ed) = nn::concat_backward(grad, config_.embed_dim);
        }
        const auto embed_backward = [&](std::size_t index, const Tensor<T>& embed, const Tensor<T>& features,
                                        const Tensor<T>& upstream) {
            const auto g_pre = nn::relu_backward(embed, upstream);
            auto g = nn::linear_backward(features, params_[index].value, g_pre, true);
            params_[index].grad = std::move(g.weight);
            params_[index + 1].grad = std::move(g.bias);
            return std::move(g.input);
        };
        grad_fc = embed_backward(color_embed_, cache.color_embed, cache.color_acts.back().reshaped({n, flat}), grad_ec);
        grad_fd = embed_backward(depth_embed_, cache.depth_embed, cache.depth_acts.back().reshaped({n, flat}), grad_ed);
    }
    grad_fc.reshape({n, geom.channels, geom.height, geom.width});
    grad_fd.reshape({n, geom.channels, geom.height, geom.width});
    tower_backward(color_, cache.color_acts, std::move(grad_fc));
    tower_backward(depth_, cache.depth_acts, std::move(grad_fd));
}

template <typename T>
std::size_t FusionNet<T>::count_params() const {
    std::size_t total = 0;
    for (const auto& p : params_) total += p.value.size();
    return total;
}

template <typename T>
std::vector<LayerReport> FusionNet<T>::describe() const {
    std::vector<LayerReport> out;
    const auto pair_count = [this](std::size_t index) {
        return params_[index].value.size() + params_[index + 1].value.size();
    };
    const auto conv_rows = [&](const char* prefix, std::size_t channels, const Tower& tower) {
        Shape in{channels, config_.input_h, config_.input_w};
        for (std::size_t i = 0; i < config_.conv_spec.size(); ++i) {
            const auto& l = config_.conv_spec[i];
            const nn::ConvGeometry g{l.stride, l.padding};
            Shape next{l.out_channels, nn::conv_output_size(in[1], l.kernel, g), nn::conv_output_size(in[2], l.kernel, g)};
            out.push_back({std::string(prefix) + ".conv" + std::to_string(i), in, next, pair_count(tower.first_param + 2 * i)});
            in = next;
        }
    };
    conv_rows("color", config_.color_channels, color_);
    conv_rows("depth", config_.depth_channels, depth_);
    const std::size_t flat = tower_output(config_).flat();
    const std::size_t e = config_.embed_dim;
    if (config_.fusion == FusionKind::ConEmb) {
        out.push_back({"concat", {flat, flat}, {2 * flat}, 0});
    } else {
        out.push_back({"color.embed", {flat}, {e}, pair_count(color_embed_)});
        out.push_back({"depth.embed", {flat}, {e}, pair_count(depth_embed_)});
        out.push_back({"concat", {e, e}, {2 * e}, 0});
        if (config_.fusion == FusionKind::Gated) {
            out.push_back({"gate", {2 * e}, {2}, pair_count(gate_)});
            out.push_back({"weighted_sum", {e, e, 2}, {e}, 0});
        }
    }
    std::size_t width = post_fusion_width(config_);
    for (std::size_t i = 0; i < config_.head_widths.size(); ++i) {
        const auto w = config_.head_widths[i];
        out.push_back({"head" + std::to_string(i), {width}, {w}, pair_count(head_ + 2 * i)});
        width = w;
    }
    return out;
}

template <typename T>
nn::Checkpoint FusionNet<T>::to_checkpoint() const {
    nn::Checkpoint ck;
    ck.config = to_keyvalue(config_);
    for (const auto& p : params_) ck.tensors.push_back({p.name, p.value.template cast<float>()});
    return ck;
}

template <typename T>
FusionNet<T> FusionNet<T>::from_checkpoint(const nn::Checkpoint& checkpoint) {
    FusionNet net(from_keyvalue(checkpoint.config));
    if (checkpoint.tensors.size() != net.params_.size()) {
        throw ShapeError("checkpoint holds " + std::to_string(checkpoint.tensors.size()) + " tensors, model needs " +
                         std::to_string(net.params_.size()));
    }
    for (auto& p : net.params_) {
        const nn::NamedTensor* found = nullptr;
        for (const auto& t : checkpoint.tensors) {
            if (t.name == p.name) found = &t;
        }
        if (found == nullptr) throw ShapeError("checkpoint is missing tensor '" + p.name + "'");
        nn::require_shape(found->tensor.shape(), p.value.shape(), p.name.c_str());
        p.value = found->tensor.template cast<T>();
    }
    return net;
}

std::string format_report(const std::vector<LayerReport>& layers) {
    std::ostringstream os;
    std::size_t total = 0;
    for (const auto& l : layers) {
        os << l.name << "  in=" << nn::shape_string(l.input_shape) << "  out=" << nn::shape_string(l.output_shape)
           << "  params=" << l.params << '\n';
        total += l.params;
    }
    os << "total params=" << total << '\n';
    return os.str();
}

template class FusionNet<float>;
template class FusionNet<double>;

}  // namespace rgbdnav::models

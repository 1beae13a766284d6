#include "rgbdnav/models/model_config.hpp"

#include "rgbdnav/error.hpp"
#include "rgbdnav/nn/ops.hpp"

namespace rgbdnav::models {

std::string_view fusion_tag(FusionKind kind) {
    switch (kind) {
        case FusionKind::ConEmb: return "conemb";
        case FusionKind::Emb: return "emb";
        case FusionKind::Gated: return "gated";
    }
    return "unknown";
}

FusionKind parse_fusion_kind(std::string_view tag) {
    if (tag == "conemb") return FusionKind::ConEmb;
    if (tag == "emb") return FusionKind::Emb;
    if (tag == "gated") return FusionKind::Gated;
    throw ConfigError("unknown architecture '" + std::string(tag) + "' (valid: emb, conemb, gated)");
}

ModelConfig default_config(FusionKind kind) {
    ModelConfig config;
    config.fusion = kind;
    return config;
}

TowerGeometry tower_output(const ModelConfig& config) {
    TowerGeometry g{0, config.input_h, config.input_w};
    for (const auto& layer : config.conv_spec) {
        const nn::ConvGeometry geom{layer.stride, layer.padding};
        g.height = nn::conv_output_size(g.height, layer.kernel, geom);
        g.width = nn::conv_output_size(g.width, layer.kernel, geom);
        g.channels = layer.out_channels;
    }
    return g;
}

void validate(const ModelConfig& config) {
    if (config.input_h == 0 || config.input_w == 0) throw ShapeError("model config: zero input size");
    if (config.color_channels == 0 || config.depth_channels == 0) throw ShapeError("model config: zero channels");
    if (config.conv_spec.empty()) throw ShapeError("model config: empty conv stack");
    for (const auto& layer : config.conv_spec) {
        if (layer.out_channels == 0 || layer.kernel == 0 || layer.stride == 0) {
            throw ShapeError("model config: conv layers need positive channels, kernel and stride");
        }
    }
    tower_output(config);  // throws on collapse
    if (config.embed_dim == 0) throw ShapeError("model config: zero embedding width");
    if (config.head_widths.empty() || config.head_widths.back() != 1) {
        throw ShapeError("model config: head must end in width 1");
    }
    for (const auto w : config.head_widths) {
        if (w == 0) throw ShapeError("model config: zero head width");
    }
}

KeyValue to_keyvalue(const ModelConfig& config) {
    KeyValue kv;
    kv.set("model.fusion", std::string(fusion_tag(config.fusion)));
    kv.set("model.input_h", static_cast<long long>(config.input_h));
    kv.set("model.input_w", static_cast<long long>(config.input_w));
    kv.set("model.color_channels", static_cast<long long>(config.color_channels));
    kv.set("model.depth_channels", static_cast<long long>(config.depth_channels));
    std::string conv;
    for (const auto& l : config.conv_spec) {
        if (!conv.empty()) conv += ';';
        conv += std::to_string(l.out_channels) + "," + std::to_string(l.kernel) + "," + std::to_string(l.stride) + "," +
                std::to_string(l.padding);
    }
    kv.set("model.conv_spec", conv);
    kv.set("model.embed_dim", static_cast<long long>(config.embed_dim));
    std::string head;
    for (const auto w : config.head_widths) {
        if (!head.empty()) head += ',';
        head += std::to_string(w);
    }
    kv.set("model.head_widths", head);
    return kv;
}

namespace {

std::vector<std::size_t> parse_list(const std::string& s, char sep, const char* what) {
    std::vector<std::size_t> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto end = s.find(sep, start);
        const auto token = s.substr(start, end == std::string::npos ? std::string::npos : end - start);
        try {
            std::size_t used = 0;
            const auto v = std::stoull(token, &used);
            if (used != token.size()) throw std::invalid_argument(token);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw ConfigError(std::string("model config: bad ") + what + " '" + s + "'");
        }
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return out;
}

}  // namespace

ModelConfig from_keyvalue(const KeyValue& kv) {
    ModelConfig config;
    config.fusion = parse_fusion_kind(kv.get("model.fusion"));
    config.input_h = static_cast<std::size_t>(kv.get_int("model.input_h"));
    config.input_w = static_cast<std::size_t>(kv.get_int("model.input_w"));
    config.color_channels = static_cast<std::size_t>(kv.get_int("model.color_channels"));
    config.depth_channels = static_cast<std::size_t>(kv.get_int("model.depth_channels"));
    config.conv_spec.clear();
    const auto& conv = kv.get("model.conv_spec");
    std::size_t start = 0;
    while (start <= conv.size()) {
        const auto end = conv.find(';', start);
        const auto fields = parse_list(conv.substr(start, end == std::string::npos ? std::string::npos : end - start), ',',
                                       "conv layer");
        if (fields.size() != 4) throw ConfigError("model config: conv layer needs 4 fields");
        config.conv_spec.push_back({fields[0], fields[1], fields[2], fields[3]});
        if (end == std::string::npos) break;
        start = end + 1;
    }
    config.embed_dim = static_cast<std::size_t>(kv.get_int("model.embed_dim"));
    config.head_widths = parse_list(kv.get("model.head_widths"), ',', "head widths");
    validate(config);
    return config;
}

}  // namespace rgbdnav::models

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "rgbdnav/keyvalue.hpp"

namespace rgbdnav::models {

enum class FusionKind {
    ConEmb,  // concatenate flattened conv features, then the head
    Emb,     // per-modality embeddings, concatenated, then the head
    Gated,   // per-modality embeddings blended by softmax gate weights
};

std::string_view fusion_tag(FusionKind kind);

// Accepts "conemb", "emb", "gated"; throws ConfigError listing them otherwise.
FusionKind parse_fusion_kind(std::string_view tag);

struct ConvLayerSpec {
    std::size_t out_channels;
    std::size_t kernel;
    std::size_t stride;
    std::size_t padding;

    friend bool operator==(const ConvLayerSpec&, const ConvLayerSpec&) = default;
};

struct ModelConfig {
    std::size_t input_h = 60;
    std::size_t input_w = 80;
    std::size_t color_channels = 3;
    std::size_t depth_channels = 1;
    std::vector<ConvLayerSpec> conv_spec = {{8, 5, 2, 2}, {16, 5, 2, 2}, {32, 3, 2, 1}};
    std::size_t embed_dim = 256;
    std::vector<std::size_t> head_widths = {512, 64, 1};
    FusionKind fusion = FusionKind::Emb;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

ModelConfig default_config(FusionKind kind);

// Throws ShapeError when the conv stack collapses below 1x1, the head does
// not end in width 1, or any dimension is zero.
void validate(const ModelConfig& config);

struct TowerGeometry {
    std::size_t channels, height, width;
    std::size_t flat() const { return channels * height * width; }
};

// Output geometry of one conv tower.
TowerGeometry tower_output(const ModelConfig& config);

KeyValue to_keyvalue(const ModelConfig& config);
ModelConfig from_keyvalue(const KeyValue& kv);

}  // namespace rgbdnav::models

#pragma once

#include <string>
#include <vector>

#include "rgbdnav/keyvalue.hpp"
#include "rgbdnav/nn/tensor.hpp"

namespace rgbdnav::nn {

struct NamedTensor {
    std::string name;
    Tensor<float> tensor;

    friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

struct Checkpoint {
    KeyValue config;
    std::vector<NamedTensor> tensors;
};

inline constexpr int kCheckpointVersion = 1;

// Text header (config block + tensor manifest with byte offsets) followed by
// little-endian float32 buffers. Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(const std::string& bytes);

}  // namespace rgbdnav::nn

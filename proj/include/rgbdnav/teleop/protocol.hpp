#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rgbdnav/error.hpp"
#include "rgbdnav/sim/render.hpp"
#include "rgbdnav/sim/world_map.hpp"

namespace rgbdnav::teleop {

// A client message that could not be understood; the session continues.
class ProtocolError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

struct CmdMsg {
    double omega = 0.0;
};
struct RecordMsg {
    bool on = false;
};
struct ResetMsg {
    std::string map_id;
};
struct ListMapsMsg {};

using ClientMessage = std::variant<CmdMsg, RecordMsg, ResetMsg, ListMapsMsg>;

ClientMessage parse_client_message(std::string_view text);
std::string serialize(const ClientMessage& msg);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);  // throws ProtocolError

// 8-bit RGB, row-major, from a [3,H,W] tensor in [0,1].
std::string color_bytes(const nn::Tensor<float>& color);
// Little-endian float32, row-major, from a [1,H,W] tensor.
std::string depth_bytes(const nn::Tensor<float>& depth);

struct StateMessage {
    double t = 0.0;
    sim::Pose pose;
    double omega_applied = 0.0;
    bool collided = false;
    bool recording = false;
    std::string outcome;  // empty while running, else "collision"
    std::size_t width = 0, height = 0;
    std::string color;  // raw RGB8 bytes
    std::string depth;  // raw f32le bytes
};

std::string serialize(const StateMessage& s);
// Inverse of serialize; decodes the base64 payloads.
StateMessage parse_state_message(std::string_view text);

struct MapEntry {
    std::string id;
    sim::MapTag tag = sim::MapTag::Known;
};
std::string maps_message(const std::vector<MapEntry>& maps);
std::string error_message(std::string_view reason);

// Type tag of any server or client message, "" if it is not a JSON object with one.
std::string message_type(std::string_view text);

}  // namespace rgbdnav::teleop

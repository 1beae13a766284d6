#include "rgbdnav/teleop/protocol.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <json.hpp>

#include "rgbdnav/binary_io.hpp"

namespace rgbdnav::teleop {

using nlohmann::json;

namespace {

json parse_object(std::string_view text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ProtocolError("message is not valid JSON");
    if (!j.is_object()) throw ProtocolError("message must be a JSON object");
    return j;
}

std::string require_type(const json& j) {
    const auto it = j.find("type");
    if (it == j.end() || !it->is_string()) throw ProtocolError("message lacks a string \"type\"");
    return it->get<std::string>();
}

}  // namespace

ClientMessage parse_client_message(std::string_view text) {
    const json j = parse_object(text);
    const std::string type = require_type(j);
    if (type == "cmd") {
        const auto it = j.find("omega");
        if (it == j.end() || !it->is_number()) throw ProtocolError("cmd needs a numeric \"omega\"");
        const double w = it->get<double>();
        if (!std::isfinite(w)) throw ProtocolError("cmd omega must be finite");
        return CmdMsg{w};
    }
    if (type == "record") {
        const auto it = j.find("on");
        if (it == j.end() || !it->is_boolean()) throw ProtocolError("record needs a boolean \"on\"");
        return RecordMsg{it->get<bool>()};
    }
    if (type == "reset") {
        const auto it = j.find("map_id");
        if (it == j.end() || !it->is_string()) throw ProtocolError("reset needs a string \"map_id\"");
        return ResetMsg{it->get<std::string>()};
    }
    if (type == "list_maps") return ListMapsMsg{};
    throw ProtocolError("unknown message type '" + type + "'");
}

std::string serialize(const ClientMessage& msg) {
    json j;
    if (const auto* c = std::get_if<CmdMsg>(&msg)) {
        j = {{"type", "cmd"}, {"omega", c->omega}};
    } else if (const auto* r = std::get_if<RecordMsg>(&msg)) {
        j = {{"type", "record"}, {"on", r->on}};
    } else if (const auto* s = std::get_if<ResetMsg>(&msg)) {
        j = {{"type", "reset"}, {"map_id", s->map_id}};
    } else {
        j = {{"type", "list_maps"}};
    }
    return j.dump();
}

std::string base64_encode(std::string_view bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::string base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) throw ProtocolError("base64 length must be a multiple of 4");
    std::string out(3 * (text.size() / 4), '\0');
    const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
    if (n < 0) throw ProtocolError("invalid base64 payload");
    std::size_t pad = 0;
    if (!text.empty() && text.back() == '=') ++pad;
    if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

std::string color_bytes(const nn::Tensor<float>& color) {
    if (color.rank() != 3 || color.dim(0) != 3) throw ShapeError("color frame must be [3,H,W]");
    const std::size_t plane = color.dim(1) * color.dim(2);
    std::string out(3 * plane, '\0');
    for (std::size_t p = 0; p < plane; ++p) {
        for (std::size_t c = 0; c < 3; ++c) {
            const float v = std::clamp(color[c * plane + p], 0.0f, 1.0f);
            out[3 * p + c] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f)));
        }
    }
    return out;
}

std::string depth_bytes(const nn::Tensor<float>& depth) {
    if (depth.rank() != 3 || depth.dim(0) != 1) throw ShapeError("depth frame must be [1,H,W]");
    std::string out;
    append_le<float>(out, depth.data());
    return out;
}

std::string serialize(const StateMessage& s) {
    json j = {
        {"type", "state"},
        {"t", s.t},
        {"pose", {{"x", s.pose.x}, {"y", s.pose.y}, {"theta", s.pose.theta}}},
        {"omega_applied", s.omega_applied},
        {"collided", s.collided},
        {"recording", s.recording},
        {"color", {{"w", s.width}, {"h", s.height}, {"encoding", "raw-rgb8-base64"}, {"data", base64_encode(s.color)}}},
        {"depth", {{"w", s.width}, {"h", s.height}, {"encoding", "raw-f32le-base64"}, {"data", base64_encode(s.depth)}}},
    };
    if (!s.outcome.empty()) j["outcome"] = s.outcome;
    return j.dump();
}

StateMessage parse_state_message(std::string_view text) {
    const json j = parse_object(text);
    if (require_type(j) != "state") throw ProtocolError("not a state message");
    StateMessage s;
    try {
        s.t = j.at("t").get<double>();
        s.pose = {j.at("pose").at("x").get<double>(), j.at("pose").at("y").get<double>(),
                  j.at("pose").at("theta").get<double>()};
        s.omega_applied = j.at("omega_applied").get<double>();
        s.collided = j.at("collided").get<bool>();
        s.recording = j.at("recording").get<bool>();
        if (j.contains("outcome")) s.outcome = j.at("outcome").get<std::string>();
        const auto& c = j.at("color");
        const auto& d = j.at("depth");
        if (c.at("encoding") != "raw-rgb8-base64" || d.at("encoding") != "raw-f32le-base64") {
            throw ProtocolError("unexpected frame encoding");
        }
        s.width = c.at("w").get<std::size_t>();
        s.height = c.at("h").get<std::size_t>();
        s.color = base64_decode(c.at("data").get<std::string>());
        s.depth = base64_decode(d.at("data").get<std::string>());
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed state message: ") + e.what());
    }
    if (s.color.size() != 3 * s.width * s.height || s.depth.size() != 4 * s.width * s.height) {
        throw ProtocolError("state frame payload size does not match w and h");
    }
    return s;
}

std::string maps_message(const std::vector<MapEntry>& maps) {
    json ids = json::array(), tags = json::array();
    for (const auto& m : maps) {
        ids.push_back(m.id);
        tags.push_back(std::string(sim::tag_name(m.tag)));
    }
    return json{{"type", "maps"}, {"ids", ids}, {"tags", tags}}.dump();
}

std::string error_message(std::string_view reason) { return json{{"type", "error"}, {"reason", reason}}.dump(); }

std::string message_type(std::string_view text) {
    const json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return "";
    const auto it = j.find("type");
    return it != j.end() && it->is_string() ? it->get<std::string>() : "";
}

}  // namespace rgbdnav::teleop

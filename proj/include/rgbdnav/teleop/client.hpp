#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rgbdnav/teleop/protocol.hpp"

namespace rgbdnav::teleop {

// Blocking protocol client for scripts and tests.
class TeleopClient {
public:
    TeleopClient(const std::string& host, std::uint16_t port);
    ~TeleopClient();
    TeleopClient(const TeleopClient&) = delete;
    TeleopClient& operator=(const TeleopClient&) = delete;

    void send(const std::string& text);
    void send(const ClientMessage& msg) { send(serialize(msg)); }
    std::string receive();

    // Reads frames until one of the given type; others are kept in backlog().
    std::string receive_type(const std::string& type);
    StateMessage next_state() { return parse_state_message(receive_type("state")); }
    const std::vector<std::string>& backlog() const noexcept { return backlog_; }

    void close();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::vector<std::string> backlog_;
};

}  // namespace rgbdnav::teleop

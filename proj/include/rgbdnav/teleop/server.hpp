#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "rgbdnav/sim/render.hpp"
#include "rgbdnav/teleop/session.hpp"

namespace rgbdnav::teleop {

enum class TickMode {
    Realtime,  // a tick every cadence of wall time
    Lockstep,  // one tick after each accepted cmd message
};

struct ServerConfig {
    std::string bind = "127.0.0.1";
    std::uint16_t port = 8765;  // 0 picks a free port
    std::optional<std::string> out_dir;
    std::string initial_map;  // empty: first id in the map set
    TickMode mode = TickMode::Realtime;
    double omega_max = 1.0;
    double cadence = 0.2;
    sim::CameraModel camera;
};

// WebSocket bridge; every connection owns one Session.
class TeleopServer {
public:
    TeleopServer(ServerConfig config, std::shared_ptr<const MapSet> maps);
    ~TeleopServer();
    TeleopServer(const TeleopServer&) = delete;
    TeleopServer& operator=(const TeleopServer&) = delete;

    // Binds and starts the I/O thread; IoError when the address is unusable.
    void start();
    // Closes every session, saving buffered recordings, and joins the thread.
    void stop();
    // Blocks until stop() is called from another thread or a signal handler.
    void wait();

    std::uint16_t port() const;
    std::size_t sessions_started() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace rgbdnav::teleop

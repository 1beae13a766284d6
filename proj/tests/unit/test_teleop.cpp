#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <memory>
#include <string>
#include <thread>

#include "rgbdnav/data/dataset.hpp"
#include "rgbdnav/error.hpp"
#include "rgbdnav/random.hpp"
#include "rgbdnav/teleop/client.hpp"
#include "rgbdnav/teleop/protocol.hpp"
#include "rgbdnav/teleop/server.hpp"
#include "rgbdnav/teleop/session.hpp"

#include <unistd.h>

using namespace rgbdnav;
using namespace rgbdnav::teleop;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::shared_ptr<const sim::WorldMap> open_map(const std::string& id = "open") {
    sim::WorldMap m;
    m.id = id;
    m.segments.push_back({{-20, 20, 20, 20}, {10, 20, 30}});
    m.spawn = {0, 0, 0};
    m.goal = {50, -1, 50, 1};
    return std::make_shared<const sim::WorldMap>(m);
}

std::shared_ptr<const sim::WorldMap> wall_map() {
    sim::WorldMap m;
    m.id = "wall";
    m.segments.push_back({{0.49, -5, 0.49, 5}, {200, 70, 50}});
    m.spawn = {0, 0, 0};
    m.goal = {-3, -1, -3, 1};
    return std::make_shared<const sim::WorldMap>(m);
}

std::shared_ptr<const MapSet> test_maps() {
    return std::make_shared<const MapSet>(std::vector<std::shared_ptr<const sim::WorldMap>>{open_map(), wall_map()});
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int n = 0;
        path = fs::temp_directory_path() / ("rgbdnav_teleop_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

json as_json(const std::string& s) { return json::parse(s); }

}  // namespace

TEST_CASE("client message parsing") {
    CHECK(std::get<CmdMsg>(parse_client_message(R"({"type":"cmd","omega":-0.25})")).omega == -0.25);
    CHECK(std::get<RecordMsg>(parse_client_message(R"({"type":"record","on":true})")).on);
    CHECK(std::get<ResetMsg>(parse_client_message(R"({"type":"reset","map_id":"lane_a"})")).map_id == "lane_a");
    CHECK(std::holds_alternative<ListMapsMsg>(parse_client_message(R"({"type":"list_maps"})")));
    CHECK_THROWS_AS(parse_client_message("{"), ProtocolError);
    CHECK_THROWS_AS(parse_client_message("[1,2]"), ProtocolError);
    CHECK_THROWS_AS(parse_client_message(R"({"omega":1})"), ProtocolError);
    CHECK_THROWS_AS(parse_client_message(R"({"type":"fly"})"), ProtocolError);
    CHECK_THROWS_AS(parse_client_message(R"({"type":"cmd","omega":"fast"})"), ProtocolError);
    CHECK_THROWS_AS(parse_client_message(R"({"type":"record","on":1})"), ProtocolError);
    CHECK_THROWS_AS(parse_client_message(R"({"type":"reset"})"), ProtocolError);
    for (const ClientMessage m : {ClientMessage{CmdMsg{0.5}}, ClientMessage{RecordMsg{false}},
                                  ClientMessage{ResetMsg{"corridor_a"}}, ClientMessage{ListMapsMsg{}}}) {
        CHECK(serialize(parse_client_message(serialize(m))) == serialize(m));
    }
}

TEST_CASE("base64") {
    CHECK(base64_encode("") == "");
    CHECK(base64_encode("f") == "Zg==");
    CHECK(base64_encode("fo") == "Zm8=");
    CHECK(base64_encode("foobar") == "Zm9vYmFy");
    CHECK(base64_decode("Zm8=") == "fo");
    CHECK(base64_decode("Zg==") == "f");
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        std::string s(rng.index(300), '\0');
        for (auto& c : s) c = static_cast<char>(rng.index(256));
        CHECK(base64_decode(base64_encode(s)) == s);
    }
    CHECK_THROWS_AS(base64_decode("abc"), ProtocolError);
    CHECK_THROWS_AS(base64_decode("ab!?"), ProtocolError);
}

TEST_CASE("state message payloads") {
    Session s(test_maps(), "open", {});
    const auto text = s.tick();
    const auto j = as_json(text);
    CHECK(j["type"] == "state");
    CHECK(j["color"]["encoding"] == "raw-rgb8-base64");
    CHECK(j["depth"]["encoding"] == "raw-f32le-base64");
    CHECK(j["color"]["w"] == 80);
    CHECK(j["color"]["h"] == 60);
    const auto m = parse_state_message(text);
    CHECK(m.depth.size() == 4 * 80 * 60);
    CHECK(m.color.size() == 3 * 80 * 60);
    CHECK(serialize(m) == text);
    const auto frame = sim::render_rgbd(*open_map(), {0, 0, 0}, sim::CameraModel{}, 0.0);
    CHECK(m.depth == depth_bytes(frame.depth));
    CHECK(m.color == color_bytes(frame.color));
    CHECK_THROWS_AS(parse_state_message(R"({"type":"ack"})"), ProtocolError);
}

TEST_CASE("session: 25 ticks at zero omega advance 0.5 m with exact cadence") {
    Session s(test_maps(), "open", {});
    double last_t = -1;
    for (int k = 0; k < 25; ++k) {
        s.handle(R"({"type":"cmd","omega":0})");
        const auto m = parse_state_message(s.tick());
        if (k > 0) CHECK(m.t - last_t == doctest::Approx(0.2).epsilon(1e-12));
        CHECK(m.t == doctest::Approx(0.2 * k).epsilon(1e-12));
        last_t = m.t;
    }
    CHECK(s.state().pose.x == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.state().pose.y == 0.0);
}

TEST_CASE("session: clamping, latching and errors") {
    Session s(test_maps(), "open", {});
    const auto ack = as_json(s.handle(R"({"type":"cmd","omega":5.0})").at(0));
    CHECK(ack["type"] == "ack");
    CHECK(ack["clamped"] == true);
    CHECK(ack["omega"] == 1.0);
    CHECK(parse_state_message(s.tick()).omega_applied == 1.0);
    const auto in_range = as_json(s.handle(R"({"type":"cmd","omega":-0.5})").at(0));
    CHECK(in_range["clamped"] == false);
    s.handle(R"({"type":"cmd","omega":0.3})");
    s.handle(R"({"type":"cmd","omega":0.1})");
    CHECK(parse_state_message(s.tick()).omega_applied == 0.1);

    const auto before = s.state();
    const auto err = as_json(s.handle(R"({"type":"reset","map_id":"nowhere"})").at(0));
    CHECK(err["type"] == "error");
    CHECK(s.state().pose == before.pose);
    CHECK(s.state().t == before.t);
    CHECK(as_json(s.handle("not json").at(0))["type"] == "error");
    CHECK(as_json(s.handle(R"({"type":"warp"})").at(0))["type"] == "error");
    CHECK(s.pending_omega() == 0.1);

    const auto reset = as_json(s.handle(R"({"type":"reset","map_id":"wall"})").at(0));
    CHECK(reset["of"] == "reset");
    CHECK(s.state().map->id == "wall");
    CHECK(s.state().t == 0.0);
    CHECK(s.pending_omega() == 0.0);
}

TEST_CASE("session: list_maps on the shipped set") {
    Session s(MapSet::load(sim::default_map_dir()), "corridor_a", {});
    const auto j = as_json(s.handle(R"({"type":"list_maps"})").at(0));
    CHECK(j["type"] == "maps");
    REQUIRE(j["ids"].size() == 6);
    int known = 0, unknown = 0;
    for (const auto& t : j["tags"]) (t == "known" ? known : unknown)++;
    CHECK(known == 4);
    CHECK(unknown == 2);
}

TEST_CASE("session: ten recorded ticks become one teleop episode") {
    TempDir tmp;
    SessionConfig cfg;
    cfg.out_dir = tmp.path.string();
    Session s(test_maps(), "open", cfg);
    s.tick();
    s.handle(R"({"type":"record","on":true})");
    for (int k = 0; k < 10; ++k) {
        s.handle(R"({"type":"cmd","omega":0.2})");
        CHECK(parse_state_message(s.tick()).recording);
    }
    const auto ack = as_json(s.handle(R"({"type":"record","on":false})").at(0));
    CHECK(ack["samples"] == 10);
    s.tick();
    const auto eps = data::load_dataset(tmp.path.string());
    REQUIRE(eps.size() == 1);
    CHECK(eps[0].source == data::Source::Teleop);
    REQUIRE(eps[0].samples.size() == 10);
    CHECK_NOTHROW(data::validate_episode(eps[0]));
    CHECK(eps[0].samples[0].t == doctest::Approx(0.2));
    for (const auto& smp : eps[0].samples) CHECK(smp.omega_label == 0.2f);
}

TEST_CASE("session: collision ends the session and flags the recording") {
    TempDir tmp;
    SessionConfig cfg;
    cfg.out_dir = tmp.path.string();
    Session s(test_maps(), "wall", cfg);
    s.handle(R"({"type":"record","on":true})");
    std::string last;
    while (!s.finished()) last = s.tick();
    const auto m = parse_state_message(last);
    CHECK(m.collided);
    CHECK(m.outcome == "collision");
    CHECK_THROWS_AS(s.tick(), InvalidState);
    CHECK(as_json(s.handle(R"({"type":"cmd","omega":0})").at(0))["type"] == "error");
    const auto eps = data::load_dataset(tmp.path.string());
    REQUIRE(eps.size() == 1);
    CHECK(eps[0].flagged);
    CHECK(eps[0].samples.size() == 15);
    s.handle(R"({"type":"reset","map_id":"wall"})");
    CHECK_FALSE(s.finished());
}

TEST_CASE("server: scripted lockstep client records a ten-tick session") {
    TempDir tmp;
    ServerConfig cfg;
    cfg.port = 0;
    cfg.mode = TickMode::Lockstep;
    cfg.out_dir = tmp.path.string();
    cfg.initial_map = "corridor_a";
    TeleopServer server(cfg, MapSet::load(sim::default_map_dir()));
    server.start();
    REQUIRE(server.port() != 0);
    {
        TeleopClient client("127.0.0.1", server.port());
        client.send(ClientMessage{ListMapsMsg{}});
        CHECK(as_json(client.receive_type("maps"))["ids"].size() == 6);
        client.send(ClientMessage{RecordMsg{true}});
        CHECK(as_json(client.receive_type("ack"))["on"] == true);
        double prev_t = -1;
        for (int k = 0; k < 10; ++k) {
            client.send(ClientMessage{CmdMsg{k < 5 ? 0.1 : -0.1}});
            const auto st = client.next_state();
            CHECK(st.recording);
            if (prev_t >= 0) CHECK(st.t - prev_t == doctest::Approx(0.2).epsilon(1e-12));
            prev_t = st.t;
        }
        client.send(ClientMessage{RecordMsg{false}});
        const auto ack = as_json(client.receive_type("ack"));
        CHECK(ack["samples"] == 10);
        client.send(R"({"type":"bogus"})");
        CHECK(as_json(client.receive_type("error"))["reason"].get<std::string>().find("bogus") != std::string::npos);
        client.close();
    }
    server.stop();
    const auto eps = data::load_dataset(tmp.path.string());
    REQUIRE(eps.size() == 1);
    CHECK(eps[0].source == data::Source::Teleop);
    CHECK(eps[0].map_id == "corridor_a");
    REQUIRE(eps[0].samples.size() == 10);
    CHECK_NOTHROW(data::validate_episode(eps[0]));
    CHECK(eps[0].samples[0].omega_label == 0.1f);
    CHECK(eps[0].samples[9].omega_label == -0.1f);
}

TEST_CASE("server: realtime ticks stream state at the fixed cadence") {
    ServerConfig cfg;
    cfg.port = 0;
    cfg.initial_map = "open";
    TeleopServer server(cfg, test_maps());
    server.start();
    TeleopClient client("127.0.0.1", server.port());
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> ts;
    for (int k = 0; k < 4; ++k) ts.push_back(client.next_state().t);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (std::size_t k = 1; k < ts.size(); ++k) CHECK(ts[k] - ts[k - 1] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(wall > 0.4);
    client.close();
    server.stop();
    CHECK(server.sessions_started() == 1);
}

TEST_CASE("server: bind failure is an I/O error") {
    ServerConfig cfg;
    cfg.port = 0;
    TeleopServer a(cfg, test_maps());
    a.start();
    ServerConfig clash = cfg;
    clash.port = a.port();
    TeleopServer b(clash, test_maps());
    CHECK_THROWS_AS(b.start(), IoError);
    ServerConfig bad = cfg;
    bad.bind = "not-an-address";
    TeleopServer c(bad, test_maps());
    CHECK_THROWS_AS(c.start(), IoError);
    a.stop();
    CHECK_THROWS_AS(TeleopServer(ServerConfig{.initial_map = "nope"}, test_maps()), InvalidInput);
}

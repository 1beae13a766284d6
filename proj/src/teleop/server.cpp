#include "rgbdnav/teleop/server.hpp"

#include <atomic>
#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <list>
#include <mutex>
#include <thread>

#include "rgbdnav/error.hpp"

namespace rgbdnav::teleop {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(tcp::socket socket, Session session, TickMode mode, double cadence)
        : ws_(std::move(socket)),
          timer_(ws_.get_executor()),
          session_(std::move(session)),
          mode_(mode),
          period_(std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(cadence))) {}

    ~Connection() {
        try {
            session_.close();
        } catch (const std::exception&) {
            // Saving failed while tearing down; nothing left to report to.
        }
    }

    void run() {
        ws_.async_accept([self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
    }

    void shutdown() {
        closed_ = true;
        timer_.cancel();
        beast::error_code ec;
        ws_.next_layer().shutdown(tcp::socket::shutdown_both, ec);
        ws_.next_layer().close(ec);
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) return;
        do_read();
        if (mode_ == TickMode::Realtime) {
            next_tick_ = std::chrono::steady_clock::now();
            schedule_tick();
        }
    }

    void do_read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
    }

    void on_read(beast::error_code ec) {
        if (ec) {
            closed_ = true;
            timer_.cancel();
            session_.close();
            return;
        }
        const std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        bool ok = true;
        for (auto& reply : session_.handle(text)) {
            ok = ok && message_type(reply) != "error";
            send(std::move(reply));
        }
        if (mode_ == TickMode::Lockstep && ok && message_type(text) == "cmd" && !session_.finished()) {
            send(session_.tick());
        }
        do_read();
    }

    void schedule_tick() {
        timer_.expires_at(next_tick_);
        timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
            if (ec || self->closed_) return;
            if (!self->session_.finished()) self->send(self->session_.tick());
            self->next_tick_ += self->period_;
            self->schedule_tick();
        });
    }

    void send(std::string text) {
        if (closed_) return;
        out_.push_back(std::move(text));
        if (out_.size() == 1) do_write();
    }

    void do_write() {
        ws_.text(true);
        ws_.async_write(net::buffer(out_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->out_.clear();
                return;
            }
            self->out_.pop_front();
            if (!self->out_.empty()) self->do_write();
        });
    }

    websocket::stream<tcp::socket> ws_;
    net::steady_timer timer_;
    beast::flat_buffer buffer_;
    std::deque<std::string> out_;
    Session session_;
    TickMode mode_;
    std::chrono::steady_clock::duration period_;
    std::chrono::steady_clock::time_point next_tick_;
    bool closed_ = false;
};

}  // namespace

struct TeleopServer::Impl {
    ServerConfig config;
    std::shared_ptr<const MapSet> maps;
    net::io_context ioc;
    tcp::acceptor acceptor{ioc};
    std::thread thread;
    std::list<std::weak_ptr<Connection>> connections;
    std::atomic<std::size_t> started{0};
    std::uint16_t port = 0;
    std::mutex mutex;
    std::condition_variable stopped_cv;
    bool running = false;

    void do_accept() {
        acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
            if (ec) return;
            SessionConfig sc;
            sc.omega_max = config.omega_max;
            sc.cadence = config.cadence;
            sc.camera = config.camera;
            sc.out_dir = config.out_dir;
            sc.session_id = "s" + std::to_string(started.fetch_add(1));
            const std::string map_id = config.initial_map.empty() ? maps->first_id() : config.initial_map;
            auto conn = std::make_shared<Connection>(std::move(socket), Session(maps, map_id, sc), config.mode,
                                                     config.cadence);
            connections.remove_if([](const auto& w) { return w.expired(); });
            connections.push_back(conn);
            conn->run();
            do_accept();
        });
    }
};

TeleopServer::TeleopServer(ServerConfig config, std::shared_ptr<const MapSet> maps) : impl_(std::make_unique<Impl>()) {
    if (!maps) throw InvalidInput("teleop server needs a map set");
    if (!config.initial_map.empty() && !maps->find(config.initial_map)) {
        throw InvalidInput("unknown initial map '" + config.initial_map + "'");
    }
    if (!(config.cadence > 0) || !(config.omega_max > 0)) throw ConfigError("cadence and omega_max must be positive");
    impl_->config = std::move(config);
    impl_->maps = std::move(maps);
}

TeleopServer::~TeleopServer() { stop(); }

void TeleopServer::start() {
    auto& im = *impl_;
    if (im.running) throw InvalidState("teleop server already running");
    beast::error_code ec;
    const auto address = net::ip::make_address(im.config.bind, ec);
    if (ec) throw IoError("bad bind address '" + im.config.bind + "': " + ec.message());
    const tcp::endpoint endpoint(address, im.config.port);
    im.acceptor.open(endpoint.protocol(), ec);
    if (!ec) im.acceptor.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) im.acceptor.bind(endpoint, ec);
    if (!ec) im.acceptor.listen(net::socket_base::max_listen_connections, ec);
    if (ec) {
        beast::error_code ignored;
        im.acceptor.close(ignored);
        throw IoError("cannot listen on " + im.config.bind + ":" + std::to_string(im.config.port) + ": " + ec.message());
    }
    im.port = im.acceptor.local_endpoint().port();
    im.running = true;
    im.do_accept();
    im.thread = std::thread([&im] { im.ioc.run(); });
}

void TeleopServer::stop() {
    auto& im = *impl_;
    {
        const std::lock_guard lock(im.mutex);
        if (!im.running) return;
        im.running = false;
    }
    net::post(im.ioc, [&im] {
        beast::error_code ec;
        im.acceptor.close(ec);
        for (auto& w : im.connections) {
            if (auto c = w.lock()) c->shutdown();
        }
    });
    // Let pending handlers observe the closed sockets, then finish.
    net::post(im.ioc, [&im] { im.ioc.stop(); });
    if (im.thread.joinable()) im.thread.join();
    im.connections.clear();
    im.ioc.restart();
    // Destroying outstanding handlers releases the connections and saves their recordings.
    im.ioc.poll();
    im.stopped_cv.notify_all();
}

void TeleopServer::wait() {
    std::unique_lock lock(impl_->mutex);
    impl_->stopped_cv.wait(lock, [this] { return !impl_->running; });
}

std::uint16_t TeleopServer::port() const { return impl_->port; }

std::size_t TeleopServer::sessions_started() const { return impl_->started.load(); }

}  // namespace rgbdnav::teleop

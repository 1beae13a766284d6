#include "rgbdnav/teleop/client.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "rgbdnav/error.hpp"

namespace rgbdnav::teleop {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

struct TeleopClient::Impl {
    net::io_context ioc;
    websocket::stream<tcp::socket> ws{ioc};
    bool open = false;
};

TeleopClient::TeleopClient(const std::string& host, std::uint16_t port) : impl_(std::make_unique<Impl>()) {
    try {
        tcp::resolver resolver(impl_->ioc);
        const auto results = resolver.resolve(host, std::to_string(port));
        net::connect(impl_->ws.next_layer(), results);
        impl_->ws.handshake(host, "/");
        impl_->ws.text(true);
        impl_->open = true;
    } catch (const boost::system::system_error& e) {
        throw IoError("cannot connect to ws://" + host + ":" + std::to_string(port) + ": " + e.what());
    }
}

TeleopClient::~TeleopClient() {
    try {
        close();
    } catch (const std::exception&) {
        // The server may already be gone.
    }
}

void TeleopClient::send(const std::string& text) {
    try {
        impl_->ws.write(net::buffer(text));
    } catch (const boost::system::system_error& e) {
        throw IoError(std::string("teleop send failed: ") + e.what());
    }
}

std::string TeleopClient::receive() {
    beast::flat_buffer buffer;
    try {
        impl_->ws.read(buffer);
    } catch (const boost::system::system_error& e) {
        throw IoError(std::string("teleop receive failed: ") + e.what());
    }
    return beast::buffers_to_string(buffer.data());
}

std::string TeleopClient::receive_type(const std::string& type) {
    for (;;) {
        std::string text = receive();
        if (message_type(text) == type) return text;
        backlog_.push_back(std::move(text));
    }
}

void TeleopClient::close() {
    if (!impl_->open) return;
    impl_->open = false;
    beast::error_code ec;
    impl_->ws.close(websocket::close_code::normal, ec);
}

}  // namespace rgbdnav::teleop

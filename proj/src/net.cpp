#include "lmsel/net.hpp"

#include "lmsel/error.hpp"
#include "lmsel/text.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace lmsel::net {

namespace {

std::string errno_text(const char* what)
{
    return std::string(what) + ": " + std::strerror(errno);
}

sockaddr_in resolve(const std::string& host, std::uint16_t port)
{
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    const std::string h = (host.empty() || host == "localhost") ? "127.0.0.1" : host;
    if (inet_pton(AF_INET, h.c_str(), &addr.sin_addr) != 1) {
        addrinfo hints{};
        hints.ai_family = AF_INET;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* res = nullptr;
        if (getaddrinfo(h.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
            throw TransportError("cannot resolve host '" + host + "'");
        }
        addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
        freeaddrinfo(res);
    }
    return addr;
}

void read_exact(int fd, std::uint8_t* out, std::size_t n)
{
    std::size_t got = 0;
    while (got < n) {
        const ssize_t r = ::recv(fd, out + got, n - got, 0);
        if (r > 0) {
            got += static_cast<std::size_t>(r);
        } else if (r == 0) {
            throw TransportError("connection closed mid-frame");
        } else if (errno == EINTR) {
            continue;
        } else if (errno == EAGAIN || errno == EWOULDBLOCK) {
            throw TransportError("timed out waiting for reply");
        } else {
            throw TransportError(errno_text("recv"));
        }
    }
}

}  // namespace

Socket& Socket::operator=(Socket&& other) noexcept
{
    if (this != &other) {
        if (fd_ >= 0) {
            ::close(fd_);
        }
        fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
}

Socket::~Socket()
{
    if (fd_ >= 0) {
        ::close(fd_);
    }
}

void Socket::shutdown_both() const
{
    if (fd_ >= 0) {
        ::shutdown(fd_, SHUT_RDWR);
    }
}

std::pair<std::string, std::uint16_t> parse_endpoint(std::string_view endpoint)
{
    const auto colon = endpoint.rfind(':');
    if (colon == std::string_view::npos) {
        throw ConfigError("endpoint must be host:port, got '" + std::string(endpoint) + "'");
    }
    std::uint64_t port = 0;
    try {
        port = text::parse_u64(endpoint.substr(colon + 1), "port");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (port > 65535) {
        throw ConfigError("port out of range in '" + std::string(endpoint) + "'");
    }
    return {std::string(endpoint.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

void write_all(int fd, std::span<const std::uint8_t> bytes)
{
    std::size_t sent = 0;
    while (sent < bytes.size()) {
        const ssize_t w = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
        if (w > 0) {
            sent += static_cast<std::size_t>(w);
        } else if (w < 0 && errno == EINTR) {
            continue;
        } else {
            throw TransportError(errno_text("send"));
        }
    }
}

std::vector<std::uint8_t> read_frame(int fd)
{
    std::vector<std::uint8_t> frame(protocol::kHeaderBytes);
    // An EOF before any byte is an orderly close.
    ssize_t r = 0;
    do {
        r = ::recv(fd, frame.data(), 1, 0);
    } while (r < 0 && errno == EINTR);
    if (r == 0) {
        return {};
    }
    if (r < 0) {
        if (errno == EAGAIN || errno == EWOULDBLOCK) {
            throw TransportError("timed out waiting for reply");
        }
        throw TransportError(errno_text("recv"));
    }
    read_exact(fd, frame.data() + 1, protocol::kHeaderBytes - 1);
    const std::size_t len = protocol::body_length(std::span<const std::uint8_t, protocol::kHeaderBytes>(frame.data(), protocol::kHeaderBytes));
    frame.resize(protocol::kHeaderBytes + len);
    read_exact(fd, frame.data() + protocol::kHeaderBytes, len);
    return frame;
}

TcpServer::TcpServer(MapServer& server, const std::string& host, std::uint16_t port) : server_(server)
{
    listener_ = Socket(::socket(AF_INET, SOCK_STREAM, 0));
    if (!listener_.valid()) {
        throw TransportError(errno_text("socket"));
    }
    const int one = 1;
    ::setsockopt(listener_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr = resolve(host, port);
    if (::bind(listener_.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        throw TransportError(errno_text("bind"));
    }
    if (::listen(listener_.fd(), 64) != 0) {
        throw TransportError(errno_text("listen"));
    }
    socklen_t len = sizeof(addr);
    ::getsockname(listener_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

TcpServer::~TcpServer()
{
    stop();
}

void TcpServer::start()
{
    if (running_.exchange(true)) {
        return;
    }
    acceptor_ = std::thread([this] { accept_loop(); });
}

void TcpServer::stop()
{
    if (!running_.exchange(false)) {
        return;
    }
    if (acceptor_.joinable()) {
        acceptor_.join();
    }
    std::list<Connection> conns;
    {
        std::lock_guard lock(conn_mutex_);
        for (auto& c : connections_) {
            c.socket.shutdown_both();
        }
        conns.swap(connections_);
    }
    for (auto& c : conns) {
        if (c.worker.joinable()) {
            c.worker.join();
        }
    }
}

void TcpServer::reap_finished()
{
    for (auto it = connections_.begin(); it != connections_.end();) {
        if (it->done.load()) {
            it->worker.join();
            it = connections_.erase(it);
        } else {
            ++it;
        }
    }
}

void TcpServer::accept_loop()
{
    while (running_.load()) {
        pollfd pfd{listener_.fd(), POLLIN, 0};
        const int ready = ::poll(&pfd, 1, 50);
        if (ready <= 0) {
            continue;
        }
        const int fd = ::accept(listener_.fd(), nullptr, nullptr);
        if (fd < 0) {
            continue;
        }
        const int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        std::lock_guard lock(conn_mutex_);
        if (!running_.load()) {
            ::close(fd);
            break;
        }
        reap_finished();
        auto& conn = connections_.emplace_back();
        conn.socket = Socket(fd);
        conn.worker = std::thread([this, fd, &conn] { serve_connection(fd, conn.done); });
    }
}

void TcpServer::serve_connection(int fd, std::atomic<bool>& done)
{
    try {
        while (true) {
            std::vector<std::uint8_t> frame;
            try {
                frame = read_frame(fd);
            } catch (const ProtocolError& e) {
                // The stream cannot be resynchronized after a bad length prefix.
                write_all(fd, protocol::encode(protocol::ErrorMessage{protocol::ErrorCode::malformed, e.offset(), e.what()}));
                break;
            }
            if (frame.empty()) {
                break;
            }
            write_all(fd, server_.handle_frame(frame));
        }
    } catch (const TransportError&) {
        // Peer went away; nothing to report back to.
    }
    ::shutdown(fd, SHUT_RDWR);
    done.store(true);
}

TcpConnection TcpConnection::connect(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout)
{
    Socket sock(::socket(AF_INET, SOCK_STREAM, 0));
    if (!sock.valid()) {
        throw TransportError(errno_text("socket"));
    }
    sockaddr_in addr = resolve(host, port);
    if (::connect(sock.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        throw TransportError(errno_text("connect"));
    }
    const int one = 1;
    ::setsockopt(sock.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
    tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
    ::setsockopt(sock.fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
    return TcpConnection(std::move(sock));
}

std::vector<std::uint8_t> TcpConnection::round_trip(std::span<const std::uint8_t> frame)
{
    write_all(socket_.fd(), frame);
    auto reply = read_frame(socket_.fd());
    if (reply.empty()) {
        throw TransportError("server closed the connection");
    }
    return reply;
}

}  // namespace lmsel::net

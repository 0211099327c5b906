#pragma once

#include "lmsel/map_service.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <list>
#include <mutex>
#include <string>
#include <thread>

namespace lmsel::net {

/// Owning socket descriptor.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    Socket& operator=(Socket&& other) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket();

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }
    void shutdown_both() const;

private:
    int fd_ = -1;
};

/// Splits "host:port". Throws ConfigError.
std::pair<std::string, std::uint16_t> parse_endpoint(std::string_view endpoint);

/// Writes all bytes. Throws TransportError.
void write_all(int fd, std::span<const std::uint8_t> bytes);

/// Reads one complete frame. Returns an empty vector on orderly EOF before
/// the first header byte. Throws TransportError (I/O, timeout, EOF mid-frame)
/// and ProtocolError (bad length prefix).
std::vector<std::uint8_t> read_frame(int fd);

/// Serves a MapServer over TCP, one thread per connection. A malformed frame
/// gets an error reply and the connection stays open; only an unusable
/// length prefix closes it.
class TcpServer {
public:
    /// Binds and listens; port 0 picks an ephemeral port.
    TcpServer(MapServer& server, const std::string& host, std::uint16_t port);
    ~TcpServer();

    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    std::uint16_t port() const { return port_; }

    void start();
    /// Stops accepting, closes live connections and joins all threads.
    void stop();

private:
    void accept_loop();
    void serve_connection(int fd, std::atomic<bool>& done);
    void reap_finished();

    MapServer& server_;
    Socket listener_;
    std::uint16_t port_ = 0;
    std::atomic<bool> running_{false};
    std::thread acceptor_;

    std::mutex conn_mutex_;
    struct Connection {
        Socket socket;
        std::thread worker;
        std::atomic<bool> done{false};
    };
    std::list<Connection> connections_;
};

/// Client end of a TCP connection to a TcpServer.
class TcpConnection final : public MapConnection {
public:
    /// Throws TransportError if the server is unreachable.
    static TcpConnection connect(const std::string& host, std::uint16_t port,
                                 std::chrono::milliseconds timeout = std::chrono::seconds(10));

    std::vector<std::uint8_t> round_trip(std::span<const std::uint8_t> frame) override;

private:
    explicit TcpConnection(Socket socket) : socket_(std::move(socket)) {}
    Socket socket_;
};

}  // namespace lmsel::net

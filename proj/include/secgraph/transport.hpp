#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <unordered_set>
#include <vector>

#include "secgraph/bytes.hpp"

namespace secgraph {

// Anything that answers one request frame with one response frame.
class Endpoint {
public:
    virtual ~Endpoint() = default;
    virtual Bytes handle(const Bytes& request_frame) = 0;
};

// One cross-boundary round trip per call. The optional tap observes every
// (request, response) pair; tests use it for structural privacy invariants.
class Transport {
public:
    virtual ~Transport() = default;

    Bytes round_trip(const Bytes& request) {
        Bytes response = exchange(request);
        if (tap) tap(request, response);
        return response;
    }

    std::function<void(const Bytes& request, const Bytes& response)> tap;

protected:
    virtual Bytes exchange(const Bytes& request) = 0;
};

class DirectTransport : public Transport {
public:
    explicit DirectTransport(Endpoint& endpoint) : endpoint_(&endpoint) {}

protected:
    Bytes exchange(const Bytes& request) override { return endpoint_->handle(request); }

private:
    Endpoint* endpoint_;
};

// Serves an Endpoint over a loopback TCP socket, one thread per connection.
class SocketServer {
public:
    explicit SocketServer(Endpoint& endpoint);
    ~SocketServer();

    SocketServer(const SocketServer&) = delete;
    SocketServer& operator=(const SocketServer&) = delete;

    uint16_t port() const { return port_; }
    void stop();

private:
    void accept_loop();
    void serve_connection(int fd);

    Endpoint* endpoint_;
    int listen_fd_ = -1;
    uint16_t port_ = 0;
    std::thread acceptor_;
    std::mutex workers_mu_;
    std::vector<std::thread> workers_;
    std::unordered_set<int> live_fds_;  // fds erased under the lock before close
    bool stopped_ = false;
};

class SocketTransport : public Transport {
public:
    explicit SocketTransport(uint16_t port);
    ~SocketTransport() override;

    SocketTransport(const SocketTransport&) = delete;
    SocketTransport& operator=(const SocketTransport&) = delete;

protected:
    Bytes exchange(const Bytes& request) override;

private:
    int fd_ = -1;
};

}  // namespace secgraph

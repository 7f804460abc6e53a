#include "secgraph/transport.hpp"

#include <cerrno>
#include <cstring>
#include <stdexcept>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

namespace secgraph {
namespace {

void write_all(int fd, const uint8_t* data, size_t n) {
    size_t off = 0;
    while (off < n) {
        ssize_t w = ::write(fd, data + off, n - off);
        if (w < 0) {
            if (errno == EINTR) continue;
            throw std::runtime_error(std::string("socket write: ") + std::strerror(errno));
        }
        off += static_cast<size_t>(w);
    }
}

// Returns false on clean EOF at the first byte, throws on mid-message EOF.
bool read_exact(int fd, uint8_t* data, size_t n) {
    size_t off = 0;
    while (off < n) {
        ssize_t r = ::read(fd, data + off, n - off);
        if (r < 0) {
            if (errno == EINTR) continue;
            throw std::runtime_error(std::string("socket read: ") + std::strerror(errno));
        }
        if (r == 0) {
            if (off == 0) return false;
            throw std::runtime_error("socket closed mid-frame");
        }
        off += static_cast<size_t>(r);
    }
    return true;
}

// Frames are self-describing: {u32 length}{length bytes}.
bool read_frame(int fd, Bytes& out) {
    uint8_t header[4];
    if (!read_exact(fd, header, 4)) return false;
    uint32_t len = static_cast<uint32_t>(header[0]) | (static_cast<uint32_t>(header[1]) << 8) |
                   (static_cast<uint32_t>(header[2]) << 16) |
                   (static_cast<uint32_t>(header[3]) << 24);
    if (len == 0 || len > (64u << 20)) throw std::runtime_error("bad frame length");
    out.assign(4 + len, 0);
    std::memcpy(out.data(), header, 4);
    if (!read_exact(fd, out.data() + 4, len)) throw std::runtime_error("socket closed mid-frame");
    return true;
}

}  // namespace

SocketServer::SocketServer(Endpoint& endpoint) : endpoint_(&endpoint) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error("socket() failed");

    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(listen_fd_);
        throw std::runtime_error("bind() failed");
    }
    socklen_t len = sizeof(addr);
    if (::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
        ::close(listen_fd_);
        throw std::runtime_error("getsockname() failed");
    }
    port_ = ntohs(addr.sin_port);
    if (::listen(listen_fd_, 16) != 0) {
        ::close(listen_fd_);
        throw std::runtime_error("listen() failed");
    }
    acceptor_ = std::thread([this] { accept_loop(); });
}

SocketServer::~SocketServer() { stop(); }

void SocketServer::stop() {
    {
        std::lock_guard<std::mutex> lock(workers_mu_);
        if (stopped_) return;
        stopped_ = true;
        // Unblock workers parked in read(); fds leave live_fds_ before they
        // are closed, so no recycled descriptor can be hit here.
        for (int fd : live_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (acceptor_.joinable()) acceptor_.join();
    std::vector<std::thread> workers;
    {
        std::lock_guard<std::mutex> lock(workers_mu_);
        workers.swap(workers_);
    }
    for (auto& t : workers)
        if (t.joinable()) t.join();
}

void SocketServer::accept_loop() {
    for (;;) {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR) continue;
            return;  // listener closed
        }
        std::lock_guard<std::mutex> lock(workers_mu_);
        if (stopped_) {
            ::close(fd);
            return;
        }
        live_fds_.insert(fd);
        workers_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void SocketServer::serve_connection(int fd) {
    try {
        Bytes request;
        while (read_frame(fd, request)) {
            Bytes response = endpoint_->handle(request);
            write_all(fd, response.data(), response.size());
        }
    } catch (const std::exception&) {
        // connection torn down; nothing to report
    }
    {
        std::lock_guard<std::mutex> lock(workers_mu_);
        live_fds_.erase(fd);
    }
    ::close(fd);
}

SocketTransport::SocketTransport(uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw std::runtime_error("socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd_);
        throw std::runtime_error("connect() failed");
    }
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

SocketTransport::~SocketTransport() {
    if (fd_ >= 0) ::close(fd_);
}

Bytes SocketTransport::exchange(const Bytes& request) {
    write_all(fd_, request.data(), request.size());
    Bytes response;
    if (!read_frame(fd_, response)) throw std::runtime_error("server closed connection");
    return response;
}

}  // namespace secgraph

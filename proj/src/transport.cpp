#include "openfed/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstring>

#include "openfed/log.hpp"

namespace openfed {

namespace detail {

void msg_queue::push(envelope e) {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        items_.push_back(std::move(e));
    }
    cv_.notify_one();
}

std::optional<envelope> msg_queue::pop(int timeout_ms) {
    std::unique_lock<std::mutex> lock(mutex_);
    if (!cv_.wait_for(lock, std::chrono::milliseconds(timeout_ms),
                      [this] { return !items_.empty(); })) {
        return std::nullopt;
    }
    envelope e = std::move(items_.front());
    items_.pop_front();
    return e;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// in-process transport

struct inproc_network::registry {
    std::mutex mutex;
    std::map<std::string, std::shared_ptr<detail::msg_queue>> mailboxes;
};

namespace {

class inproc_endpoint final : public endpoint {
public:
    inproc_endpoint(std::string id, std::shared_ptr<inproc_network::registry> reg,
                    std::shared_ptr<detail::msg_queue> inbox)
        : id_(std::move(id)), registry_(std::move(reg)), inbox_(std::move(inbox)) {}

    const std::string& node() const override { return id_; }

    void send(const std::string& to, const envelope& e) override {
        std::shared_ptr<detail::msg_queue> target;
        {
            std::lock_guard<std::mutex> lock(registry_->mutex);
            auto it = registry_->mailboxes.find(to);
            if (it == registry_->mailboxes.end()) {
                throw unknown_peer("no registered peer '" + to + "'");
            }
            target = it->second;
        }
        target->push(e);
    }

    std::optional<envelope> recv(int timeout_ms) override { return inbox_->pop(timeout_ms); }

private:
    std::string id_;
    std::shared_ptr<inproc_network::registry> registry_;
    std::shared_ptr<detail::msg_queue> inbox_;
};

}  // namespace

inproc_network::inproc_network() : registry_(std::make_shared<registry>()) {}

std::shared_ptr<endpoint> inproc_network::create_endpoint(const std::string& id) {
    auto inbox = std::make_shared<detail::msg_queue>();
    {
        std::lock_guard<std::mutex> lock(registry_->mutex);
        auto [it, inserted] = registry_->mailboxes.emplace(id, inbox);
        (void)it;
        if (!inserted) throw duplicate_node("endpoint '" + id + "' already registered");
    }
    return std::make_shared<inproc_endpoint>(id, registry_, inbox);
}

// ---------------------------------------------------------------------------
// TCP transport

namespace {

struct host_port {
    std::string host;
    std::uint16_t port = 0;
};

host_port parse_address(const std::string& address) {
    auto colon = address.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= address.size()) {
        throw io_error("address '" + address + "' is not host:port");
    }
    host_port hp;
    hp.host = address.substr(0, colon);
    int port = std::stoi(address.substr(colon + 1));
    if (port < 0 || port > 65535) throw io_error("port out of range in '" + address + "'");
    hp.port = static_cast<std::uint16_t>(port);
    return hp;
}

sockaddr_in resolve(const host_port& hp) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(hp.port);
    if (inet_pton(AF_INET, hp.host.c_str(), &addr.sin_addr) == 1) return addr;

    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (getaddrinfo(hp.host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
        throw io_error("cannot resolve host '" + hp.host + "'");
    }
    addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    freeaddrinfo(res);
    return addr;
}

bool write_all(int fd, const std::uint8_t* data, std::size_t size) {
    std::size_t sent = 0;
    while (sent < size) {
        ssize_t n = ::send(fd, data + sent, size - sent, MSG_NOSIGNAL);
        if (n <= 0) return false;
        sent += static_cast<std::size_t>(n);
    }
    return true;
}

bool read_all(int fd, std::uint8_t* data, std::size_t size) {
    std::size_t got = 0;
    while (got < size) {
        ssize_t n = ::recv(fd, data + got, size - got, 0);
        if (n <= 0) return false;
        got += static_cast<std::size_t>(n);
    }
    return true;
}

constexpr std::uint32_t max_tcp_frame = 1u << 30;  // 1 GiB sanity cap

}  // namespace

tcp_endpoint::tcp_endpoint(std::string id, const std::string& bind_address) : id_(std::move(id)) {
    host_port hp = parse_address(bind_address);
    sockaddr_in addr = resolve(hp);

    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw io_error("socket() failed");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(listen_fd_);
        throw io_error("cannot bind '" + bind_address + "': " + std::strerror(errno));
    }
    if (::listen(listen_fd_, 64) != 0) {
        ::close(listen_fd_);
        throw io_error("listen() failed on '" + bind_address + "'");
    }

    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    bound_address_ = hp.host + ":" + std::to_string(ntohs(bound.sin_port));

    running_.store(true);
    acceptor_ = std::thread([this] { accept_loop(); });
}

tcp_endpoint::~tcp_endpoint() { close(); }

void tcp_endpoint::set_peers(std::map<std::string, std::string> addresses) {
    std::lock_guard<std::mutex> lock(peers_mutex_);
    peer_addresses_ = std::move(addresses);
}

void tcp_endpoint::accept_loop() {
    while (running_.load()) {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (!running_.load()) break;
            continue;
        }
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        std::lock_guard<std::mutex> lock(readers_mutex_);
        if (!running_.load()) {
            ::close(fd);
            break;
        }
        readers_.emplace_back([this, fd] { reader_loop(fd); });
    }
}

void tcp_endpoint::reader_loop(int fd) {
    std::vector<std::uint8_t> frame;
    while (running_.load()) {
        std::uint8_t header[4];
        if (!read_all(fd, header, sizeof(header))) break;
        std::uint32_t frame_len = 0;
        for (int i = 3; i >= 0; --i) frame_len = (frame_len << 8) | header[i];
        if (frame_len == 0 || frame_len > max_tcp_frame) {
            log_warn("tcp endpoint %s: dropping connection, bad frame length %u", id_.c_str(),
                     frame_len);
            break;
        }
        frame.resize(frame_len);
        if (!read_all(fd, frame.data(), frame_len)) break;
        try {
            inbox_.push(decode(frame.data(), frame.size()));
        } catch (const error& e) {
            log_warn("tcp endpoint %s: dropping undecodable frame: %s", id_.c_str(), e.what());
            break;
        }
    }
    ::close(fd);
}

int tcp_endpoint::peer_socket(const std::string& to) {
    std::lock_guard<std::mutex> lock(peers_mutex_);
    auto cached = peer_sockets_.find(to);
    if (cached != peer_sockets_.end()) return cached->second;

    auto addr_it = peer_addresses_.find(to);
    if (addr_it == peer_addresses_.end()) {
        throw unknown_peer("no address registered for peer '" + to + "'");
    }
    sockaddr_in addr = resolve(parse_address(addr_it->second));

    // peers may start in any order, so retry the connect with backoff
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::milliseconds(connect_timeout_ms_);
    int backoff_ms = 20;
    for (;;) {
        int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) throw io_error("socket() failed");
        if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) {
            int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
            peer_sockets_[to] = fd;
            return fd;
        }
        ::close(fd);
        if (std::chrono::steady_clock::now() >= deadline) {
            throw connection_lost("cannot connect to '" + to + "' at " + addr_it->second);
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
        backoff_ms = std::min(backoff_ms * 2, 500);
    }
}

void tcp_endpoint::send(const std::string& to, const envelope& e) {
    std::vector<std::uint8_t> frame = encode(e);
    if (frame.size() > max_tcp_frame) throw payload_too_large("frame exceeds transport cap");

    std::uint8_t header[4];
    for (int i = 0; i < 4; ++i) header[i] = static_cast<std::uint8_t>(frame.size() >> (8 * i));

    int fd = peer_socket(to);
    std::lock_guard<std::mutex> lock(peers_mutex_);
    if (!write_all(fd, header, sizeof(header)) || !write_all(fd, frame.data(), frame.size())) {
        ::close(fd);
        peer_sockets_.erase(to);
        throw connection_lost("connection to '" + to + "' lost mid-send");
    }
}

std::optional<envelope> tcp_endpoint::recv(int timeout_ms) { return inbox_.pop(timeout_ms); }

void tcp_endpoint::close() {
    bool was_running = running_.exchange(false);
    if (!was_running) return;

    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (acceptor_.joinable()) acceptor_.join();

    {
        std::lock_guard<std::mutex> lock(peers_mutex_);
        for (auto& [id, fd] : peer_sockets_) {
            (void)id;
            ::shutdown(fd, SHUT_RDWR);
            ::close(fd);
        }
        peer_sockets_.clear();
    }

    std::vector<std::thread> readers;
    {
        std::lock_guard<std::mutex> lock(readers_mutex_);
        readers.swap(readers_);
    }
    for (std::thread& t : readers) {
        if (t.joinable()) t.join();
    }
}

}  // namespace openfed

#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "openfed/envelope.hpp"

namespace openfed {

// One logical mailbox per node. send may be called concurrently from many
// tasks and preserves per-sender FIFO order; recv is consumed by the node's
// single session loop. A recv timeout is a value (nullopt), not an error.
class endpoint {
public:
    virtual ~endpoint() = default;

    virtual const std::string& node() const = 0;

    // throws unknown_peer, connection_lost, timeout_error
    virtual void send(const std::string& to, const envelope& e) = 0;

    virtual std::optional<envelope> recv(int timeout_ms) = 0;
};

namespace detail {

class msg_queue {
public:
    void push(envelope e);
    std::optional<envelope> pop(int timeout_ms);

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<envelope> items_;
};

}  // namespace detail

// Shared-memory transport for standalone simulation. Envelopes pass through
// the codec-equivalent value copy; delivery is exactly-once and per-sender
// ordered because each push happens under the receiving mailbox's lock.
// Endpoints keep the registry alive, so they may outlive the network object.
class inproc_network {
public:
    inproc_network();

    // throws duplicate_node if the id is already registered
    std::shared_ptr<endpoint> create_endpoint(const std::string& id);

private:
    struct registry;
    std::shared_ptr<registry> registry_;
};

// TCP transport for distributed computing. Each endpoint binds a listening
// socket ("host:port"; port 0 picks an ephemeral port, see bound_address),
// accepts peer connections on a background thread, and connects to peers
// lazily on first send. Frames are length-prefixed (u32 LE) encode() output.
class tcp_endpoint final : public endpoint {
public:
    // throws io_error when the address cannot be bound
    tcp_endpoint(std::string id, const std::string& bind_address);
    ~tcp_endpoint() override;

    tcp_endpoint(const tcp_endpoint&) = delete;
    tcp_endpoint& operator=(const tcp_endpoint&) = delete;

    const std::string& node() const override { return id_; }
    const std::string& bound_address() const { return bound_address_; }

    // peer id -> "host:port"; must cover every send destination
    void set_peers(std::map<std::string, std::string> addresses);

    // Connect attempts are retried with backoff until connect_timeout_ms
    // elapses (peers may start in any order), then connection_lost.
    void set_connect_timeout(int timeout_ms) { connect_timeout_ms_ = timeout_ms; }

    void send(const std::string& to, const envelope& e) override;
    std::optional<envelope> recv(int timeout_ms) override;

    void close();

private:
    void accept_loop();
    void reader_loop(int fd);
    int peer_socket(const std::string& to);

    std::string id_;
    std::string bound_address_;
    int listen_fd_ = -1;
    int connect_timeout_ms_ = 10000;

    detail::msg_queue inbox_;

    std::mutex peers_mutex_;
    std::map<std::string, std::string> peer_addresses_;
    std::map<std::string, int> peer_sockets_;

    std::mutex readers_mutex_;
    std::vector<std::thread> readers_;
    std::thread acceptor_;
    std::atomic<bool> running_{false};
};

}  // namespace openfed

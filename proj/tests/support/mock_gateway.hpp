#pragma once

#include "vgd/backends/toy_backend.hpp"

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace vgd::testing {

/// In-process HTTP server speaking the gateway wire protocol, backed by a
/// ToyBackend. Binds to an ephemeral localhost port.
class MockGateway {
  public:
    explicit MockGateway(ToyBackend backend);
    ~MockGateway();
    MockGateway(const MockGateway&) = delete;
    MockGateway& operator=(const MockGateway&) = delete;

    std::string url() const;
    int port() const noexcept { return port_; }
    const ToyBackend& backend() const noexcept { return backend_; }

    /// Number of requests served so far.
    std::size_t requests() const noexcept { return requests_.load(); }

    /// Makes every request to `path` answer HTTP 500 with a non-JSON body.
    void break_endpoint(std::string path);

    void stop();

  private:
    ToyBackend backend_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<std::size_t> requests_{0};
    std::mutex broken_mutex_;
    std::string broken_path_;
};

} // namespace vgd::testing

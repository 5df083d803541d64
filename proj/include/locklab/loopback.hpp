#pragma once

#include <atomic>
#include <memory>
#include <thread>

#include "locklab/lock.hpp"

namespace locklab {

// TCP loopback transport: the same frames that flow through InprocPort,
// carried over 127.0.0.1 with a 4-byte little-endian length prefix per
// message. Exists to show the attack chain is transport-indifferent.
class LoopbackServer {
 public:
  // Binds an ephemeral port and starts serving `lock` on a background thread.
  explicit LoopbackServer(Lock& lock);
  ~LoopbackServer();

  LoopbackServer(const LoopbackServer&) = delete;
  LoopbackServer& operator=(const LoopbackServer&) = delete;

  uint16_t port() const { return port_; }
  void stop();

 private:
  void serve();

  Lock& lock_;
  int listen_fd_ = -1;
  uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::mutex lock_mu_;     // the lock itself is single-threaded
  std::mutex clients_mu_;  // guards client_fds_
  std::vector<int> client_fds_;
  std::thread thread_;
};

class LoopbackPort : public LockPort {
 public:
  static Result<std::unique_ptr<LoopbackPort>> dial(uint16_t port);
  ~LoopbackPort() override;

  Result<wire::Frame> transact(const wire::Frame& request) override;

 private:
  explicit LoopbackPort(int fd) : fd_(fd) {}
  int fd_;
  std::mutex mu_;
};

}  // namespace locklab

#pragma once

#include <mutex>
#include <vector>

#include "locklab/result.hpp"
#include "locklab/wire.hpp"

namespace locklab {

// Client-side handle to a lock's radio interface. Implementations serialize
// concurrent callers; the lock itself is single-threaded.
class LockPort {
 public:
  virtual ~LockPort() = default;
  virtual Result<wire::Frame> transact(const wire::Frame& request) = 0;
};

// The droplock exfiltration path: an advertisement-shaped broadcast medium
// that anyone in radio range can append to and anyone can observe. Records
// carry raw image bytes and nothing that links them to a person; recovering
// identity is the listener's problem.
class BroadcastChannel {
 public:
  void publish(Bytes record) {
    std::lock_guard<std::mutex> g(mu_);
    records_.push_back(std::move(record));
  }

  std::vector<Bytes> snapshot() const {
    std::lock_guard<std::mutex> g(mu_);
    return records_;
  }

  size_t size() const {
    std::lock_guard<std::mutex> g(mu_);
    return records_.size();
  }

 private:
  mutable std::mutex mu_;
  std::vector<Bytes> records_;
};

}  // namespace locklab

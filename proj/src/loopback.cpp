#include "locklab/loopback.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

namespace locklab {

namespace {

bool send_all(int fd, const uint8_t* data, size_t n) {
  size_t sent = 0;
  while (sent < n) {
    ssize_t r = ::send(fd, data + sent, n - sent, MSG_NOSIGNAL);
    if (r <= 0) return false;
    sent += static_cast<size_t>(r);
  }
  return true;
}

bool recv_all(int fd, uint8_t* data, size_t n) {
  size_t got = 0;
  while (got < n) {
    ssize_t r = ::recv(fd, data + got, n - got, 0);
    if (r <= 0) return false;
    got += static_cast<size_t>(r);
  }
  return true;
}

bool send_msg(int fd, ByteView msg) {
  uint8_t len[4];
  uint32_t n = static_cast<uint32_t>(msg.size());
  for (int i = 0; i < 4; ++i) len[i] = static_cast<uint8_t>(n >> (8 * i));
  return send_all(fd, len, 4) && send_all(fd, msg.data(), msg.size());
}

bool recv_msg(int fd, Bytes& out) {
  uint8_t len[4];
  if (!recv_all(fd, len, 4)) return false;
  uint32_t n = get_u32le(len);
  if (n > 1 << 20) return false;  // nothing legitimate is this large
  out.resize(n);
  return n == 0 || recv_all(fd, out.data(), n);
}

}  // namespace

LoopbackServer::LoopbackServer(Lock& lock) : lock_(lock) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) return;
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;  // ephemeral
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 8) != 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    return;
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  thread_ = std::thread([this] { serve(); });
}

LoopbackServer::~LoopbackServer() { stop(); }

void LoopbackServer::stop() {
  if (stopping_.exchange(true)) return;
  if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
  {
    std::lock_guard<std::mutex> g(clients_mu_);
    for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  if (thread_.joinable()) thread_.join();
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
}

void LoopbackServer::serve() {
  // Each connection gets a reader thread; lock access is serialized. Client
  // fds stay allocated until after every worker has joined, so a shutdown on
  // stop() can never hit a recycled descriptor.
  std::vector<std::thread> workers;
  while (!stopping_.load()) {
    int client = ::accept(listen_fd_, nullptr, nullptr);
    if (client < 0) break;
    {
      std::lock_guard<std::mutex> g(clients_mu_);
      client_fds_.push_back(client);
    }
    workers.emplace_back([this, client] {
      Bytes request;
      while (!stopping_.load() && recv_msg(client, request)) {
        Bytes response;
        {
          std::lock_guard<std::mutex> g(lock_mu_);
          response = lock_.handle_bytes(request);
        }
        if (!send_msg(client, response)) break;
      }
    });
  }
  for (auto& w : workers) w.join();
  std::lock_guard<std::mutex> g(clients_mu_);
  for (int fd : client_fds_) ::close(fd);
  client_fds_.clear();
}

Result<std::unique_ptr<LoopbackPort>> LoopbackPort::dial(uint16_t port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return Err::TransportError;
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    return Err::TransportError;
  }
  return std::unique_ptr<LoopbackPort>(new LoopbackPort(fd));
}

LoopbackPort::~LoopbackPort() {
  if (fd_ >= 0) ::close(fd_);
}

Result<wire::Frame> LoopbackPort::transact(const wire::Frame& request) {
  std::lock_guard<std::mutex> g(mu_);
  auto encoded = wire::encode(request);
  if (!encoded.ok()) return encoded.error();
  if (!send_msg(fd_, encoded.value())) return Err::TransportError;
  Bytes raw;
  if (!recv_msg(fd_, raw)) return Err::TransportError;
  return wire::decode(raw);
}

}  // namespace locklab

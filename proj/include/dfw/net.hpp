#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dfw::net {

class NetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Endpoint {
  uint32_t addr = 0;  // IPv4, host byte order
  uint16_t port = 0;

  std::string to_string() const;
  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

// IPv4 resolution (numeric or DNS).
Endpoint resolve(const std::string& host, uint16_t port);

// "host" or "host:port"; host may be a name or dotted quad.
Endpoint parse_endpoint(const std::string& spec, uint16_t default_port);

class UdpSocket {
 public:
  UdpSocket();
  ~UdpSocket();
  UdpSocket(UdpSocket&& other) noexcept;
  UdpSocket& operator=(UdpSocket&& other) noexcept;
  UdpSocket(const UdpSocket&) = delete;
  UdpSocket& operator=(const UdpSocket&) = delete;

  void bind(const Endpoint& ep);  // port 0 picks an ephemeral port
  Endpoint local_endpoint() const;

  void send_to(std::span<const uint8_t> data, const Endpoint& to);

  // nullopt on timeout. Datagrams longer than max_len are dropped
  // (reported as timeout on the next deadline) rather than truncated.
  std::optional<std::pair<std::vector<uint8_t>, Endpoint>> recv_from(
      std::chrono::milliseconds timeout, size_t max_len = 65536);

 private:
  int fd_ = -1;
};

}  // namespace dfw::net

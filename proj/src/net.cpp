#include "dfw/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace dfw::net {

namespace {

std::string errno_text(const char* what) {
  return std::string(what) + ": " + std::strerror(errno);
}

sockaddr_in to_sockaddr(const Endpoint& ep) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(ep.port);
  sa.sin_addr.s_addr = htonl(ep.addr);
  return sa;
}

Endpoint from_sockaddr(const sockaddr_in& sa) {
  return {ntohl(sa.sin_addr.s_addr), ntohs(sa.sin_port)};
}

}  // namespace

std::string Endpoint::to_string() const {
  in_addr a{htonl(addr)};
  char buf[INET_ADDRSTRLEN];
  inet_ntop(AF_INET, &a, buf, sizeof buf);
  return std::string(buf) + ":" + std::to_string(port);
}

Endpoint resolve(const std::string& host, uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_DGRAM;
  addrinfo* res = nullptr;
  int rc = getaddrinfo(host.c_str(), nullptr, &hints, &res);
  if (rc != 0) throw NetError("cannot resolve '" + host + "': " + gai_strerror(rc));
  Endpoint ep{ntohl(reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr.s_addr), port};
  freeaddrinfo(res);
  return ep;
}

Endpoint parse_endpoint(const std::string& spec, uint16_t default_port) {
  size_t colon = spec.rfind(':');
  if (colon == std::string::npos) return resolve(spec, default_port);
  std::string host = spec.substr(0, colon);
  std::string port_s = spec.substr(colon + 1);
  size_t pos = 0;
  unsigned long port = std::stoul(port_s, &pos);
  if (pos != port_s.size() || port > 65535) throw NetError("bad port in '" + spec + "'");
  return resolve(host, static_cast<uint16_t>(port));
}

UdpSocket::UdpSocket() {
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) throw NetError(errno_text("socket"));
}

UdpSocket::~UdpSocket() {
  if (fd_ >= 0) ::close(fd_);
}

UdpSocket::UdpSocket(UdpSocket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

UdpSocket& UdpSocket::operator=(UdpSocket&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

void UdpSocket::bind(const Endpoint& ep) {
  sockaddr_in sa = to_sockaddr(ep);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0)
    throw NetError(errno_text("bind"));
}

Endpoint UdpSocket::local_endpoint() const {
  sockaddr_in sa{};
  socklen_t len = sizeof sa;
  if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&sa), &len) != 0)
    throw NetError(errno_text("getsockname"));
  return from_sockaddr(sa);
}

void UdpSocket::send_to(std::span<const uint8_t> data, const Endpoint& to) {
  sockaddr_in sa = to_sockaddr(to);
  ssize_t n = ::sendto(fd_, data.data(), data.size(), 0, reinterpret_cast<sockaddr*>(&sa),
                       sizeof sa);
  if (n < 0 || static_cast<size_t>(n) != data.size()) throw NetError(errno_text("sendto"));
}

std::optional<std::pair<std::vector<uint8_t>, Endpoint>> UdpSocket::recv_from(
    std::chrono::milliseconds timeout, size_t max_len) {
  pollfd pfd{fd_, POLLIN, 0};
  int rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
  if (rc < 0) {
    if (errno == EINTR) return std::nullopt;
    throw NetError(errno_text("poll"));
  }
  if (rc == 0) return std::nullopt;

  std::vector<uint8_t> buf(max_len);
  sockaddr_in sa{};
  socklen_t len = sizeof sa;
  ssize_t n = ::recvfrom(fd_, buf.data(), buf.size(), MSG_TRUNC,
                         reinterpret_cast<sockaddr*>(&sa), &len);
  if (n < 0) {
    if (errno == EINTR || errno == EAGAIN) return std::nullopt;
    throw NetError(errno_text("recvfrom"));
  }
  if (static_cast<size_t>(n) > max_len) return std::nullopt;  // oversized: drop
  buf.resize(static_cast<size_t>(n));
  return std::make_pair(std::move(buf), from_sockaddr(sa));
}

}  // namespace dfw::net

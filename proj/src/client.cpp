#include "dfw/client.hpp"

namespace dfw::client {

namespace {

wire::Message exchange(const net::Endpoint& server, const wire::Message& msg, int attempts,
                       std::chrono::milliseconds timeout) {
  net::UdpSocket sock;
  std::vector<uint8_t> payload = wire::encode(msg);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    sock.send_to(payload, server);
    auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) break;
      auto got = sock.recv_from(left, wire::kMaxDatagram);
      if (!got) break;
      // Ignore datagrams that are not from the server we spoke to.
      if (got->second != server) continue;
      return wire::decode(got->first);
    }
  }
  throw TimeoutError("no reply from " + server.to_string());
}

}  // namespace

wire::Message request(const net::Endpoint& server, uint32_t user_id, uint32_t expiry_seconds,
                      const std::vector<std::string>& rules, const Options& opts) {
  // A REQUEST is not idempotent (it allocates an update id); send it once.
  return exchange(server, wire::Request{user_id, expiry_seconds, rules}, 1, opts.timeout);
}

wire::Message confirm(const net::Endpoint& server, uint32_t user_id, uint64_t update_id,
                      const Options& opts) {
  return exchange(server, wire::Confirm{user_id, update_id}, std::max(1, opts.retries),
                  opts.timeout);
}

wire::Message remove(const net::Endpoint& server, uint32_t user_id, uint64_t update_id,
                     const Options& opts) {
  return exchange(server, wire::Delete{user_id, update_id}, std::max(1, opts.retries),
                  opts.timeout);
}

wire::Message renew(const net::Endpoint& server, uint32_t user_id, uint64_t update_id,
                    uint32_t expiry_seconds, const Options& opts) {
  return exchange(server, wire::Renew{user_id, update_id, expiry_seconds}, std::max(1, opts.retries),
                  opts.timeout);
}

}  // namespace dfw::client

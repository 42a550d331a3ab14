#pragma once

#include <atomic>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dfw/engine.hpp"
#include "dfw/net.hpp"
#include "dfw/wire.hpp"

namespace dfw {

// user id -> group id mapping ("user <id> <group-id>" lines).
struct UserDirectory {
  std::unordered_map<uint32_t, GroupId> users;

  static UserDirectory parse(std::string_view text, size_t group_count);
  std::optional<GroupId> group_of(uint32_t user_id) const;
};

struct ServerConfig {
  std::string bind_address = "0.0.0.0";
  uint16_t port = wire::kDefaultPort;
  std::chrono::seconds purge_interval{1};
  // Empty list accepts requests from any source address.
  std::vector<AddrPattern> allowed_sources;
};

// Processes datagrams sequentially against the engine's single-writer
// mutation path; filtering reads proceed concurrently on published
// snapshots. Runs purge_expired on the purge cadence.
class Server {
 public:
  Server(Engine& engine, UserDirectory directory, ServerConfig config);

  uint16_t port() const { return socket_.local_endpoint().port; }
  net::Endpoint endpoint() const { return socket_.local_endpoint(); }

  // Blocks until stop becomes true. Poll granularity bounds shutdown delay.
  void run(const std::atomic<bool>& stop);

  // Handles at most one datagram, then runs the purge timer; test hook and
  // the body of run().
  void poll_once(std::chrono::milliseconds wait);

 private:
  wire::Message handle(const wire::Message& request, const net::Endpoint& from);
  bool source_allowed(uint32_t addr) const;

  Engine& engine_;
  UserDirectory directory_;
  ServerConfig config_;
  net::UdpSocket socket_;
  std::chrono::steady_clock::time_point next_purge_;
};

}  // namespace dfw

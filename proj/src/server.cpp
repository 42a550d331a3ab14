#include "dfw/server.hpp"

#include <algorithm>
#include <sstream>

namespace dfw {

UserDirectory UserDirectory::parse(std::string_view text, size_t group_count) {
  UserDirectory dir;
  std::istringstream is{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (size_t hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;
    if (kw != "user") throw ParseError(line_no, 1, "expected 'user <id> <group-id>'");
    uint64_t user = 0, group = 0;
    if (!(ls >> user >> group)) throw ParseError(line_no, 1, "expected 'user <id> <group-id>'");
    std::string extra;
    if (ls >> extra) throw ParseError(line_no, 1, "trailing tokens after user entry");
    if (user > 0xFFFFFFFFull) throw ParseError(line_no, 1, "user id does not fit in 32 bits");
    if (group >= group_count) throw ParseError(line_no, 1, "group id out of range");
    dir.users[static_cast<uint32_t>(user)] = static_cast<GroupId>(group);
  }
  return dir;
}

std::optional<GroupId> UserDirectory::group_of(uint32_t user_id) const {
  auto it = users.find(user_id);
  if (it == users.end()) return std::nullopt;
  return it->second;
}

Server::Server(Engine& engine, UserDirectory directory, ServerConfig config)
    : engine_(engine), directory_(std::move(directory)), config_(std::move(config)) {
  socket_.bind(net::resolve(config_.bind_address, config_.port));
  next_purge_ = std::chrono::steady_clock::now() + config_.purge_interval;
}

bool Server::source_allowed(uint32_t addr) const {
  if (config_.allowed_sources.empty()) return true;
  return std::any_of(config_.allowed_sources.begin(), config_.allowed_sources.end(),
                     [&](const AddrPattern& p) { return p.matches(addr); });
}

void Server::run(const std::atomic<bool>& stop) {
  while (!stop.load(std::memory_order_relaxed)) {
    poll_once(std::chrono::milliseconds(100));
  }
}

void Server::poll_once(std::chrono::milliseconds wait) {
  auto datagram = socket_.recv_from(wait, wire::kMaxDatagram);
  if (datagram) {
    auto& [bytes, from] = *datagram;
    if (!source_allowed(from.addr)) {
      // Out-of-policy sources get no reply at all.
    } else {
      wire::Message reply;
      try {
        reply = handle(wire::decode(bytes), from);
      } catch (const wire::WireError& e) {
        reply = wire::Error{0, e.what()};
      }
      try {
        socket_.send_to(wire::encode(reply), from);
      } catch (const net::NetError&) {
        // Reply undeliverable; the client will retry.
      }
    }
  }

  auto now = std::chrono::steady_clock::now();
  if (now >= next_purge_) {
    engine_.purge_expired();
    next_purge_ = now + config_.purge_interval;
  }
}

wire::Message Server::handle(const wire::Message& request, const net::Endpoint& from) {
  using namespace wire;
  (void)from;

  return std::visit(
      [&](const auto& msg) -> Message {
        using T = std::decay_t<decltype(msg)>;

        if constexpr (std::is_same_v<T, Request>) {
          auto group = directory_.group_of(msg.user_id);
          if (!group) return Error{0, "unknown user"};
          std::string text;
          for (const std::string& r : msg.rules) {
            text += r;
            text += '\n';
          }
          std::vector<Rule> rules;
          try {
            rules = parse_exception_list(text);
          } catch (const ParseError& e) {
            return Error{0, e.what()};
          }
          auto result = engine_.classify_request(rules, *group, msg.user_id,
                                                 std::chrono::seconds(msg.expiry_seconds), text);
          switch (result.kind) {
            case Engine::Classified::Kind::RejectAll:
              return Reject{0, "no part of the request can be granted"};
            case Engine::Classified::Kind::Full:
              return AllowFull{result.id};
            case Engine::Classified::Kind::Partial: {
              AllowPartial reply{result.id, result.grant.to_rows()};
              // The description is advisory; drop tail rows rather than
              // exceed one datagram. The grant itself is unaffected.
              while (!reply.rows.empty() && encode(reply).size() > kMaxDatagram)
                reply.rows.resize(reply.rows.size() / 2);
              return reply;
            }
          }
          return Error{0, "internal error"};
        } else if constexpr (std::is_same_v<T, Confirm>) {
          switch (engine_.confirm(msg.update_id)) {
            case Engine::ConfirmResult::Ok:
              return Ack{msg.update_id, "active"};
            case Engine::ConfirmResult::Expired:
              return Error{msg.update_id, "expired"};
            case Engine::ConfirmResult::UnknownId:
              break;
          }
          return Error{msg.update_id, "unknown id"};
        } else if constexpr (std::is_same_v<T, Delete>) {
          auto owner = engine_.record_owner(msg.update_id);
          if (!owner) return Error{msg.update_id, "unknown id"};
          if (*owner != msg.user_id) return Error{msg.update_id, "not owner"};
          if (engine_.remove(msg.update_id) != Engine::UpdateResult::Ok)
            return Error{msg.update_id, "unknown id"};
          return Ack{msg.update_id, "deleted"};
        } else if constexpr (std::is_same_v<T, Renew>) {
          auto owner = engine_.record_owner(msg.update_id);
          if (!owner) return Error{msg.update_id, "unknown id"};
          if (*owner != msg.user_id) return Error{msg.update_id, "not owner"};
          if (engine_.renew(msg.update_id, std::chrono::seconds(msg.expiry_seconds)) !=
              Engine::UpdateResult::Ok)
            return Error{msg.update_id, "unknown id"};
          return Ack{msg.update_id, "renewed"};
        } else {
          return Error{0, std::string("unexpected message kind ") +
                              kind_name(kind_of(Message(msg)))};
        }
      },
      request);
}

}  // namespace dfw

// Operator and client front end for the dynamic filtering engine: load and
// serve an access list, run offline packet queries, and drive the update
// protocol against a running server.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dfw/client.hpp"
#include "dfw/engine.hpp"
#include "dfw/oracle.hpp"
#include "dfw/server.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitTimeout = 3;
constexpr int kExitServerError = 4;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

struct StateFiles {
  std::string acl_path;
  std::string groups_path;
  std::vector<std::string> exception_specs;  // "<group>:<path>"
};

dfw::oracle::OracleConfig load_oracle_config(const StateFiles& files) {
  dfw::oracle::OracleConfig cfg;
  cfg.hierarchy = dfw::parse_group_config(slurp(files.groups_path));
  cfg.base = dfw::parse_acl(slurp(files.acl_path), cfg.hierarchy.group_count());
  cfg.exceptions.resize(cfg.hierarchy.group_count());
  for (const std::string& spec : files.exception_specs) {
    size_t colon = spec.find(':');
    if (colon == std::string::npos)
      throw std::runtime_error("--exception wants <group>:<file>, got '" + spec + "'");
    size_t group = std::stoul(spec.substr(0, colon));
    if (group >= cfg.exceptions.size())
      throw std::runtime_error("--exception group id out of range in '" + spec + "'");
    auto rules = dfw::parse_exception_list(slurp(spec.substr(colon + 1)));
    auto& dst = cfg.exceptions[group];
    dst.insert(dst.end(), rules.begin(), rules.end());
  }
  return cfg;
}

dfw::PacketKey parse_packet_flags(const std::string& proto, const std::string& src,
                                  const std::string& dst, uint16_t sport, uint16_t dport) {
  dfw::PacketKey p;
  if (proto == "tcp")
    p.protocol = dfw::kProtoTcp;
  else if (proto == "udp")
    p.protocol = dfw::kProtoUdp;
  else if (proto == "icmp")
    p.protocol = dfw::kProtoIcmp;
  else {
    size_t pos = 0;
    unsigned long v = std::stoul(proto, &pos);
    if (pos != proto.size() || v > 255) throw std::runtime_error("bad --proto '" + proto + "'");
    p.protocol = static_cast<uint8_t>(v);
  }
  p.src_addr = dfw::parse_quad(src);
  p.dst_addr = dfw::parse_quad(dst);
  p.src_port = sport;
  p.dst_port = dport;
  return p;
}

void print_reply(const dfw::wire::Message& reply) {
  using namespace dfw::wire;
  std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, AllowFull>) {
          std::cout << "ALLOW_FULL id=" << m.update_id << "\n";
        } else if constexpr (std::is_same_v<T, AllowPartial>) {
          std::cout << "ALLOW_PARTIAL id=" << m.update_id << " rows=" << m.rows.size() << "\n";
          for (const std::string& row : m.rows) std::cout << "  " << row << "\n";
        } else if constexpr (std::is_same_v<T, Reject>) {
          std::cout << "REJECT: " << m.reason << "\n";
        } else if constexpr (std::is_same_v<T, Ack>) {
          std::cout << "ACK id=" << m.update_id << " (" << m.reason << ")\n";
        } else if constexpr (std::is_same_v<T, Error>) {
          std::cout << "ERROR id=" << m.update_id << ": " << m.reason << "\n";
        } else {
          std::cout << kind_name(kind_of(Message(m))) << "\n";
        }
      },
      reply);
}

int reply_exit_code(const dfw::wire::Message& reply) {
  return std::holds_alternative<dfw::wire::Error>(reply) ? kExitServerError : kExitOk;
}

int cmd_check(const StateFiles& files) {
  auto hierarchy = dfw::parse_group_config(slurp(files.groups_path));
  auto base = dfw::parse_acl(slurp(files.acl_path), hierarchy.group_count());

  size_t denies = 0;
  for (const auto& r : base.rules)
    if (r.is_deny()) ++denies;
  std::cout << base.rules.size() << " rules (" << denies << " deny), "
            << hierarchy.group_count() << " groups\n";
  for (dfw::GroupId g = 0; g < hierarchy.group_count(); ++g) {
    auto supers = hierarchy.supergroups(g);
    size_t overridable = 0;
    for (const auto& r : base.rules) {
      if (!r.is_deny()) continue;
      for (dfw::GroupId label : r.groups) {
        if (supers.count(label)) {
          ++overridable;
          break;
        }
      }
    }
    std::cout << "group " << g << " (" << hierarchy.name(g) << "): " << overridable
              << " overridable deny rules\n";
  }
  return kExitOk;
}

int cmd_query(const StateFiles& files, const dfw::PacketKey& packet) {
  auto cfg = load_oracle_config(files);

  // Explanation comes from the oracle's scan so it can name rule indices;
  // the decision itself is cross-checked against the compiled path.
  dfw::Engine engine(cfg.base, cfg.hierarchy);
  std::vector<uint64_t> synthetic_ids;
  for (dfw::GroupId g = 0; g < cfg.exceptions.size(); ++g) {
    if (cfg.exceptions[g].empty()) continue;
    auto result = engine.classify_request(cfg.exceptions[g], g, 0, std::chrono::seconds(3600));
    if (result.kind != dfw::Engine::Classified::Kind::RejectAll) engine.confirm(result.id);
  }

  bool oracle_decision = dfw::oracle::accept(cfg, packet);
  bool bdd_decision = engine.match(packet);
  if (oracle_decision != bdd_decision) {
    std::cerr << "internal error: oracle and compiled decisions disagree\n";
    return kExitConfig;
  }

  std::cout << (oracle_decision ? "ACCEPT" : "REJECT") << "\n";

  // First matching base rule, if any.
  for (size_t i = 0; i < cfg.base.rules.size(); ++i) {
    if (dfw::match_condition(cfg.base.rules[i].condition, packet)) {
      std::cout << "  base rule " << (i + 1) << " ("
                << (cfg.base.rules[i].is_deny() ? "deny" : "accept") << ") matches first\n";
      if (!cfg.base.rules[i].is_deny()) return kExitOk;
      break;
    }
  }
  if (oracle_decision) {
    // Accepted through an exception: name it and the denies it overrides.
    for (dfw::GroupId g = 0; g < cfg.exceptions.size(); ++g) {
      for (size_t k = 0; k < cfg.exceptions[g].size(); ++k) {
        if (!dfw::match_condition(cfg.exceptions[g][k].condition, packet)) continue;
        std::cout << "  granted by exception " << g << "." << k << "\n";
        for (size_t i = 0; i < cfg.base.rules.size(); ++i) {
          const auto& r = cfg.base.rules[i];
          if (r.is_deny() && dfw::match_condition(r.condition, packet)) {
            std::cout << "    overrides deny rule " << (i + 1) << " (labels:";
            for (auto label : r.groups) std::cout << ' ' << label;
            std::cout << ")\n";
          }
        }
        return kExitOk;
      }
    }
  } else {
    std::cout << "  no accepting rule or grantable exception\n";
  }
  return kExitOk;
}

int cmd_dump(const StateFiles& files) {
  auto cfg = load_oracle_config(files);
  dfw::Engine engine(cfg.base, cfg.hierarchy);
  std::cout << engine.dump_state();
  return kExitOk;
}

int cmd_serve(const StateFiles& files, const std::string& users_path, std::string bind_address,
              uint16_t port, unsigned confirm_window_s, unsigned purge_interval_s,
              const std::vector<std::string>& allow_from) {
  dfw::Engine::Config cfg;
  cfg.confirm_window = std::chrono::seconds(confirm_window_s);
  dfw::Engine engine = dfw::Engine::load(slurp(files.acl_path), slurp(files.groups_path), cfg);
  dfw::UserDirectory directory =
      dfw::UserDirectory::parse(slurp(users_path), engine.group_count());

  dfw::ServerConfig server_cfg;
  server_cfg.bind_address = std::move(bind_address);
  server_cfg.port = port;
  server_cfg.purge_interval = std::chrono::seconds(purge_interval_s);
  for (const std::string& spec : allow_from) {
    size_t slash = spec.find('/');
    if (slash == std::string::npos)
      server_cfg.allowed_sources.push_back(dfw::AddrPattern::exact(dfw::parse_quad(spec)));
    else
      server_cfg.allowed_sources.push_back(
          {dfw::parse_quad(spec.substr(0, slash)), dfw::parse_quad(spec.substr(slash + 1))});
  }

  engine.set_log_sink([](const dfw::LogRecord& rec) { std::cout << rec.to_line() << "\n"; });

  dfw::Server server(engine, std::move(directory), server_cfg);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "listening on " << server.endpoint().to_string() << "\n";
  server.run(g_stop);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynamic IP-filter control"};
  app.require_subcommand(1);

  StateFiles files;
  std::string users_path;
  std::string server_spec = "127.0.0.1";
  std::string bind_address = "0.0.0.0";
  uint16_t port = dfw::wire::kDefaultPort;
  unsigned confirm_window_s = 30;
  unsigned purge_interval_s = 1;
  std::vector<std::string> allow_from;
  uint32_t user_id = 0;
  uint64_t update_id = 0;
  uint32_t expiry_s = 300;
  std::vector<std::string> rule_texts;
  std::string rules_file;
  bool auto_confirm = false;
  std::string proto = "tcp", src = "0.0.0.0", dst = "0.0.0.0";
  uint16_t sport = 0, dport = 0;
  unsigned timeout_ms = 2000;

  auto add_state_flags = [&](CLI::App* cmd, bool with_exceptions) {
    cmd->add_option("--acl", files.acl_path, "base access list file")->required();
    cmd->add_option("--groups", files.groups_path, "group hierarchy file")->required();
    if (with_exceptions)
      cmd->add_option("--exception", files.exception_specs,
                      "active exception list as <group>:<file> (repeatable)");
  };
  auto add_server_flags = [&](CLI::App* cmd) {
    cmd->add_option("--server", server_spec, "server address[:port]")->envname("DFW_SERVER");
    cmd->add_option("--user", user_id, "requesting user id")->required();
    cmd->add_option("--timeout-ms", timeout_ms, "reply timeout per attempt");
  };

  CLI::App* serve = app.add_subcommand("serve", "run the update-protocol server");
  add_state_flags(serve, false);
  serve->add_option("--users", users_path, "user directory file")
      ->required()
      ->envname("DFW_USERS");
  serve->add_option("--bind", bind_address, "bind address")->envname("DFW_BIND");
  serve->add_option("--port", port, "UDP port")->envname("DFW_PORT");
  serve->add_option("--confirm-window", confirm_window_s, "confirm window, seconds")
      ->envname("DFW_CONFIRM_WINDOW");
  serve->add_option("--purge-interval", purge_interval_s, "purge cadence, seconds")
      ->envname("DFW_PURGE_INTERVAL");
  serve->add_option("--allow-from", allow_from,
                    "allowed source prefix value[/wildcard] (repeatable)")
      ->envname("DFW_ALLOW_FROM");

  CLI::App* check = app.add_subcommand("check", "validate an access list and group config");
  add_state_flags(check, false);

  CLI::App* query = app.add_subcommand("query", "decide one packet offline and explain");
  add_state_flags(query, true);
  query->add_option("--proto", proto, "tcp|udp|icmp|<number>");
  query->add_option("--src", src, "source address");
  query->add_option("--dst", dst, "destination address");
  query->add_option("--sport", sport, "source port");
  query->add_option("--dport", dport, "destination port");

  CLI::App* dump = app.add_subcommand("dump", "print the compiled-state inspection dump");
  add_state_flags(dump, true);

  CLI::App* request = app.add_subcommand("request", "ask the server for a dynamic exception");
  add_server_flags(request);
  request->add_option("--expiry", expiry_s, "requested lifetime, seconds");
  request->add_option("--rule", rule_texts, "accept rule text (repeatable)");
  request->add_option("--rules-file", rules_file, "file of accept rules");
  request->add_flag("--confirm", auto_confirm, "confirm automatically on ALLOW_FULL");

  CLI::App* confirm = app.add_subcommand("confirm", "confirm a pending update id");
  add_server_flags(confirm);
  confirm->add_option("--id", update_id, "update id")->required();

  CLI::App* del = app.add_subcommand("delete", "delete an active exception");
  add_server_flags(del);
  del->add_option("--id", update_id, "update id")->required();

  CLI::App* renew = app.add_subcommand("renew", "extend an active exception");
  add_server_flags(renew);
  renew->add_option("--id", update_id, "update id")->required();
  renew->add_option("--expiry", expiry_s, "new lifetime, seconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (serve->parsed())
      return cmd_serve(files, users_path, bind_address, port, confirm_window_s, purge_interval_s,
                       allow_from);
    if (check->parsed()) return cmd_check(files);
    if (query->parsed())
      return cmd_query(files, parse_packet_flags(proto, src, dst, sport, dport));
    if (dump->parsed()) return cmd_dump(files);

    dfw::client::Options opts;
    opts.timeout = std::chrono::milliseconds(timeout_ms);
    dfw::net::Endpoint server = dfw::net::parse_endpoint(server_spec, dfw::wire::kDefaultPort);

    if (request->parsed()) {
      if (!rules_file.empty()) {
        std::istringstream is(slurp(rules_file));
        std::string line;
        while (std::getline(is, line)) {
          if (!line.empty()) rule_texts.push_back(line);
        }
      }
      if (rule_texts.empty()) {
        std::cerr << "request needs at least one --rule or a --rules-file\n";
        return kExitUsage;
      }
      auto reply = dfw::client::request(server, user_id, expiry_s, rule_texts, opts);
      print_reply(reply);
      if (auto_confirm) {
        if (auto* full = std::get_if<dfw::wire::AllowFull>(&reply)) {
          auto ack = dfw::client::confirm(server, user_id, full->update_id, opts);
          print_reply(ack);
          return reply_exit_code(ack);
        }
      }
      return reply_exit_code(reply);
    }
    if (confirm->parsed()) {
      auto reply = dfw::client::confirm(server, user_id, update_id, opts);
      print_reply(reply);
      return reply_exit_code(reply);
    }
    if (del->parsed()) {
      auto reply = dfw::client::remove(server, user_id, update_id, opts);
      print_reply(reply);
      return reply_exit_code(reply);
    }
    if (renew->parsed()) {
      auto reply = dfw::client::renew(server, user_id, update_id, expiry_s, opts);
      print_reply(reply);
      return reply_exit_code(reply);
    }
  } catch (const dfw::client::TimeoutError& e) {
    std::cerr << e.what() << "\n";
    return kExitTimeout;
  } catch (const dfw::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }
  return kExitUsage;
}

#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dfw {

using GroupId = uint32_t;

// IANA protocol numbers for the keywords the rule grammar knows about.
inline constexpr uint8_t kProtoIcmp = 1;
inline constexpr uint8_t kProtoTcp = 6;
inline constexpr uint8_t kProtoUdp = 17;

// The five header fields a filter decision depends on: 104 bits total.
struct PacketKey {
  uint8_t protocol = 0;
  uint32_t src_addr = 0;
  uint32_t dst_addr = 0;
  uint16_t src_port = 0;
  uint16_t dst_port = 0;

  friend bool operator==(const PacketKey&, const PacketKey&) = default;
};

// Cisco-style address pattern: a wildcard bit of 1 means the
// corresponding address bit is ignored when matching.
struct AddrPattern {
  uint32_t value = 0;
  uint32_t wildcard = 0xFFFFFFFFu;

  bool matches(uint32_t addr) const { return ((addr ^ value) & ~wildcard) == 0; }
  bool is_any() const { return wildcard == 0xFFFFFFFFu; }

  static AddrPattern any() { return {0, 0xFFFFFFFFu}; }
  static AddrPattern exact(uint32_t addr) { return {addr, 0}; }

  friend bool operator==(const AddrPattern&, const AddrPattern&) = default;
};

struct PortConstraint {
  enum class Kind : uint8_t { Any, Eq, Range, Ge, Lt };

  Kind kind = Kind::Any;
  uint16_t lo = 0;
  uint16_t hi = 0;  // Range only

  bool matches(uint16_t port) const;
  bool is_any() const { return kind == Kind::Any; }

  static PortConstraint any() { return {}; }
  static PortConstraint eq(uint16_t p) { return {Kind::Eq, p, p}; }
  static PortConstraint range(uint16_t lo, uint16_t hi);
  static PortConstraint ge(uint16_t p) { return {Kind::Ge, p, 0}; }
  static PortConstraint lt(uint16_t p) { return {Kind::Lt, p, 0}; }

  friend bool operator==(const PortConstraint&, const PortConstraint&) = default;
};

// One rule's match condition. protocol == nullopt matches every protocol
// ("everything"/"ip" in the text grammar); such conditions carry no port
// constraints, and neither do icmp conditions.
struct Condition {
  std::optional<uint8_t> protocol;
  AddrPattern src = AddrPattern::any();
  AddrPattern dst = AddrPattern::any();
  PortConstraint src_ports;
  PortConstraint dst_ports;

  bool is_universal() const {
    return !protocol && src.is_any() && dst.is_any() && src_ports.is_any() &&
           dst_ports.is_any();
  }

  friend bool operator==(const Condition&, const Condition&) = default;
};

// Only tcp and udp carry ports; port constraints on other conditions are
// vacuous.
inline bool condition_has_ports(const Condition& c) {
  return c.protocol && (*c.protocol == kProtoTcp || *c.protocol == kProtoUdp);
}

bool match_condition(const Condition& c, const PacketKey& p);

struct Rule {
  enum class Action : uint8_t { Accept, Deny };

  Action action = Action::Accept;
  std::set<GroupId> groups;  // deny only; empty set = mandatory deny
  Condition condition;

  bool is_deny() const { return action == Action::Deny; }
  bool is_mandatory_deny() const { return is_deny() && groups.empty(); }

  friend bool operator==(const Rule&, const Rule&) = default;
};

struct BaseList {
  std::vector<Rule> rules;

  friend bool operator==(const BaseList&, const BaseList&) = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& what)
      : std::runtime_error(format(line, column, what)), line_(line), column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  static std::string format(int line, int column, const std::string& what);
  int line_;
  int column_;
};

// Containment DAG over groups 0..n-1. contains(parent) lists the groups
// directly inside parent; supergroups() walks the relation upward.
class GroupHierarchy {
 public:
  GroupHierarchy() = default;
  explicit GroupHierarchy(size_t n) : names_(n), children_(n), parents_(n) {
    for (size_t i = 0; i < n; ++i) names_[i] = "g" + std::to_string(i);
  }

  size_t group_count() const { return children_.size(); }
  const std::string& name(GroupId g) const { return names_.at(g); }
  void set_name(GroupId g, std::string name) { names_.at(g) = std::move(name); }

  // Throws std::invalid_argument if the edge would close a cycle.
  void add_containment(GroupId parent, GroupId child);

  const std::vector<GroupId>& contains(GroupId parent) const { return children_.at(parent); }

  // {j} plus every group reachable upward through containment.
  std::set<GroupId> supergroups(GroupId j) const;

 private:
  bool reachable_up(GroupId from, GroupId target) const;

  std::vector<std::string> names_;
  std::vector<std::vector<GroupId>> children_;
  std::vector<std::vector<GroupId>> parents_;
};

// Parses an access-list document: one rule per line, '#' comments, blank
// lines ignored. When max_groups is set, deny group labels are range-checked
// against it.
BaseList parse_acl(std::string_view text, std::optional<size_t> max_groups = std::nullopt);

// Same grammar, but every rule must be an accept.
std::vector<Rule> parse_exception_list(std::string_view text);

// Group hierarchy config: `group <name> <id>` and `contains <parent> <child>...`
// lines. Ids must cover exactly 0..n-1.
GroupHierarchy parse_group_config(std::string_view text);

std::string to_string(const Rule& r);
std::string to_string(const BaseList& l);

std::string quad(uint32_t addr);
uint32_t parse_quad(std::string_view s);  // throws std::invalid_argument

std::string protocol_name(uint8_t proto);

}  // namespace dfw

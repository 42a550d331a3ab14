#pragma once

// Seeded random generators shared by the property tests and the acceptance
// suite. Everything is deterministic given the RNG state.

#include <random>
#include <string>
#include <vector>

#include "dfw/acl.hpp"
#include "dfw/wire.hpp"

namespace gen {

using Rng = std::mt19937_64;

inline uint32_t u32(Rng& rng) { return static_cast<uint32_t>(rng()); }
inline uint16_t u16(Rng& rng) { return static_cast<uint16_t>(rng()); }

inline int pick(Rng& rng, int n) {
  return static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(rng));
}

inline uint8_t random_protocol(Rng& rng) {
  switch (pick(rng, 3)) {
    case 0:
      return dfw::kProtoTcp;
    case 1:
      return dfw::kProtoUdp;
    default:
      return dfw::kProtoIcmp;
  }
}

inline dfw::AddrPattern random_pattern(Rng& rng) {
  // Mix of exact hosts, quad-aligned prefixes, arbitrary bit masks, and any.
  uint32_t value = u32(rng);
  switch (pick(rng, 5)) {
    case 0:
      return dfw::AddrPattern::exact(value);
    case 1:
      return {value, 0x000000FFu};
    case 2:
      return {value, 0x0000FFFFu};
    case 3:
      return {value, u32(rng)};
    default:
      return dfw::AddrPattern::any();
  }
}

inline dfw::PortConstraint random_port_constraint(Rng& rng) {
  uint16_t a = u16(rng);
  uint16_t b = u16(rng);
  switch (pick(rng, 5)) {
    case 0:
      return dfw::PortConstraint::eq(a);
    case 1:
      return dfw::PortConstraint::range(std::min(a, b), std::max(a, b));
    case 2:
      return dfw::PortConstraint::ge(a);
    case 3:
      return dfw::PortConstraint::lt(a);
    default:
      return dfw::PortConstraint::any();
  }
}

inline dfw::Condition random_condition(Rng& rng) {
  dfw::Condition c;
  if (pick(rng, 8) != 0) c.protocol = random_protocol(rng);
  c.src = random_pattern(rng);
  c.dst = random_pattern(rng);
  if (dfw::condition_has_ports(c)) {
    c.dst_ports = random_port_constraint(rng);
    if (pick(rng, 3) == 0) c.src_ports = random_port_constraint(rng);
  }
  return c;
}

inline dfw::Rule random_rule(Rng& rng, size_t group_count, bool allow_labels = true) {
  dfw::Rule r;
  r.condition = random_condition(rng);
  if (pick(rng, 2) == 0) {
    r.action = dfw::Rule::Action::Deny;
    if (allow_labels && group_count > 0) {
      int labels = pick(rng, 3);  // 0, 1 or 2 labels
      for (int i = 0; i < labels; ++i)
        r.groups.insert(static_cast<dfw::GroupId>(pick(rng, static_cast<int>(group_count))));
    }
  }
  return r;
}

inline dfw::BaseList random_base_list(Rng& rng, size_t max_rules, size_t group_count,
                                      bool allow_labels = true) {
  dfw::BaseList list;
  size_t n = 1 + static_cast<size_t>(pick(rng, static_cast<int>(max_rules)));
  for (size_t i = 0; i < n; ++i) list.rules.push_back(random_rule(rng, group_count, allow_labels));
  return list;
}

inline dfw::GroupHierarchy random_hierarchy(Rng& rng, size_t group_count) {
  dfw::GroupHierarchy h(group_count);
  // Random acyclic containment: parents only point at lower-numbered groups.
  for (dfw::GroupId parent = 1; parent < group_count; ++parent) {
    for (dfw::GroupId child = 0; child < parent; ++child) {
      if (pick(rng, 3) == 0) h.add_containment(parent, child);
    }
  }
  return h;
}

inline dfw::PacketKey random_packet(Rng& rng) {
  return {random_protocol(rng), u32(rng), u32(rng), u16(rng), u16(rng)};
}

// A packet biased toward the decision boundaries of the supplied rules:
// addresses drawn from rule patterns, ports at constraint edges.
inline dfw::PacketKey boundary_packet(Rng& rng, const std::vector<dfw::Rule>& rules) {
  dfw::PacketKey p = random_packet(rng);
  if (rules.empty()) return p;
  const dfw::Rule& r = rules[static_cast<size_t>(pick(rng, static_cast<int>(rules.size())))];
  const dfw::Condition& c = r.condition;
  if (c.protocol && pick(rng, 4) != 0) p.protocol = *c.protocol;
  if (pick(rng, 4) != 0) p.src_addr = c.src.value ^ (pick(rng, 4) == 0 ? u32(rng) & c.src.wildcard : 0);
  if (pick(rng, 4) != 0) p.dst_addr = c.dst.value ^ (pick(rng, 4) == 0 ? u32(rng) & c.dst.wildcard : 0);
  auto edge_port = [&](const dfw::PortConstraint& pc, uint16_t current) -> uint16_t {
    if (pc.is_any() || pick(rng, 3) == 0) return current;
    uint16_t base = pick(rng, 2) == 0 ? pc.lo : pc.hi;
    int delta = pick(rng, 3) - 1;  // -1, 0, +1
    return static_cast<uint16_t>(base + delta);
  };
  p.src_port = edge_port(c.src_ports, p.src_port);
  p.dst_port = edge_port(c.dst_ports, p.dst_port);
  return p;
}

inline std::string random_text(Rng& rng, size_t max_len) {
  size_t len = static_cast<size_t>(pick(rng, static_cast<int>(max_len) + 1));
  std::string s;
  s.reserve(len);
  for (size_t i = 0; i < len; ++i) s.push_back(static_cast<char>(' ' + pick(rng, 95)));
  return s;
}

inline dfw::wire::Message random_message(Rng& rng) {
  using namespace dfw::wire;
  switch (pick(rng, 9)) {
    case 0: {
      Request m{u32(rng), u32(rng), {}};
      int rules = pick(rng, 5);
      for (int i = 0; i < rules; ++i) m.rules.push_back(random_text(rng, 120));
      return m;
    }
    case 1:
      return AllowFull{rng()};
    case 2: {
      AllowPartial m{rng(), {}};
      int rows = pick(rng, 6);
      for (int i = 0; i < rows; ++i) m.rows.push_back(random_text(rng, 90));
      return m;
    }
    case 3:
      return Reject{rng(), random_text(rng, 60)};
    case 4:
      return Confirm{u32(rng), rng()};
    case 5:
      return Delete{u32(rng), rng()};
    case 6:
      return Renew{u32(rng), rng(), u32(rng)};
    case 7:
      return Ack{rng(), random_text(rng, 60)};
    default:
      return Error{rng(), random_text(rng, 60)};
  }
}

}  // namespace gen

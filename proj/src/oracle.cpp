#include "dfw/oracle.hpp"

namespace dfw::oracle {

namespace {

// Matching is re-implemented bit by bit, on purpose. Keep this free of any
// acl.cpp matching helpers.

bool pattern_hit(const AddrPattern& pat, uint32_t addr) {
  for (int bit = 0; bit < 32; ++bit) {
    uint32_t mask = 1u << bit;
    if (pat.wildcard & mask) continue;
    if ((addr & mask) != (pat.value & mask)) return false;
  }
  return true;
}

bool port_hit(const PortConstraint& c, uint16_t port) {
  switch (c.kind) {
    case PortConstraint::Kind::Any:
      return true;
    case PortConstraint::Kind::Eq:
      return port == c.lo;
    case PortConstraint::Kind::Range:
      return c.lo <= port && port <= c.hi;
    case PortConstraint::Kind::Ge:
      return port >= c.lo;
    case PortConstraint::Kind::Lt:
      return port < c.lo;
  }
  return false;
}

bool rule_hit(const Condition& c, const PacketKey& p) {
  if (c.protocol.has_value() && c.protocol.value() != p.protocol) return false;
  if (!pattern_hit(c.src, p.src_addr)) return false;
  if (!pattern_hit(c.dst, p.dst_addr)) return false;
  bool ports_apply = c.protocol.has_value() &&
                     (c.protocol.value() == kProtoTcp || c.protocol.value() == kProtoUdp);
  if (!ports_apply) return true;
  return port_hit(c.src_ports, p.src_port) && port_hit(c.dst_ports, p.dst_port);
}

// Upward closure computed by fixed-point iteration over the raw containment
// relation, independent of GroupHierarchy::supergroups.
std::vector<bool> upward_closure(const GroupHierarchy& h, GroupId j) {
  size_t n = h.group_count();
  std::vector<bool> in(n, false);
  in.at(j) = true;
  bool changed = true;
  while (changed) {
    changed = false;
    for (GroupId parent = 0; parent < n; ++parent) {
      if (in[parent]) continue;
      for (GroupId child : h.contains(parent)) {
        if (in[child]) {
          in[parent] = true;
          changed = true;
          break;
        }
      }
    }
  }
  return in;
}

}  // namespace

bool base_accept(const BaseList& base, const PacketKey& p) {
  for (const Rule& r : base.rules) {
    if (rule_hit(r.condition, p)) return r.action == Rule::Action::Accept;
  }
  return false;
}

bool accept(const OracleConfig& cfg, const PacketKey& p) {
  if (base_accept(cfg.base, p)) return true;

  for (GroupId j = 0; j < cfg.exceptions.size(); ++j) {
    bool granted = false;
    for (const Rule& r : cfg.exceptions[j]) {
      if (rule_hit(r.condition, p)) {
        granted = true;
        break;
      }
    }
    if (!granted) continue;

    std::vector<bool> supers = upward_closure(cfg.hierarchy, j);
    bool blocked = false;
    for (const Rule& r : cfg.base.rules) {
      if (!r.is_deny() || !rule_hit(r.condition, p)) continue;
      bool overridable = false;
      for (GroupId label : r.groups) {
        if (label < supers.size() && supers[label]) {
          overridable = true;
          break;
        }
      }
      if (!overridable) {
        blocked = true;
        break;
      }
    }
    if (!blocked) return true;
  }
  return false;
}

}  // namespace dfw::oracle

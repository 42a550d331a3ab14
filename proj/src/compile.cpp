#include "dfw/compile.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace dfw {

namespace {

constexpr unsigned kFieldBase[] = {0, 8, 40, 56, 88};  // canonical start positions

unsigned canonical_position(HeaderField f, unsigned msb_offset) {
  return kFieldBase[static_cast<unsigned>(f)] + msb_offset;
}

}  // namespace

BitLayout::BitLayout() {
  for (unsigned i = 0; i < bdd::kVarCount; ++i) {
    order_[i] = static_cast<uint8_t>(i);
    position_[i] = static_cast<uint8_t>(i);
  }
}

BitLayout::BitLayout(const std::array<uint8_t, bdd::kVarCount>& order) : order_(order) {
  std::array<bool, bdd::kVarCount> seen{};
  for (unsigned pos = 0; pos < bdd::kVarCount; ++pos) {
    uint8_t v = order_[pos];
    if (v >= bdd::kVarCount || seen[v])
      throw std::invalid_argument("bit layout must be a permutation of 0..103");
    seen[v] = true;
    position_[v] = static_cast<uint8_t>(pos);
  }
}

unsigned BitLayout::var_index(HeaderField field, unsigned msb_offset) const {
  if (msb_offset >= field_width(field)) throw std::out_of_range("field bit out of range");
  return order_[canonical_position(field, msb_offset)];
}

std::pair<HeaderField, unsigned> BitLayout::field_of(unsigned var) const {
  if (var >= bdd::kVarCount) throw std::out_of_range("variable index out of range");
  unsigned pos = position_[var];
  if (pos >= 88) return {HeaderField::SrcPort, pos - 88};
  if (pos >= 56) return {HeaderField::SrcAddr, pos - 56};
  if (pos >= 40) return {HeaderField::DstPort, pos - 40};
  if (pos >= 8) return {HeaderField::DstAddr, pos - 8};
  return {HeaderField::Protocol, pos};
}

bdd::Bits BitLayout::packet_bits(const PacketKey& p) const {
  bdd::Bits bits;
  auto fill = [&](HeaderField f, uint32_t value) {
    unsigned width = field_width(f);
    for (unsigned off = 0; off < width; ++off) {
      if ((value >> (width - 1 - off)) & 1) bits.set(var_index(f, off));
    }
  };
  fill(HeaderField::Protocol, p.protocol);
  fill(HeaderField::DstAddr, p.dst_addr);
  fill(HeaderField::DstPort, p.dst_port);
  fill(HeaderField::SrcAddr, p.src_addr);
  fill(HeaderField::SrcPort, p.src_port);
  return bits;
}

namespace {

using bdd::BoolFn;
using bdd::NodeStore;

BoolFn literal(NodeStore& s, const BitLayout& l, HeaderField f, unsigned off, bool positive) {
  BoolFn v = s.var(l.var_index(f, off));
  return positive ? v : s.negate(v);
}

// Equality of a field against a fixed value, restricted to the bits where
// care is set.
BoolFn field_equals(NodeStore& s, const BitLayout& l, HeaderField f, uint32_t value,
                    uint32_t care) {
  unsigned width = BitLayout::field_width(f);
  BoolFn acc = s.true_fn();
  for (unsigned off = 0; off < width; ++off) {
    unsigned bit = width - 1 - off;
    if (!((care >> bit) & 1)) continue;
    acc = s.apply_and(acc, literal(s, l, f, off, (value >> bit) & 1));
  }
  return acc;
}

BoolFn compile_pattern(NodeStore& s, const BitLayout& l, HeaderField f,
                       const AddrPattern& pat) {
  return field_equals(s, l, f, pat.value, ~pat.wildcard);
}

// value >= t over the 16 port bits, built LSB-up: O(16) apply steps.
BoolFn port_ge(NodeStore& s, const BitLayout& l, HeaderField f, uint16_t t) {
  BoolFn acc = s.true_fn();
  for (unsigned k = 0; k < 16; ++k) {
    BoolFn b = s.var(l.var_index(f, 15 - k));
    acc = (t >> k) & 1 ? s.apply_and(b, acc) : s.apply_or(b, acc);
  }
  return acc;
}

// value <= t, same shape.
BoolFn port_le(NodeStore& s, const BitLayout& l, HeaderField f, uint16_t t) {
  BoolFn acc = s.true_fn();
  for (unsigned k = 0; k < 16; ++k) {
    BoolFn b = s.var(l.var_index(f, 15 - k));
    acc = (t >> k) & 1 ? s.apply_or(s.negate(b), acc) : s.apply_and(s.negate(b), acc);
  }
  return acc;
}

BoolFn compile_port_constraint(NodeStore& s, const BitLayout& l, HeaderField f,
                               const PortConstraint& c) {
  switch (c.kind) {
    case PortConstraint::Kind::Any:
      return s.true_fn();
    case PortConstraint::Kind::Eq:
      return field_equals(s, l, f, c.lo, 0xFFFF);
    case PortConstraint::Kind::Range:
      return s.apply_and(port_ge(s, l, f, c.lo), port_le(s, l, f, c.hi));
    case PortConstraint::Kind::Ge:
      return port_ge(s, l, f, c.lo);
    case PortConstraint::Kind::Lt:
      return s.negate(port_ge(s, l, f, c.lo));
  }
  return s.false_fn();
}

}  // namespace

bdd::BoolFn compile_condition(bdd::NodeStore& store, const BitLayout& layout,
                              const Condition& c) {
  BoolFn acc = store.true_fn();
  if (c.protocol) acc = field_equals(store, layout, HeaderField::Protocol, *c.protocol, 0xFF);
  acc = store.apply_and(acc, compile_pattern(store, layout, HeaderField::DstAddr, c.dst));
  acc = store.apply_and(acc, compile_pattern(store, layout, HeaderField::SrcAddr, c.src));
  if (condition_has_ports(c)) {
    acc = store.apply_and(acc,
                          compile_port_constraint(store, layout, HeaderField::DstPort, c.dst_ports));
    acc = store.apply_and(acc,
                          compile_port_constraint(store, layout, HeaderField::SrcPort, c.src_ports));
  }
  return acc;
}

bdd::BoolFn compile_list(bdd::NodeStore& store, const BitLayout& layout,
                         std::span<const Rule> rules) {
  BoolFn acc = store.false_fn();  // default reject
  for (auto it = rules.rbegin(); it != rules.rend(); ++it) {
    BoolFn cond = compile_condition(store, layout, it->condition);
    BoolFn action = it->action == Rule::Action::Accept ? store.true_fn() : store.false_fn();
    acc = store.ite(cond, action, acc);
  }
  return acc;
}

bdd::BoolFn compile_deny_mask(bdd::NodeStore& store, const BitLayout& layout,
                              const BaseList& base, GroupId j, const GroupHierarchy& h) {
  std::set<GroupId> supers = h.supergroups(j);
  BoolFn acc = store.false_fn();
  for (const Rule& r : base.rules) {
    if (!r.is_deny()) continue;
    bool overridable = std::any_of(r.groups.begin(), r.groups.end(),
                                   [&](GroupId g) { return supers.count(g) != 0; });
    if (overridable) continue;
    acc = store.apply_or(acc, compile_condition(store, layout, r.condition));
  }
  return acc;
}

namespace {

bool port_cube_contiguous(const TernaryField& t) {
  uint16_t dontcare = static_cast<uint16_t>(~t.care);
  return (dontcare & (dontcare + 1u)) == 0;  // don't-care bits form a low suffix
}

std::string ternary_string(const TernaryField& t, unsigned width) {
  std::string out = "0b";
  for (unsigned off = 0; off < width; ++off) {
    unsigned bit = width - 1 - off;
    if (!((t.care >> bit) & 1))
      out += 'x';
    else
      out += ((t.value >> bit) & 1) ? '1' : '0';
  }
  return out;
}

std::string port_pattern_string(const TernaryField& t) {
  if (t.care == 0) return "*";
  if (!port_cube_contiguous(t)) return ternary_string(t, 16);
  uint16_t lo = static_cast<uint16_t>(t.value & t.care);
  uint16_t hi = static_cast<uint16_t>(lo | static_cast<uint16_t>(~t.care));
  if (lo == hi) return std::to_string(lo);
  return std::to_string(lo) + "-" + std::to_string(hi);
}

std::string protocol_pattern_string(const TernaryField& t) {
  if (t.care == 0) return "*";
  if (t.care == 0xFF) return protocol_name(static_cast<uint8_t>(t.value));
  return ternary_string(t, 8);
}

TernaryField parse_ternary(std::string_view s, unsigned width) {
  if (s.size() != width + 2 || s[0] != '0' || s[1] != 'b')
    throw std::invalid_argument("bad ternary field");
  TernaryField t;
  for (unsigned off = 0; off < width; ++off) {
    unsigned bit = width - 1 - off;
    char c = s[2 + off];
    if (c == 'x') continue;
    if (c != '0' && c != '1') throw std::invalid_argument("bad ternary field");
    t.care |= 1u << bit;
    if (c == '1') t.value |= 1u << bit;
  }
  return t;
}

TernaryField parse_port_pattern(std::string_view s) {
  if (s == "*") return {};
  if (s.rfind("0b", 0) == 0) return parse_ternary(s, 16);
  auto parse_port = [](std::string_view v) {
    size_t pos = 0;
    unsigned long p = std::stoul(std::string(v), &pos);
    if (pos != v.size() || p > 65535) throw std::invalid_argument("bad port");
    return static_cast<uint16_t>(p);
  };
  size_t dash = s.find('-');
  uint16_t lo, hi;
  if (dash == std::string_view::npos) {
    lo = hi = parse_port(s);
  } else {
    lo = parse_port(s.substr(0, dash));
    hi = parse_port(s.substr(dash + 1));
  }
  // Only aligned ranges (don't-care suffixes) round-trip through a single
  // ternary cube; tabulate_grant never emits anything else.
  uint16_t diff = static_cast<uint16_t>(lo ^ hi);
  if ((diff & (diff + 1u)) != 0 || (lo & diff) != 0)
    throw std::invalid_argument("port range is not a single cube");
  return {static_cast<uint32_t>(0xFFFFu & ~diff), lo};
}

TernaryField parse_protocol_pattern(std::string_view s) {
  if (s == "*") return {};
  if (s.rfind("0b", 0) == 0) return parse_ternary(s, 8);
  if (s == "tcp") return {0xFF, kProtoTcp};
  if (s == "udp") return {0xFF, kProtoUdp};
  if (s == "icmp") return {0xFF, kProtoIcmp};
  size_t pos = 0;
  unsigned long v = std::stoul(std::string(s), &pos);
  if (pos != s.size() || v > 255) throw std::invalid_argument("bad protocol pattern");
  return {0xFF, static_cast<uint32_t>(v)};
}

}  // namespace

std::string GrantRow::to_string() const {
  std::ostringstream os;
  os << protocol_pattern_string(protocol);
  os << ' ' << quad(src_addr.value & src_addr.care) << ' ' << quad(~src_addr.care);
  os << ' ' << quad(dst_addr.value & dst_addr.care) << ' ' << quad(~dst_addr.care);
  os << " sport " << port_pattern_string(src_ports);
  os << " dport " << port_pattern_string(dst_ports);
  return os.str();
}

std::string GrantTable::to_text() const {
  std::string out;
  for (const GrantRow& r : rows) {
    out += r.to_string();
    out += '\n';
  }
  return out;
}

std::vector<std::string> GrantTable::to_rows() const {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const GrantRow& r : rows) out.push_back(r.to_string());
  return out;
}

GrantTable tabulate_grant(bdd::NodeStore& store, const BitLayout& layout, bdd::BoolFn f,
                          size_t max_rows) {
  GrantTable table;
  for (const bdd::Cube& cube : store.enumerate_cubes(f, max_rows)) {
    GrantRow row;
    auto field_of = [&](HeaderField hf) -> TernaryField& {
      switch (hf) {
        case HeaderField::Protocol:
          return row.protocol;
        case HeaderField::DstAddr:
          return row.dst_addr;
        case HeaderField::DstPort:
          return row.dst_ports;
        case HeaderField::SrcAddr:
          return row.src_addr;
        case HeaderField::SrcPort:
          return row.src_ports;
      }
      return row.protocol;
    };
    for (unsigned v = 0; v < bdd::kVarCount; ++v) {
      if (!cube.care[v]) continue;
      auto [field, off] = layout.field_of(v);
      unsigned bit = BitLayout::field_width(field) - 1 - off;
      TernaryField& t = field_of(field);
      t.care |= 1u << bit;
      if (cube.value[v]) t.value |= 1u << bit;
    }
    table.rows.push_back(row);
  }
  return table;
}

bdd::BoolFn compile_grant_row(bdd::NodeStore& store, const BitLayout& layout,
                              const GrantRow& row) {
  BoolFn acc = field_equals(store, layout, HeaderField::Protocol, row.protocol.value,
                            row.protocol.care);
  acc = store.apply_and(
      acc, field_equals(store, layout, HeaderField::SrcAddr, row.src_addr.value, row.src_addr.care));
  acc = store.apply_and(
      acc, field_equals(store, layout, HeaderField::DstAddr, row.dst_addr.value, row.dst_addr.care));
  acc = store.apply_and(
      acc, field_equals(store, layout, HeaderField::SrcPort, row.src_ports.value, row.src_ports.care));
  acc = store.apply_and(
      acc, field_equals(store, layout, HeaderField::DstPort, row.dst_ports.value, row.dst_ports.care));
  return acc;
}

GrantRow parse_grant_row(std::string_view line) {
  std::istringstream is{std::string(line)};
  std::string proto, src, swild, dst, dwild, sport_kw, sport, dport_kw, dport;
  if (!(is >> proto >> src >> swild >> dst >> dwild >> sport_kw >> sport >> dport_kw >> dport) ||
      sport_kw != "sport" || dport_kw != "dport")
    throw std::invalid_argument("bad grant row");
  std::string extra;
  if (is >> extra) throw std::invalid_argument("bad grant row");

  GrantRow row;
  row.protocol = parse_protocol_pattern(proto);
  row.src_addr = {~parse_quad(swild), parse_quad(src)};
  row.dst_addr = {~parse_quad(dwild), parse_quad(dst)};
  row.src_ports = parse_port_pattern(sport);
  row.dst_ports = parse_port_pattern(dport);
  return row;
}

}  // namespace dfw

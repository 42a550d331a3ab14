#include "dfw/acl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

namespace dfw {

bool PortConstraint::matches(uint16_t port) const {
  switch (kind) {
    case Kind::Any:
      return true;
    case Kind::Eq:
      return port == lo;
    case Kind::Range:
      return lo <= port && port <= hi;
    case Kind::Ge:
      return port >= lo;
    case Kind::Lt:
      return port < lo;
  }
  return false;
}

PortConstraint PortConstraint::range(uint16_t lo, uint16_t hi) {
  if (lo > hi) throw std::invalid_argument("port range requires lo <= hi");
  return {Kind::Range, lo, hi};
}

bool match_condition(const Condition& c, const PacketKey& p) {
  if (c.protocol && *c.protocol != p.protocol) return false;
  if (!c.src.matches(p.src_addr) || !c.dst.matches(p.dst_addr)) return false;
  if (!condition_has_ports(c)) return true;
  return c.src_ports.matches(p.src_port) && c.dst_ports.matches(p.dst_port);
}

std::string ParseError::format(int line, int column, const std::string& what) {
  return "line " + std::to_string(line) + ":" + std::to_string(column) + ": " + what;
}

void GroupHierarchy::add_containment(GroupId parent, GroupId child) {
  if (parent >= group_count() || child >= group_count())
    throw std::invalid_argument("group id out of range");
  if (parent == child || reachable_up(parent, child))
    throw std::invalid_argument("containment cycle between group " + std::to_string(parent) +
                                " and group " + std::to_string(child));
  children_[parent].push_back(child);
  parents_[child].push_back(parent);
}

bool GroupHierarchy::reachable_up(GroupId from, GroupId target) const {
  std::vector<GroupId> stack{from};
  std::vector<bool> seen(group_count(), false);
  while (!stack.empty()) {
    GroupId g = stack.back();
    stack.pop_back();
    if (g == target) return true;
    if (seen[g]) continue;
    seen[g] = true;
    for (GroupId up : parents_[g]) stack.push_back(up);
  }
  return false;
}

std::set<GroupId> GroupHierarchy::supergroups(GroupId j) const {
  if (j >= group_count()) throw std::out_of_range("group id out of range");
  std::set<GroupId> result;
  std::vector<GroupId> stack{j};
  while (!stack.empty()) {
    GroupId g = stack.back();
    stack.pop_back();
    if (!result.insert(g).second) continue;
    for (GroupId up : parents_[g]) stack.push_back(up);
  }
  return result;
}

namespace {

struct Token {
  std::string_view text;
  int column;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> tokens;
  size_t i = 0;
  while (i < line.size()) {
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    if (line[i] == '#') break;
    size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) &&
           line[i] != '#')
      ++i;
    tokens.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
  }
  return tokens;
}

bool is_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isdigit(c);
  });
}

std::optional<uint64_t> parse_uint(std::string_view s) {
  if (!is_digits(s) || s.size() > 19) return std::nullopt;
  uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

class LineParser {
 public:
  LineParser(int line_no, std::vector<Token> tokens)
      : line_(line_no), tokens_(std::move(tokens)) {}

  bool done() const { return pos_ >= tokens_.size(); }

  const Token& peek() const {
    if (done()) fail_at_end("unexpected end of rule");
    return tokens_[pos_];
  }

  Token next() {
    const Token& t = peek();
    ++pos_;
    return t;
  }

  [[noreturn]] void fail(const Token& t, const std::string& what) const {
    throw ParseError(line_, t.column, what);
  }

  [[noreturn]] void fail_at_end(const std::string& what) const {
    int col = tokens_.empty() ? 1 : tokens_.back().column + static_cast<int>(tokens_.back().text.size());
    throw ParseError(line_, col, what);
  }

  uint16_t parse_port() {
    Token t = next();
    auto v = parse_uint(t.text);
    if (!v || *v > 65535) fail(t, "port out of 0..65535");
    return static_cast<uint16_t>(*v);
  }

  AddrPattern parse_pattern(const char* what) {
    Token vt = next();
    uint32_t value;
    try {
      value = parse_quad(vt.text);
    } catch (const std::invalid_argument&) {
      fail(vt, std::string(what) + " address not in quad notation");
    }
    Token wt = next();
    uint32_t wild;
    try {
      wild = parse_quad(wt.text);
    } catch (const std::invalid_argument&) {
      fail(wt, std::string(what) + " wildcard not in quad notation");
    }
    return {value, wild};
  }

  // eq <p> | range <lo> <hi> | ge <p> | lt <p>
  std::optional<PortConstraint> try_parse_port_constraint() {
    if (done()) return std::nullopt;
    const Token& t = peek();
    if (t.text == "eq") {
      next();
      return PortConstraint::eq(parse_port());
    }
    if (t.text == "range") {
      next();
      uint16_t lo = parse_port();
      Token hi_tok = peek();
      uint16_t hi = parse_port();
      if (lo > hi) fail(hi_tok, "port range requires lo <= hi");
      return PortConstraint::range(lo, hi);
    }
    if (t.text == "ge") {
      next();
      return PortConstraint::ge(parse_port());
    }
    if (t.text == "lt") {
      next();
      return PortConstraint::lt(parse_port());
    }
    return std::nullopt;
  }

  Rule parse_rule(std::optional<size_t> max_groups) {
    Token action_tok = next();
    Rule rule;
    if (action_tok.text == "accept") {
      rule.action = Rule::Action::Accept;
    } else if (action_tok.text == "deny") {
      rule.action = Rule::Action::Deny;
      // Optional group labels: digit tokens up to the protocol keyword.
      while (!done() && is_digits(peek().text)) {
        Token g = next();
        auto v = parse_uint(g.text);
        if (!v || (max_groups && *v >= *max_groups))
          fail(g, "group id " + std::string(g.text) + " out of range");
        rule.groups.insert(static_cast<GroupId>(*v));
      }
    } else {
      fail(action_tok, "expected 'accept' or 'deny'");
    }

    Token proto_tok = next();
    if (proto_tok.text == "everything") {
      if (!done()) fail(peek(), "'everything' takes no further fields");
      return rule;
    }

    bool has_ports = false;
    if (proto_tok.text == "tcp") {
      rule.condition.protocol = kProtoTcp;
      has_ports = true;
    } else if (proto_tok.text == "udp") {
      rule.condition.protocol = kProtoUdp;
      has_ports = true;
    } else if (proto_tok.text == "icmp") {
      rule.condition.protocol = kProtoIcmp;
    } else if (proto_tok.text == "ip") {
      rule.condition.protocol = std::nullopt;
    } else {
      fail(proto_tok, "unknown protocol token '" + std::string(proto_tok.text) + "'");
    }

    rule.condition.src = parse_pattern("source");
    if (!done() && peek().text == "sport") {
      Token sp = next();
      if (!has_ports) fail(sp, "port constraint on a protocol without ports");
      auto c = try_parse_port_constraint();
      if (!c) fail_at_end("expected port constraint after 'sport'");
      rule.condition.src_ports = *c;
    }
    rule.condition.dst = parse_pattern("destination");
    if (auto c = try_parse_port_constraint()) {
      if (!has_ports) fail(tokens_[pos_ - 1], "port constraint on a protocol without ports");
      rule.condition.dst_ports = *c;
    }
    if (!done()) fail(peek(), "trailing tokens after rule");
    return rule;
  }

 private:
  int line_;
  std::vector<Token> tokens_;
  size_t pos_ = 0;
};

template <typename PerRule>
void for_each_rule_line(std::string_view text, PerRule&& per_rule) {
  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string_view line =
        eol == std::string_view::npos ? text.substr(pos) : text.substr(pos, eol - pos);
    ++line_no;
    auto tokens = tokenize(line);
    if (!tokens.empty()) per_rule(line_no, std::move(tokens));
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
}

}  // namespace

BaseList parse_acl(std::string_view text, std::optional<size_t> max_groups) {
  BaseList list;
  for_each_rule_line(text, [&](int line_no, std::vector<Token> tokens) {
    LineParser p(line_no, std::move(tokens));
    list.rules.push_back(p.parse_rule(max_groups));
  });
  return list;
}

std::vector<Rule> parse_exception_list(std::string_view text) {
  std::vector<Rule> rules;
  for_each_rule_line(text, [&](int line_no, std::vector<Token> tokens) {
    int col = tokens.front().column;
    LineParser p(line_no, std::move(tokens));
    Rule r = p.parse_rule(std::nullopt);
    if (r.action != Rule::Action::Accept)
      throw ParseError(line_no, col, "exception lists contain only accept rules");
    rules.push_back(std::move(r));
  });
  return rules;
}

GroupHierarchy parse_group_config(std::string_view text) {
  struct Edge {
    int line;
    int column;
    uint64_t parent;
    std::vector<uint64_t> children;
  };
  std::vector<std::pair<std::string, uint64_t>> groups;  // (name, id)
  std::vector<Edge> edges;

  for_each_rule_line(text, [&](int line_no, std::vector<Token> tokens) {
    LineParser p(line_no, std::move(tokens));
    Token head = p.next();
    if (head.text == "group") {
      Token name = p.next();
      Token id_tok = p.next();
      auto id = parse_uint(id_tok.text);
      if (!id) p.fail(id_tok, "expected numeric group id");
      if (!p.done()) p.fail(p.peek(), "trailing tokens after group declaration");
      groups.emplace_back(std::string(name.text), *id);
    } else if (head.text == "contains") {
      Token parent_tok = p.next();
      auto parent = parse_uint(parent_tok.text);
      if (!parent) p.fail(parent_tok, "expected numeric group id");
      Edge e{line_no, parent_tok.column, *parent, {}};
      while (!p.done()) {
        Token child_tok = p.next();
        auto child = parse_uint(child_tok.text);
        if (!child) p.fail(child_tok, "expected numeric group id");
        e.children.push_back(*child);
      }
      if (e.children.empty()) p.fail_at_end("'contains' needs at least one child");
      edges.push_back(std::move(e));
    } else {
      p.fail(head, "expected 'group' or 'contains'");
    }
  });

  size_t n = groups.size();
  std::vector<bool> seen(n, false);
  GroupHierarchy h(n);
  for (const auto& [name, id] : groups) {
    if (id >= n) throw std::invalid_argument("group ids must cover exactly 0.." + std::to_string(n - 1));
    if (seen[id]) throw std::invalid_argument("duplicate group id " + std::to_string(id));
    seen[id] = true;
    h.set_name(static_cast<GroupId>(id), name);
  }
  for (const Edge& e : edges) {
    for (uint64_t child : e.children) {
      if (e.parent >= n || child >= n)
        throw ParseError(e.line, e.column, "group id out of range in 'contains'");
      try {
        h.add_containment(static_cast<GroupId>(e.parent), static_cast<GroupId>(child));
      } catch (const std::invalid_argument& ex) {
        throw ParseError(e.line, e.column, ex.what());
      }
    }
  }
  return h;
}

std::string quad(uint32_t addr) {
  std::ostringstream os;
  os << (addr >> 24) << '.' << ((addr >> 16) & 0xFF) << '.' << ((addr >> 8) & 0xFF) << '.'
     << (addr & 0xFF);
  return os.str();
}

uint32_t parse_quad(std::string_view s) {
  uint32_t addr = 0;
  int parts = 0;
  size_t pos = 0;
  while (parts < 4) {
    size_t dot = s.find('.', pos);
    std::string_view part =
        dot == std::string_view::npos ? s.substr(pos) : s.substr(pos, dot - pos);
    auto v = parse_uint(part);
    if (!v || *v > 255) throw std::invalid_argument("not in quad notation");
    addr = (addr << 8) | static_cast<uint32_t>(*v);
    ++parts;
    if (dot == std::string_view::npos) {
      pos = s.size();
      break;
    }
    pos = dot + 1;
  }
  if (parts != 4 || pos != s.size()) throw std::invalid_argument("not in quad notation");
  return addr;
}

std::string protocol_name(uint8_t proto) {
  switch (proto) {
    case kProtoTcp:
      return "tcp";
    case kProtoUdp:
      return "udp";
    case kProtoIcmp:
      return "icmp";
    default:
      return std::to_string(proto);
  }
}

namespace {

void append_port_constraint(std::ostringstream& os, const PortConstraint& c) {
  switch (c.kind) {
    case PortConstraint::Kind::Any:
      break;
    case PortConstraint::Kind::Eq:
      os << " eq " << c.lo;
      break;
    case PortConstraint::Kind::Range:
      os << " range " << c.lo << ' ' << c.hi;
      break;
    case PortConstraint::Kind::Ge:
      os << " ge " << c.lo;
      break;
    case PortConstraint::Kind::Lt:
      os << " lt " << c.lo;
      break;
  }
}

}  // namespace

std::string to_string(const Rule& r) {
  std::ostringstream os;
  os << (r.action == Rule::Action::Accept ? "accept" : "deny");
  for (GroupId g : r.groups) os << ' ' << g;
  const Condition& c = r.condition;
  if (c.is_universal()) {
    os << " everything";
    return os.str();
  }
  os << ' ' << (c.protocol ? protocol_name(*c.protocol) : "ip");
  os << ' ' << quad(c.src.value) << ' ' << quad(c.src.wildcard);
  if (!c.src_ports.is_any()) {
    os << " sport";
    append_port_constraint(os, c.src_ports);
  }
  os << ' ' << quad(c.dst.value) << ' ' << quad(c.dst.wildcard);
  append_port_constraint(os, c.dst_ports);
  return os.str();
}

std::string to_string(const BaseList& l) {
  std::string out;
  for (const Rule& r : l.rules) {
    out += to_string(r);
    out += '\n';
  }
  return out;
}

}  // namespace dfw

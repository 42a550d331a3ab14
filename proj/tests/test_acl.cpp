#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dfw/acl.hpp"
#include "generators.hpp"
#include "paper_example.hpp"

using namespace dfw;

TEST_CASE("parse_acl: worked-example rules") {
  BaseList list = parse_acl(testdata::kBaseList, 3);
  REQUIRE(list.rules.size() == 9);

  const Rule& r1 = list.rules[0];
  CHECK(r1.action == Rule::Action::Accept);
  CHECK(r1.condition.protocol == kProtoTcp);
  CHECK(r1.condition.src == AddrPattern::any());
  CHECK(r1.condition.dst == AddrPattern::exact(testdata::subnet_host(15)));
  CHECK(r1.condition.dst_ports == PortConstraint::eq(88));
  CHECK(r1.condition.src_ports.is_any());

  const Rule& r6 = list.rules[5];
  CHECK(r6.action == Rule::Action::Deny);
  CHECK(r6.groups == std::set<GroupId>{0});
  CHECK(r6.condition.dst == AddrPattern{testdata::subnet_host(0), 0x0000007Fu});
  CHECK(r6.condition.dst_ports == PortConstraint::ge(89));

  const Rule& r9 = list.rules[8];
  CHECK(r9.action == Rule::Action::Deny);
  CHECK(r9.groups == std::set<GroupId>{2});
  CHECK(r9.condition.is_universal());
}

TEST_CASE("parse_acl: empty and comment-only documents") {
  CHECK(parse_acl("").rules.empty());
  CHECK(parse_acl("\n\n# only a comment\n   \n").rules.empty());
}

TEST_CASE("parse_acl: multiple group labels") {
  BaseList list = parse_acl("deny 0 1 tcp 0.0.0.0 255.255.255.255 10.0.0.0 0.255.255.255");
  REQUIRE(list.rules.size() == 1);
  CHECK(list.rules[0].groups == std::set<GroupId>{0, 1});
  CHECK(list.rules[0].condition.dst == AddrPattern{0x0A000000u, 0x00FFFFFFu});
  CHECK(list.rules[0].condition.dst_ports.is_any());
  // Re-serializing reaches a fixed point.
  std::string text = to_string(list);
  CHECK(parse_acl(text) == list);
  CHECK(to_string(parse_acl(text)) == text);
}

TEST_CASE("parse_acl: duplicate labels normalize to a set") {
  BaseList list = parse_acl("deny 1 1 2 everything");
  REQUIRE(list.rules.size() == 1);
  CHECK(list.rules[0].groups == std::set<GroupId>{1, 2});
}

TEST_CASE("parse_acl: diagnostics carry line and column") {
  try {
    parse_acl("accept tcp 0.0.0.0 255.255.255.255 1.2.3.4 0.0.0.0\naccept bogus 1.2.3.4");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 8);
    CHECK(std::string(e.what()).find("unknown protocol token") != std::string::npos);
  }

  CHECK_THROWS_AS(parse_acl("accept tcp 1.2.3 0.0.0.0 4.5.6.7 0.0.0.0"), ParseError);
  CHECK_THROWS_AS(parse_acl("accept tcp 1.2.3.4 0.0.0.0 4.5.6.7 0.0.0.0 eq 70000"), ParseError);
  CHECK_THROWS_AS(parse_acl("accept tcp 1.2.3.4 0.0.0.0 4.5.6.7 0.0.0.0 range 90 10"), ParseError);
  CHECK_THROWS_AS(parse_acl("deny 9 everything", 3), ParseError);
  CHECK_THROWS_AS(parse_acl("accept icmp 1.2.3.4 0.0.0.0 4.5.6.7 0.0.0.0 eq 5"), ParseError);
  CHECK_THROWS_AS(parse_acl("deny everything extra"), ParseError);
  CHECK_NOTHROW(parse_acl("deny 9 everything"));  // unchecked without a group count
}

TEST_CASE("parse_exception_list accepts only accept rules") {
  auto rules = parse_exception_list(testdata::kException00);
  REQUIRE(rules.size() == 1);
  CHECK(rules[0].condition.dst == AddrPattern::exact(testdata::subnet_host(1)));
  CHECK(rules[0].condition.dst_ports == PortConstraint::eq(100));

  auto icmp_rules = parse_exception_list(testdata::kException21);
  REQUIRE(icmp_rules.size() == 1);
  CHECK(icmp_rules[0].condition.protocol == kProtoIcmp);
  CHECK(icmp_rules[0].condition.dst_ports.is_any());

  try {
    parse_exception_list("deny tcp 0.0.0.0 255.255.255.255 1.2.3.4 0.0.0.0");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("only accept rules") != std::string::npos);
  }
}

TEST_CASE("serialize/parse round trip on random lists") {
  gen::Rng rng(0x5EED0001);
  for (int i = 0; i < 200; ++i) {
    BaseList list = gen::random_base_list(rng, 20, 4);
    std::string text = to_string(list);
    CAPTURE(text);
    BaseList reparsed = parse_acl(text, 4);
    CHECK(reparsed == list);
    CHECK(to_string(reparsed) == text);
  }
}

TEST_CASE("match_condition: Cisco router example") {
  Condition c;
  c.protocol = kProtoTcp;
  c.src = AddrPattern::exact(parse_quad("20.9.17.8"));
  c.dst = AddrPattern::exact(parse_quad("121.11.127.20"));
  c.dst_ports = PortConstraint::range(23, 27);

  PacketKey p{kProtoTcp, parse_quad("20.9.17.8"), parse_quad("121.11.127.20"), 1234, 25};
  CHECK(match_condition(c, p));
  p.dst_port = 28;
  CHECK_FALSE(match_condition(c, p));
  p.dst_port = 23;
  CHECK(match_condition(c, p));
  p.protocol = kProtoUdp;
  CHECK_FALSE(match_condition(c, p));
}

TEST_CASE("match_condition: wildcard bit semantics by enumeration") {
  // Wildcard 0.0.0.1 ignores only bit 0, so exactly the two addresses that
  // differ in that bit match. The enumeration is the oracle here.
  AddrPattern pat{parse_quad("20.9.17.8"), parse_quad("0.0.0.1")};
  std::vector<uint32_t> matching;
  uint32_t base = parse_quad("20.9.17.8") & ~1u;
  for (uint32_t delta = 0; delta < 2; ++delta) {
    if (pat.matches(base + delta)) matching.push_back(base + delta);
  }
  CHECK(matching == std::vector<uint32_t>{parse_quad("20.9.17.8"), parse_quad("20.9.17.9")});
  CHECK(pat.matches(parse_quad("20.9.17.9")));
  CHECK_FALSE(pat.matches(parse_quad("20.9.17.10")));
  CHECK_FALSE(pat.matches(parse_quad("20.9.18.8")));

  // 0.0.0.255 ignores the low byte: the whole /24 matches.
  AddrPattern prefix{parse_quad("20.9.17.8"), parse_quad("0.0.0.255")};
  for (uint32_t x = 0; x < 256; ++x) CHECK(prefix.matches(parse_quad("20.9.17.0") + x));
  CHECK_FALSE(prefix.matches(parse_quad("20.9.16.8")));
}

TEST_CASE("match_condition: universal condition matches everything") {
  Condition all_any;
  gen::Rng rng(0x5EED0002);
  for (int i = 0; i < 100; ++i) CHECK(match_condition(all_any, gen::random_packet(rng)));
}

TEST_CASE("supergroups on the worked-example hierarchy") {
  GroupHierarchy h = parse_group_config(testdata::kGroups);
  REQUIRE(h.group_count() == 3);
  CHECK(h.name(0) == "staff");
  CHECK(h.supergroups(0) == std::set<GroupId>{0, 2});
  CHECK(h.supergroups(1) == std::set<GroupId>{1, 2});
  CHECK(h.supergroups(2) == std::set<GroupId>{2});
  CHECK_THROWS_AS(h.supergroups(3), std::out_of_range);
}

TEST_CASE("supergroups: flat hierarchy is reflexive only") {
  GroupHierarchy h(4);
  for (GroupId g = 0; g < 4; ++g) CHECK(h.supergroups(g) == std::set<GroupId>{g});
}

TEST_CASE("supergroups: monotone under edge addition, always reflexive") {
  gen::Rng rng(0x5EED0003);
  for (int trial = 0; trial < 50; ++trial) {
    size_t n = 2 + static_cast<size_t>(gen::pick(rng, 5));
    GroupHierarchy h(n);
    std::vector<std::set<GroupId>> before(n);
    for (GroupId g = 0; g < n; ++g) before[g] = h.supergroups(g);
    for (int e = 0; e < 6; ++e) {
      auto parent = static_cast<GroupId>(gen::pick(rng, static_cast<int>(n)));
      auto child = static_cast<GroupId>(gen::pick(rng, static_cast<int>(n)));
      try {
        h.add_containment(parent, child);
      } catch (const std::invalid_argument&) {
        continue;  // would have closed a cycle
      }
      for (GroupId g = 0; g < n; ++g) {
        auto after = h.supergroups(g);
        CHECK(after.count(g) == 1);
        CHECK(std::includes(after.begin(), after.end(), before[g].begin(), before[g].end()));
        before[g] = std::move(after);
      }
    }
  }
}

TEST_CASE("group config: cycles and bad ids rejected") {
  CHECK_THROWS(parse_group_config("group a 0\ngroup b 1\ncontains 0 1\ncontains 1 0"));
  CHECK_THROWS(parse_group_config("group a 0\ncontains 0 0"));
  CHECK_THROWS(parse_group_config("group a 0\ngroup b 2"));      // gap
  CHECK_THROWS(parse_group_config("group a 0\ngroup b 0"));      // duplicate id
  CHECK_THROWS(parse_group_config("group a 0\ncontains 0 7"));   // out of range
  CHECK_THROWS(parse_group_config("grp a 0"));
}

TEST_CASE("diamond containment is allowed (DAG, not tree)") {
  GroupHierarchy h = parse_group_config(
      "group a 0\ngroup b 1\ngroup c 2\ngroup d 3\ncontains 1 0\ncontains 2 0\ncontains 3 1 2");
  CHECK(h.supergroups(0) == std::set<GroupId>{0, 1, 2, 3});
}

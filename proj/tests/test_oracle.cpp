#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dfw/oracle.hpp"
#include "generators.hpp"
#include "paper_example.hpp"

using namespace dfw;
using testdata::icmp_to;
using testdata::subnet_host;
using testdata::tcp_to;

namespace {

oracle::OracleConfig paper_config() {
  oracle::OracleConfig cfg;
  cfg.hierarchy = parse_group_config(testdata::kGroups);
  cfg.base = parse_acl(testdata::kBaseList, cfg.hierarchy.group_count());
  cfg.exceptions.resize(3);
  return cfg;
}

void activate(oracle::OracleConfig& cfg, GroupId g, std::string_view text) {
  auto rules = parse_exception_list(text);
  cfg.exceptions[g].insert(cfg.exceptions[g].end(), rules.begin(), rules.end());
}

}  // namespace

TEST_CASE("base_accept: worked-example decisions") {
  oracle::OracleConfig cfg = paper_config();

  // Machine 15 is the special server: port 88 only.
  CHECK(oracle::base_accept(cfg.base, tcp_to(subnet_host(15), 88)));
  CHECK_FALSE(oracle::base_accept(cfg.base, tcp_to(subnet_host(15), 80)));
  CHECK_FALSE(oracle::base_accept(cfg.base, tcp_to(subnet_host(15), 32000)));

  // Port 88 and the >=32000 range are open on the rest of the subnet.
  CHECK(oracle::base_accept(cfg.base, tcp_to(subnet_host(3), 88)));
  CHECK(oracle::base_accept(cfg.base, tcp_to(subnet_host(200), 42000)));
  CHECK_FALSE(oracle::base_accept(cfg.base, tcp_to(subnet_host(3), 87)));
  CHECK_FALSE(oracle::base_accept(cfg.base, tcp_to(subnet_host(3), 89)));
  CHECK_FALSE(oracle::base_accept(cfg.base, tcp_to(subnet_host(200), 15999)));
  CHECK_FALSE(oracle::base_accept(cfg.base, tcp_to(subnet_host(200), 16000)));
  CHECK_FALSE(oracle::base_accept(cfg.base, icmp_to(subnet_host(40))));

  CHECK_FALSE(oracle::base_accept(BaseList{}, tcp_to(subnet_host(15), 88)));
}

TEST_CASE("oracle_accept: the documented exception outcomes") {
  SUBCASE("0.0: staff can open port 100 on machine 1") {
    auto cfg = paper_config();
    activate(cfg, 0, testdata::kException00);
    CHECK(oracle::accept(cfg, tcp_to(subnet_host(1), 100)));
    CHECK_FALSE(oracle::accept(cfg, tcp_to(subnet_host(2), 100)));
  }

  SUBCASE("0.1: ports 0-87 stay blocked by rule 5, 88 via base, 89-90 granted") {
    auto cfg = paper_config();
    activate(cfg, 0, testdata::kException01);
    for (int port = 0; port <= 87; ++port)
      CHECK_FALSE(oracle::accept(cfg, tcp_to(subnet_host(1), static_cast<uint16_t>(port))));
    CHECK(oracle::accept(cfg, tcp_to(subnet_host(1), 88)));
    CHECK(oracle::accept(cfg, tcp_to(subnet_host(1), 89)));
    CHECK(oracle::accept(cfg, tcp_to(subnet_host(1), 90)));
    CHECK_FALSE(oracle::accept(cfg, tcp_to(subnet_host(1), 91)));
  }

  SUBCASE("0.2: rule 8 is student-only, staff exception has no effect") {
    auto cfg = paper_config();
    activate(cfg, 0, testdata::kException02);
    CHECK_FALSE(oracle::accept(cfg, tcp_to(subnet_host(129), 16000)));
  }

  SUBCASE("1.0: rule 6 is staff-only, student exception has no effect") {
    auto cfg = paper_config();
    activate(cfg, 1, testdata::kException10);
    CHECK_FALSE(oracle::accept(cfg, tcp_to(subnet_host(2), 100)));
  }

  SUBCASE("1.1: students can open port 16000 on machine 129") {
    auto cfg = paper_config();
    activate(cfg, 1, testdata::kException11);
    CHECK(oracle::accept(cfg, tcp_to(subnet_host(129), 16000)));
    CHECK_FALSE(oracle::accept(cfg, tcp_to(subnet_host(129), 16001)));
  }

  SUBCASE("1.2: icmp to machine 129 only crosses rule 9, labelled all") {
    auto cfg = paper_config();
    activate(cfg, 1, testdata::kException12);
    CHECK(oracle::accept(cfg, icmp_to(subnet_host(129))));
    CHECK_FALSE(oracle::accept(cfg, icmp_to(subnet_host(130))));
  }

  SUBCASE("2.0: the all group cannot override rule 8") {
    auto cfg = paper_config();
    activate(cfg, 2, testdata::kException20);
    CHECK_FALSE(oracle::accept(cfg, tcp_to(subnet_host(130), 16000)));
  }

  SUBCASE("2.1: the all group can override rule 9 for icmp") {
    auto cfg = paper_config();
    activate(cfg, 2, testdata::kException21);
    CHECK(oracle::accept(cfg, icmp_to(subnet_host(130))));
  }
}

TEST_CASE("no exceptions: oracle_accept equals base_accept pointwise") {
  auto cfg = paper_config();
  gen::Rng rng(0x5EED0010);
  for (int i = 0; i < 2000; ++i) {
    PacketKey p = gen::boundary_packet(rng, cfg.base.rules);
    CHECK(oracle::accept(cfg, p) == oracle::base_accept(cfg.base, p));
  }
}

TEST_CASE("monotonicity: adding exception rules never shrinks the accept set") {
  gen::Rng rng(0x5EED0011);
  for (int trial = 0; trial < 20; ++trial) {
    size_t groups = 2 + static_cast<size_t>(gen::pick(rng, 3));
    oracle::OracleConfig cfg;
    cfg.hierarchy = gen::random_hierarchy(rng, groups);
    cfg.base = gen::random_base_list(rng, 20, groups);
    cfg.exceptions.resize(groups);

    std::vector<PacketKey> samples;
    for (int i = 0; i < 300; ++i) samples.push_back(gen::boundary_packet(rng, cfg.base.rules));

    std::vector<bool> before;
    for (const auto& p : samples) before.push_back(oracle::accept(cfg, p));

    // Grow: accepts may only be added.
    for (int add = 0; add < 4; ++add) {
      Rule extra;
      extra.condition = gen::random_condition(rng);
      auto g = static_cast<GroupId>(gen::pick(rng, static_cast<int>(groups)));
      cfg.exceptions[g].push_back(extra);
      for (size_t i = 0; i < samples.size(); ++i) {
        bool now = oracle::accept(cfg, samples[i]);
        if (before[i]) CHECK(now);
        before[i] = now;
      }
    }
    // Shrink: rejects may only be added.
    for (GroupId g = 0; g < groups; ++g) {
      while (!cfg.exceptions[g].empty()) {
        cfg.exceptions[g].pop_back();
        for (size_t i = 0; i < samples.size(); ++i) {
          bool now = oracle::accept(cfg, samples[i]);
          if (!before[i]) CHECK_FALSE(now);
          before[i] = now;
        }
      }
    }
  }
}

TEST_CASE("mandatory denies are inviolable in the oracle") {
  auto cfg = paper_config();
  for (GroupId g = 0; g < 3; ++g)
    activate(cfg, g, "accept tcp 0.0.0.0 255.255.255.255 128.128.128.0 0.0.0.255 range 0 87");
  // Rule 5 (mandatory) matches all of these regardless of exceptions.
  for (int port : {0, 40, 87}) {
    CHECK_FALSE(oracle::accept(cfg, tcp_to(subnet_host(66), static_cast<uint16_t>(port))));
  }
}

#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "dfw/acl.hpp"
#include "dfw/bdd.hpp"

// Translation between rule-level objects and boolean functions, plus the
// reverse rendering of grant functions into human-readable tables.

namespace dfw {

enum class HeaderField { Protocol, DstAddr, DstPort, SrcAddr, SrcPort };

// Assignment of the 104 header bits to decision variables. The default
// order puts protocol first, then destination address/port, then source
// address/port, most-significant bit first within each field. A custom
// permutation may be supplied; the canonical position of (field, msb_offset)
// follows the default order.
class BitLayout {
 public:
  BitLayout();
  explicit BitLayout(const std::array<uint8_t, bdd::kVarCount>& order);

  unsigned var_index(HeaderField field, unsigned msb_offset) const;
  std::pair<HeaderField, unsigned> field_of(unsigned var) const;

  static unsigned field_width(HeaderField f) {
    switch (f) {
      case HeaderField::Protocol:
        return 8;
      case HeaderField::DstAddr:
      case HeaderField::SrcAddr:
        return 32;
      case HeaderField::DstPort:
      case HeaderField::SrcPort:
        return 16;
    }
    return 0;
  }

  bdd::Bits packet_bits(const PacketKey& p) const;

 private:
  std::array<uint8_t, bdd::kVarCount> order_;    // canonical position -> variable
  std::array<uint8_t, bdd::kVarCount> position_; // variable -> canonical position
};

bdd::BoolFn compile_condition(bdd::NodeStore& store, const BitLayout& layout,
                              const Condition& c);

// First-match fold: ITE(cond_1, act_1, ITE(cond_2, act_2, ... FALSE)).
bdd::BoolFn compile_list(bdd::NodeStore& store, const BitLayout& layout,
                         std::span<const Rule> rules);

// D_j: disjunction of the deny conditions group j cannot override (label set
// disjoint from supergroups(j); mandatory denies always qualify).
bdd::BoolFn compile_deny_mask(bdd::NodeStore& store, const BitLayout& layout,
                              const BaseList& base, GroupId j, const GroupHierarchy& h);

// Ternary pattern over one header field: bits with care=1 are fixed.
struct TernaryField {
  uint32_t care = 0;
  uint32_t value = 0;

  friend bool operator==(const TernaryField&, const TernaryField&) = default;
};

struct GrantRow {
  TernaryField protocol;   // 8 bits
  TernaryField src_addr;   // 32 bits
  TernaryField dst_addr;   // 32 bits
  TernaryField src_ports;  // 16 bits
  TernaryField dst_ports;  // 16 bits

  std::string to_string() const;

  friend bool operator==(const GrantRow&, const GrantRow&) = default;
};

struct GrantTable {
  std::vector<GrantRow> rows;

  bool empty() const { return rows.empty(); }
  std::string to_text() const;                // one row per line
  std::vector<std::string> to_rows() const;   // wire payload form
};

// Lossless table derived from the cubes of f: the disjunction of the rows
// equals f (when max_rows is not hit). Addresses render as value/wildcard
// quads; port cubes render as integer intervals when contiguous, as ternary
// bit strings otherwise.
GrantTable tabulate_grant(bdd::NodeStore& store, const BitLayout& layout, bdd::BoolFn f,
                          size_t max_rows = SIZE_MAX);

bdd::BoolFn compile_grant_row(bdd::NodeStore& store, const BitLayout& layout,
                              const GrantRow& row);

GrantRow parse_grant_row(std::string_view line);  // throws std::invalid_argument

}  // namespace dfw

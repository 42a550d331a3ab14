#pragma once

#include <vector>

#include "dfw/acl.hpp"

// Naive linear-scan implementation of the group-based exception semantics.
// Ground truth for equivalence testing: it shares only the acl domain types
// with the engine and re-derives every decision from scratch, so agreement
// with the compiled path is evidence rather than tautology.

namespace dfw::oracle {

struct OracleConfig {
  BaseList base;
  GroupHierarchy hierarchy;
  // exceptions[j] holds the granted accept rules of group j's active records.
  std::vector<std::vector<Rule>> exceptions;
};

// First matching rule decides; no match means reject.
bool base_accept(const BaseList& base, const PacketKey& p);

// Base acceptance, or some exception of group j matches p while every deny
// rule in the base that matches p is labelled with j or a supergroup of j.
bool accept(const OracleConfig& cfg, const PacketKey& p);

}  // namespace dfw::oracle

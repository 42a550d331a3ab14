#include "dfw/bdd.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace dfw::bdd {

namespace {

uint64_t mix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

size_t NodeStore::NodeKeyHash::operator()(const NodeKey& k) const {
  return static_cast<size_t>(
      mix64((uint64_t(k.var) << 40) ^ (uint64_t(k.lo) << 20) ^ k.hi) ^
      mix64(uint64_t(k.lo) * 0x100000001B3ull + k.hi));
}

size_t NodeStore::IteKeyHash::operator()(const IteKey& k) const {
  return static_cast<size_t>(mix64(uint64_t(k.f) | (uint64_t(k.g) << 32)) ^
                             mix64(uint64_t(k.h) << 16));
}

NodeStore::NodeStore() {
  // Handles 0 and 1 are the reserved FALSE and TRUE terminals.
  append_slot({kTerminalVar, kFalse, kFalse});
  append_slot({kTerminalVar, kTrue, kTrue});
}

uint32_t NodeStore::check(BoolFn f) const {
  if (f.store() != this) throw std::invalid_argument("BoolFn belongs to a different store");
  return f.handle();
}

uint32_t NodeStore::append_slot(const Node& n) {
  uint32_t h = arena_size_;
  size_t block = h >> kBlockBits;
  if (block >= kMaxBlocks) throw std::length_error("node store is full");
  if (!blocks_[block]) blocks_[block] = std::make_unique<Node[]>(kBlockSize);
  blocks_[block][h & (kBlockSize - 1)] = n;
  ++arena_size_;
  return h;
}

uint32_t NodeStore::make_node(uint32_t var, uint32_t lo, uint32_t hi) {
  if (lo == hi) return lo;
  assert(node(lo).var > var && node(hi).var > var);
  NodeKey key{var, lo, hi};
  auto it = unique_table_.find(key);
  if (it != unique_table_.end()) return it->second;

  uint32_t h;
  if (!free_slots_.empty()) {
    h = free_slots_.back();
    free_slots_.pop_back();
    node(h) = {var, lo, hi};
  } else {
    h = append_slot({var, lo, hi});
  }
  unique_table_.emplace(key, h);
  ++live_internal_;
  return h;
}

BoolFn NodeStore::var(unsigned i) {
  if (i >= kVarCount) throw std::out_of_range("variable index out of range");
  return {this, make_node(i, kFalse, kTrue)};
}

uint32_t NodeStore::ite_rec(uint32_t f, uint32_t g, uint32_t h) {
  if (f == kTrue) return g;
  if (f == kFalse) return h;
  if (g == h) return g;
  if (g == kTrue && h == kFalse) return f;

  IteKey key{f, g, h};
  ++cache_lookups_;
  if (auto it = op_cache_.find(key); it != op_cache_.end()) {
    ++cache_hits_;
    return it->second;
  }

  uint32_t v = std::min({node(f).var, node(g).var, node(h).var});
  auto cofactor = [&](uint32_t x, bool high) {
    const Node& n = node(x);
    if (n.var != v) return x;
    return high ? n.hi : n.lo;
  };
  uint32_t lo = ite_rec(cofactor(f, false), cofactor(g, false), cofactor(h, false));
  uint32_t hi = ite_rec(cofactor(f, true), cofactor(g, true), cofactor(h, true));
  uint32_t r = make_node(v, lo, hi);
  op_cache_.emplace(key, r);
  return r;
}

BoolFn NodeStore::ite(BoolFn f, BoolFn g, BoolFn h) {
  return {this, ite_rec(check(f), check(g), check(h))};
}

BoolFn NodeStore::apply_and(BoolFn f, BoolFn g) {
  BoolFn r{this, ite_rec(check(f), check(g), kFalse)};
#ifndef NDEBUG
  assert(fn_size(r) <= fn_size(f) * fn_size(g));
#endif
  return r;
}

BoolFn NodeStore::apply_or(BoolFn f, BoolFn g) {
  BoolFn r{this, ite_rec(check(f), kTrue, check(g))};
#ifndef NDEBUG
  assert(fn_size(r) <= fn_size(f) * fn_size(g));
#endif
  return r;
}

BoolFn NodeStore::negate(BoolFn f) { return {this, ite_rec(check(f), kFalse, kTrue)}; }

bool NodeStore::evaluate(BoolFn f, const Bits& bits, unsigned* visited) const {
  uint32_t h = check(f);
  unsigned steps = 0;
  while (h > kTrue) {
    const Node& n = node(h);
    h = bits[n.var] ? n.hi : n.lo;
    ++steps;
    assert(steps <= kVarCount);
  }
  if (visited) *visited = steps;
  return h == kTrue;
}

std::vector<Cube> NodeStore::enumerate_cubes(BoolFn f, size_t max_cubes) const {
  std::vector<Cube> cubes;
  Cube current;
  // Depth-first over distinct paths; depth is bounded by the variable count.
  auto walk = [&](auto&& self, uint32_t h) -> void {
    if (h == kFalse || cubes.size() >= max_cubes) return;
    if (h == kTrue) {
      cubes.push_back(current);
      return;
    }
    const Node& n = node(h);
    current.care.set(n.var);
    current.value.reset(n.var);
    self(self, n.lo);
    current.value.set(n.var);
    self(self, n.hi);
    current.care.reset(n.var);
    current.value.reset(n.var);
  };
  walk(walk, check(f));
  return cubes;
}

size_t NodeStore::count_cubes(BoolFn f, size_t cap) const {
  std::unordered_map<uint32_t, size_t> memo;
  auto count = [&](auto&& self, uint32_t h) -> size_t {
    if (h == kFalse) return 0;
    if (h == kTrue) return 1;
    if (auto it = memo.find(h); it != memo.end()) return it->second;
    size_t lo = self(self, node(h).lo);
    size_t hi = self(self, node(h).hi);
    size_t total = lo >= cap - hi ? cap : lo + hi;  // saturate
    memo.emplace(h, total);
    return total;
  };
  return count(count, check(f));
}

size_t NodeStore::fn_size(BoolFn f) const {
  uint32_t root = check(f);
  std::unordered_set<uint32_t> seen;
  std::vector<uint32_t> stack{root};
  while (!stack.empty()) {
    uint32_t h = stack.back();
    stack.pop_back();
    if (!seen.insert(h).second) continue;
    if (h > kTrue) {
      stack.push_back(node(h).lo);
      stack.push_back(node(h).hi);
    }
  }
  return seen.size();
}

void NodeStore::mark(uint32_t h, std::vector<bool>& marks) const {
  std::vector<uint32_t> stack{h};
  while (!stack.empty()) {
    uint32_t x = stack.back();
    stack.pop_back();
    if (marks[x]) continue;
    marks[x] = true;
    if (x > kTrue) {
      stack.push_back(node(x).lo);
      stack.push_back(node(x).hi);
    }
  }
}

size_t NodeStore::collect_garbage(std::span<const BoolFn> roots) {
  std::vector<bool> marks(arena_size_, false);
  marks[kFalse] = marks[kTrue] = true;
  for (const BoolFn& r : roots) mark(check(r), marks);

  // The cache may reference dead handles; drop it wholesale.
  clear_cache();

  size_t reclaimed = 0;
  std::vector<bool> is_free(arena_size_, false);
  for (uint32_t h : free_slots_) is_free[h] = true;
  unique_table_.clear();
  for (uint32_t h = kTrue + 1; h < arena_size_; ++h) {
    if (is_free[h]) continue;
    if (marks[h]) {
      const Node& n = node(h);
      unique_table_.emplace(NodeKey{n.var, n.lo, n.hi}, h);
    } else {
      node(h) = {kFreeVar, 0, 0};
      free_slots_.push_back(h);
      --live_internal_;
      ++reclaimed;
    }
  }
  return reclaimed;
}

void NodeStore::clear_cache() { op_cache_.clear(); }

std::string NodeStore::to_dot(BoolFn f, const std::string& name) const {
  uint32_t root = check(f);
  std::ostringstream os;
  os << "digraph " << name << " {\n";
  os << "  f [shape=box,label=\"FALSE\"];\n  t [shape=box,label=\"TRUE\"];\n";
  std::unordered_set<uint32_t> seen;
  std::vector<uint32_t> stack{root};
  auto id = [](uint32_t h) { return "n" + std::to_string(h); };
  while (!stack.empty()) {
    uint32_t h = stack.back();
    stack.pop_back();
    if (h <= kTrue || !seen.insert(h).second) continue;
    const Node& n = node(h);
    os << "  " << id(h) << " [label=\"x" << n.var << "\"];\n";
    auto edge = [&](uint32_t child, const char* style) {
      const char* target = child == kFalse ? "f" : child == kTrue ? "t" : nullptr;
      os << "  " << id(h) << " -> " << (target ? target : id(child)) << " [style=" << style
         << "];\n";
    };
    edge(n.lo, "dashed");
    edge(n.hi, "solid");
    stack.push_back(n.lo);
    stack.push_back(n.hi);
  }
  if (root == kFalse) os << "  root -> f;\n";
  if (root == kTrue) os << "  root -> t;\n";
  os << "}\n";
  return os.str();
}

}  // namespace dfw::bdd

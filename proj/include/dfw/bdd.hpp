#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

// Reduced, ordered, hash-consed binary decision diagrams over a fixed
// 104-variable order (the packet-header bits). Canonicity makes handle
// equality coincide with boolean-function equality.
//
// Concurrency contract: one mutator at a time. Concurrent readers may call
// evaluate()/enumerate_cubes() on handles published before the current
// mutation epoch; node slots live in chunked blocks that never move, and
// collect_garbage() only reuses slots unreachable from the roots it is given
// (which must include every published handle).

namespace dfw::bdd {

inline constexpr unsigned kVarCount = 104;

using Bits = std::bitset<kVarCount>;

class NodeStore;

// Handle to a canonical node. Two BoolFns from the same store are equal
// exactly when they denote the same boolean function.
class BoolFn {
 public:
  BoolFn() = default;

  uint32_t handle() const { return handle_; }
  const NodeStore* store() const { return store_; }
  bool valid() const { return store_ != nullptr; }

  friend bool operator==(const BoolFn&, const BoolFn&) = default;

 private:
  friend class NodeStore;
  BoolFn(const NodeStore* store, uint32_t handle) : store_(store), handle_(handle) {}

  const NodeStore* store_ = nullptr;
  uint32_t handle_ = 0;
};

// One root-to-TRUE path: variables with care=1 are fixed to the bit in
// value, the rest are don't-care.
struct Cube {
  Bits care;
  Bits value;

  friend bool operator==(const Cube&, const Cube&) = default;
};

class NodeStore {
 public:
  NodeStore();
  NodeStore(const NodeStore&) = delete;
  NodeStore& operator=(const NodeStore&) = delete;

  BoolFn false_fn() const { return {this, kFalse}; }
  BoolFn true_fn() const { return {this, kTrue}; }

  // Projection on header bit i.
  BoolFn var(unsigned i);

  BoolFn apply_and(BoolFn f, BoolFn g);
  BoolFn apply_or(BoolFn f, BoolFn g);
  BoolFn negate(BoolFn f);
  BoolFn ite(BoolFn f, BoolFn g, BoolFn h);

  bool is_false(BoolFn f) const { return check(f) == kFalse; }
  bool is_true(BoolFn f) const { return check(f) == kTrue; }
  bool satisfiable(BoolFn f) const { return !is_false(f); }

  // Single descent from the root; visits at most kVarCount internal nodes.
  // When visited is non-null it receives the internal-node count.
  bool evaluate(BoolFn f, const Bits& bits, unsigned* visited = nullptr) const;

  // Pairwise-disjoint cubes whose disjunction equals f. Stops after
  // max_cubes paths (the default reproduces f exactly).
  std::vector<Cube> enumerate_cubes(BoolFn f, size_t max_cubes = SIZE_MAX) const;

  // Number of cubes enumerate_cubes would yield, saturating at cap.
  size_t count_cubes(BoolFn f, size_t cap = SIZE_MAX) const;

  // Number of distinct nodes reachable from f, terminals included.
  size_t fn_size(BoolFn f) const;

  // Mark-and-sweep over the arena. Handles reachable from roots stay valid;
  // everything else is reclaimed for reuse. Clears the op cache. Returns the
  // number of reclaimed nodes.
  size_t collect_garbage(std::span<const BoolFn> roots);

  size_t live_node_count() const { return live_internal_; }
  uint64_t cache_hits() const { return cache_hits_; }
  uint64_t cache_lookups() const { return cache_lookups_; }
  void clear_cache();

  // GraphViz dump of the diagram rooted at f (debugging aid).
  std::string to_dot(BoolFn f, const std::string& name = "bdd") const;

 private:
  static constexpr uint32_t kFalse = 0;
  static constexpr uint32_t kTrue = 1;
  static constexpr uint32_t kTerminalVar = kVarCount;
  static constexpr uint32_t kFreeVar = 0xFFFFFFFFu;

  struct Node {
    uint32_t var;
    uint32_t lo;
    uint32_t hi;
  };

  struct NodeKey {
    uint32_t var, lo, hi;
    friend bool operator==(const NodeKey&, const NodeKey&) = default;
  };
  struct NodeKeyHash {
    size_t operator()(const NodeKey& k) const;
  };
  struct IteKey {
    uint32_t f, g, h;
    friend bool operator==(const IteKey&, const IteKey&) = default;
  };
  struct IteKeyHash {
    size_t operator()(const IteKey& k) const;
  };

  // Nodes live in fixed-size blocks that are never moved or freed, so a
  // reader holding a published handle can descend while the writer appends.
  static constexpr unsigned kBlockBits = 16;
  static constexpr size_t kBlockSize = size_t{1} << kBlockBits;
  static constexpr size_t kMaxBlocks = 4096;

  Node& node(uint32_t h) { return blocks_[h >> kBlockBits][h & (kBlockSize - 1)]; }
  const Node& node(uint32_t h) const {
    return blocks_[h >> kBlockBits][h & (kBlockSize - 1)];
  }

  uint32_t check(BoolFn f) const;
  uint32_t make_node(uint32_t var, uint32_t lo, uint32_t hi);
  uint32_t append_slot(const Node& n);
  uint32_t ite_rec(uint32_t f, uint32_t g, uint32_t h);
  void mark(uint32_t h, std::vector<bool>& marks) const;

  std::array<std::unique_ptr<Node[]>, kMaxBlocks> blocks_;
  uint32_t arena_size_ = 0;
  std::vector<uint32_t> free_slots_;
  std::unordered_map<NodeKey, uint32_t, NodeKeyHash> unique_table_;
  std::unordered_map<IteKey, uint32_t, IteKeyHash> op_cache_;
  size_t live_internal_ = 0;
  uint64_t cache_hits_ = 0;
  uint64_t cache_lookups_ = 0;
};

}  // namespace dfw::bdd

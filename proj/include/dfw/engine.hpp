#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dfw/acl.hpp"
#include "dfw/bdd.hpp"
#include "dfw/compile.hpp"

namespace dfw {

using TimePoint = std::chrono::system_clock::time_point;
using ClockFn = std::function<TimePoint()>;

struct UpdateRecord {
  enum class State { Pending, Active };

  uint64_t id = 0;
  GroupId group = 0;
  uint32_t user_id = 0;
  bdd::BoolFn requested;  // OR of the requested accept conditions
  bdd::BoolFn granted;    // requested AND NOT D_group
  std::vector<Rule> rules;
  std::string rules_text;
  State state = State::Pending;
  TimePoint enqueued_at{};          // when the request entered the pending queue
  TimePoint created_at{};           // stamped at confirm time
  std::chrono::seconds expiry{0};
  TimePoint deadline{};             // created_at + expiry
};

struct LogRecord {
  TimePoint ts;
  std::string op;
  uint64_t id = 0;
  int64_t group = -1;  // -1 when not applicable
  std::string outcome;

  std::string to_line() const;
};

struct EngineConfig {
  std::chrono::seconds confirm_window{30};
};

// Owns the filtering state: base list, per-group deny masks D_i and
// exception functions E_i, the composed accept function, and the update
// records. Single writer; match() may be called concurrently from any
// number of threads against the last published snapshot.
class Engine {
 public:
  using Config = EngineConfig;

  // Upper bound on rendered grant-table rows per partial allow.
  static constexpr size_t kMaxGrantRows = 4096;

  Engine(BaseList base, GroupHierarchy hierarchy, Config config = {}, ClockFn clock = nullptr);

  static Engine load(std::string_view base_text, std::string_view hierarchy_text,
                     Config config = {}, ClockFn clock = nullptr);

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  bool match(const PacketKey& p) const;

  struct Classified {
    enum class Kind { Full, Partial, RejectAll };
    Kind kind = Kind::RejectAll;
    uint64_t id = 0;   // zero for RejectAll
    GrantTable grant;  // populated for Partial
  };

  // Computes the grantable part of the request. Full and Partial enqueue a
  // pending record; RejectAll leaves no trace beyond the log. Never changes
  // the published filter function.
  Classified classify_request(std::span<const Rule> rules, GroupId group, uint32_t user_id,
                              std::chrono::seconds expiry, std::string rules_text = {});

  enum class ConfirmResult { Ok, UnknownId, Expired };
  ConfirmResult confirm(uint64_t id);

  enum class UpdateResult { Ok, UnknownId };
  UpdateResult remove(uint64_t id);
  UpdateResult renew(uint64_t id, std::chrono::seconds new_expiry);

  // Deletes every active record past its deadline (one recompute for the
  // whole batch) and drops pending records older than the confirm window.
  // Returns the number of active records deleted.
  size_t purge_expired();

  // Introspection.
  const BaseList& base() const { return base_; }
  const GroupHierarchy& hierarchy() const { return hierarchy_; }
  size_t group_count() const { return hierarchy_.group_count(); }
  const BitLayout& layout() const { return layout_; }
  bdd::NodeStore& store() { return *store_; }
  const bdd::NodeStore& store() const { return *store_; }

  bdd::BoolFn phi_base() const { return phi_base_; }
  bdd::BoolFn phi_active() const;  // the currently published accept function
  bdd::BoolFn deny_mask(GroupId g) const { return deny_mask_.at(g); }
  bdd::BoolFn exception_fn(GroupId g) const { return exception_.at(g); }

  std::optional<uint32_t> record_owner(uint64_t id) const;
  const UpdateRecord* find_record(uint64_t id) const;
  std::vector<const UpdateRecord*> active_records() const;
  size_t pending_count() const { return pending_.size(); }

  struct Stats {
    uint64_t recomputes = 0;
    uint64_t cache_hits = 0;
    uint64_t cache_lookups = 0;
    size_t live_nodes = 0;
    size_t active = 0;
    size_t pending = 0;
  };
  Stats stats() const;

  std::string dump_state() const;

  const std::deque<LogRecord>& log() const { return log_; }
  void set_log_sink(std::function<void(const LogRecord&)> sink) { log_sink_ = std::move(sink); }

  TimePoint now() const { return clock_(); }
  const Config& config() const { return config_; }

 private:
  struct Snapshot {
    bdd::BoolFn phi_a;
  };

  uint64_t fresh_id();
  void rebuild_exception_fn(GroupId g);
  void recompute_phi_a();
  void append_log(std::string op, uint64_t id, int64_t group, std::string outcome);
  void drop_stale_pending(TimePoint now);
  void unlink_active(uint64_t id);

  Config config_;
  ClockFn clock_;
  BaseList base_;
  GroupHierarchy hierarchy_;
  BitLayout layout_;
  std::unique_ptr<bdd::NodeStore> store_;

  bdd::BoolFn phi_base_;
  std::vector<bdd::BoolFn> deny_mask_;
  std::vector<bdd::BoolFn> exception_;
  bdd::BoolFn phi_a_;
  std::shared_ptr<const Snapshot> snapshot_;  // atomic_load/atomic_store only
  // Snapshots readers may still hold; their functions stay GC roots until
  // the last shared_ptr drops.
  std::vector<std::weak_ptr<const Snapshot>> snapshot_history_;

  std::map<uint64_t, UpdateRecord> active_;
  std::multimap<TimePoint, uint64_t> deadlines_;            // active, by deadline
  std::vector<std::vector<uint64_t>> active_by_group_;
  std::map<uint64_t, UpdateRecord> pending_;

  uint64_t next_id_ = 0;
  uint64_t recomputes_ = 0;

  static constexpr size_t kLogRetention = 4096;
  std::deque<LogRecord> log_;
  std::function<void(const LogRecord&)> log_sink_;
};

}  // namespace dfw

#include "dfw/engine.hpp"

#include <algorithm>
#include <random>
#include <sstream>

namespace dfw {

std::string LogRecord::to_line() const {
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(ts.time_since_epoch());
  std::ostringstream os;
  os << "ts_ms=" << ms.count() << " op=" << op << " id=" << id;
  if (group >= 0) os << " group=" << group;
  os << " outcome=" << outcome;
  return os.str();
}

Engine::Engine(BaseList base, GroupHierarchy hierarchy, Config config, ClockFn clock)
    : config_(config),
      clock_(clock ? std::move(clock) : [] { return std::chrono::system_clock::now(); }),
      base_(std::move(base)),
      hierarchy_(std::move(hierarchy)),
      store_(std::make_unique<bdd::NodeStore>()) {
  size_t n = hierarchy_.group_count();
  for (const Rule& r : base_.rules) {
    for (GroupId g : r.groups) {
      if (g >= n)
        throw std::invalid_argument("deny rule labelled with group " + std::to_string(g) +
                                    " but only " + std::to_string(n) + " groups exist");
    }
  }

  phi_base_ = compile_list(*store_, layout_, base_.rules);
  deny_mask_.reserve(n);
  exception_.reserve(n);
  for (GroupId g = 0; g < n; ++g) {
    deny_mask_.push_back(compile_deny_mask(*store_, layout_, base_, g, hierarchy_));
    exception_.push_back(store_->false_fn());
  }
  active_by_group_.resize(n);

  std::random_device rd;
  std::mt19937_64 rng((uint64_t(rd()) << 32) ^ rd());
  next_id_ = rng();
  if (next_id_ == 0) next_id_ = 1;

  recompute_phi_a();
  recomputes_ = 0;  // loading does not count as a recompute
}

Engine Engine::load(std::string_view base_text, std::string_view hierarchy_text, Config config,
                    ClockFn clock) {
  GroupHierarchy hierarchy = parse_group_config(hierarchy_text);
  BaseList base = parse_acl(base_text, hierarchy.group_count());
  return Engine(std::move(base), std::move(hierarchy), config, std::move(clock));
}

bool Engine::match(const PacketKey& p) const {
  auto snap = std::atomic_load_explicit(&snapshot_, std::memory_order_acquire);
  return store_->evaluate(snap->phi_a, layout_.packet_bits(p));
}

bdd::BoolFn Engine::phi_active() const {
  return std::atomic_load_explicit(&snapshot_, std::memory_order_acquire)->phi_a;
}

uint64_t Engine::fresh_id() {
  uint64_t id = next_id_++;
  if (id == 0) id = next_id_++;
  return id;
}

Engine::Classified Engine::classify_request(std::span<const Rule> rules, GroupId group,
                                            uint32_t user_id, std::chrono::seconds expiry,
                                            std::string rules_text) {
  if (group >= hierarchy_.group_count()) throw std::out_of_range("group id out of range");

  bdd::BoolFn requested = compile_list(*store_, layout_, rules);
  bdd::BoolFn granted = store_->apply_and(requested, store_->negate(deny_mask_[group]));

  Classified result;
  if (store_->is_false(granted)) {
    result.kind = Classified::Kind::RejectAll;
    append_log("request", 0, group, "reject");
    return result;
  }

  UpdateRecord rec;
  rec.id = fresh_id();
  rec.group = group;
  rec.user_id = user_id;
  rec.requested = requested;
  rec.granted = granted;
  rec.rules.assign(rules.begin(), rules.end());
  rec.rules_text = std::move(rules_text);
  rec.state = UpdateRecord::State::Pending;
  rec.enqueued_at = clock_();
  rec.expiry = expiry;

  result.id = rec.id;
  if (granted == requested) {
    result.kind = Classified::Kind::Full;
    append_log("request", rec.id, group, "allow_full");
  } else {
    result.kind = Classified::Kind::Partial;
    // The granted function is exact regardless; the rendered table is capped
    // so an adversarially wide request cannot blow up enumeration.
    result.grant = tabulate_grant(*store_, layout_, granted, kMaxGrantRows);
    append_log("request", rec.id, group, "allow_partial");
  }
  pending_.emplace(rec.id, std::move(rec));
  return result;
}

Engine::ConfirmResult Engine::confirm(uint64_t id) {
  // A duplicate confirm of an already-active record is a no-op success:
  // UDP retries must not turn into errors.
  if (active_.count(id)) {
    append_log("confirm", id, active_.at(id).group, "duplicate");
    return ConfirmResult::Ok;
  }

  auto it = pending_.find(id);
  if (it == pending_.end()) {
    append_log("confirm", id, -1, "unknown_id");
    return ConfirmResult::UnknownId;
  }

  TimePoint now = clock_();
  UpdateRecord rec = std::move(it->second);
  pending_.erase(it);
  if (now - rec.enqueued_at > config_.confirm_window) {
    append_log("confirm", id, rec.group, "expired");
    return ConfirmResult::Expired;
  }

  rec.state = UpdateRecord::State::Active;
  rec.created_at = now;
  rec.deadline = now + rec.expiry;

  GroupId g = rec.group;
  exception_[g] = store_->apply_or(exception_[g], rec.granted);
  deadlines_.emplace(rec.deadline, id);
  active_by_group_[g].push_back(id);
  active_.emplace(id, std::move(rec));

  recompute_phi_a();
  append_log("confirm", id, g, "ok");
  return ConfirmResult::Ok;
}

void Engine::unlink_active(uint64_t id) {
  const UpdateRecord& rec = active_.at(id);
  auto [lo, hi] = deadlines_.equal_range(rec.deadline);
  for (auto it = lo; it != hi; ++it) {
    if (it->second == id) {
      deadlines_.erase(it);
      break;
    }
  }
  auto& ids = active_by_group_[rec.group];
  ids.erase(std::find(ids.begin(), ids.end(), id));
  active_.erase(id);
}

void Engine::rebuild_exception_fn(GroupId g) {
  bdd::BoolFn acc = store_->false_fn();
  for (uint64_t id : active_by_group_[g]) acc = store_->apply_or(acc, active_.at(id).granted);
  exception_[g] = acc;
}

Engine::UpdateResult Engine::remove(uint64_t id) {
  auto it = active_.find(id);
  if (it == active_.end()) {
    append_log("delete", id, -1, "unknown_id");
    return UpdateResult::UnknownId;
  }
  GroupId g = it->second.group;
  unlink_active(id);
  rebuild_exception_fn(g);
  recompute_phi_a();
  append_log("delete", id, g, "ok");
  return UpdateResult::Ok;
}

Engine::UpdateResult Engine::renew(uint64_t id, std::chrono::seconds new_expiry) {
  auto it = active_.find(id);
  if (it == active_.end()) {
    append_log("renew", id, -1, "unknown_id");
    return UpdateResult::UnknownId;
  }
  UpdateRecord& rec = it->second;
  auto [lo, hi] = deadlines_.equal_range(rec.deadline);
  for (auto d = lo; d != hi; ++d) {
    if (d->second == id) {
      deadlines_.erase(d);
      break;
    }
  }
  rec.expiry = new_expiry;
  rec.deadline = clock_() + new_expiry;
  deadlines_.emplace(rec.deadline, id);
  append_log("renew", id, rec.group, "ok");
  return UpdateResult::Ok;
}

void Engine::drop_stale_pending(TimePoint now) {
  for (auto it = pending_.begin(); it != pending_.end();) {
    if (now - it->second.enqueued_at > config_.confirm_window) {
      append_log("purge", it->first, it->second.group, "pending_dropped");
      it = pending_.erase(it);
    } else {
      ++it;
    }
  }
}

size_t Engine::purge_expired() {
  TimePoint now = clock_();
  drop_stale_pending(now);

  std::vector<uint64_t> expired;
  for (auto it = deadlines_.begin(); it != deadlines_.end() && it->first <= now; ++it)
    expired.push_back(it->second);
  if (expired.empty()) return 0;

  std::vector<bool> touched(hierarchy_.group_count(), false);
  for (uint64_t id : expired) {
    GroupId g = active_.at(id).group;
    touched[g] = true;
    append_log("purge", id, g, "expired");
    unlink_active(id);
  }
  for (GroupId g = 0; g < touched.size(); ++g) {
    if (touched[g]) rebuild_exception_fn(g);
  }
  recompute_phi_a();  // one recompute for the whole batch
  return expired.size();
}

void Engine::recompute_phi_a() {
  bdd::BoolFn acc = phi_base_;
  for (GroupId g = 0; g < hierarchy_.group_count(); ++g) {
    acc = store_->apply_or(acc, store_->apply_and(store_->negate(deny_mask_[g]), exception_[g]));
  }
  phi_a_ = acc;
  ++recomputes_;

  auto snap = std::make_shared<const Snapshot>(Snapshot{phi_a_});
  snapshot_history_.push_back(snap);
  std::atomic_store_explicit(&snapshot_, std::shared_ptr<const Snapshot>(snap),
                             std::memory_order_release);

  // Epoch GC: everything the engine can reach stays, plus any snapshot a
  // reader still holds a reference to.
  std::vector<bdd::BoolFn> roots{phi_base_, phi_a_};
  std::erase_if(snapshot_history_, [&](const std::weak_ptr<const Snapshot>& w) {
    auto held = w.lock();
    if (!held) return true;
    roots.push_back(held->phi_a);
    return false;
  });
  for (const bdd::BoolFn& f : deny_mask_) roots.push_back(f);
  for (const bdd::BoolFn& f : exception_) roots.push_back(f);
  for (const auto& [id, rec] : active_) {
    roots.push_back(rec.requested);
    roots.push_back(rec.granted);
  }
  for (const auto& [id, rec] : pending_) {
    roots.push_back(rec.requested);
    roots.push_back(rec.granted);
  }
  store_->collect_garbage(roots);
}

std::optional<uint32_t> Engine::record_owner(uint64_t id) const {
  if (auto it = active_.find(id); it != active_.end()) return it->second.user_id;
  if (auto it = pending_.find(id); it != pending_.end()) return it->second.user_id;
  return std::nullopt;
}

const UpdateRecord* Engine::find_record(uint64_t id) const {
  if (auto it = active_.find(id); it != active_.end()) return &it->second;
  if (auto it = pending_.find(id); it != pending_.end()) return &it->second;
  return nullptr;
}

std::vector<const UpdateRecord*> Engine::active_records() const {
  std::vector<const UpdateRecord*> out;
  out.reserve(active_.size());
  for (const auto& [id, rec] : active_) out.push_back(&rec);
  return out;
}

Engine::Stats Engine::stats() const {
  return {recomputes_,     store_->cache_hits(), store_->cache_lookups(),
          store_->live_node_count(), active_.size(),       pending_.size()};
}

std::string Engine::dump_state() const {
  std::ostringstream os;
  os << "base rules: " << base_.rules.size() << "\n";
  os << "groups: " << hierarchy_.group_count() << "\n";
  os << "phi_B nodes: " << store_->fn_size(phi_base_) << "\n";
  os << "phi_A nodes: " << store_->fn_size(phi_active()) << "\n";
  for (GroupId g = 0; g < hierarchy_.group_count(); ++g) {
    os << "group " << g << " (" << hierarchy_.name(g) << "): D nodes " << store_->fn_size(deny_mask_[g])
       << ", E nodes " << store_->fn_size(exception_[g]) << ", active "
       << active_by_group_[g].size() << "\n";
  }
  os << "active records: " << active_.size() << ", pending: " << pending_.size() << "\n";
  for (const auto& [id, rec] : active_) {
    auto left = std::chrono::duration_cast<std::chrono::seconds>(rec.deadline - clock_());
    os << "  id=" << id << " group=" << rec.group << " user=" << rec.user_id
       << " expires_in_s=" << left.count() << "\n";
  }
  return os.str();
}

void Engine::append_log(std::string op, uint64_t id, int64_t group, std::string outcome) {
  LogRecord rec{clock_(), std::move(op), id, group, std::move(outcome)};
  if (log_sink_) log_sink_(rec);
  log_.push_back(std::move(rec));
  if (log_.size() > kLogRetention) log_.pop_front();
}

}  // namespace dfw

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cachedos/cache.hpp"
#include "cachedos/common.hpp"
#include "cachedos/workload.hpp"

namespace cachedos {

enum class CoreStatus : std::uint8_t { Running, StalledOnLoad, StalledCacheBlocked, Throttled, Idle };

const char* to_string(CoreStatus s);

/// What the core handed to its L1D in one cycle.
struct Issued {
  Access access;
  std::uint64_t request_id = 0;
  Outcome outcome = Outcome::Hit;
};

/// In-order core: at most one access issued per cycle and at most one load in
/// flight. Stores retire as soon as the L1D accepts them (hit, merge or MSHR
/// allocation), so store misses overlap up to the L1D MSHR count. A rejected
/// access is retried every cycle until accepted.
class Core {
 public:
  Core(CoreId id, std::optional<Workload> workload);

  CoreId id() const { return id_; }
  CoreStatus status() const;
  bool has_workload() const { return workload_.has_value(); }
  const Workload* workload() const { return workload_ ? &*workload_ : nullptr; }

  /// `issue(access, request_id)` performs the L1D access and returns its
  /// outcome; for a hit the caller must later call load_complete with the
  /// same id (loads only).
  template <class Issue>
  std::optional<Issued> tick(Cycle now, Issue&& issue) {
    if (!can_issue()) return std::nullopt;
    if (!pending_) {
      const std::uint64_t seq = workload_->issued();
      pending_ = Pending{workload_->next_access(), next_request_id_++, seq};
    }
    const AccessOutcome out = issue(pending_->access, pending_->request_id);
    if (out.kind == Outcome::RejectedBlocked) {
      blocked_on_cache_ = true;
      return Issued{pending_->access, pending_->request_id, out.kind};
    }
    blocked_on_cache_ = false;
    if (pending_->seq == mark_seq_) mark_cycle_ = now;
    Issued rec{pending_->access, pending_->request_id, out.kind};
    if (pending_->access.op == Op::Load) {
      waiting_load_ = pending_->request_id;
      waiting_addr_ = pending_->access.addr;
    } else {
      retire(pending_->access.addr, now);
    }
    pending_.reset();
    return rec;
  }

  /// Data for the outstanding load arrived.
  void load_complete(std::uint64_t request_id, Cycle now);
  bool waiting_on(std::uint64_t request_id) const { return waiting_load_ && *waiting_load_ == request_id; }

  void apply_throttle(bool on) { throttled_ = on; }
  bool throttled() const { return throttled_; }

  /// True when a tick this cycle would attempt an access.
  bool can_issue() const {
    return workload_ && !throttled_ && !waiting_load_ && !(workload_->exhausted() && !pending_);
  }

  std::uint64_t retired() const { return retired_; }
  Cycle last_retire() const { return last_retire_; }
  bool finished() const;

  /// Records the cycle at which access number `seq` is accepted by the L1D.
  void mark_issue_of(std::uint64_t seq) { mark_seq_ = seq; }
  std::optional<Cycle> marked_cycle() const { return mark_cycle_; }

  void record_retire_order(bool on) { log_retires_ = on; }
  const std::vector<Addr>& retire_log() const { return retire_log_; }

 private:
  struct Pending {
    Access access;
    std::uint64_t request_id;
    std::uint64_t seq;
  };

  void retire(Addr addr, Cycle now);

  CoreId id_;
  std::optional<Workload> workload_;
  std::optional<Pending> pending_;
  std::optional<std::uint64_t> waiting_load_;
  Addr waiting_addr_ = 0;
  std::uint64_t next_request_id_ = 1;
  bool throttled_ = false;
  bool blocked_on_cache_ = false;

  std::uint64_t retired_ = 0;
  Cycle last_retire_ = 0;
  std::uint64_t mark_seq_ = ~std::uint64_t{0};
  std::optional<Cycle> mark_cycle_;
  bool log_retires_ = false;
  std::vector<Addr> retire_log_;
};

}  // namespace cachedos

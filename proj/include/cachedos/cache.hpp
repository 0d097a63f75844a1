#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "cachedos/common.hpp"

namespace cachedos {

struct CacheGeometry {
  std::uint64_t size_bytes = 0;
  unsigned line_bytes = 64;
  unsigned ways = 1;
  Cycle hit_latency = 1;

  unsigned sets() const { return static_cast<unsigned>(size_bytes / (std::uint64_t{ways} * line_bytes)); }
  void validate(const std::string& name) const;
};

struct CacheConfig {
  std::string name = "cache";
  CacheGeometry geometry;
  unsigned mshrs = 1;
  unsigned wb_size = 1;
};

/// Per-core allowed-way bitmasks. Bit i set means way i may receive new lines
/// allocated on behalf of that core.
struct PartitionMap {
  std::vector<std::uint32_t> masks;

  static PartitionMap all_ways(unsigned cores, unsigned ways);
  static PartitionMap equal_split(unsigned cores, unsigned ways);

  /// Throws ConfigError unless masks are non-empty, pairwise disjoint and
  /// cover all `ways`.
  void validate_disjoint(unsigned ways) const;
  bool is_identity(unsigned ways) const;
};

enum class Outcome : std::uint8_t { Hit, MissAllocated, MissMerged, RejectedBlocked };

struct AccessOutcome {
  Outcome kind = Outcome::Hit;
  Cycle ready = 0;  // meaningful for Hit only
};

enum class BlockCause : std::uint8_t { None, MshrFull, WritebackFull };

/// Somebody waiting on an outstanding line. `requester` is the upper-level
/// agent index (core id at L1D, L1D index at L2, -1 for the local prefetcher).
struct Waiter {
  int requester = -1;
  std::uint64_t request_id = 0;
  ReqKind kind = ReqKind::Read;
};

struct WritebackEntry {
  Addr line = 0;
  CoreId owner = 0;  // core that dirtied the line
  Cycle enqueued = 0;
};

struct FillResult {
  std::vector<Waiter> waiters;
  ReqKind kind = ReqKind::Read;  // kind of the request that allocated the MSHR
  CoreId owner = 0;
  bool installed = false;
};

enum class WritebackAccept : std::uint8_t { Accepted, Rejected };

struct CacheStats {
  std::uint64_t accesses = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses_allocated = 0;
  std::uint64_t misses_merged = 0;
  std::uint64_t rejected = 0;
  std::uint64_t fills = 0;
  std::uint64_t prefetch_fills = 0;
  std::uint64_t dirty_evictions = 0;
  std::uint64_t writebacks_drained = 0;
  std::uint64_t writebacks_received = 0;
  std::uint64_t onsets_mshr = 0;
  std::uint64_t onsets_wb = 0;
};

/// Non-blocking set-associative writeback cache: tag store with LRU, MSHR
/// array, writeback buffer and whole-cache blocking.
///
/// Blocking: a miss that finds no free MSHR, or whose replacement victim is
/// dirty while the writeback buffer has no free slot, blocks the cache. A
/// blocked cache rejects every access, hits included, until at least one MSHR
/// and one writeback slot are free again.
///
/// Replacement happens in two steps. At allocation the LRU way among the
/// requester's partition ways is claimed for the incoming line and, if the
/// current occupant is dirty, a writeback slot is reserved. At fill the
/// occupant is evicted into the reserved slot and the new line is installed.
/// When every allowed way of the set is already claimed, the fill is
/// delivered to the waiters without being installed.
class Cache {
 public:
  Cache(CacheConfig cfg, unsigned cores);

  const CacheConfig& config() const { return cfg_; }

  AccessOutcome access(const MemRequest& req, int requester, Cycle now);

  /// Completes the outstanding miss for `line`. Throws ContractViolation if
  /// no MSHR tracks it.
  FillResult fill_complete(Addr line, Cycle now);

  /// A dirty line arriving from an upper-level cache. Accepted regardless of
  /// the blocked flag as long as any eviction it causes finds a free
  /// writeback slot.
  WritebackAccept accept_writeback(Addr line, CoreId dirtier, Cycle now);

  /// Pops the oldest writeback entry if `send` accepts it. At most one per call.
  template <class Send>
  std::optional<WritebackEntry> writeback_drain(Cycle now, Send&& send) {
    if (wb_.empty()) return std::nullopt;
    if (!send(wb_.front())) return std::nullopt;
    WritebackEntry e = wb_.front();
    wb_.pop_front();
    ++stats_.writebacks_drained;
    try_unblock(now);
    return e;
  }

  bool is_blocked() const { return blocked_; }
  BlockCause block_cause() const { return blocked_ ? cause_ : BlockCause::None; }

  /// Cycles spent blocked up to `now`, including an ongoing episode.
  Cycle blocked_cycles(Cycle now) const;
  Cycle blocked_cycles(Cycle now, BlockCause cause) const;

  void set_partition(const PartitionMap& map);
  const PartitionMap& partition() const { return partition_; }

  bool present(Addr line) const { return find_way(line) >= 0; }
  bool pending(Addr line) const { return find_mshr(line) >= 0; }
  bool dirty(Addr line) const;
  /// Way index within its set, or -1.
  int way_of(Addr line) const;
  unsigned set_of(Addr line) const { return static_cast<unsigned>((line / line_bytes_) & set_mask_); }

  unsigned mshrs_used() const { return mshr_used_; }
  unsigned mshrs_free() const { return cfg_.mshrs - mshr_used_; }
  unsigned wb_entries() const { return static_cast<unsigned>(wb_.size()); }
  unsigned wb_reserved() const { return wb_reserved_; }
  unsigned wb_free() const { return cfg_.wb_size - wb_reserved_ - static_cast<unsigned>(wb_.size()); }
  const std::deque<WritebackEntry>& writeback_buffer() const { return wb_; }
  std::vector<Addr> pending_lines() const;

  const CacheStats& stats() const { return stats_; }

  /// Throws ContractViolation on any broken structural invariant.
  void check_invariants() const;

 private:
  struct Line {
    Addr tag = 0;
    std::uint64_t lru = 0;
    int claim = -1;  // MSHR slot that will fill this way
    CoreId owner = 0;
    bool valid = false;
    bool dirty = false;
  };

  struct Mshr {
    Addr line = 0;
    ReqKind kind = ReqKind::Read;
    CoreId owner = 0;
    Cycle alloc = 0;
    std::vector<Waiter> waiters;
    int way = -1;  // global line index claimed for the fill
    CoreId dirtier = 0;
    bool valid = false;
    bool reserved = false;  // holds a writeback slot for the claimed victim
    bool write = false;     // a store is waiting: install dirty
    bool dirty_on_fill = false;
  };

  int find_way(Addr line) const;
  int find_mshr(Addr line) const;
  int pick_victim(unsigned set, CoreId core) const;
  void touch(Line& l) { l.lru = ++lru_clock_; }
  void make_dirty(int idx, CoreId dirtier);
  void block(BlockCause cause, Cycle now);
  void try_unblock(Cycle now);
  std::uint32_t mask_for(CoreId core) const;

  CacheConfig cfg_;
  unsigned line_bytes_;
  unsigned ways_;
  std::uint64_t set_mask_;
  std::vector<Line> lines_;
  std::vector<Mshr> mshrs_;
  unsigned mshr_used_ = 0;
  std::deque<WritebackEntry> wb_;
  unsigned wb_reserved_ = 0;
  PartitionMap partition_;
  std::uint64_t lru_clock_ = 0;

  bool blocked_ = false;
  BlockCause cause_ = BlockCause::None;
  Cycle blocked_since_ = 0;
  Cycle blocked_total_ = 0;
  Cycle blocked_mshr_ = 0;
  Cycle blocked_wb_ = 0;

  CacheStats stats_;
};

}  // namespace cachedos

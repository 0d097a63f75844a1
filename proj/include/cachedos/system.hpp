#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "cachedos/cache.hpp"
#include "cachedos/core.hpp"
#include "cachedos/dram.hpp"
#include "cachedos/engine.hpp"
#include "cachedos/prefetch.hpp"
#include "cachedos/regulator.hpp"
#include "cachedos/workload.hpp"

namespace cachedos {

struct PlatformConfig {
  std::uint64_t clock_hz = 1'500'000'000ULL;
  unsigned cores = 4;
  unsigned line_bytes = 64;

  CacheConfig l1d;
  PrefetcherConfig l1d_prefetch;
  CacheConfig l2;
  PrefetcherConfig l2_prefetch;
  DramConfig dram;

  // Out-of-order window sizes. Recorded for reference; cores are in-order.
  unsigned core_iq = 96;
  unsigned core_rob = 128;
  unsigned core_lsq = 48;

  /// Quad-core 1.5 GHz; 32 KB 4-way L1D (3 MSHRs, 3 WB) with degree-5 stride
  /// prefetcher; shared 512 KB 16-way L2 (24 MSHRs, 8 WB, 12-cycle hits)
  /// with degree-8 stride prefetcher; 64-entry DRAM read/write queues, 8 banks.
  static PlatformConfig baseline();
  void validate() const;
};

struct SystemSetup {
  PlatformConfig platform = PlatformConfig::baseline();
  std::array<std::optional<WorkloadSpec>, kMaxCores> workloads{};
  std::optional<PartitionMap> partition;
  std::optional<RegulatorConfig> regulation;
};

struct CoreCounters {
  std::uint64_t l2_accesses = 0;  // requests from this core's L1D (demand + L1 prefetch)
  std::uint64_t l2_hits = 0;
  std::uint64_t l2_misses = 0;
  std::uint64_t llc_reads = 0;       // L2 refills charged to this core (incl. L2 prefetches)
  std::uint64_t llc_writebacks = 0;  // L2 writebacks drained to DRAM for lines this core dirtied
  std::uint64_t l1_fills = 0;
  std::uint64_t l1_prefetch_fills = 0;
  std::uint64_t throttle_events = 0;
};

struct Counters {
  Cycle cycle = 0;
  std::array<CoreCounters, kMaxCores> core{};
  Cycle l2_blocked = 0;
  Cycle l2_blocked_mshr = 0;
  Cycle l2_blocked_wb = 0;
  std::uint64_t l2_onsets_mshr = 0;
  std::uint64_t l2_onsets_wb = 0;
  std::uint64_t l2_fills = 0;
  std::uint64_t l2_prefetch_fills = 0;
};

/// The simulated quad-core platform for one run. Strictly single-threaded;
/// distinct instances share nothing.
///
/// Intra-cycle order: due events, cores (ascending id), prefetchers (L1D in
/// core order, then L2), caches (L1D misses to L2 oldest-first, L1D
/// writebacks, L2 misses and writebacks to DRAM), DRAM. Period boundaries of
/// the regulator are events, so a throttle cleared at a boundary lets the core
/// issue in that same cycle.
class System {
 public:
  explicit System(const SystemSetup& setup);
  System(const System&) = delete;
  System& operator=(const System&) = delete;

  /// Runs until the victim finishes its measured iterations, or the limit.
  RunResult run(const StopCondition& stop = {});

  /// Runs exactly `cycles` more cycles, victim or not.
  RunResult run_for(Cycle cycles);

  /// Stops every core from issuing and runs until all in-flight traffic has
  /// left the hierarchy.
  RunResult drain(Cycle extra_cycles);

  // SimModel interface.
  void dispatch(const Event& ev);
  void tick(Cycle now);
  bool busy() const;
  bool done() const;

  Cycle now() const { return events_.now(); }
  EventQueue& events() { return events_; }

  const PlatformConfig& platform() const { return platform_; }
  Core& core(CoreId c) { return cores_.at(c); }
  const Core& core(CoreId c) const { return cores_.at(c); }
  const Cache& l1d(CoreId c) const { return l1d_.at(c); }
  const Cache& l2() const { return l2_; }
  const Dram& dram() const { return dram_; }
  const StridePrefetcher& l1d_prefetcher(CoreId c) const { return l1pf_.at(c); }
  const StridePrefetcher& l2_prefetcher() const { return l2pf_; }
  const Regulator* regulator() const { return regulator_ ? &*regulator_ : nullptr; }
  std::optional<CoreId> victim() const { return victim_; }

  Counters snapshot() const;
  /// Counters at the first post-warmup access of the victim.
  const std::optional<Counters>& window_start() const { return window_start_; }
  std::optional<Cycle> window_start_cycle() const;

  /// Called at the end of every simulated cycle (used by property tests).
  void set_cycle_hook(std::function<void(const System&)> hook) { hook_ = std::move(hook); }

  /// Conservation bookkeeping.
  std::uint64_t l2_reads_sent() const { return l2_reads_sent_; }
  std::uint64_t l2_writes_sent() const { return l2_writes_sent_; }
  std::uint64_t dram_reads_completed() const { return dram_reads_done_; }
  std::uint64_t dram_writes_completed() const { return dram_writes_done_; }
  std::uint64_t prefetch_requests() const { return prefetch_requests_; }

 private:
  struct Outbound {
    MemRequest req;
    Cycle first_try = 0;
  };

  MemRequest make_request(Addr line, ReqKind kind, Source src, CoreId core, Cycle now);
  void l1_fill(CoreId c, Addr line, Cycle now);
  void l2_fill(Addr line, Cycle now);
  void charge(CoreId c, LlcEvent kind, Cycle now);
  bool issuable(const StridePrefetcher& pf) const;
  void tick_cores(Cycle now);
  void tick_prefetchers(Cycle now);
  void tick_caches(Cycle now);

  PlatformConfig platform_;
  EventQueue events_;
  std::vector<Core> cores_;
  std::vector<Cache> l1d_;
  std::vector<StridePrefetcher> l1pf_;
  Cache l2_;
  StridePrefetcher l2pf_;
  Dram dram_;
  std::optional<Regulator> regulator_;

  std::vector<std::deque<Outbound>> l1_out_;
  std::deque<MemRequest> l2_out_;
  std::vector<CoreId> arb_order_;

  std::optional<CoreId> victim_;
  std::optional<Counters> window_start_;
  std::array<CoreCounters, kMaxCores> counters_{};

  std::uint64_t next_id_ = 1;
  std::uint64_t inflight_events_ = 0;
  std::uint64_t l2_reads_sent_ = 0;
  std::uint64_t l2_writes_sent_ = 0;
  std::uint64_t dram_reads_done_ = 0;
  std::uint64_t dram_writes_done_ = 0;
  std::uint64_t prefetch_requests_ = 0;
  std::optional<Cycle> horizon_;
  bool halted_ = false;
  bool draining_ = false;

  std::function<void(const System&)> hook_;
};

}  // namespace cachedos

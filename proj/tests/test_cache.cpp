#include <gtest/gtest.h>

#include <random>
#include <set>

#include "cachedos/cache.hpp"
#include "lru_reference.hpp"
#include "trace_oracles.hpp"

using namespace cachedos;

namespace {

MemRequest rd(Addr line, std::uint64_t id = 1, CoreId core = 0) {
  return MemRequest{id, line, ReqKind::Read, Source::Core, core, 0};
}
MemRequest wr(Addr line, std::uint64_t id = 1, CoreId core = 0) {
  return MemRequest{id, line, ReqKind::Write, Source::Core, core, 0};
}

CacheConfig l2_like(unsigned mshrs, unsigned wb) {
  CacheConfig c;
  c.name = "l2";
  c.geometry = CacheGeometry{512 * 1024, 64, 16, 12};
  c.mshrs = mshrs;
  c.wb_size = wb;
  return c;
}

auto accept_all = [](const WritebackEntry&) { return true; };

}  // namespace

TEST(CacheGeometry, RejectsNonPowerOfTwoSets) {
  EXPECT_THROW((CacheGeometry{3 * 64 * 2, 64, 2, 1}.validate("x")), ConfigError);
  EXPECT_NO_THROW((CacheGeometry{512 * 1024, 64, 16, 12}.validate("x")));
  EXPECT_EQ((CacheGeometry{512 * 1024, 64, 16, 12}.sets()), 512u);
}

TEST(Cache, MicroTraceMatchesHandOracle) {
  const oracle::MicroResult r = oracle::replay_micro_trace();
  EXPECT_TRUE(r.mismatches.empty()) << (r.mismatches.empty() ? "" : r.mismatches.front());
  EXPECT_EQ(r.blocked, oracle::kMicroBlocked);
  EXPECT_EQ(r.blocked_mshr, oracle::kMicroBlockedMshr);
  EXPECT_EQ(r.blocked_wb, oracle::kMicroBlockedWb);
  EXPECT_EQ(r.onsets_mshr, oracle::kMicroOnsetsMshr);
  EXPECT_EQ(r.onsets_wb, oracle::kMicroOnsetsWb);
}

TEST(Cache, TwentyFifthDistinctMissBlocks) {
  Cache c(l2_like(24, 8), 4);
  for (unsigned i = 0; i < 24; ++i) EXPECT_EQ(c.access(rd(i * 64, i), 0, 0).kind, Outcome::MissAllocated);
  EXPECT_EQ(c.access(rd(24 * 64, 24), 0, 0).kind, Outcome::RejectedBlocked);
  EXPECT_TRUE(c.is_blocked());
  EXPECT_EQ(c.block_cause(), BlockCause::MshrFull);
}

TEST(Cache, MergeLeavesOccupancyUnchanged) {
  Cache c(l2_like(24, 8), 4);
  c.access(rd(0x1000, 1), 0, 0);
  EXPECT_EQ(c.access(rd(0x1000, 2), 1, 1).kind, Outcome::MissMerged);
  EXPECT_EQ(c.mshrs_used(), 1u);
  const FillResult f = c.fill_complete(0x1000, 50);
  ASSERT_EQ(f.waiters.size(), 2u);
  EXPECT_EQ(f.waiters[1].requester, 1);
}

TEST(Cache, HitUnderOutstandingMissesUsesHitLatency) {
  Cache c(l2_like(24, 8), 4);
  c.access(rd(0x40), 0, 0);
  c.fill_complete(0x40, 10);
  c.access(rd(0x80), 0, 11);
  const AccessOutcome o = c.access(rd(0x40), 0, 20);
  EXPECT_EQ(o.kind, Outcome::Hit);
  EXPECT_EQ(o.ready, 32u);
}

TEST(Cache, DirtyVictimWithFullWritebackBufferBlocks) {
  CacheConfig cfg = l2_like(24, 1);
  cfg.geometry = CacheGeometry{2 * 64, 64, 1, 1};  // 2 sets, direct mapped
  Cache c(cfg, 1);
  c.access(wr(0x000), 0, 0);
  c.fill_complete(0x000, 1);
  c.access(wr(0x040), 0, 2);
  c.fill_complete(0x040, 3);
  EXPECT_EQ(c.access(rd(0x080), 0, 4).kind, Outcome::MissAllocated);  // reserves the slot
  EXPECT_EQ(c.wb_free(), 0u);
  EXPECT_EQ(c.access(rd(0x0C0), 0, 5).kind, Outcome::RejectedBlocked);
  EXPECT_EQ(c.block_cause(), BlockCause::WritebackFull);
  // A would-be hit is refused too.
  EXPECT_EQ(c.access(rd(0x040), 0, 6).kind, Outcome::RejectedBlocked);
}

TEST(Cache, StaysBlockedUntilBothStructuresHaveRoom) {
  CacheConfig cfg = l2_like(1, 1);
  cfg.geometry = CacheGeometry{2 * 64, 64, 1, 1};
  Cache c(cfg, 1);
  c.access(wr(0x000), 0, 0);
  c.fill_complete(0x000, 1);
  c.access(rd(0x080), 0, 2);                                             // reserves WB for 0x000
  EXPECT_EQ(c.access(rd(0x040), 0, 3).kind, Outcome::RejectedBlocked);  // MSHR full
  c.fill_complete(0x080, 10);                                            // MSHR free, WB now occupied
  EXPECT_TRUE(c.is_blocked());
  c.writeback_drain(12, accept_all);
  EXPECT_FALSE(c.is_blocked());
  EXPECT_EQ(c.blocked_cycles(20), 9u);
}

TEST(Cache, CleanEvictionLeavesWritebackBufferAlone) {
  CacheConfig cfg = l2_like(4, 2);
  cfg.geometry = CacheGeometry{2 * 64, 64, 1, 1};
  Cache c(cfg, 1);
  c.access(rd(0x000), 0, 0);
  c.fill_complete(0x000, 1);
  c.access(rd(0x080), 0, 2);
  c.fill_complete(0x080, 3);
  EXPECT_EQ(c.wb_entries(), 0u);
  EXPECT_EQ(c.stats().dirty_evictions, 0u);
}

TEST(Cache, NeverFullStructuresNeverBlock) {
  Cache c(l2_like(24, 8), 4);
  for (unsigned i = 0; i < 1000; ++i) {
    c.access(rd(i * 64, i), 0, i);
    c.fill_complete(i * 64, i);
  }
  EXPECT_EQ(c.blocked_cycles(2000), 0u);
}

TEST(Cache, WritebacksAreAcceptedWhileBlocked) {
  Cache c(l2_like(1, 2), 1);
  c.access(rd(0x0), 0, 0);
  c.access(rd(0x40), 0, 1);
  ASSERT_TRUE(c.is_blocked());
  EXPECT_EQ(c.accept_writeback(0x80, 0, 2), WritebackAccept::Accepted);
  EXPECT_TRUE(c.dirty(0x80));
}

TEST(Cache, WritebackToPendingLineMarksFillDirty) {
  Cache c(l2_like(4, 2), 2);
  c.access(rd(0x400, 1, 0), 0, 0);
  EXPECT_EQ(c.accept_writeback(0x400, 1, 1), WritebackAccept::Accepted);
  c.fill_complete(0x400, 5);
  EXPECT_TRUE(c.dirty(0x400));
}

TEST(Cache, PartitionConfinesAllocationsToOwnWays) {
  Cache c(l2_like(64, 64), 4);
  c.set_partition(PartitionMap::equal_split(4, 16));
  // Lines that all map to set 0.
  const Addr stride = 512 * 64;
  for (CoreId core = 0; core < 4; ++core) {
    for (unsigned k = 0; k < 10; ++k) {
      const Addr line = (core * 10 + k) * stride;
      c.access(rd(line, k, core), static_cast<int>(core), 0);
      c.fill_complete(line, 1);
      const int way = c.way_of(line);
      ASSERT_GE(way, 0);
      EXPECT_GE(way, static_cast<int>(core * 4));
      EXPECT_LT(way, static_cast<int>(core * 4 + 4));
    }
  }
  // Core 0 owns ways 0..3 and touched 10 lines: exactly its last 4 survive,
  // and every other core's last 4 are untouched.
  for (CoreId core = 0; core < 4; ++core) {
    for (unsigned k = 0; k < 10; ++k) {
      EXPECT_EQ(c.present((core * 10 + k) * stride), k >= 6) << "core " << core << " k " << k;
    }
  }
}

TEST(Cache, PartitionMasksMustBeDisjointAndCovering) {
  Cache c(l2_like(4, 4), 2);
  EXPECT_THROW(c.set_partition(PartitionMap{{0x00FF, 0x01FF}}), ConfigError);
  EXPECT_THROW(c.set_partition(PartitionMap{{0x00FF, 0x0F00}}), ConfigError);
  EXPECT_THROW(c.set_partition(PartitionMap{{0x0000, 0xFFFF}}), ConfigError);
  EXPECT_NO_THROW(c.set_partition(PartitionMap{{0x00FF, 0xFF00}}));
}

TEST(Cache, FillForUnknownLineIsAContractViolation) {
  Cache c(l2_like(4, 4), 1);
  EXPECT_THROW(c.fill_complete(0x40, 1), ContractViolation);
  EXPECT_THROW(c.access(rd(0x41), 0, 1), ContractViolation);
}

TEST(Cache, LruMatchesReferenceModel) { EXPECT_EQ(oracle::lru_divergence(20000, 7), -1); }

TEST(Cache, PrefetchHitsDoNotRefreshRecency) {
  CacheConfig cfg = l2_like(4, 4);
  cfg.geometry = CacheGeometry{2 * 64, 64, 2, 1};  // one set, two ways
  Cache c(cfg, 1);
  c.access(rd(0x000), 0, 0);
  c.fill_complete(0x000, 0);
  c.access(rd(0x040), 0, 1);
  c.fill_complete(0x040, 1);
  c.access(MemRequest{9, 0x000, ReqKind::Prefetch, Source::L2Prefetcher, 0, 2}, -1, 2);
  c.access(rd(0x080), 0, 3);
  c.fill_complete(0x080, 3);
  EXPECT_FALSE(c.present(0x000));
  EXPECT_TRUE(c.present(0x040));
}

TEST(Cache, RandomTrafficKeepsStructuralInvariants) {
  Cache c(l2_like(6, 3), 4);
  std::mt19937 rng(11);
  std::vector<Addr> outstanding;
  std::uint64_t allocated = 0;
  std::uint64_t drained = 0;
  for (Cycle now = 0; now < 20000; ++now) {
    const Addr line = static_cast<Addr>(rng() % 4096) * 64;
    const CoreId core = rng() % 4;
    const ReqKind kind = (rng() % 3 == 0) ? ReqKind::Write : ReqKind::Read;
    const AccessOutcome o = c.access(MemRequest{now, line, kind, Source::Core, core, now}, static_cast<int>(core), now);
    if (o.kind == Outcome::MissAllocated) {
      outstanding.push_back(line);
      ++allocated;
    }
    if (rng() % 3 == 0) c.accept_writeback(static_cast<Addr>(rng() % 4096) * 64, core, now);
    if (!outstanding.empty() && rng() % 2 == 0) {
      const std::size_t k = rng() % outstanding.size();
      c.fill_complete(outstanding[k], now);
      outstanding.erase(outstanding.begin() + static_cast<long>(k));
    }
    if (rng() % 3 == 0 && c.writeback_drain(now, accept_all)) ++drained;
    ASSERT_NO_THROW(c.check_invariants());
    std::set<Addr> lines(outstanding.begin(), outstanding.end());
    ASSERT_EQ(lines.size(), outstanding.size());
    ASSERT_LE(c.mshrs_used(), 6u);
    ASSERT_LE(c.wb_entries() + c.wb_reserved(), 3u);
  }
  EXPECT_EQ(c.stats().misses_allocated, allocated);
  EXPECT_EQ(c.stats().dirty_evictions, drained + c.wb_entries());
}

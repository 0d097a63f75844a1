#pragma once

// Hand-written expectations shared by the unit and acceptance suites.

#include <cstdint>
#include <string>
#include <vector>

#include "cachedos/cache.hpp"

namespace cachedos::oracle {

enum class Step : std::uint8_t { Read, Write, Fill, Drain };

struct TraceRow {
  Cycle at;
  Step step;
  Addr line;
  // For Read/Write: the expected outcome. Fill/Drain rows leave it unused.
  Outcome expect;
  // Blocked flag expected after the row.
  bool blocked_after;
};

/// 2 sets x 2 ways, 64 B lines, 1 MSHR, 1 writeback slot, 1-cycle hits.
/// Set 0 holds even line indices (0x000, 0x080, 0x100, 0x180), set 1 odd.
inline CacheConfig micro_cache() {
  CacheConfig c;
  c.name = "micro";
  c.geometry = CacheGeometry{256, 64, 2, 1};
  c.mshrs = 1;
  c.wb_size = 1;
  return c;
}

// cycle  step   line   outcome        blocked after
//  1     write  0x000  MissAllocated  no   MSHR 1/1, invalid victim way
//  2     read   0x040  Rejected       yes  no MSHR free: onset (MSHR)
//  3     read   0x000  Rejected       yes  even a pending line is refused
//  5     fill   0x000                 no   installed dirty; MSHR and WB free
//  6     read   0x000  Hit            no   ready at 7
//  7     write  0x080  MissAllocated  no   second way of set 0
//  9     fill   0x080                 no   set 0 = {0x000 dirty, 0x080 dirty}
// 10     read   0x100  MissAllocated  no   LRU victim 0x000 dirty: WB slot reserved
// 12     fill   0x100                 no   0x000 moves into the WB (1/1)
// 13     read   0x180  Rejected       yes  LRU victim 0x080 dirty, WB full: onset (WB)
// 14     read   0x100  Rejected       yes  a hit, refused while blocked
// 16     drain                        no   WB empties; both structures free
// 17     read   0x180  MissAllocated  no   reserves the WB slot for 0x080
// 18     read   0x100  Hit            no   hit under a full MSHR file
// 19     read   0x0C0  Rejected       yes  no MSHR free: onset (MSHR)
// 20     fill   0x180                 yes  MSHR free, but 0x080 fills the WB
// 22     drain                        no   both free again
//
// Blocked intervals: [2,5) + [13,16) + [19,22) = 3 + 3 + 3 = 9 cycles,
// of which MSHR-onset 6 and WB-onset 3; onsets MSHR 2, WB 1.
inline std::vector<TraceRow> micro_trace() {
  using O = Outcome;
  return {
      {1, Step::Write, 0x000, O::MissAllocated, false},  {2, Step::Read, 0x040, O::RejectedBlocked, true},
      {3, Step::Read, 0x000, O::RejectedBlocked, true},  {5, Step::Fill, 0x000, O::Hit, false},
      {6, Step::Read, 0x000, O::Hit, false},             {7, Step::Write, 0x080, O::MissAllocated, false},
      {9, Step::Fill, 0x080, O::Hit, false},             {10, Step::Read, 0x100, O::MissAllocated, false},
      {12, Step::Fill, 0x100, O::Hit, false},            {13, Step::Read, 0x180, O::RejectedBlocked, true},
      {14, Step::Read, 0x100, O::RejectedBlocked, true}, {16, Step::Drain, 0, O::Hit, false},
      {17, Step::Read, 0x180, O::MissAllocated, false},  {18, Step::Read, 0x100, O::Hit, false},
      {19, Step::Read, 0x0C0, O::RejectedBlocked, true}, {20, Step::Fill, 0x180, O::Hit, true},
      {22, Step::Drain, 0, O::Hit, false},
  };
}

inline constexpr Cycle kMicroBlocked = 9;
inline constexpr Cycle kMicroBlockedMshr = 6;
inline constexpr Cycle kMicroBlockedWb = 3;
inline constexpr std::uint64_t kMicroOnsetsMshr = 2;
inline constexpr std::uint64_t kMicroOnsetsWb = 1;
inline constexpr Cycle kMicroEnd = 22;

struct MicroResult {
  std::vector<std::string> mismatches;
  Cycle blocked = 0, blocked_mshr = 0, blocked_wb = 0;
  std::uint64_t onsets_mshr = 0, onsets_wb = 0;
};

/// Replays micro_trace() and reports every row that disagrees.
inline MicroResult replay_micro_trace() {
  Cache c(micro_cache(), 1);
  MicroResult r;
  std::uint64_t id = 0;
  for (const TraceRow& row : micro_trace()) {
    const std::string where = "cycle " + std::to_string(row.at) + ": ";
    switch (row.step) {
      case Step::Read:
      case Step::Write: {
        const MemRequest req{++id, row.line, row.step == Step::Read ? ReqKind::Read : ReqKind::Write,
                             Source::Core, 0, row.at};
        const AccessOutcome o = c.access(req, 0, row.at);
        if (o.kind != row.expect) r.mismatches.push_back(where + "unexpected outcome");
        if (o.kind == Outcome::Hit && o.ready != row.at + 1) r.mismatches.push_back(where + "hit latency");
        break;
      }
      case Step::Fill:
        c.fill_complete(row.line, row.at);
        break;
      case Step::Drain:
        if (!c.writeback_drain(row.at, [](const WritebackEntry&) { return true; })) {
          r.mismatches.push_back(where + "nothing to drain");
        }
        break;
    }
    if (c.is_blocked() != row.blocked_after) r.mismatches.push_back(where + "blocked flag");
  }
  r.blocked = c.blocked_cycles(kMicroEnd);
  r.blocked_mshr = c.blocked_cycles(kMicroEnd, BlockCause::MshrFull);
  r.blocked_wb = c.blocked_cycles(kMicroEnd, BlockCause::WritebackFull);
  r.onsets_mshr = c.stats().onsets_mshr;
  r.onsets_wb = c.stats().onsets_wb;
  return r;
}

}  // namespace cachedos::oracle

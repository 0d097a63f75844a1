#include "cachedos/cache.hpp"

#include <algorithm>
#include <bit>
#include <unordered_set>

namespace cachedos {

void CacheGeometry::validate(const std::string& name) const {
  if (line_bytes == 0 || !is_pow2(line_bytes)) throw ConfigError(name + ": line_bytes must be a power of two");
  if (ways == 0 || ways > 32) throw ConfigError(name + ": ways must be in 1..32");
  if (size_bytes == 0 || size_bytes % (std::uint64_t{ways} * line_bytes) != 0) {
    throw ConfigError(name + ": size_bytes must be a multiple of ways*line_bytes");
  }
  if (!is_pow2(sets())) throw ConfigError(name + ": number of sets must be a power of two");
  if (hit_latency == 0) throw ConfigError(name + ": hit_latency must be at least 1 cycle");
}

PartitionMap PartitionMap::all_ways(unsigned cores, unsigned ways) {
  std::uint32_t all = ways >= 32 ? 0xFFFFFFFFu : ((1u << ways) - 1);
  return PartitionMap{std::vector<std::uint32_t>(cores, all)};
}

PartitionMap PartitionMap::equal_split(unsigned cores, unsigned ways) {
  if (cores == 0 || ways % cores != 0) throw ConfigError("equal partition needs ways divisible by the core count");
  const unsigned per = ways / cores;
  PartitionMap m;
  for (unsigned c = 0; c < cores; ++c) {
    std::uint32_t mask = per >= 32 ? 0xFFFFFFFFu : ((1u << per) - 1);
    m.masks.push_back(mask << (c * per));
  }
  return m;
}

void PartitionMap::validate_disjoint(unsigned ways) const {
  const std::uint32_t all = ways >= 32 ? 0xFFFFFFFFu : ((1u << ways) - 1);
  std::uint32_t seen = 0;
  for (std::size_t c = 0; c < masks.size(); ++c) {
    const std::uint32_t m = masks[c];
    if (m == 0) throw ConfigError("partition mask for core " + std::to_string(c) + " is empty");
    if (m & ~all) throw ConfigError("partition mask for core " + std::to_string(c) + " names a way that does not exist");
    if (seen & m) throw ConfigError("partition mask for core " + std::to_string(c) + " overlaps another core");
    seen |= m;
  }
  if (seen != all) throw ConfigError("partition masks do not cover every way");
}

bool PartitionMap::is_identity(unsigned ways) const {
  const std::uint32_t all = ways >= 32 ? 0xFFFFFFFFu : ((1u << ways) - 1);
  return std::all_of(masks.begin(), masks.end(), [&](std::uint32_t m) { return m == all; });
}

Cache::Cache(CacheConfig cfg, unsigned cores)
    : cfg_(std::move(cfg)),
      line_bytes_(cfg_.geometry.line_bytes),
      ways_(cfg_.geometry.ways),
      partition_(PartitionMap::all_ways(cores, cfg_.geometry.ways)) {
  cfg_.geometry.validate(cfg_.name);
  if (cfg_.mshrs == 0) throw ConfigError(cfg_.name + ": mshrs must be at least 1");
  if (cfg_.wb_size == 0) throw ConfigError(cfg_.name + ": writeback buffer must hold at least 1 entry");
  set_mask_ = cfg_.geometry.sets() - 1;
  lines_.resize(std::size_t{cfg_.geometry.sets()} * ways_);
  mshrs_.resize(cfg_.mshrs);
}

std::uint32_t Cache::mask_for(CoreId core) const {
  if (core < partition_.masks.size()) return partition_.masks[core];
  return ways_ >= 32 ? 0xFFFFFFFFu : ((1u << ways_) - 1);
}

int Cache::find_way(Addr line) const {
  const std::size_t base = std::size_t{set_of(line)} * ways_;
  for (unsigned w = 0; w < ways_; ++w) {
    const Line& l = lines_[base + w];
    if (l.valid && l.tag == line) return static_cast<int>(base + w);
  }
  return -1;
}

int Cache::find_mshr(Addr line) const {
  for (std::size_t i = 0; i < mshrs_.size(); ++i) {
    if (mshrs_[i].valid && mshrs_[i].line == line) return static_cast<int>(i);
  }
  return -1;
}

int Cache::way_of(Addr line) const {
  const int idx = find_way(line);
  return idx < 0 ? -1 : idx % static_cast<int>(ways_);
}

bool Cache::dirty(Addr line) const {
  const int idx = find_way(line);
  return idx >= 0 && lines_[idx].dirty;
}

int Cache::pick_victim(unsigned set, CoreId core) const {
  const std::uint32_t mask = mask_for(core);
  const std::size_t base = std::size_t{set} * ways_;
  int best = -1;
  for (unsigned w = 0; w < ways_; ++w) {
    if (!(mask & (1u << w))) continue;
    const Line& l = lines_[base + w];
    if (l.claim >= 0) continue;
    if (!l.valid) return static_cast<int>(base + w);
    if (best < 0 || l.lru < lines_[best].lru) best = static_cast<int>(base + w);
  }
  return best;
}

void Cache::block(BlockCause cause, Cycle now) {
  if (blocked_) return;
  blocked_ = true;
  cause_ = cause;
  blocked_since_ = now;
  if (cause == BlockCause::MshrFull) {
    ++stats_.onsets_mshr;
  } else {
    ++stats_.onsets_wb;
  }
}

void Cache::try_unblock(Cycle now) {
  if (!blocked_ || mshrs_free() == 0 || wb_free() == 0) return;
  const Cycle span = now - blocked_since_;
  blocked_total_ += span;
  (cause_ == BlockCause::MshrFull ? blocked_mshr_ : blocked_wb_) += span;
  blocked_ = false;
  cause_ = BlockCause::None;
}

Cycle Cache::blocked_cycles(Cycle now) const {
  return blocked_total_ + (blocked_ ? now - blocked_since_ : 0);
}

Cycle Cache::blocked_cycles(Cycle now, BlockCause cause) const {
  Cycle base = cause == BlockCause::MshrFull ? blocked_mshr_ : blocked_wb_;
  if (blocked_ && cause_ == cause) base += now - blocked_since_;
  return base;
}

void Cache::make_dirty(int idx, CoreId dirtier) {
  Line& l = lines_[idx];
  if (!l.dirty && l.claim >= 0) {
    // The line is already promised as a victim for a pending fill. Its
    // eviction now needs a writeback slot; without one the fill bypasses.
    Mshr& m = mshrs_[l.claim];
    if (!m.reserved) {
      if (wb_free() > 0) {
        m.reserved = true;
        ++wb_reserved_;
      } else {
        m.way = -1;
        l.claim = -1;
      }
    }
  }
  l.dirty = true;
  l.owner = dirtier;
}

AccessOutcome Cache::access(const MemRequest& req, int requester, Cycle now) {
  if (req.line % line_bytes_ != 0) throw ContractViolation(cfg_.name + ": unaligned request");
  ++stats_.accesses;
  if (blocked_) {
    ++stats_.rejected;
    return {Outcome::RejectedBlocked, 0};
  }

  if (const int idx = find_way(req.line); idx >= 0) {
    ++stats_.hits;
    // Prefetch probes that hit leave replacement state alone.
    if (req.kind != ReqKind::Prefetch) touch(lines_[idx]);
    if (req.kind == ReqKind::Write) make_dirty(idx, req.core);
    return {Outcome::Hit, now + cfg_.geometry.hit_latency};
  }

  if (const int m = find_mshr(req.line); m >= 0) {
    ++stats_.misses_merged;
    mshrs_[m].waiters.push_back({requester, req.id, req.kind});
    if (req.kind == ReqKind::Write) {
      mshrs_[m].write = true;
      mshrs_[m].dirtier = req.core;
    }
    return {Outcome::MissMerged, 0};
  }

  if (mshr_used_ == cfg_.mshrs) {
    block(BlockCause::MshrFull, now);
    ++stats_.rejected;
    return {Outcome::RejectedBlocked, 0};
  }

  const int victim = pick_victim(set_of(req.line), req.core);
  const bool needs_wb = victim >= 0 && lines_[victim].valid && lines_[victim].dirty;
  if (needs_wb && wb_free() == 0) {
    block(BlockCause::WritebackFull, now);
    ++stats_.rejected;
    return {Outcome::RejectedBlocked, 0};
  }

  int slot = 0;
  while (mshrs_[slot].valid) ++slot;
  Mshr& m = mshrs_[slot];
  m = Mshr{};
  m.valid = true;
  m.line = req.line;
  m.kind = req.kind;
  m.owner = req.core;
  m.dirtier = req.core;
  m.alloc = now;
  m.write = req.kind == ReqKind::Write;
  m.waiters.push_back({requester, req.id, req.kind});
  m.way = victim;
  if (victim >= 0) lines_[victim].claim = slot;
  if (needs_wb) {
    m.reserved = true;
    ++wb_reserved_;
  }
  ++mshr_used_;
  ++stats_.misses_allocated;
  return {Outcome::MissAllocated, 0};
}

FillResult Cache::fill_complete(Addr line, Cycle now) {
  const int slot = find_mshr(line);
  if (slot < 0) throw ContractViolation(cfg_.name + ": fill for a line with no outstanding MSHR");
  Mshr& m = mshrs_[slot];

  FillResult out;
  out.kind = m.kind;
  out.owner = m.owner;
  out.waiters = std::move(m.waiters);

  if (m.way >= 0) {
    Line& l = lines_[m.way];
    if (l.valid && l.dirty) {
      // Capacity was reserved at allocation (or when the victim turned dirty).
      wb_.push_back({l.tag, l.owner, now});
      ++stats_.dirty_evictions;
    }
    if (m.reserved) --wb_reserved_;
    l.valid = true;
    l.tag = line;
    l.claim = -1;
    l.dirty = m.write || m.dirty_on_fill;
    l.owner = m.write ? m.dirtier : (m.dirty_on_fill ? m.dirtier : m.owner);
    touch(l);
    out.installed = true;
  } else if (m.reserved) {
    --wb_reserved_;
  }

  ++stats_.fills;
  if (m.kind == ReqKind::Prefetch) ++stats_.prefetch_fills;
  m = Mshr{};
  --mshr_used_;
  try_unblock(now);
  return out;
}

WritebackAccept Cache::accept_writeback(Addr line, CoreId dirtier, Cycle now) {
  if (line % line_bytes_ != 0) throw ContractViolation(cfg_.name + ": unaligned writeback");

  if (const int idx = find_way(line); idx >= 0) {
    Line& l = lines_[idx];
    if (!l.dirty && l.claim >= 0 && !mshrs_[l.claim].reserved && wb_free() == 0) {
      // Dirtying a promised victim would need a slot we don't have; the
      // pending fill would lose its way. Refuse and let the sender retry.
      return WritebackAccept::Rejected;
    }
    make_dirty(idx, dirtier);
    touch(l);
    ++stats_.writebacks_received;
    return WritebackAccept::Accepted;
  }

  if (const int m = find_mshr(line); m >= 0) {
    mshrs_[m].dirty_on_fill = true;
    mshrs_[m].dirtier = dirtier;
    ++stats_.writebacks_received;
    return WritebackAccept::Accepted;
  }

  const int victim = pick_victim(set_of(line), dirtier);
  if (victim < 0) {
    // Nowhere to put it: pass it straight through the writeback buffer.
    if (wb_free() == 0) return WritebackAccept::Rejected;
    wb_.push_back({line, dirtier, now});
    ++stats_.dirty_evictions;
    ++stats_.writebacks_received;
    return WritebackAccept::Accepted;
  }

  Line& v = lines_[victim];
  if (v.valid && v.dirty) {
    if (wb_free() == 0) return WritebackAccept::Rejected;
    wb_.push_back({v.tag, v.owner, now});
    ++stats_.dirty_evictions;
  }
  v.valid = true;
  v.tag = line;
  v.dirty = true;
  v.owner = dirtier;
  touch(v);
  ++stats_.writebacks_received;
  return WritebackAccept::Accepted;
}

void Cache::set_partition(const PartitionMap& map) {
  if (!map.is_identity(ways_)) map.validate_disjoint(ways_);
  partition_ = map;
}

std::vector<Addr> Cache::pending_lines() const {
  std::vector<Addr> out;
  for (const Mshr& m : mshrs_) {
    if (m.valid) out.push_back(m.line);
  }
  return out;
}

void Cache::check_invariants() const {
  unsigned used = 0;
  unsigned reserved = 0;
  std::unordered_set<Addr> seen;
  for (std::size_t i = 0; i < mshrs_.size(); ++i) {
    const Mshr& m = mshrs_[i];
    if (!m.valid) continue;
    ++used;
    if (m.reserved) ++reserved;
    if (!seen.insert(m.line).second) throw ContractViolation(cfg_.name + ": two MSHRs track the same line");
    if (m.way >= 0 && lines_[m.way].claim != static_cast<int>(i)) {
      throw ContractViolation(cfg_.name + ": MSHR claim does not match its way");
    }
  }
  if (used != mshr_used_) throw ContractViolation(cfg_.name + ": MSHR occupancy counter drifted");
  if (used > cfg_.mshrs) throw ContractViolation(cfg_.name + ": MSHR occupancy exceeds capacity");
  if (reserved != wb_reserved_) throw ContractViolation(cfg_.name + ": writeback reservation counter drifted");
  if (wb_.size() + wb_reserved_ > cfg_.wb_size) throw ContractViolation(cfg_.name + ": writeback buffer over capacity");
  for (const Line& l : lines_) {
    if (l.claim >= 0 && (!mshrs_[l.claim].valid)) throw ContractViolation(cfg_.name + ": stale way claim");
  }
  // Capacity only grows through fills and drains, both of which re-evaluate
  // the unblock rule.
  if (blocked_ && mshrs_free() > 0 && wb_free() > 0) {
    throw ContractViolation(cfg_.name + ": blocked with both MSHR and writeback capacity free");
  }
}

}  // namespace cachedos

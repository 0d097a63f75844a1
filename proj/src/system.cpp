#include "cachedos/system.hpp"

#include <algorithm>

namespace cachedos {

PlatformConfig PlatformConfig::baseline() {
  PlatformConfig p;
  p.l1d.name = "l1d";
  p.l1d.geometry = CacheGeometry{32 * 1024, 64, 4, 2};
  p.l1d.mshrs = 3;
  p.l1d.wb_size = 3;
  p.l1d_prefetch = PrefetcherConfig{true, 5, 5};
  p.l2.name = "l2";
  p.l2.geometry = CacheGeometry{512 * 1024, 64, 16, 12};
  p.l2.mshrs = 24;
  p.l2.wb_size = 8;
  p.l2_prefetch = PrefetcherConfig{true, 8, 8};
  return p;
}

void PlatformConfig::validate() const {
  if (cores == 0 || cores > kMaxCores) throw ConfigError("core count must be in 1.." + std::to_string(kMaxCores));
  if (clock_hz == 0) throw ConfigError("clock_hz must be positive");
  if (!is_pow2(line_bytes)) throw ConfigError("line_bytes must be a power of two");
  if (l1d.geometry.line_bytes != line_bytes || l2.geometry.line_bytes != line_bytes) {
    throw ConfigError("cache line sizes must match line_bytes");
  }
  l1d.geometry.validate(l1d.name);
  l2.geometry.validate(l2.name);
  dram.validate();
}

System::System(const SystemSetup& setup)
    : platform_(setup.platform),
      l2_(setup.platform.l2, setup.platform.cores),
      l2pf_(setup.platform.l2_prefetch, setup.platform.cores, setup.platform.line_bytes),
      dram_(setup.platform.dram, setup.platform.line_bytes),
      l1_out_(setup.platform.cores) {
  platform_.validate();
  const unsigned n = platform_.cores;

  std::vector<WorkloadSpec> specs;
  std::vector<CoreId> owners;
  for (CoreId c = 0; c < kMaxCores; ++c) {
    const auto& w = setup.workloads[c];
    if (!w) continue;
    if (c >= n) throw ConfigError("workload assigned to core " + std::to_string(c) + " beyond the core count");
    w->validate();
    if (w->role == Role::Victim) {
      if (victim_) throw ConfigError("exactly one victim is allowed");
      victim_ = c;
    }
    specs.push_back(*w);
    owners.push_back(c);
  }
  const std::vector<Addr> bases = disjoint_layout(specs);

  std::vector<std::optional<Workload>> loads(n);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    WorkloadSpec s = specs[i];
    s.base_addr = bases[i];
    loads[owners[i]].emplace(s);
  }
  cores_.reserve(n);
  l1d_.reserve(n);
  l1pf_.reserve(n);
  for (CoreId c = 0; c < n; ++c) {
    cores_.emplace_back(c, loads[c]);
    CacheConfig l1 = platform_.l1d;
    l1.name = platform_.l1d.name + std::to_string(c);
    l1d_.emplace_back(l1, 1);
    l1pf_.emplace_back(platform_.l1d_prefetch, 1, platform_.line_bytes);
  }
  if (victim_) {
    const WorkloadSpec& v = *setup.workloads[*victim_];
    cores_[*victim_].mark_issue_of(v.warmup_iterations * v.accesses_per_pass());
  }

  if (setup.partition) l2_.set_partition(*setup.partition);
  if (setup.regulation) {
    regulator_.emplace(*setup.regulation, n, platform_.clock_hz);
    events_.schedule({regulator_->period(), Target::Regulator, 0, 0, 0});
  }
}

MemRequest System::make_request(Addr line, ReqKind kind, Source src, CoreId core, Cycle now) {
  return MemRequest{next_id_++, line, kind, src, core, now};
}

void System::charge(CoreId c, LlcEvent kind, Cycle now) {
  if (kind == LlcEvent::Miss) {
    ++counters_[c].llc_reads;
  } else {
    ++counters_[c].llc_writebacks;
  }
  if (regulator_ && regulator_->on_llc_event(c, kind, now)) cores_[c].apply_throttle(true);
}

RunResult System::run(const StopCondition& stop) {
  if (!victim_) throw ConfigError("a run needs a victim");
  return run_until(events_, *this, stop);
}

RunResult System::run_for(Cycle cycles) {
  horizon_ = events_.now() + cycles;
  const RunResult r = run_until(events_, *this, StopCondition{*horizon_ + 1});
  horizon_.reset();
  return r;
}

RunResult System::drain(Cycle extra_cycles) {
  halted_ = true;
  draining_ = true;
  const RunResult r = run_until(events_, *this, StopCondition{events_.now() + extra_cycles});
  draining_ = false;
  return r;
}

bool System::done() const {
  if (draining_) {
    if (inflight_events_ != 0 || !l2_out_.empty() || dram_.has_work()) return false;
    if (l2_.mshrs_used() != 0 || l2_.wb_entries() != 0) return false;
    for (CoreId c = 0; c < cores_.size(); ++c) {
      if (!l1_out_[c].empty() || l1d_[c].mshrs_used() != 0 || l1d_[c].wb_entries() != 0) return false;
    }
    return true;
  }
  if (horizon_) return events_.now() >= *horizon_;
  return victim_ && cores_[*victim_].finished();
}

bool System::issuable(const StridePrefetcher& pf) const {
  if (halted_) return false;
  return std::any_of(pf.queue().begin(), pf.queue().end(),
                     [&](const PrefetchCandidate& c) { return !cores_[c.owner].throttled(); });
}

bool System::busy() const {
  for (CoreId c = 0; c < cores_.size(); ++c) {
    if (!halted_ && cores_[c].can_issue()) return true;
    if (!l1_out_[c].empty() || l1d_[c].wb_entries() != 0) return true;
    if (issuable(l1pf_[c])) return true;
  }
  return issuable(l2pf_) || !l2_out_.empty() || l2_.wb_entries() != 0 || dram_.has_work();
}

void System::dispatch(const Event& ev) {
  const Cycle now = events_.now();
  switch (ev.target) {
    case Target::Core:
      --inflight_events_;
      cores_.at(ev.index).load_complete(ev.payload, now);
      break;
    case Target::L1D:
      --inflight_events_;
      l1_fill(ev.index, ev.payload, now);
      break;
    case Target::L2:
      --inflight_events_;
      ++dram_reads_done_;
      l2_fill(ev.payload, now);
      break;
    case Target::Dram:
      --inflight_events_;
      ++dram_writes_done_;
      break;
    case Target::Regulator:
      regulator_->period_boundary(now);
      for (Core& c : cores_) c.apply_throttle(false);
      events_.schedule({now + regulator_->period(), Target::Regulator, 0, 0, 0});
      break;
    case Target::Control:
      break;
  }
}

void System::l1_fill(CoreId c, Addr line, Cycle now) {
  const FillResult res = l1d_[c].fill_complete(line, now);
  ++counters_[c].l1_fills;
  if (res.kind == ReqKind::Prefetch) ++counters_[c].l1_prefetch_fills;
  for (const Waiter& w : res.waiters) {
    if (w.requester >= 0 && w.kind == ReqKind::Read) cores_[c].load_complete(w.request_id, now);
  }
}

void System::l2_fill(Addr line, Cycle now) {
  const FillResult res = l2_.fill_complete(line, now);
  for (const Waiter& w : res.waiters) {
    if (w.requester >= 0) l1_fill(static_cast<CoreId>(w.requester), line, now);
  }
}

void System::tick(Cycle now) {
  tick_cores(now);
  if (victim_ && !window_start_ && cores_[*victim_].marked_cycle()) window_start_ = snapshot();
  tick_prefetchers(now);
  tick_caches(now);
  if (auto done = dram_.tick(now)) {
    ++inflight_events_;
    events_.schedule({done->done, done->write ? Target::Dram : Target::L2, 0, done->req.line, 0});
  }
  if (hook_) hook_(*this);
}

void System::tick_cores(Cycle now) {
  if (halted_) return;
  const unsigned lb = platform_.line_bytes;
  for (CoreId c = 0; c < cores_.size(); ++c) {
    const auto rec = cores_[c].tick(now, [&](const Access& a, std::uint64_t id) {
      const bool load = a.op == Op::Load;
      MemRequest r{id, line_of(a.addr, lb), load ? ReqKind::Read : ReqKind::Write, Source::Core, c, now};
      const AccessOutcome o = l1d_[c].access(r, static_cast<int>(c), now);
      if (o.kind == Outcome::Hit && load) {
        ++inflight_events_;
        events_.schedule({o.ready, Target::Core, c, id, 0});
      } else if (o.kind == Outcome::MissAllocated) {
        // Write-allocate: a store miss fetches the line like a load.
        r.id = next_id_++;
        r.kind = ReqKind::Read;
        l1_out_[c].push_back({r, now});
      }
      return o;
    });
    if (rec && rec->outcome != Outcome::RejectedBlocked) {
      l1pf_[c].observe(0, rec->access.addr, c, [&](Addr l) { return l1d_[c].pending(l); });
    }
  }
}

void System::tick_prefetchers(Cycle now) {
  if (halted_) return;
  auto allowed = [&](CoreId owner) { return !cores_[owner].throttled(); };
  for (CoreId c = 0; c < cores_.size(); ++c) {
    l1pf_[c].drain_one(allowed, [&](const PrefetchCandidate& cand) {
      const MemRequest r = make_request(cand.line, ReqKind::Prefetch, Source::L1Prefetcher, c, now);
      const AccessOutcome o = l1d_[c].access(r, -1, now);
      if (o.kind == Outcome::MissAllocated) {
        ++prefetch_requests_;
        l1_out_[c].push_back({r, now});
      }
      return o.kind;
    });
  }
  l2pf_.drain_one(allowed, [&](const PrefetchCandidate& cand) {
    const MemRequest r = make_request(cand.line, ReqKind::Prefetch, Source::L2Prefetcher, cand.owner, now);
    const AccessOutcome o = l2_.access(r, -1, now);
    if (o.kind == Outcome::MissAllocated) {
      ++prefetch_requests_;
      l2_out_.push_back(r);
      charge(cand.owner, LlcEvent::Miss, now);
    }
    return o.kind;
  });
}

void System::tick_caches(Cycle now) {
  // L1D misses to L2: the request waiting longest goes first, ties by core id.
  arb_order_.clear();
  for (CoreId c = 0; c < cores_.size(); ++c) {
    if (!l1_out_[c].empty()) arb_order_.push_back(c);
  }
  std::sort(arb_order_.begin(), arb_order_.end(), [&](CoreId a, CoreId b) {
    const Cycle ta = l1_out_[a].front().first_try;
    const Cycle tb = l1_out_[b].front().first_try;
    return ta != tb ? ta < tb : a < b;
  });
  for (CoreId c : arb_order_) {
    MemRequest r = l1_out_[c].front().req;
    r.kind = ReqKind::Read;
    const AccessOutcome o = l2_.access(r, static_cast<int>(c), now);
    if (o.kind == Outcome::RejectedBlocked) continue;
    l1_out_[c].pop_front();
    CoreCounters& k = counters_[c];
    ++k.l2_accesses;
    if (o.kind == Outcome::Hit) {
      ++k.l2_hits;
      ++inflight_events_;
      events_.schedule({o.ready, Target::L1D, c, r.line, 0});
    } else {
      ++k.l2_misses;
      if (o.kind == Outcome::MissAllocated) {
        l2_out_.push_back(r);
        charge(c, LlcEvent::Miss, now);
      }
    }
    l2pf_.observe(c, r.line, c, [&](Addr l) { return l2_.pending(l); });
  }

  for (CoreId c = 0; c < cores_.size(); ++c) {
    l1d_[c].writeback_drain(now, [&](const WritebackEntry& e) {
      return l2_.accept_writeback(e.line, e.owner, now) == WritebackAccept::Accepted;
    });
  }

  if (!l2_out_.empty() && dram_.enqueue(l2_out_.front(), false, now) == EnqueueResult::Accepted) {
    l2_out_.pop_front();
    ++l2_reads_sent_;
  }

  const auto wb = l2_.writeback_drain(now, [&](const WritebackEntry& e) {
    const MemRequest r = make_request(e.line, ReqKind::Write, Source::Core, e.owner, now);
    return dram_.enqueue(r, true, now) == EnqueueResult::Accepted;
  });
  if (wb) {
    ++l2_writes_sent_;
    charge(wb->owner, LlcEvent::Writeback, now);
  }
}

Counters System::snapshot() const {
  Counters s;
  const Cycle now = events_.now();
  s.cycle = now;
  s.core = counters_;
  if (regulator_) {
    for (CoreId c = 0; c < cores_.size(); ++c) s.core[c].throttle_events = regulator_->core(c).throttle_events;
  }
  s.l2_blocked = l2_.blocked_cycles(now);
  s.l2_blocked_mshr = l2_.blocked_cycles(now, BlockCause::MshrFull);
  s.l2_blocked_wb = l2_.blocked_cycles(now, BlockCause::WritebackFull);
  s.l2_onsets_mshr = l2_.stats().onsets_mshr;
  s.l2_onsets_wb = l2_.stats().onsets_wb;
  s.l2_fills = l2_.stats().fills;
  s.l2_prefetch_fills = l2_.stats().prefetch_fills;
  return s;
}

std::optional<Cycle> System::window_start_cycle() const {
  if (!window_start_) return std::nullopt;
  return window_start_->cycle;
}

}  // namespace cachedos

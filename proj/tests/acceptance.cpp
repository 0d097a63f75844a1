// Acceptance suite. Runs every criterion (or the ones named on the command
// line), prints one PASS/FAIL line each and exits non-zero on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cachedos/harness.hpp"
#include "lru_reference.hpp"
#include "trace_oracles.hpp"

using namespace cachedos;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Victim BwRead over 96 KB on core 0, BwWrite attackers over 2 MB.
ScenarioConfig attack_scenario(unsigned iterations, const std::string& extra = "") {
  std::string text =
      "scenario.id = acceptance\n"
      "core0.role = victim\ncore0.kind = bwread\ncore0.working_set = 96K\ncore0.warmup = 1\n"
      "core0.iterations = " + std::to_string(iterations) + "\n"
      "core1.role = attacker\ncore1.kind = bwwrite\ncore1.working_set = 2M\n" + extra;
  return parse_config(text, "acceptance");
}

RunPoint point(const ScenarioConfig& c, unsigned attackers) {
  RunPoint p = base_point(c);
  p.attackers = attackers;
  return p;
}

bool completed(const RunMetrics& m) { return m.status == RunStatus::Completed; }

Verdict a1() {
  const oracle::MicroResult r = oracle::replay_micro_trace();
  Verdict v;
  v.pass = r.mismatches.empty() && r.blocked == oracle::kMicroBlocked && r.blocked_mshr == oracle::kMicroBlockedMshr &&
           r.blocked_wb == oracle::kMicroBlockedWb && r.onsets_mshr == oracle::kMicroOnsetsMshr &&
           r.onsets_wb == oracle::kMicroOnsetsWb;
  v.detail = "blocked=" + std::to_string(r.blocked) + " (expect " + std::to_string(oracle::kMicroBlocked) +
             "), mismatches=" + std::to_string(r.mismatches.size());
  if (!r.mismatches.empty()) v.detail += ", first: " + r.mismatches.front();
  return v;
}

// Shared by A2 and A8.
std::map<std::string, RunMetrics>& prefetch_runs() {
  static std::map<std::string, RunMetrics> runs = [] {
    std::map<std::string, RunMetrics> out;
    const ScenarioConfig c = attack_scenario(40);
    for (const char* sel : {"none", "l1d", "l2", "l1d,l2"}) {
      RunPoint p = point(c, 3);
      p.prefetch = PrefetchSel::parse(sel);
      out[p.prefetch.label()] = run_scenario(c, p);
    }
    return out;
  }();
  return runs;
}

Verdict a2() {
  auto& r = prefetch_runs();
  const double none = static_cast<double>(r["none"].victim_cycles);
  const double l1d = static_cast<double>(r["l1d"].victim_cycles);
  const double l2 = static_cast<double>(r["l2"].victim_cycles);
  const double both = static_cast<double>(r["l1d+l2"].victim_cycles);
  Verdict v;
  const bool ok = std::all_of(r.begin(), r.end(), [](const auto& kv) { return completed(kv.second); });
  v.pass = ok && none < l1d && none < l2 && l1d < both && l2 < both && both >= 2.0 * none;
  v.detail = "victim cycles none=" + fmt("%.0f", none) + " l1d=" + fmt("%.0f", l1d) + " l2=" + fmt("%.0f", l2) +
             " l1d+l2=" + fmt("%.0f", both) + " ratio(l1d+l2/none)=" + fmt("%.2f", both / none) + " (need >= 2.00)";
  return v;
}

Verdict a3() {
  const ScenarioConfig c = attack_scenario(40);
  std::vector<RunMetrics> rows;
  for (unsigned wb : {4u, 8u, 16u, 32u, 64u}) {
    RunPoint p = point(c, 3);
    p.wb_size = wb;
    rows.push_back(measure(c, p, false));
  }
  Verdict v;
  v.pass = std::all_of(rows.begin(), rows.end(), completed);
  std::string runtimes, blocked;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) {
      v.pass = v.pass && rows[i].victim_cycles <= rows[i - 1].victim_cycles;
      v.pass = v.pass && rows[i].l2_blocked_cycles <= rows[i - 1].l2_blocked_cycles;
      runtimes += ",";
      blocked += ",";
    }
    runtimes += std::to_string(rows[i].victim_cycles);
    blocked += std::to_string(rows[i].l2_blocked_cycles);
  }
  const double frac = rows[0].l2_blocked_cycles == 0
                          ? 0.0
                          : static_cast<double>(rows.back().l2_blocked_cycles) / static_cast<double>(rows[0].l2_blocked_cycles);
  v.pass = v.pass && frac <= 0.20;
  v.detail = "wb 4..64 victim cycles [" + runtimes + "] blocked [" + blocked + "] blocked64/blocked4=" + fmt("%.3f", frac);
  return v;
}

Verdict a4() {
  const ScenarioConfig c = attack_scenario(40);
  RunPoint shared = point(c, 3);
  RunPoint split = shared;
  split.partition = true;
  const RunMetrics u = run_scenario(c, shared);
  const RunMetrics p = run_scenario(c, split);
  Verdict v;
  v.pass = completed(u) && completed(p) && p.victim_l2_miss_rate < 0.01 && p.slowdown >= 0.5 * u.slowdown;
  v.detail = "partitioned miss rate=" + fmt("%.5f", p.victim_l2_miss_rate) + " slowdown=" + fmt("%.3f", p.slowdown) +
             " vs unpartitioned slowdown=" + fmt("%.3f", u.slowdown);
  return v;
}

Verdict a5() {
  // Long enough that the measured window spans many regulation periods.
  const ScenarioConfig c = attack_scenario(1000, "regulation.targets = attackers\n");
  RunPoint at100 = point(c, 3);
  at100.regulate = RegulateSel{500.0, 100.0};
  RunPoint at50 = at100;
  at50.regulate = RegulateSel{500.0, 50.0};
  const RunMetrics solo = measure(c, at100, true);
  RunMetrics r100 = measure(c, at100, false);
  RunMetrics r50 = measure(c, at50, false);
  const double s100 = static_cast<double>(r100.victim_cycles) / static_cast<double>(solo.victim_cycles);
  const double s50 = static_cast<double>(r50.victim_cycles) / static_cast<double>(solo.victim_cycles);
  Verdict v;
  v.pass = completed(solo) && completed(r100) && completed(r50) && s100 <= 1.5 && s50 < s100;
  v.detail = "slowdown write=100MB/s " + fmt("%.3f", s100) + " (need <= 1.5), write=50MB/s " + fmt("%.3f", s50);
  return v;
}

RunMetrics solo_regulated(WorkloadKind kind, RegulateSel reg) {
  ScenarioConfig c = parse_config(
      "core0.role = victim\ncore0.working_set = 2M\ncore0.iterations = 3\ncore0.warmup = 1\n"
      "regulation.targets = all\n",
      "acceptance");
  c.workloads[0]->kind = kind;
  RunPoint p = point(c, 0);
  p.regulate = reg;
  return measure(c, p, true);
}

Verdict a6() {
  const RegulateSel split{500.0, 100.0};
  const RegulateSel legacy{100.0, std::nullopt};
  const RunMetrics rd_split = solo_regulated(WorkloadKind::BwRead, split);
  const RunMetrics wr_split = solo_regulated(WorkloadKind::BwWrite, split);
  const RunMetrics rd_legacy = solo_regulated(WorkloadKind::BwRead, legacy);
  const RunMetrics wr_legacy = solo_regulated(WorkloadKind::BwWrite, legacy);
  auto within = [](double got, double want) { return std::fabs(got - want) <= 0.10 * want; };
  const double a = rd_split.read_mbps[0], b = wr_split.write_mbps[0];
  const double c = rd_legacy.read_mbps[0], d = wr_legacy.write_mbps[0];
  Verdict v;
  v.pass = completed(rd_split) && completed(wr_split) && completed(rd_legacy) && completed(wr_legacy) &&
           within(a, 500) && within(b, 100) && within(c, 100) && within(d, 100);
  v.detail = "500/100: read " + fmt("%.1f", a) + " MB/s, write " + fmt("%.1f", b) + " MB/s; 100/none: read " +
             fmt("%.1f", c) + " MB/s, write " + fmt("%.1f", d) + " MB/s";
  return v;
}

// Four random requesters against one cache; fills complete in random order.
std::string mshr_property(std::uint32_t seed) {
  CacheConfig cfg;
  cfg.name = "prop";
  cfg.geometry = CacheGeometry{16 * 1024, 64, 4, 3};
  cfg.mshrs = 6;
  cfg.wb_size = 3;
  Cache c(cfg, 4);
  std::mt19937 rng(seed);
  std::map<std::uint64_t, int> waiting;  // request id -> requester
  std::vector<Addr> outstanding;
  std::uint64_t next = 1;
  for (Cycle now = 0; now < 100'000; ++now) {
    const CoreId core = rng() % 4;
    const Addr line = static_cast<Addr>(rng() % 1024) * 64;
    const ReqKind kind = rng() % 4 == 0 ? ReqKind::Write : ReqKind::Read;
    const std::uint64_t id = next++;
    const AccessOutcome o = c.access(MemRequest{id, line, kind, Source::Core, core, now}, static_cast<int>(core), now);
    if (o.kind == Outcome::MissAllocated) outstanding.push_back(line);
    if (o.kind == Outcome::MissAllocated || o.kind == Outcome::MissMerged) waiting[id] = static_cast<int>(core);
    if (!outstanding.empty() && rng() % 2 == 0) {
      const std::size_t k = rng() % outstanding.size();
      for (const Waiter& w : c.fill_complete(outstanding[k], now).waiters) {
        auto it = waiting.find(w.request_id);
        if (it == waiting.end() || it->second != w.requester) return "unexpected or duplicate waiter";
        waiting.erase(it);
      }
      outstanding.erase(outstanding.begin() + static_cast<long>(k));
    }
    if (rng() % 2 == 0) c.writeback_drain(now, [](const WritebackEntry&) { return true; });
    const std::vector<Addr> pend = c.pending_lines();
    if (std::set<Addr>(pend.begin(), pend.end()).size() != pend.size()) return "two MSHRs track one line";
    if (c.mshrs_used() > cfg.mshrs) return "MSHR capacity exceeded";
    try {
      c.check_invariants();
    } catch (const ContractViolation& e) {
      return e.what();
    }
  }
  return "";
}

Verdict a7() {
  Verdict v;
  v.pass = true;
  const long lru = oracle::lru_divergence(100'000, 2024);
  v.pass = v.pass && lru < 0;
  v.detail = "lru " + std::string(lru < 0 ? "ok" : "diverges at " + std::to_string(lru));

  std::string mshr;
  for (std::uint32_t seed : {1u, 2u, 3u}) {
    mshr = mshr_property(seed);
    if (!mshr.empty()) break;
  }
  v.pass = v.pass && mshr.empty();
  v.detail += "; mshr " + (mshr.empty() ? std::string("ok") : mshr);

  // Regulator bound: short periods so the run spans many of them.
  {
    const ScenarioConfig c = attack_scenario(20, "regulation.targets = attackers\nregulation.period_us = 100\n");
    RunPoint p = point(c, 3);
    p.regulate = RegulateSel{500.0, 100.0};
    System sys(make_setup(c, p, false));
    const bool done = sys.run(StopCondition{c.cycle_limit}).status == RunStatus::Completed;
    std::uint64_t worst_excess = 0;
    bool bounded = done;
    for (CoreId k = 1; k <= 3; ++k) {
      const auto& st = sys.regulator()->core(k);
      const std::uint64_t peak = std::max(st.max_period_reads, st.read_count);
      const std::uint64_t limit = *st.read_budget + c.platform.l1d.mshrs;
      bounded = bounded && peak <= limit;
      if (peak > *st.read_budget) worst_excess = std::max(worst_excess, peak - *st.read_budget);
    }
    v.pass = v.pass && bounded;
    v.detail += "; regulator " + std::string(bounded ? "ok" : "exceeded") + " (max excess " +
                std::to_string(worst_excess) + " <= " + std::to_string(c.platform.l1d.mshrs) + ")";
  }

  {
    ScenarioConfig c = attack_scenario(5);
    c.sweep_attackers = {0, 3};
    c.sweep_wb_size = {4, 8};
    std::ostringstream a, b;
    write_csv(a, run_matrix(c));
    write_csv(b, run_matrix(c));
    const bool same = a.str() == b.str();
    v.pass = v.pass && same;
    v.detail += "; determinism " + std::string(same ? "ok" : "csv differs");
  }
  return v;
}

Verdict a8() {
  const RunMetrics& m = prefetch_runs()["l1d+l2"];
  const std::uint64_t total = m.l2_block_onsets_mshr + m.l2_block_onsets_wb;
  const double frac = total == 0 ? 0.0 : static_cast<double>(m.l2_block_onsets_wb) / static_cast<double>(total);
  Verdict v;
  v.pass = completed(m) && total > 0 && frac > 0.90;
  v.detail = "onsets wb=" + std::to_string(m.l2_block_onsets_wb) + " mshr=" + std::to_string(m.l2_block_onsets_mshr) +
             " wb share=" + fmt("%.3f", frac) + " (need > 0.90)";
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> all{
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5}, {"A6", a6}, {"A7", a7}, {"A8", a8}};
  std::set<std::string> only(argv + 1, argv + argc);
  for (const std::string& name : only) {
    if (std::none_of(all.begin(), all.end(), [&](const auto& e) { return e.first == name; })) {
      std::fprintf(stderr, "unknown criterion '%s'\n", name.c_str());
      return 2;
    }
  }
  int failures = 0;
  for (const auto& [name, fn] : all) {
    if (!only.empty() && !only.count(name)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s (%.1fs) %s\n", name.c_str(), v.pass ? "PASS" : "FAIL", secs, v.detail.c_str());
    std::fflush(stdout);
    if (!v.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}

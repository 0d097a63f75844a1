#include "cachedos/harness.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cachedos {

namespace {

WorkloadSpec default_attacker() {
  WorkloadSpec w;
  w.kind = WorkloadKind::BwWrite;
  w.working_set_bytes = 2 * 1024 * 1024;
  w.role = Role::Attacker;
  return w;
}

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string solo_key(const RunPoint& p) {
  return p.prefetch.label() + "|" + std::to_string(p.wb_size) + "|" + (p.partition ? "on" : "off") + "|" +
         label(p.regulate);
}

}  // namespace

RunPoint base_point(const ScenarioConfig& cfg, const Overrides& ov) {
  RunPoint p;
  p.attackers = ov.attackers.value_or(cfg.declared_attackers());
  p.prefetch = ov.prefetch.value_or(PrefetchSel{cfg.platform.l1d_prefetch.enabled, cfg.platform.l2_prefetch.enabled});
  p.wb_size = ov.wb_size.value_or(cfg.platform.l2.wb_size);
  p.partition = ov.partition.value_or(cfg.partition);
  p.regulate = ov.regulate ? *ov.regulate : cfg.regulate;
  return p;
}

std::vector<RunPoint> expand(const ScenarioConfig& cfg, const Overrides& ov) {
  const RunPoint base = base_point(cfg, ov);
  auto axis = [](const auto& sweep, bool overridden, const auto& single) {
    using T = std::decay_t<decltype(single)>;
    if (overridden || sweep.empty()) return std::vector<T>{single};
    return std::vector<T>(sweep.begin(), sweep.end());
  };
  const auto attackers = axis(cfg.sweep_attackers, ov.attackers.has_value(), base.attackers);
  const auto prefetch = axis(cfg.sweep_prefetch, ov.prefetch.has_value(), base.prefetch);
  const auto wb = axis(cfg.sweep_wb_size, ov.wb_size.has_value(), base.wb_size);
  const auto part = axis(cfg.sweep_partition, ov.partition.has_value(), base.partition);
  const auto reg = axis(cfg.sweep_regulate, ov.regulate.has_value(), base.regulate);

  std::vector<RunPoint> out;
  for (unsigned a : attackers) {
    for (const PrefetchSel& pf : prefetch) {
      for (unsigned w : wb) {
        for (bool pt : part) {
          for (const auto& r : reg) out.push_back(RunPoint{a, pf, w, pt, r});
        }
      }
    }
  }
  return out;
}

SystemSetup make_setup(const ScenarioConfig& cfg, const RunPoint& point, bool solo) {
  SystemSetup s;
  s.platform = cfg.platform;
  s.platform.l1d_prefetch.enabled = point.prefetch.l1d;
  s.platform.l2_prefetch.enabled = point.prefetch.l2;
  s.platform.l2.wb_size = point.wb_size;

  s.workloads[0] = cfg.workloads[0];
  if (!solo) {
    std::vector<WorkloadSpec> declared;
    for (unsigned c = 1; c < kMaxCores; ++c) {
      if (cfg.workloads[c] && cfg.workloads[c]->role == Role::Attacker) declared.push_back(*cfg.workloads[c]);
    }
    if (point.attackers + 1 > cfg.platform.cores) {
      throw ConfigError(std::to_string(point.attackers) + " attackers need more than " +
                        std::to_string(cfg.platform.cores) + " cores");
    }
    for (unsigned i = 0; i < point.attackers; ++i) {
      WorkloadSpec w = i < declared.size() ? declared[i] : (declared.empty() ? default_attacker() : declared[0]);
      if (i >= declared.size()) w.base_addr.reset();
      s.workloads[1 + i] = w;
    }
  }

  if (point.partition) {
    s.partition = cfg.partition_masks.value_or(
        PartitionMap::equal_split(cfg.platform.cores, cfg.platform.l2.geometry.ways));
  }

  if (point.regulate) {
    RegulatorConfig rc;
    rc.period = cfg.regulation_period;
    rc.line_bytes = cfg.platform.line_bytes;
    rc.cores.resize(cfg.platform.cores);
    for (unsigned c = 0; c < cfg.platform.cores; ++c) {
      const bool victim = c == 0;
      const bool target = cfg.regulation_targets == RegTargets::All ||
                          (cfg.regulation_targets == RegTargets::Victim && victim) ||
                          (cfg.regulation_targets == RegTargets::Attackers && !victim);
      if (target) rc.cores[c] = CoreBudget{point.regulate->read_mbps, point.regulate->write_mbps};
    }
    s.regulation = rc;
  }
  return s;
}

RunMetrics measure(const ScenarioConfig& cfg, const RunPoint& point, bool solo) {
  const SystemSetup setup = make_setup(cfg, point, solo);
  System sys(setup);
  const RunResult rr = sys.run(StopCondition{cfg.cycle_limit});

  RunMetrics m;
  m.scenario = cfg.id;
  m.seed = cfg.seed;
  m.point = point;
  if (solo) m.point.attackers = 0;
  m.status = rr.status;
  m.end_cycle = rr.cycle;
  const WorkloadSpec& v = *setup.workloads[0];
  m.victim_kind = to_string(v.kind);
  m.victim_ws_bytes = v.working_set_bytes;
  m.victim_iterations = v.iterations.value_or(0);

  const Counters end = sys.snapshot();
  const Counters start = sys.window_start().value_or(end);
  m.victim_cycles = end.cycle - start.cycle;
  const double seconds = static_cast<double>(m.victim_cycles) / static_cast<double>(cfg.platform.clock_hz);
  const double line = cfg.platform.line_bytes;
  for (unsigned c = 0; c < kMaxCores; ++c) {
    const std::uint64_t reads = end.core[c].llc_reads - start.core[c].llc_reads;
    const std::uint64_t writes = end.core[c].llc_writebacks - start.core[c].llc_writebacks;
    if (seconds > 0) {
      m.read_mbps[c] = static_cast<double>(reads) * line / seconds / 1e6;
      m.write_mbps[c] = static_cast<double>(writes) * line / seconds / 1e6;
    }
    m.throttles[c] = end.core[c].throttle_events - start.core[c].throttle_events;
  }
  const CoreCounters& ve = end.core[0];
  const CoreCounters& vs = start.core[0];
  m.victim_l2_miss_rate = ratio(ve.l2_misses - vs.l2_misses, ve.l2_accesses - vs.l2_accesses);
  m.victim_l1d_prefetch_fill_fraction =
      ratio(ve.l1_prefetch_fills - vs.l1_prefetch_fills, ve.l1_fills - vs.l1_fills);
  m.l2_blocked_cycles = end.l2_blocked - start.l2_blocked;
  m.l2_blocked_mshr_cycles = end.l2_blocked_mshr - start.l2_blocked_mshr;
  m.l2_blocked_wb_cycles = end.l2_blocked_wb - start.l2_blocked_wb;
  m.l2_block_onsets_mshr = end.l2_onsets_mshr - start.l2_onsets_mshr;
  m.l2_block_onsets_wb = end.l2_onsets_wb - start.l2_onsets_wb;
  m.l2_prefetch_fill_fraction = ratio(end.l2_prefetch_fills - start.l2_prefetch_fills, end.l2_fills - start.l2_fills);
  if (const Regulator* r = sys.regulator()) m.periods = r->period_index();
  return m;
}

RunMetrics run_scenario(const ScenarioConfig& cfg, const RunPoint& point) {
  const RunMetrics solo = measure(cfg, point, true);
  if (point.attackers == 0) {
    RunMetrics m = solo;
    m.solo_cycles = solo.victim_cycles;
    m.slowdown = 1.0;
    return m;
  }
  RunMetrics m = measure(cfg, point, false);
  m.solo_cycles = solo.victim_cycles;
  m.slowdown = solo.victim_cycles == 0 ? 0.0 : ratio(m.victim_cycles, solo.victim_cycles);
  if (solo.status != RunStatus::Completed && m.status == RunStatus::Completed) m.status = solo.status;
  return m;
}

std::vector<RunMetrics> run_matrix(const ScenarioConfig& cfg, const Overrides& ov, const RunLog& log) {
  ScenarioConfig c = cfg;
  if (ov.seed) c.seed = *ov.seed;
  std::map<std::string, RunMetrics> solos;
  std::vector<RunMetrics> rows;
  for (const RunPoint& p : expand(c, ov)) {
    const std::string key = solo_key(p);
    auto it = solos.find(key);
    if (it == solos.end()) {
      if (log) log("solo baseline: prefetch=" + p.prefetch.label() + " wb=" + std::to_string(p.wb_size) +
                   " partition=" + (p.partition ? "on" : "off") + " regulate=" + label(p.regulate));
      it = solos.emplace(key, measure(c, p, true)).first;
    }
    const RunMetrics& solo = it->second;
    RunMetrics m;
    if (p.attackers == 0) {
      m = solo;
      m.slowdown = 1.0;
    } else {
      if (log) log("co-run: attackers=" + std::to_string(p.attackers) + " prefetch=" + p.prefetch.label() +
                   " wb=" + std::to_string(p.wb_size) + " partition=" + (p.partition ? "on" : "off") +
                   " regulate=" + label(p.regulate));
      m = measure(c, p, false);
      m.slowdown = solo.victim_cycles == 0 ? 0.0 : ratio(m.victim_cycles, solo.victim_cycles);
      if (solo.status != RunStatus::Completed && m.status == RunStatus::Completed) m.status = solo.status;
    }
    m.solo_cycles = solo.victim_cycles;
    if (log) {
      log("  status=" + std::string(to_string(m.status)) + " victim_cycles=" + std::to_string(m.victim_cycles) +
          " slowdown=" + fixed(m.slowdown));
    }
    rows.push_back(m);
  }
  return rows;
}

std::string csv_header() {
  std::string h =
      "scenario,seed,attackers,prefetch,l2_wb_size,partition,regulate,status,victim_kind,victim_ws_bytes,"
      "victim_iterations,victim_cycles,solo_cycles,slowdown";
  for (unsigned c = 0; c < kMaxCores; ++c) {
    h += ",core" + std::to_string(c) + "_read_mbps,core" + std::to_string(c) + "_write_mbps";
  }
  h += ",victim_l2_miss_rate,l2_blocked_cycles,l2_blocked_mshr_cycles,l2_blocked_wb_cycles,"
       "l2_block_onsets_mshr,l2_block_onsets_wb,l2_prefetch_fill_fraction,victim_l1d_prefetch_fill_fraction";
  for (unsigned c = 0; c < kMaxCores; ++c) h += ",core" + std::to_string(c) + "_throttles";
  h += ",periods";
  return h;
}

std::string csv_row(const RunMetrics& m) {
  std::ostringstream os;
  const RunPoint& p = m.point;
  os << m.scenario << ',' << m.seed << ',' << p.attackers << ',' << p.prefetch.label() << ',' << p.wb_size << ','
     << (p.partition ? "on" : "off") << ',' << label(p.regulate) << ',' << to_string(m.status) << ','
     << m.victim_kind << ',' << m.victim_ws_bytes << ',' << m.victim_iterations << ',' << m.victim_cycles << ','
     << m.solo_cycles << ',' << fixed(m.slowdown);
  for (unsigned c = 0; c < kMaxCores; ++c) os << ',' << fixed(m.read_mbps[c]) << ',' << fixed(m.write_mbps[c]);
  os << ',' << fixed(m.victim_l2_miss_rate) << ',' << m.l2_blocked_cycles << ',' << m.l2_blocked_mshr_cycles << ','
     << m.l2_blocked_wb_cycles << ',' << m.l2_block_onsets_mshr << ',' << m.l2_block_onsets_wb << ','
     << fixed(m.l2_prefetch_fill_fraction) << ',' << fixed(m.victim_l1d_prefetch_fill_fraction);
  for (unsigned c = 0; c < kMaxCores; ++c) os << ',' << m.throttles[c];
  os << ',' << m.periods;
  return os.str();
}

void write_csv(std::ostream& os, const std::vector<RunMetrics>& rows) {
  os << csv_header() << '\n';
  for (const RunMetrics& m : rows) os << csv_row(m) << '\n';
}

void emit_csv(const std::vector<RunMetrics>& rows, const std::string& path) {
  if (rows.empty()) throw ContractViolation("emit_csv needs at least one row");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  write_csv(f, rows);
  f.flush();
  if (!f) throw IoError("failed writing '" + path + "'");
}

}  // namespace cachedos

#include "cachedos/regulator.hpp"

#include <algorithm>
#include <cmath>

namespace cachedos {

std::uint64_t budget_lines(double mbps, Cycle period, std::uint64_t clock_hz, unsigned line_bytes) {
  if (!(mbps > 0.0) || period == 0 || clock_hz == 0 || line_bytes == 0) {
    throw ConfigError("bandwidth budget needs positive MB/s, period, clock and line size");
  }
  // Bytes per second as an integer keeps whole-MB/s budgets exact.
  const auto bytes_per_s = static_cast<unsigned __int128>(std::llround(mbps * 1e6));
  const unsigned __int128 num = bytes_per_s * period;
  const unsigned __int128 den = static_cast<unsigned __int128>(clock_hz) * line_bytes;
  const auto lines = static_cast<std::uint64_t>(num / den);
  if (lines == 0) throw ConfigError("bandwidth budget rounds to zero lines per period");
  return lines;
}

Regulator::Regulator(const RegulatorConfig& cfg, unsigned cores, std::uint64_t clock_hz)
    : period_(cfg.period), cores_(cores) {
  if (period_ == 0) throw ConfigError("regulation period must be positive");
  for (unsigned c = 0; c < cores && c < cfg.cores.size(); ++c) {
    const CoreBudget& b = cfg.cores[c];
    if (b.read_mbps) cores_[c].read_budget = budget_lines(*b.read_mbps, period_, clock_hz, cfg.line_bytes);
    if (b.write_mbps) cores_[c].write_budget = budget_lines(*b.write_mbps, period_, clock_hz, cfg.line_bytes);
  }
}

bool Regulator::on_llc_event(CoreId core, LlcEvent kind, Cycle) {
  CoreState& s = cores_.at(core);
  std::uint64_t count;
  std::optional<std::uint64_t> budget;
  if (kind == LlcEvent::Miss) {
    count = ++s.read_count;
    ++s.reads_total;
    budget = s.read_budget;
  } else {
    count = ++s.write_count;
    ++s.writes_total;
    budget = s.write_budget;
  }
  if (s.throttled || !budget || count < *budget) return false;
  s.throttled = true;
  ++s.throttle_events;
  return true;
}

void Regulator::period_boundary(Cycle) {
  for (CoreState& s : cores_) {
    s.max_period_reads = std::max(s.max_period_reads, s.read_count);
    s.read_count = 0;
    s.write_count = 0;
    s.throttled = false;
  }
  ++period_index_;
}

}  // namespace cachedos

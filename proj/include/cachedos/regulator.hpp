#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cachedos/common.hpp"

namespace cachedos {

struct CoreBudget {
  std::optional<double> read_mbps;   // LLC-miss (line refill) bandwidth cap
  std::optional<double> write_mbps;  // LLC-writeback bandwidth cap
};

struct RegulatorConfig {
  Cycle period = 1'500'000;  // 1 ms at 1.5 GHz
  std::vector<CoreBudget> cores;
  unsigned line_bytes = 64;
};

enum class LlcEvent : std::uint8_t { Miss, Writeback };

/// floor(mbps * 1e6 / line_bytes * period / clock_hz). MB are 10^6 bytes.
/// Throws ConfigError on non-positive input or a zero-line budget.
std::uint64_t budget_lines(double mbps, Cycle period, std::uint64_t clock_hz, unsigned line_bytes);

/// Per-core read/write bandwidth regulation in fixed periods.
///
/// Each core may cause `read_budget` LLC refills and `write_budget` LLC
/// writebacks per period. The event that brings either count to its budget
/// throttles the core until the next period boundary, when all counters
/// reset. Events from requests already in flight keep counting.
class Regulator {
 public:
  struct CoreState {
    std::uint64_t read_count = 0;
    std::uint64_t write_count = 0;
    std::optional<std::uint64_t> read_budget;
    std::optional<std::uint64_t> write_budget;
    bool throttled = false;
    std::uint64_t throttle_events = 0;
    std::uint64_t reads_total = 0;
    std::uint64_t writes_total = 0;
    std::uint64_t max_period_reads = 0;  // largest read_count seen at any boundary
  };

  Regulator(const RegulatorConfig& cfg, unsigned cores, std::uint64_t clock_hz);

  Cycle period() const { return period_; }

  /// Returns true if this event newly throttled the core.
  bool on_llc_event(CoreId core, LlcEvent kind, Cycle now);

  /// Zeroes every counter and clears every throttle.
  void period_boundary(Cycle now);

  bool throttled(CoreId core) const { return cores_.at(core).throttled; }
  bool regulated(CoreId core) const {
    return cores_.at(core).read_budget.has_value() || cores_.at(core).write_budget.has_value();
  }
  const CoreState& core(CoreId c) const { return cores_.at(c); }
  std::uint64_t period_index() const { return period_index_; }

 private:
  Cycle period_;
  std::vector<CoreState> cores_;
  std::uint64_t period_index_ = 0;
};

}  // namespace cachedos

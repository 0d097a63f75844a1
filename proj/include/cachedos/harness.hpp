#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cachedos/config.hpp"
#include "cachedos/system.hpp"

namespace cachedos {

/// Command-line overrides. A set field replaces the config value and
/// collapses the matching sweep axis.
struct Overrides {
  std::optional<unsigned> attackers;
  std::optional<unsigned> wb_size;
  std::optional<PrefetchSel> prefetch;
  std::optional<bool> partition;
  std::optional<std::optional<RegulateSel>> regulate;
  std::optional<std::uint64_t> seed;
};

/// One cell of the scenario matrix.
struct RunPoint {
  unsigned attackers = 0;
  PrefetchSel prefetch;
  unsigned wb_size = 8;
  bool partition = false;
  std::optional<RegulateSel> regulate;
};

struct RunMetrics {
  std::string scenario;
  std::uint64_t seed = 0;
  RunPoint point;
  RunStatus status = RunStatus::Completed;
  std::string victim_kind;
  std::uint64_t victim_ws_bytes = 0;
  std::uint64_t victim_iterations = 0;

  Cycle victim_cycles = 0;
  Cycle solo_cycles = 0;
  double slowdown = 1.0;

  std::array<double, kMaxCores> read_mbps{};
  std::array<double, kMaxCores> write_mbps{};
  double victim_l2_miss_rate = 0;
  Cycle l2_blocked_cycles = 0;
  Cycle l2_blocked_mshr_cycles = 0;
  Cycle l2_blocked_wb_cycles = 0;
  std::uint64_t l2_block_onsets_mshr = 0;
  std::uint64_t l2_block_onsets_wb = 0;
  double l2_prefetch_fill_fraction = 0;
  double victim_l1d_prefetch_fill_fraction = 0;
  std::array<std::uint64_t, kMaxCores> throttles{};
  std::uint64_t periods = 0;
  Cycle end_cycle = 0;
};

/// Builds the platform for one run. `solo` leaves every attacker core idle.
SystemSetup make_setup(const ScenarioConfig& cfg, const RunPoint& point, bool solo);

/// The configured point with no sweep applied, after overrides.
RunPoint base_point(const ScenarioConfig& cfg, const Overrides& ov = {});

/// Cartesian product of the sweep axes (attackers outermost).
std::vector<RunPoint> expand(const ScenarioConfig& cfg, const Overrides& ov = {});

/// Runs one system and derives metrics over the victim's measured window.
/// slowdown is left at 1.0; run_scenario fills it in.
RunMetrics measure(const ScenarioConfig& cfg, const RunPoint& point, bool solo);

/// Solo baseline plus co-run; slowdown = co-run / solo victim cycles.
RunMetrics run_scenario(const ScenarioConfig& cfg, const RunPoint& point);

using RunLog = std::function<void(const std::string&)>;

/// Runs every point. Solo baselines are shared between points that differ
/// only in attacker count.
std::vector<RunMetrics> run_matrix(const ScenarioConfig& cfg, const Overrides& ov = {}, const RunLog& log = {});

std::string csv_header();
std::string csv_row(const RunMetrics& m);
void write_csv(std::ostream& os, const std::vector<RunMetrics>& rows);
/// Throws IoError if the file cannot be written.
void emit_csv(const std::vector<RunMetrics>& rows, const std::string& path);

}  // namespace cachedos

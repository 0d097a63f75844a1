#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cachedos/system.hpp"

namespace cachedos {

/// Which prefetchers are enabled for a run.
struct PrefetchSel {
  bool l1d = true;
  bool l2 = true;

  /// "none", "l1d", "l2", "l1d,l2" (also "l1d+l2", "both").
  static PrefetchSel parse(std::string_view text);
  std::string label() const;
  bool operator==(const PrefetchSel&) const = default;
};

/// Read/write budgets in MB/s; an unset side is unregulated.
struct RegulateSel {
  std::optional<double> read_mbps;
  std::optional<double> write_mbps;

  /// "READ/WRITE" where either side may be "none"; plain "none" returns nullopt.
  static std::optional<RegulateSel> parse(std::string_view text);
  std::string label() const;
  bool operator==(const RegulateSel&) const = default;
};

std::string label(const std::optional<RegulateSel>& r);

enum class RegTargets : std::uint8_t { Attackers, Victim, All };

struct ScenarioConfig {
  std::string id = "scenario";
  std::uint64_t seed = 1;
  Cycle cycle_limit = kDefaultCycleLimit;
  PlatformConfig platform = PlatformConfig::baseline();
  std::array<std::optional<WorkloadSpec>, kMaxCores> workloads{};

  bool partition = false;
  std::optional<PartitionMap> partition_masks;  // explicit masks; equal split otherwise

  std::optional<RegulateSel> regulate;
  Cycle regulation_period = 1'500'000;
  RegTargets regulation_targets = RegTargets::Attackers;

  // Matrix axes. An empty axis means "the single configured value".
  std::vector<unsigned> sweep_attackers;
  std::vector<PrefetchSel> sweep_prefetch;
  std::vector<unsigned> sweep_wb_size;
  std::vector<bool> sweep_partition;
  std::vector<std::optional<RegulateSel>> sweep_regulate;

  /// Defaulting decisions worth telling the user about.
  std::vector<std::string> notes;

  unsigned declared_attackers() const;
  /// Throws ConfigError on a broken invariant.
  void validate() const;
};

/// Parses flat `key = value` text. `origin` prefixes diagnostics.
ScenarioConfig parse_config(std::string_view text, const std::string& origin = "<config>");

/// Reads and parses a file. Throws IoError if it cannot be read.
ScenarioConfig load_config(const std::string& path);

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "96K", "2M", "2MB", "4096" -> bytes.
std::uint64_t parse_size(std::string_view text);

/// Every key parse_config accepts, with N standing for a core index.
const std::vector<std::string>& config_keys();

}  // namespace cachedos

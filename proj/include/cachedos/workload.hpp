#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cachedos/common.hpp"

namespace cachedos {

enum class WorkloadKind : std::uint8_t { BwRead, BwWrite };
enum class Role : std::uint8_t { Victim, Attacker };
enum class Op : std::uint8_t { Load, Store };

const char* to_string(WorkloadKind k);
const char* to_string(Role r);

/// One synthetic kernel: walk an array at a fixed stride, loading (BwRead) or
/// storing (BwWrite) one element per step. One full pass is one iteration.
struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::BwRead;
  std::uint64_t working_set_bytes = 0;
  std::uint64_t stride_bytes = 64;
  std::optional<Addr> base_addr;          // assigned by disjoint_layout when unset
  std::optional<std::uint64_t> iterations;  // measured passes; unset = unbounded
  std::uint64_t warmup_iterations = 0;
  Role role = Role::Attacker;

  std::uint64_t accesses_per_pass() const { return working_set_bytes / stride_bytes; }
  void validate() const;
};

struct Access {
  Addr addr = 0;
  Op op = Op::Load;
};

/// Stream position for one WorkloadSpec.
class Workload {
 public:
  explicit Workload(WorkloadSpec spec);

  const WorkloadSpec& spec() const { return spec_; }

  /// Next access in program order.
  Access next_access();

  /// Sequence number (0-based) of the next access next_access() will return.
  std::uint64_t issued() const { return issued_; }

  /// Total accesses in warmup plus measured passes; 0 when unbounded.
  std::uint64_t total_accesses() const;
  /// True once every access of a bounded workload has been handed out.
  bool exhausted() const;

 private:
  WorkloadSpec spec_;
  Addr base_;
  std::uint64_t per_pass_;
  std::uint64_t pos_ = 0;
  std::uint64_t issued_ = 0;
};

enum class WorkingSetClass : std::uint8_t { LlcFit, DramSized, Unclassified };

const char* to_string(WorkingSetClass c);

/// LLC-fit: L1D < ws <= LLC/4. DRAM-sized: ws > LLC.
WorkingSetClass classify_working_set(std::uint64_t working_set_bytes, std::uint64_t l1d_bytes,
                                     std::uint64_t llc_bytes);

struct LayoutOptions {
  Addr origin = 0;
  std::uint64_t guard_bytes = 64 * 1024;
  std::uint64_t align_bytes = 1024 * 1024;
  Addr limit = Addr{1} << 40;
};

/// Assigns non-overlapping base addresses. Specs with an explicit base keep
/// it (and are checked for overlap); the rest are packed after the origin
/// with a guard gap so prefetch overshoot never lands in a neighbour's array.
std::vector<Addr> disjoint_layout(const std::vector<WorkloadSpec>& specs, const LayoutOptions& opts = {});

}  // namespace cachedos

#include "cachedos/workload.hpp"

#include <algorithm>

namespace cachedos {

const char* to_string(WorkloadKind k) { return k == WorkloadKind::BwRead ? "bwread" : "bwwrite"; }
const char* to_string(Role r) { return r == Role::Victim ? "victim" : "attacker"; }

const char* to_string(WorkingSetClass c) {
  switch (c) {
    case WorkingSetClass::LlcFit: return "llc";
    case WorkingSetClass::DramSized: return "dram";
    case WorkingSetClass::Unclassified: return "unclassified";
  }
  return "?";
}

void WorkloadSpec::validate() const {
  if (stride_bytes == 0) throw ConfigError("workload stride must be positive");
  if (working_set_bytes == 0) throw ConfigError("workload working set must be positive");
  if (working_set_bytes % stride_bytes != 0) throw ConfigError("working set must be a multiple of the stride");
  if (role == Role::Victim && (!iterations || *iterations == 0)) {
    throw ConfigError("the victim needs a finite, positive iteration count");
  }
}

Workload::Workload(WorkloadSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  base_ = spec_.base_addr.value_or(0);
  per_pass_ = spec_.accesses_per_pass();
}

Access Workload::next_access() {
  const Access a{base_ + pos_ * spec_.stride_bytes,
                 spec_.kind == WorkloadKind::BwRead ? Op::Load : Op::Store};
  if (++pos_ == per_pass_) pos_ = 0;
  ++issued_;
  return a;
}

std::uint64_t Workload::total_accesses() const {
  if (!spec_.iterations) return 0;
  return (*spec_.iterations + spec_.warmup_iterations) * per_pass_;
}

bool Workload::exhausted() const { return spec_.iterations && issued_ >= total_accesses(); }

WorkingSetClass classify_working_set(std::uint64_t ws, std::uint64_t l1d_bytes, std::uint64_t llc_bytes) {
  if (ws > llc_bytes) return WorkingSetClass::DramSized;
  if (ws > l1d_bytes && ws <= llc_bytes / 4) return WorkingSetClass::LlcFit;
  return WorkingSetClass::Unclassified;
}

namespace {

Addr align_up(Addr v, std::uint64_t a) { return a == 0 ? v : (v + a - 1) / a * a; }

}  // namespace

std::vector<Addr> disjoint_layout(const std::vector<WorkloadSpec>& specs, const LayoutOptions& opts) {
  struct Region {
    Addr lo, hi;
  };
  std::vector<Region> taken;
  std::vector<Addr> bases(specs.size(), 0);

  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (!specs[i].base_addr) continue;
    const Region r{*specs[i].base_addr, *specs[i].base_addr + specs[i].working_set_bytes};
    for (const Region& t : taken) {
      if (r.lo < t.hi && t.lo < r.hi) {
        throw ConfigError("workload " + std::to_string(i) + " overlaps another workload's array");
      }
    }
    taken.push_back(r);
    bases[i] = r.lo;
  }

  Addr cursor = opts.origin;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].base_addr) continue;
    for (;;) {
      const Region r{cursor, cursor + specs[i].working_set_bytes};
      auto clash = std::find_if(taken.begin(), taken.end(),
                                [&](const Region& t) { return r.lo < t.hi + opts.guard_bytes && t.lo < r.hi + opts.guard_bytes; });
      if (clash == taken.end()) break;
      cursor = align_up(clash->hi + opts.guard_bytes, opts.align_bytes);
    }
    if (cursor + specs[i].working_set_bytes > opts.limit) throw ConfigError("address space exhausted by workload layout");
    bases[i] = cursor;
    taken.push_back({cursor, cursor + specs[i].working_set_bytes});
    cursor = align_up(cursor + specs[i].working_set_bytes + opts.guard_bytes, opts.align_bytes);
  }
  return bases;
}

}  // namespace cachedos

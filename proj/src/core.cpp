#include "cachedos/core.hpp"

namespace cachedos {

const char* to_string(CoreStatus s) {
  switch (s) {
    case CoreStatus::Running: return "running";
    case CoreStatus::StalledOnLoad: return "stalled_on_load";
    case CoreStatus::StalledCacheBlocked: return "stalled_cache_blocked";
    case CoreStatus::Throttled: return "throttled";
    case CoreStatus::Idle: return "idle";
  }
  return "?";
}

Core::Core(CoreId id, std::optional<Workload> workload) : id_(id), workload_(std::move(workload)) {}

CoreStatus Core::status() const {
  if (!workload_ || finished()) return CoreStatus::Idle;
  if (waiting_load_) return CoreStatus::StalledOnLoad;
  if (throttled_) return CoreStatus::Throttled;
  if (blocked_on_cache_) return CoreStatus::StalledCacheBlocked;
  return CoreStatus::Running;
}

void Core::load_complete(std::uint64_t request_id, Cycle now) {
  if (!waiting_on(request_id)) throw ContractViolation("load completion for a request the core is not waiting on");
  waiting_load_.reset();
  retire(waiting_addr_, now);
}

void Core::retire(Addr addr, Cycle now) {
  ++retired_;
  last_retire_ = now;
  if (log_retires_) retire_log_.push_back(addr);
}

bool Core::finished() const {
  return workload_ && workload_->spec().iterations && retired_ >= workload_->total_accesses();
}

}  // namespace cachedos

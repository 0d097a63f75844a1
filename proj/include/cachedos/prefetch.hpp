#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "cachedos/cache.hpp"
#include "cachedos/common.hpp"

namespace cachedos {

struct PrefetcherConfig {
  bool enabled = true;
  unsigned degree = 1;
  unsigned queue_size = 1;
};

/// Stride detector for one access stream.
struct StrideState {
  Addr last_addr = 0;
  std::int64_t last_stride = 0;
  unsigned confidence = 0;  // consecutive observations of last_stride, saturates at 2
  bool seen = false;
};

struct PrefetchCandidate {
  Addr line = 0;
  CoreId owner = 0;
};

struct PrefetcherStats {
  std::uint64_t observed = 0;
  std::uint64_t enqueued = 0;
  std::uint64_t dropped = 0;
  std::uint64_t issued = 0;
};

/// Stride prefetcher with a bounded candidate queue. One stream per
/// requester; once a stride is confirmed twice, each observation enqueues up
/// to `degree` line-aligned candidates ahead of the access.
class StridePrefetcher {
 public:
  static constexpr unsigned kConfidenceThreshold = 2;

  StridePrefetcher(PrefetcherConfig cfg, unsigned streams, unsigned line_bytes);

  const PrefetcherConfig& config() const { return cfg_; }
  bool enabled() const { return cfg_.enabled; }

  /// `is_pending(line)` reports lines already outstanding in the attached
  /// cache's MSHRs; those are not enqueued again.
  template <class Pending>
  void observe(unsigned stream, Addr addr, CoreId owner, Pending&& is_pending) {
    if (!cfg_.enabled) return;
    ++stats_.observed;
    StrideState& s = streams_.at(stream);
    if (!s.seen) {
      s = StrideState{addr, 0, 0, true};
      return;
    }
    const std::int64_t stride = static_cast<std::int64_t>(addr - s.last_addr);
    if (stride != 0 && stride == s.last_stride) {
      if (s.confidence < kConfidenceThreshold) ++s.confidence;
    } else {
      s.confidence = stride != 0 ? 1 : 0;
    }
    s.last_stride = stride;
    s.last_addr = addr;
    if (s.confidence < kConfidenceThreshold) return;

    for (unsigned k = 1; k <= cfg_.degree; ++k) {
      const std::int64_t off = stride * static_cast<std::int64_t>(k);
      if (off < 0 && static_cast<Addr>(-off) > addr) break;
      const Addr line = line_of(addr + static_cast<Addr>(off), line_bytes_);
      if (line == line_of(addr, line_bytes_) || queued(line) || is_pending(line)) continue;
      if (queue_.size() >= cfg_.queue_size) {
        ++stats_.dropped;
        continue;
      }
      queue_.push_back({line, owner});
      ++stats_.enqueued;
    }
  }

  /// Issues at most one candidate. `allowed(owner)` filters candidates whose
  /// owner may not generate traffic right now; `issue(candidate)` returns the
  /// cache outcome. A RejectedBlocked candidate stays at its queue position.
  template <class Allowed, class Issue>
  std::optional<Outcome> drain_one(Allowed&& allowed, Issue&& issue) {
    for (auto it = queue_.begin(); it != queue_.end(); ++it) {
      if (!allowed(it->owner)) continue;
      const Outcome o = issue(*it);
      if (o == Outcome::RejectedBlocked) return o;
      queue_.erase(it);
      ++stats_.issued;
      return o;
    }
    return std::nullopt;
  }

  bool has_work() const { return !queue_.empty(); }
  bool queued(Addr line) const;
  const std::deque<PrefetchCandidate>& queue() const { return queue_; }
  const StrideState& stream(unsigned i) const { return streams_.at(i); }
  const PrefetcherStats& stats() const { return stats_; }

 private:
  PrefetcherConfig cfg_;
  unsigned line_bytes_;
  std::vector<StrideState> streams_;
  std::deque<PrefetchCandidate> queue_;
  PrefetcherStats stats_;
};

}  // namespace cachedos

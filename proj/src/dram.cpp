#include "cachedos/dram.hpp"

#include <algorithm>
#include <cmath>

namespace cachedos {

void DramConfig::validate() const {
  if (read_queue_size == 0 || write_queue_size == 0) throw ConfigError("dram: queue sizes must be positive");
  if (banks == 0) throw ConfigError("dram: banks must be positive");
  if (lines_per_row == 0) throw ConfigError("dram: lines_per_row must be positive");
  if (t_bus == 0 || t_row_hit == 0 || t_row_conflict == 0) throw ConfigError("dram: timings must be at least 1 cycle");
  if (!(0 < write_low && write_low < write_high && write_high <= write_queue_size)) {
    throw ConfigError("dram: watermarks must satisfy 0 < low < high <= write_queue_size");
  }
}

Cycle ns_to_cycles(double ns, std::uint64_t clock_hz) {
  if (!(ns > 0.0)) throw ConfigError("dram: timing must be positive");
  // Work in integer picoseconds so 20 ns at 1.5 GHz is exactly 30 cycles.
  const auto ps = static_cast<unsigned __int128>(std::llround(ns * 1000.0));
  const unsigned __int128 num = ps * clock_hz;
  const unsigned __int128 den = 1'000'000'000'000ULL;
  return static_cast<Cycle>((num + den - 1) / den);
}

Dram::Dram(DramConfig cfg, unsigned line_bytes) : cfg_(cfg), line_bytes_(line_bytes), banks_(cfg.banks) {
  cfg_.validate();
}

EnqueueResult Dram::enqueue(const MemRequest& req, bool write, Cycle now) {
  auto& q = write ? writes_ : reads_;
  const unsigned cap = write ? cfg_.write_queue_size : cfg_.read_queue_size;
  if (q.size() >= cap) {
    ++(write ? stats_.write_full : stats_.read_full);
    return EnqueueResult::QueueFull;
  }
  q.push_back({req, now});
  ++(write ? stats_.writes_accepted : stats_.reads_accepted);
  return EnqueueResult::Accepted;
}

std::optional<DramCompletion> Dram::issue_from(std::deque<Queued>& q, bool write, Cycle now) {
  for (auto it = q.begin(); it != q.end(); ++it) {
    const unsigned b = bank_of(it->req.line);
    BankState& bank = banks_[b];
    if (bank.busy_until > now) continue;
    const std::uint64_t row = row_of(it->req.line);
    const bool row_hit = bank.open_row && *bank.open_row == row;
    const Cycle ready = now + (row_hit ? cfg_.t_row_hit : cfg_.t_row_conflict);
    const Cycle done = std::max(ready, bus_free_) + cfg_.t_bus;
    bus_free_ = done;
    bank.busy_until = done;
    bank.open_row = row;
    ++(row_hit ? stats_.row_hits : stats_.row_conflicts);
    ++(write ? stats_.writes_issued : stats_.reads_issued);
    DramCompletion c{it->req, write, done};
    q.erase(it);
    return c;
  }
  return std::nullopt;
}

std::optional<DramCompletion> Dram::tick(Cycle now) {
  if (draining_ && writes_.size() <= cfg_.write_low) draining_ = false;
  if (!draining_ && writes_.size() >= cfg_.write_high) {
    draining_ = true;
    ++stats_.drain_episodes;
  }
  if (draining_) return issue_from(writes_, true, now);
  if (!reads_.empty()) return issue_from(reads_, false, now);
  if (writes_.empty()) return std::nullopt;
  // No reads waiting: drain, holding drain mode down to the low watermark.
  if (writes_.size() > cfg_.write_low) {
    draining_ = true;
    ++stats_.drain_episodes;
  }
  return issue_from(writes_, true, now);
}

}  // namespace cachedos

#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "cachedos/common.hpp"

namespace cachedos {

struct DramConfig {
  unsigned read_queue_size = 64;
  unsigned write_queue_size = 64;
  unsigned banks = 8;
  unsigned lines_per_row = 1024;
  Cycle t_row_hit = 30;
  Cycle t_row_conflict = 90;
  Cycle t_bus = 8;
  unsigned write_high = 48;
  unsigned write_low = 16;

  void validate() const;
};

/// Converts a nanosecond timing to CPU cycles, rounding up.
Cycle ns_to_cycles(double ns, std::uint64_t clock_hz);

enum class EnqueueResult : std::uint8_t { Accepted, QueueFull };

struct BankState {
  std::optional<std::uint64_t> open_row;
  Cycle busy_until = 0;
};

struct DramCompletion {
  MemRequest req;
  bool write = false;
  Cycle done = 0;
};

struct DramStats {
  std::uint64_t reads_accepted = 0;
  std::uint64_t writes_accepted = 0;
  std::uint64_t reads_issued = 0;
  std::uint64_t writes_issued = 0;
  std::uint64_t row_hits = 0;
  std::uint64_t row_conflicts = 0;
  std::uint64_t drain_episodes = 0;
  std::uint64_t read_full = 0;
  std::uint64_t write_full = 0;
};

/// FIFO read/write queues in front of an open-page, bank-interleaved device.
///
/// Reads have priority. Drain mode, in which only writes are served until the
/// write queue falls to the low watermark, starts when the write queue
/// reaches the high watermark or when writes wait and no read does. One command is issued per cycle; a bank serves one request at
/// a time and data transfers serialize on a shared bus.
class Dram {
 public:
  Dram(DramConfig cfg, unsigned line_bytes);

  const DramConfig& config() const { return cfg_; }

  EnqueueResult enqueue(const MemRequest& req, bool write, Cycle now);

  /// Issues at most one request; returns its completion if one was issued.
  std::optional<DramCompletion> tick(Cycle now);

  unsigned bank_of(Addr line) const { return static_cast<unsigned>((line / line_bytes_) % cfg_.banks); }
  std::uint64_t row_of(Addr line) const { return (line / line_bytes_) / cfg_.lines_per_row; }

  std::size_t read_queue_depth() const { return reads_.size(); }
  std::size_t write_queue_depth() const { return writes_.size(); }
  bool write_can_accept() const { return writes_.size() < cfg_.write_queue_size; }
  bool read_can_accept() const { return reads_.size() < cfg_.read_queue_size; }
  bool draining() const { return draining_; }
  bool has_work() const { return !reads_.empty() || !writes_.empty(); }
  const BankState& bank(unsigned b) const { return banks_.at(b); }
  const DramStats& stats() const { return stats_; }

 private:
  struct Queued {
    MemRequest req;
    Cycle arrived = 0;
  };

  std::optional<DramCompletion> issue_from(std::deque<Queued>& q, bool write, Cycle now);

  DramConfig cfg_;
  unsigned line_bytes_;
  std::deque<Queued> reads_;
  std::deque<Queued> writes_;
  std::vector<BankState> banks_;
  Cycle bus_free_ = 0;
  bool draining_ = false;
  DramStats stats_;
};

}  // namespace cachedos

#pragma once

#include <concepts>
#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "cachedos/common.hpp"

namespace cachedos {

enum class Target : std::uint8_t { Core, L1D, L2, Dram, Regulator, Control };

struct Event {
  Cycle due = 0;
  Target target = Target::Control;
  std::uint32_t index = 0;    // component instance, e.g. core id
  std::uint64_t payload = 0;  // request id, line address or control token
  std::uint64_t seq = 0;      // assigned by EventQueue::schedule
};

/// Pending-event store ordered by (due, seq). Same-cycle events fire FIFO.
class EventQueue {
 public:
  Cycle now() const { return now_; }

  void schedule(Event ev) {
    if (ev.due < now_) {
      throw ContractViolation("event scheduled in the past: due=" + std::to_string(ev.due) +
                              " now=" + std::to_string(now_));
    }
    ev.seq = next_seq_++;
    heap_.push(ev);
  }

  bool has_due() const { return !heap_.empty() && heap_.top().due <= now_; }

  Event pop() {
    Event ev = heap_.top();
    heap_.pop();
    ++fired_;
    return ev;
  }

  std::optional<Cycle> next_due() const {
    if (heap_.empty()) return std::nullopt;
    return heap_.top().due;
  }

  void advance_to(Cycle t) {
    if (t < now_) throw ContractViolation("clock moved backwards");
    now_ = t;
  }

  std::size_t pending() const { return heap_.size(); }
  std::uint64_t scheduled() const { return next_seq_; }
  std::uint64_t fired() const { return fired_; }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.due != b.due ? a.due > b.due : a.seq > b.seq;
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  Cycle now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t fired_ = 0;
};

enum class RunStatus { Completed, Timeout, Deadlock };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Completed: return "completed";
    case RunStatus::Timeout: return "timeout";
    case RunStatus::Deadlock: return "deadlock";
  }
  return "?";
}

inline constexpr Cycle kDefaultCycleLimit = 2'000'000'000ULL;

struct StopCondition {
  Cycle cycle_limit = kDefaultCycleLimit;
};

struct RunResult {
  RunStatus status = RunStatus::Completed;
  Cycle cycle = 0;
};

/// What the engine needs from a simulated platform.
///
/// Each cycle: due events are dispatched, then `tick` runs every component in
/// the platform's fixed order, then events scheduled for the same cycle during
/// the tick are dispatched. When `busy()` is false no component can make
/// progress without an event, so the clock jumps to the next due event.
template <class M>
concept SimModel = requires(M m, const M cm, const Event& ev, Cycle c) {
  m.dispatch(ev);
  m.tick(c);
  { cm.busy() } -> std::convertible_to<bool>;
  { cm.done() } -> std::convertible_to<bool>;
};

template <SimModel M>
RunResult run_until(EventQueue& q, M& model, const StopCondition& stop) {
  for (;;) {
    if (model.done()) return {RunStatus::Completed, q.now()};
    if (q.now() >= stop.cycle_limit) return {RunStatus::Timeout, q.now()};

    while (q.has_due()) model.dispatch(q.pop());
    if (model.done()) return {RunStatus::Completed, q.now()};

    model.tick(q.now());
    while (q.has_due()) model.dispatch(q.pop());
    if (model.done()) return {RunStatus::Completed, q.now()};

    if (model.busy()) {
      q.advance_to(q.now() + 1);
    } else if (auto next = q.next_due()) {
      q.advance_to(std::min(*next, stop.cycle_limit));
    } else {
      return {RunStatus::Deadlock, q.now()};
    }
  }
}

}  // namespace cachedos

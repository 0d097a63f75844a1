#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cachedos {

/// Simulated CPU clock cycles. All component latencies are expressed in this domain.
using Cycle = std::uint64_t;

/// Physical byte address. Cache-facing requests always carry line-aligned addresses.
using Addr = std::uint64_t;

using CoreId = unsigned;

inline constexpr unsigned kMaxCores = 4;

/// Thrown when a caller breaks a documented precondition (scheduling in the
/// past, a fill for a line with no MSHR, ...). These indicate simulator bugs.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid or unusable configuration. Carries a human-readable diagnostic.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ReqKind : std::uint8_t { Read, Write, Prefetch };

/// Which agent created a request. Caches don't care; the metrics do.
enum class Source : std::uint8_t { Core, L1Prefetcher, L2Prefetcher };

struct MemRequest {
  std::uint64_t id = 0;
  Addr line = 0;
  ReqKind kind = ReqKind::Read;
  Source source = Source::Core;
  CoreId core = 0;  // owning core: partition, attribution and regulation key
  Cycle issued = 0;
};

inline const char* to_string(ReqKind k) {
  switch (k) {
    case ReqKind::Read: return "read";
    case ReqKind::Write: return "write";
    case ReqKind::Prefetch: return "prefetch";
  }
  return "?";
}

constexpr bool is_pow2(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

constexpr Addr line_of(Addr a, unsigned line_bytes) { return a & ~static_cast<Addr>(line_bytes - 1); }

}  // namespace cachedos

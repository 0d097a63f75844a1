#include "cachedos/prefetch.hpp"

#include <algorithm>

namespace cachedos {

StridePrefetcher::StridePrefetcher(PrefetcherConfig cfg, unsigned streams, unsigned line_bytes)
    : cfg_(cfg), line_bytes_(line_bytes), streams_(streams) {
  if (cfg_.enabled && cfg_.degree == 0) throw ConfigError("prefetcher degree must be at least 1");
  if (cfg_.enabled && cfg_.queue_size == 0) throw ConfigError("prefetcher queue must hold at least 1 entry");
}

bool StridePrefetcher::queued(Addr line) const {
  return std::any_of(queue_.begin(), queue_.end(), [&](const PrefetchCandidate& c) { return c.line == line; });
}

}  // namespace cachedos

#pragma once
// Deterministic parallel map-reduce over sample indices. Indices are cut into
// fixed blocks; each block accumulates into its own copy of the prototype and
// blocks are merged in index order, so results do not depend on the worker
// count or scheduling.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

#include "bperc/errors.hpp"

namespace bperc {

inline constexpr std::uint64_t kBlockSize = 64;

/// `body(index, acc)` is called once per index; `Acc` needs merge(const Acc&).
template <class Acc, class Body>
Acc run_blocks(std::uint64_t n, unsigned workers, const Acc& prototype, Body&& body) {
  if (workers == 0) throw InvalidArgument("run_blocks: workers must be >= 1");
  const std::uint64_t blocks = (n + kBlockSize - 1) / kBlockSize;
  std::vector<Acc> partial(blocks, prototype);
  std::vector<std::exception_ptr> errors(blocks);
  std::atomic<std::uint64_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::uint64_t b = next.fetch_add(1);
      if (b >= blocks) return;
      try {
        const std::uint64_t hi = std::min(n, (b + 1) * kBlockSize);
        for (std::uint64_t i = b * kBlockSize; i < hi; ++i) body(i, partial[b]);
      } catch (...) {
        errors[b] = std::current_exception();
      }
    }
  };
  const unsigned threads = static_cast<unsigned>(std::min<std::uint64_t>(workers, std::max<std::uint64_t>(blocks, 1)));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  Acc total = prototype;
  for (const auto& p : partial) total.merge(p);
  return total;
}

}  // namespace bperc

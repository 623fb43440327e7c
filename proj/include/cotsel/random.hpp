#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace cotsel {

// Seeded sampling that is identical on every platform: std::mt19937_64 has
// a fully specified output sequence, and bounded draws use rejection rather
// than the implementation-defined standard distributions.
class PortableRng {
 public:
  explicit PortableRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (true) {
      const std::uint64_t r = engine_();
      if (r >= threshold) return r % n;
    }
  }

  // Partial Fisher-Yates: the first k elements become a uniform sample
  // without replacement, in draw order.
  template <class T>
  void sample_prefix(std::vector<T>& items, std::size_t k) {
    const std::size_t n = items.size();
    for (std::size_t i = 0; i < k && i < n; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(below(n - i));
      std::swap(items[i], items[j]);
    }
  }

  template <class T>
  void shuffle(std::vector<T>& items) {
    sample_prefix(items, items.size());
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cotsel

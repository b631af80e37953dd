#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>

namespace localmax {

// FNV-1a, 64 bit. Used for state fingerprints and config hashes.
class Fnv1a {
public:
  void update(const void* data, std::size_t n) noexcept {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }
  void update(std::span<const double> values) noexcept {
    update(values.data(), values.size_bytes());
  }
  void update(std::string_view s) noexcept { update(s.data(), s.size()); }
  void update(std::uint64_t v) noexcept { update(&v, sizeof v); }

  std::uint64_t digest() const noexcept { return state_; }

private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a(std::string_view s) noexcept {
  Fnv1a h;
  h.update(s);
  return h.digest();
}

} // namespace localmax

#include "localmax/rng.hpp"

#include <sstream>

#include "localmax/errors.hpp"
#include "localmax/hash.hpp"

namespace localmax {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t substream_seed(std::uint64_t root, std::string_view name) noexcept {
  return splitmix64(root ^ splitmix64(fnv1a(name)));
}

std::uint64_t task_seed(std::uint64_t stream_seed, std::uint64_t index) noexcept {
  return splitmix64(stream_seed + splitmix64(index + 1));
}

std::string serialize_rng(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng deserialize_rng(const std::string& text) {
  std::istringstream is(text);
  Rng rng;
  is >> rng;
  if (is.fail()) throw CheckpointError("corrupt RNG state");
  return rng;
}

} // namespace localmax

#include "mvreplay/rng.hpp"

#include <cmath>

namespace mvreplay {

namespace {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Rng Rng::substream(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
  std::uint64_t x = seed;
  std::uint64_t a = splitmix64(x);
  x ^= fnv1a64(tag);
  std::uint64_t b = splitmix64(x);
  x ^= index * 0x9e3779b97f4a7c15ULL + 1;
  std::uint64_t c = splitmix64(x);
  Rng rng;
  rng.state_ = {a, b, c, splitmix64(x)};
  // Avoid the all-zero state (cannot occur for any practical input, but cheap
  // to rule out entirely).
  if ((rng.state_[0] | rng.state_[1] | rng.state_[2] | rng.state_[3]) == 0) rng.state_[0] = 1;
  rng.next_u64();
  return rng;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_normal_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

}  // namespace mvreplay

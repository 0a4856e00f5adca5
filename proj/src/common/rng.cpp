#include "c2f/rng.hpp"

#include <cmath>
#include <cstring>

namespace c2f {

static u64 splitmix64(u64& x) {
  x += 0x9e3779b97f4a7c15ULL;
  u64 z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void Rng::reseed(u64 seed) {
  u64 x = seed;
  for (auto& w : s_) w = splitmix64(x);
  has_spare_ = false;
  spare_ = 0.0;
}

static inline u64 rotl(u64 x, int k) { return (x << k) | (x >> (64 - k)); }

u64 Rng::next_u64() {
  const u64 result = rotl(s_[0] + s_[3], 23) + s_[0];
  const u64 t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

u64 Rng::below(u64 n) {
  require(n > 0, "Rng::below: n must be positive");
  // Rejection sampling to avoid modulo bias.
  const u64 limit = ~u64{0} - (~u64{0} % n);
  u64 v = next_u64();
  while (v >= limit) v = next_u64();
  return v % n;
}

std::array<u64, 6> Rng::state() const {
  std::array<u64, 6> out{};
  for (int i = 0; i < 4; ++i) out[i] = s_[i];
  u64 bits;
  static_assert(sizeof bits == sizeof spare_);
  std::memcpy(&bits, &spare_, sizeof bits);
  out[4] = bits;
  out[5] = has_spare_ ? 1 : 0;
  return out;
}

void Rng::set_state(const std::array<u64, 6>& s) {
  for (int i = 0; i < 4; ++i) s_[i] = s[i];
  std::memcpy(&spare_, &s[4], sizeof spare_);
  has_spare_ = s[5] != 0;
}

}  // namespace c2f

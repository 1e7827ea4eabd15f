#include "allocatron/common.hpp"

#include <cmath>
#include <limits>

namespace allocatron {

const char* Error::kind_name(Kind kind) {
  switch (kind) {
    case Kind::InvalidArgument: return "InvalidArgument";
    case Kind::DepthTooLarge: return "DepthTooLarge";
    case Kind::Overflow: return "Overflow";
    case Kind::RegimeMismatch: return "RegimeMismatch";
    case Kind::TooLarge: return "TooLarge";
    case Kind::NonFinite: return "NonFinite";
    case Kind::NoTransition: return "NoTransition";
    case Kind::InsufficientData: return "InsufficientData";
    case Kind::Degenerate: return "Degenerate";
    case Kind::NegativeVariance: return "NegativeVariance";
    case Kind::OutOfRange: return "OutOfRange";
    case Kind::Io: return "Io";
    case Kind::Parse: return "Parse";
  }
  return "Unknown";
}

double log3(double x) { return std::log(x) / std::log(3.0); }

std::int64_t input_copies(int depth) {
  if (depth < 1) throw Error(Error::Kind::InvalidArgument, "depth must be >= 1");
  if (depth > 40)
    throw Error(Error::Kind::DepthTooLarge,
                "copy count (3^L - 1)/2 exceeds 64-bit range for depth > 40");
  std::int64_t p = 1;
  for (int i = 0; i < depth; ++i) p *= 3;
  return (p - 1) / 2;
}

double input_copies_real(double depth) {
  return (std::pow(3.0, depth) - 1.0) / 2.0;
}

std::int64_t pow3(int n) {
  if (n < 0) throw Error(Error::Kind::InvalidArgument, "exponent must be >= 0");
  if (n > 40)
    throw Error(Error::Kind::DepthTooLarge, "3^n exceeds 64-bit range for n > 40");
  std::int64_t p = 1;
  for (int i = 0; i < n; ++i) p *= 3;
  return p;
}

std::uint64_t multiset_coefficient(std::uint64_t n, std::uint64_t k) {
  if (k == 0) return 1;
  if (n == 0) return 0;
  // C(n + k - 1, k) with the usual incremental multiply/divide scheme; every
  // intermediate is exact because C(m, i) divides the running product.
  const std::uint64_t m = n + k - 1;
  std::uint64_t r = std::min(k, m - k);
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 1; i <= r; ++i) {
    acc = acc * (m - r + i);
    acc /= i;
    if (acc > std::numeric_limits<std::uint64_t>::max())
      throw Error(Error::Kind::Overflow, "multiset coefficient exceeds uint64");
  }
  return static_cast<std::uint64_t>(acc);
}

double log3_multiset_coefficient(double n, double k) {
  if (k == 0.0) return 0.0;
  if (n <= 0.0) throw Error(Error::Kind::InvalidArgument, "n must be positive");
  const double ln = std::lgamma(n + k) - std::lgamma(k + 1.0) - std::lgamma(n);
  return ln / std::log(3.0);
}

std::int64_t round_half_up(double x) {
  return static_cast<std::int64_t>(std::floor(x + 0.5));
}

std::uint64_t Rng::next_u64() {
  // splitmix64
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_symmetric() { return 2.0 * next_unit() - 1.0; }

double Rng::next_normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do { u1 = next_unit(); } while (u1 <= 0.0);
  const double u2 = next_unit();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * M_PI * u2;
  spare_ = r * std::sin(t);
  have_spare_ = true;
  return r * std::cos(t);
}

}  // namespace allocatron

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace allocatron {

// Every domain failure in the library throws Error with a machine-checkable
// kind. The CLI maps Error to exit code 1 and argument parsing to exit code 2.
class Error : public std::runtime_error {
public:
  enum class Kind {
    InvalidArgument,
    DepthTooLarge,
    Overflow,
    RegimeMismatch,
    TooLarge,
    NonFinite,
    NoTransition,
    InsufficientData,
    Degenerate,
    NegativeVariance,
    OutOfRange,
    Io,
    Parse,
  };

  Error(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

  static const char* kind_name(Kind kind);

private:
  Kind kind_;
};

// log base 3
double log3(double x);

// Number of mixed input copies a depth-L stack composes: (3^L - 1) / 2.
// Exact integer arithmetic; depths above 40 would overflow and are rejected.
std::int64_t input_copies(int depth);

// Same quantity as a double, valid for any depth where the result is finite.
double input_copies_real(double depth);

// 3^n exactly for n in [0, 40]; larger n would overflow and is rejected.
std::int64_t pow3(int n);

// Multiset coefficient ("n multichoose k"): C(n + k - 1, k), exact.
// Throws Error{Overflow} when the value exceeds uint64.
std::uint64_t multiset_coefficient(std::uint64_t n, std::uint64_t k);

// log base 3 of the multiset coefficient, evaluated through lgamma so large
// arguments never overflow.
double log3_multiset_coefficient(double n, double k);

// Round half away from zero to the nearest integer (round-half-up for the
// positive quantities used here).
std::int64_t round_half_up(double x);

// Deterministic splitmix64 stream; used wherever reproducible randomness is
// needed so results do not depend on the standard library's distributions.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // uniform in [0, 1)
  double next_unit();

  // uniform in [-1, 1]
  double next_symmetric();

  // standard normal via Box-Muller
  double next_normal();

private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace allocatron

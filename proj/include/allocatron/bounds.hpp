#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "allocatron/common.hpp"

namespace allocatron::bounds {

// Which side of the depth threshold log3(width) a configuration sits on.
// The comparison is exact integer arithmetic on 3^L vs width.
enum class Regime { DepthEfficiency, DepthInefficiency, Boundary };

const char* regime_name(Regime regime);

// log3 of the width: depths below it are covered by the depth-efficiency
// result, depths above it by the depth-inefficiency one.
double depth_threshold(int width);

Regime classify_regime(int depth, int width);

// log3 separation-rank bounds for one configuration. `log3_lower` is clamped
// at zero (a rank bound below 1 carries no information); `raw_lower` keeps
// the unclamped value. `corrections` holds the additive correction terms of
// whichever theorem produced the estimate.
struct BoundEstimate {
  double log3_lower = 0.0;
  double raw_lower = 0.0;
  double log3_upper = 0.0;
  Regime regime = Regime::Boundary;
  std::map<std::string, double> corrections;
};

// Depth-efficiency regime (depth < log3 width):
//   lower = 3^(L-2) * (log3(width - heads) + a),  a = -L + 2 - log3 2
//   upper = (3^L - 1)/2 * log3(width + heads)
// Requires width > heads and a strictly positive lower-bound argument.
BoundEstimate theorem1_bounds(int depth, int width, int heads);

// Depth-inefficiency regime (depth > log3 width):
//   lower = width*L/2 + b1 + b2, b1 = -L(heads/2 + 1),
//           b2 = -width (1 + log3((width - heads)/2) / 2)
//   upper = 2*width*L + c1 + c2, c1 = L,
//           c2 = -2*width*log3(width / (2 sqrt(2e))) + log3 width
// Requires width > heads + 2 so the b2 logarithm stays positive.
BoundEstimate theorem2_bounds(int depth, int width, int heads);

// log3 of the exact function-class size bounds behind the two theorems.
// Deep networks: (H (d_a + 1))^C with C = (3^L-1)/2 summation paths.
double exact_count_log_deep(int depth, int width, int heads);
// Shallow/wide networks: d_x (C+1) * multiset(d_x, 2C) * (2C/d_x + 1)^d_x,
// evaluated through lgamma so large configurations do not overflow.
double exact_count_log_wide(int depth, int width);

// Residual (layer(X) + X) variant of the upper bound:
//   L log3 L + (4 log3 d_x + log3 N - log3 H) * (3^L - 1)/2.
double residual_upper_bound(int depth, int width, int seq_len, int heads);

// Smallest width a depth `shallow_depth` network needs before its upper bound
// reaches the lower bound of the given deeper network. The predicate is
// monotone within each regime of the shallow width, so the search walks the
// below-threshold region first and then doubles/bisects above the threshold.
// `width` empty means no width up to 2^64 - 1 suffices.
struct EquivalentWidth {
  std::optional<std::uint64_t> width;
  double target_log3_lower = 0.0;
};

EquivalentWidth min_equivalent_shallow_width(int deep_depth, int deep_width,
                                             int heads, int shallow_depth);

// JSON rendering of a BoundEstimate.
std::string to_json(const BoundEstimate& estimate);

}  // namespace allocatron::bounds

#include "allocatron/bounds.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>

namespace allocatron::bounds {

using nlohmann::json;

namespace {

constexpr std::uint64_t kMaxWidth = std::numeric_limits<std::uint64_t>::max();

// 3^depth compared against w without overflow: returns -1/0/+1 for
// 3^depth < w, == w, > w.
int compare_pow3(int depth, std::uint64_t w) {
  std::uint64_t p = 1;
  for (int i = 0; i < depth; ++i) {
    if (p > w / 3) return 1;  // next multiply passes w (and may overflow)
    p *= 3;
    if (p > w) return 1;
  }
  return p == w ? 0 : -1;
}

void require_positive_dims(int depth, int width, int heads) {
  if (depth < 1 || width < 1 || heads < 1)
    throw Error(Error::Kind::InvalidArgument, "depth, width and heads must be >= 1");
}

double theorem1_upper_value(int depth, std::uint64_t width, int heads) {
  return input_copies_real(depth) * log3(static_cast<double>(width) + heads);
}

double theorem2_upper_value(int depth, std::uint64_t width, int heads) {
  const double w = static_cast<double>(width);
  (void)heads;
  const double c1 = depth;
  const double c2 = -2.0 * w * log3(w / (2.0 * std::sqrt(2.0 * M_E))) + log3(w);
  return 2.0 * w * depth + c1 + c2;
}

}  // namespace

const char* regime_name(Regime regime) {
  switch (regime) {
    case Regime::DepthEfficiency: return "DepthEfficiency";
    case Regime::DepthInefficiency: return "DepthInefficiency";
    case Regime::Boundary: return "Boundary";
  }
  return "Unknown";
}

double depth_threshold(int width) {
  if (width < 1) throw Error(Error::Kind::InvalidArgument, "width must be >= 1");
  return log3(static_cast<double>(width));
}

Regime classify_regime(int depth, int width) {
  if (depth < 1 || width < 1)
    throw Error(Error::Kind::InvalidArgument, "depth and width must be >= 1");
  const int cmp = compare_pow3(depth, static_cast<std::uint64_t>(width));
  if (cmp < 0) return Regime::DepthEfficiency;
  if (cmp > 0) return Regime::DepthInefficiency;
  return Regime::Boundary;
}

BoundEstimate theorem1_bounds(int depth, int width, int heads) {
  require_positive_dims(depth, width, heads);
  if (classify_regime(depth, width) != Regime::DepthEfficiency)
    throw Error(Error::Kind::RegimeMismatch,
                "depth-efficiency bounds require depth < log3(width)");
  if (width <= heads)
    throw Error(Error::Kind::InvalidArgument, "width must exceed heads");

  const double a = -depth + 2.0 - log3(2.0);
  const double arg = log3(static_cast<double>(width - heads)) + a;
  if (arg <= 0.0)
    throw Error(Error::Kind::InvalidArgument,
                "lower bound argument log3(width - heads) + a must be positive");

  BoundEstimate est;
  est.regime = Regime::DepthEfficiency;
  est.raw_lower = std::pow(3.0, depth - 2) * arg;
  est.log3_lower = std::max(0.0, est.raw_lower);
  est.log3_upper = theorem1_upper_value(depth, width, heads);
  est.corrections["a"] = a;
  return est;
}

BoundEstimate theorem2_bounds(int depth, int width, int heads) {
  require_positive_dims(depth, width, heads);
  if (classify_regime(depth, width) != Regime::DepthInefficiency)
    throw Error(Error::Kind::RegimeMismatch,
                "depth-inefficiency bounds require depth > log3(width)");
  if (width <= heads + 2)
    throw Error(Error::Kind::InvalidArgument,
                "width must exceed heads + 2 so log3((width - heads)/2) stays positive");

  const double w = width;
  const double b1 = -depth * (heads / 2.0 + 1.0);
  const double b2 = -w * (1.0 + 0.5 * log3((w - heads) / 2.0));
  const double c1 = depth;
  const double c2 = -2.0 * w * log3(w / (2.0 * std::sqrt(2.0 * M_E))) + log3(w);

  BoundEstimate est;
  est.regime = Regime::DepthInefficiency;
  est.raw_lower = 0.5 * w * depth + b1 + b2;
  est.log3_lower = std::max(0.0, est.raw_lower);
  est.log3_upper = 2.0 * w * depth + c1 + c2;
  est.corrections["b1"] = b1;
  est.corrections["b2"] = b2;
  est.corrections["c1"] = c1;
  est.corrections["c2"] = c2;
  return est;
}

double exact_count_log_deep(int depth, int width, int heads) {
  require_positive_dims(depth, width, heads);
  if (width % heads != 0)
    throw Error(Error::Kind::InvalidArgument, "heads must divide width");
  const double head_dim = static_cast<double>(width) / heads;
  return input_copies_real(depth) * log3(heads * (head_dim + 1.0));
}

double exact_count_log_wide(int depth, int width) {
  if (depth < 1 || width < 1)
    throw Error(Error::Kind::InvalidArgument, "depth and width must be >= 1");
  const double c = input_copies_real(depth);
  const double w = width;
  return log3(w) + log3(c + 1.0) + log3_multiset_coefficient(w, 2.0 * c) +
         w * log3(2.0 * c / w + 1.0);
}

double residual_upper_bound(int depth, int width, int seq_len, int heads) {
  require_positive_dims(depth, width, heads);
  if (seq_len < 1) throw Error(Error::Kind::InvalidArgument, "seq_len must be >= 1");
  const double c = input_copies_real(depth);
  return depth * log3(static_cast<double>(depth)) +
         (4.0 * log3(static_cast<double>(width)) + log3(static_cast<double>(seq_len)) -
          log3(static_cast<double>(heads))) *
             c;
}

EquivalentWidth min_equivalent_shallow_width(int deep_depth, int deep_width, int heads,
                                             int shallow_depth) {
  require_positive_dims(deep_depth, deep_width, heads);
  if (shallow_depth < 1)
    throw Error(Error::Kind::InvalidArgument, "shallow depth must be >= 1");
  if (shallow_depth > deep_depth)
    throw Error(Error::Kind::InvalidArgument,
                "shallow depth must not exceed the deep depth");

  const Regime deep_regime = classify_regime(deep_depth, deep_width);
  BoundEstimate deep;
  if (deep_regime == Regime::DepthEfficiency)
    deep = theorem1_bounds(deep_depth, deep_width, heads);
  else if (deep_regime == Regime::DepthInefficiency)
    deep = theorem2_bounds(deep_depth, deep_width, heads);
  else
    throw Error(Error::Kind::RegimeMismatch,
                "deep configuration sits exactly on the depth threshold");

  const double target = deep.log3_lower;
  EquivalentWidth result;
  result.target_log3_lower = target;

  // Below the threshold the shallow network is in the depth-inefficiency
  // regime; its upper bound increases with width, so binary search for the
  // first satisfying width there.
  const bool pow3_fits = compare_pow3(shallow_depth, kMaxWidth) <= 0;
  std::uint64_t pow3 = 1;
  if (pow3_fits)
    for (int i = 0; i < shallow_depth; ++i) pow3 *= 3;

  const std::uint64_t below_lo = static_cast<std::uint64_t>(heads) + 3;
  const std::uint64_t below_hi =
      pow3_fits ? (pow3 > 0 ? pow3 - 1 : 0) : kMaxWidth;
  if (below_lo <= below_hi) {
    if (theorem2_upper_value(shallow_depth, below_hi, heads) >= target) {
      std::uint64_t lo = below_lo, hi = below_hi;
      while (lo < hi) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (theorem2_upper_value(shallow_depth, mid, heads) >= target)
          hi = mid;
        else
          lo = mid + 1;
      }
      result.width = lo;
      return result;
    }
  }

  if (!pow3_fits) return result;  // above-threshold region is out of reach

  // Above the threshold the depth-efficiency upper bound applies, again
  // increasing in width.
  std::uint64_t lo = std::max<std::uint64_t>(pow3 + 1, heads + 1);
  if (theorem1_upper_value(shallow_depth, kMaxWidth, heads) < target) return result;
  std::uint64_t hi = kMaxWidth;
  while (lo < hi) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (theorem1_upper_value(shallow_depth, mid, heads) >= target)
      hi = mid;
    else
      lo = mid + 1;
  }
  result.width = lo;
  return result;
}

std::string to_json(const BoundEstimate& estimate) {
  json doc;
  doc["log3_lower"] = estimate.log3_lower;
  doc["log3_upper"] = estimate.log3_upper;
  doc["regime"] = regime_name(estimate.regime);
  doc["raw_lower"] = estimate.raw_lower;
  doc["corrections"] = json::object();
  for (const auto& [key, value] : estimate.corrections) doc["corrections"][key] = value;
  return doc.dump(2) + "\n";
}

}  // namespace allocatron::bounds

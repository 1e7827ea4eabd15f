#pragma once

#include <string>
#include <vector>

#include "allocatron/common.hpp"

namespace allocatron::fit {

// Largest loss standard deviation observed across repeat training runs; used
// when a loss sweep does not report per-point noise.
inline constexpr double kDefaultLossStd = 2.1e-3;

struct LossRecord {
  int depth = 0;
  int width = 0;
  double test_loss = 0.0;
  double loss_std = kDefaultLossStd;
};

struct TransitionPoint {
  int depth = 0;
  double width = 0.0;
  double width_err = 0.0;
};

struct FitResult {
  double a = 0.0;
  double b = 0.0;
  double var_a = 0.0;
  double var_b = 0.0;
  double cov_ab = 0.0;
  double chi2_red = 0.0;
  double r2 = 0.0;
  int dof = 0;
};

// Locates the width where the shallow loss curve peels away from the deep
// one. Curves are aligned by non-embedding parameter count (12 L d_x^2, log
// scale) with linear interpolation of the deep curve, clamped outside its
// sampled range. The first sampled shallow width whose excess loss exceeds
// k_sigma combined standard deviations is w2; the sample to its left must be
// statistically indistinguishable and becomes w1. Returns the midpoint with
// width_err = w2 - w1 at the shallow depth.
TransitionPoint estimate_transition(const std::vector<LossRecord>& shallow,
                                    const std::vector<LossRecord>& deep,
                                    double k_sigma = 3.0);

// Weighted least squares of log(width) = a + b * depth with per-point sigma
// width_err / width. Covariance is the analytic inverse of the normal
// equations; chi2_red uses dof = n - 2; r2 compares against the weighted
// mean of the observations.
FitResult weighted_linear_fit(const std::vector<TransitionPoint>& points);

// Transition size N = 12 L e^{2a + 2bL} with first-order error propagation
// dN = 2 N sqrt(var_a + L^2 var_b + 2 L cov_ab).
struct TransitionSize {
  double n = 0.0;
  double dn = 0.0;
};
TransitionSize transition_size(int depth, const FitResult& fit);

// CSV with header `depth,width,test_loss,loss_std`; the loss_std column may
// be omitted (header and rows), in which case the default applies.
std::vector<LossRecord> parse_loss_csv(const std::string& text);
std::vector<LossRecord> load_loss_csv(const std::string& path);

// CSV with header `depth,width,width_err`.
std::vector<TransitionPoint> parse_transition_csv(const std::string& text);
std::vector<TransitionPoint> load_transition_csv(const std::string& path);

std::string to_json(const FitResult& fit);
FitResult fit_from_json(const std::string& text);

}  // namespace allocatron::fit

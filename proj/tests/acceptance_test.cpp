// Release gate: one line per criterion, nonzero exit if any of them fails.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "allocatron/bounds.hpp"
#include "allocatron/common.hpp"
#include "allocatron/data.hpp"
#include "allocatron/fit.hpp"
#include "allocatron/lab.hpp"
#include "allocatron/model.hpp"
#include "allocatron/plan.hpp"

namespace {

using Clock = std::chrono::steady_clock;

bool within(double value, double target, double tolerance) {
  return std::abs(value - target) <= tolerance;
}

bool within_rel(double value, double target, double rel) {
  return std::abs(value - target) <= rel * std::abs(target);
}

double max_rel_diff(const allocatron::model::MatrixD& a,
                    const allocatron::model::MatrixD& b) {
  double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  if (scale == 0.0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

struct Check {
  bool pass = true;
  std::ostringstream detail;

  void require(bool condition, const std::string& label) {
    if (!condition) {
      pass = false;
      detail << "    failed: " << label << "\n";
    }
  }
};

bool criterion_fit_reproduction(Check& check, double* seconds) {
  auto start = Clock::now();
  allocatron::fit::FitResult fit = allocatron::fit::weighted_linear_fit(
      allocatron::data::bundled_transition_points());
  *seconds = std::chrono::duration<double>(Clock::now() - start).count();

  check.require(within(fit.a, 5.039, 0.005), "a = 5.039 +- 0.005");
  check.require(within(fit.b, 0.0555, 0.0005), "b = 0.0555 +- 0.0005");
  check.require(within_rel(std::sqrt(fit.var_a), 0.030, 0.10), "sigma_a near 0.030");
  check.require(within_rel(std::sqrt(fit.var_b), 0.0013, 0.10), "sigma_b near 0.0013");
  check.require(within_rel(fit.cov_ab, -3.74e-5, 0.15), "cov_ab near -3.74e-5");
  check.require(within(fit.chi2_red, 0.854, 0.02), "chi2_red = 0.854 +- 0.02");
  check.require(within(fit.r2, 0.998, 0.001), "r2 = 0.998 +- 0.001");
  check.require(*seconds < 1.0, "runtime under 1 s");
  return check.pass;
}

bool criterion_transition_projections(Check& check) {
  allocatron::fit::FitResult fit = allocatron::data::paper_fit();
  allocatron::fit::TransitionSize n96 = allocatron::fit::transition_size(96, fit);
  allocatron::fit::TransitionSize n80 = allocatron::fit::transition_size(80, fit);
  allocatron::fit::TransitionSize n100 = allocatron::fit::transition_size(100, fit);

  check.require(within_rel(n96.n, 1.17e12, 0.03), "N(96) within 3% of 1.17e12");
  check.require(within_rel(n96.dn, 2.3e11, 0.10), "dN(96) within 10% of 2.3e11");
  check.require(within_rel(n80.n, 1.65e11, 0.03), "N(80) within 3% of 1.65e11");
  check.require(within_rel(n80.dn, 2.5e10, 0.10), "dN(80) within 10% of 2.5e10");
  check.require(within(n100.dn / n100.n, 0.20, 0.02), "dN/N at L=100 = 0.20 +- 0.02");
  return check.pass;
}

bool criterion_allocation_table(Check& check) {
  struct ExpectedRow {
    const char* name;
    int depth;
    double width;
  };
  const ExpectedRow expected[] = {
      {"GPT-3 Small", 23, 555.0}, {"GPT-3 Medium", 32, 886.0},
      {"GPT-3 Large", 38, 1220.0}, {"GPT-3 XL", 42, 1550.0},
      {"GPT-3 2.7B", 47, 2110.0},  {"GPT-3 6.7B", 54, 3150.0},
      {"GPT-3 13B", 60, 4200.0},   {"GPT-3 175B", 80, 13500.0},
      {"1-Trillion", 95, 30100.0}};

  std::vector<allocatron::plan::TableRow> table = allocatron::plan::generate_table1(
      allocatron::data::paper_fit(), allocatron::data::bundled_gpt3_roster());
  check.require(table.size() == 9, "nine table rows");
  if (table.size() != 9) return check.pass;

  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& row = table[i];
    const auto& want = expected[i];
    check.require(std::abs(row.suggestion.depth_opt - want.depth) <= 1,
                  std::string(want.name) + ": depth within +-1");
    bool width_close =
        within_rel(row.suggestion.width_from_budget, want.width, 0.10) ||
        within_rel(row.suggestion.width_from_fit, want.width, 0.10);
    check.require(width_close, std::string(want.name) + ": width within 10%");
  }
  for (std::size_t i = 0; i < 7; ++i) {
    check.require(table[i].audit.has_value() &&
                      table[i].audit->verdict == allocatron::plan::Verdict::TooShallow,
                  std::string(expected[i].name) + ": verdict TooShallow");
  }
  check.require(table[7].audit.has_value() &&
                    table[7].audit->verdict == allocatron::plan::Verdict::TooDeep,
                "GPT-3 175B: verdict TooDeep");
  check.require(!table[8].audit.has_value(), "1-Trillion: no trained shape");
  return check.pass;
}

bool criterion_parameter_count(Check& check) {
  check.require(
      allocatron::model::count_nonembedding_params(96, 12288) == 173946175488ull,
      "count_nonembedding_params(96, 12288) exact");
  return check.pass;
}

bool criterion_model_properties(Check& check) {
  using namespace allocatron::model;
  const double scale = 1.07;

  for (int depth : {1, 2, 3}) {
    for (int width : {2, 4, 8}) {
      for (int heads : {1, 2}) {
        if (width % heads != 0) continue;
        NetworkConfig config{depth, width, heads, 4};
        double factor =
            std::pow(scale, static_cast<double>(allocatron::pow3(depth)));
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
          ThetaD theta = random_theta(config, seed);
          MatrixD x = random_input(config, seed + 1000);
          MatrixD y = network_forward(theta, x);
          MatrixD y_scaled = network_forward(theta, MatrixD(scale * x));
          if (max_rel_diff(y_scaled, MatrixD(factor * y)) > 1e-9) {
            check.require(false, "homogeneity at depth " + std::to_string(depth) +
                                     " width " + std::to_string(width) + " heads " +
                                     std::to_string(heads) + " seed " +
                                     std::to_string(seed));
          }
        }

        ThetaD theta = random_theta(config, 99);
        MatrixD x = random_input(config, 100);
        const int perm[4] = {2, 0, 3, 1};
        MatrixD x_perm(width, 4);
        MatrixD y = network_forward(theta, x);
        MatrixD expected(width, 4);
        for (int j = 0; j < 4; ++j) {
          x_perm.col(j) = x.col(perm[j]);
          expected.col(j) = y.col(perm[j]);
        }
        MatrixD y_perm = network_forward(theta, x_perm);
        if (max_rel_diff(y_perm, expected) > 1e-12) {
          check.require(false, "permutation invariance at depth " +
                                   std::to_string(depth) + " width " +
                                   std::to_string(width));
        }

        if (depth <= 2) {
          for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            ThetaD theta_s = random_theta(config, seed + 2000);
            MatrixD x_s = random_input(config, seed + 3000);
            MatrixD direct = network_forward(theta_s, x_s);
            MatrixD structural = structural_form_forward(theta_s, x_s);
            if (max_rel_diff(structural, direct) > 1e-10) {
              check.require(false, "structural form at depth " +
                                       std::to_string(depth) + " width " +
                                       std::to_string(width) + " seed " +
                                       std::to_string(seed));
            }
          }
        }
      }
    }
  }
  return check.pass;
}

bool criterion_lab_rank_identities(Check& check, double* seconds) {
  using namespace allocatron::lab;
  auto start = Clock::now();

  for (int dim = 1; dim <= 4; ++dim) {
    for (int lambda = 1; lambda <= 4; ++lambda) {
      if (allocatron::multiset_coefficient(dim, lambda) > 512) continue;
      HadamardRankReport report = verify_hadamard_rank(dim, lambda, 2.0);
      check.require(report.pass, "hadamard rank at dim " + std::to_string(dim) +
                                     " lambda " + std::to_string(lambda));
    }
  }

  NetworkConfig config{3, 5, 1, 4};
  MatrixD v = build_omega_matrix(2, 3, 2.0);
  Assignment assignment = construct_assignment(v, config);
  MatrixC grid = grid_submatrix(assignment.theta, assignment.grid);
  int rank = grid_matricization_rank(assignment.theta, assignment.grid);
  check.require(rank == 4, "grid rank equals multiset(2,3) = 4");

  MatrixD target = hadamard_power(MatrixD(v * v.transpose()), 3);
  ProportionalityReport proportion = proportionality(grid, target);
  check.require(proportion.max_rel_deviation <= 1e-8,
                "grid proportional to hadamard cube within 1e-8");

  for (const auto& [part_a, part_b] : enumerate_balanced_partitions(4)) {
    GridSpec spec = assignment.grid;
    spec.part_a = part_a;
    spec.part_b = part_b;
    check.require(grid_matricization_rank(assignment.theta, spec) == rank,
                  "rank stable across balanced partitions at N = 4");
  }

  NetworkConfig config6{3, 5, 1, 6};
  Assignment assignment6 = construct_assignment(v, config6);
  int rank6 = grid_matricization_rank(assignment6.theta, assignment6.grid);
  for (const auto& [part_a, part_b] : enumerate_balanced_partitions(6)) {
    GridSpec spec = assignment6.grid;
    spec.part_a = part_a;
    spec.part_b = part_b;
    check.require(grid_matricization_rank(assignment6.theta, spec) == rank6,
                  "rank stable across balanced partitions at N = 6");
  }

  *seconds = std::chrono::duration<double>(Clock::now() - start).count();
  check.require(*seconds < 60.0, "runtime under 60 s");
  return check.pass;
}

bool criterion_bound_coherence(Check& check) {
  using namespace allocatron::bounds;
  int evaluated = 0;
  for (int depth = 1; depth <= 8; ++depth) {
    for (int width = 4; width <= 300; ++width) {
      for (int heads : {1, 2, 3, 4}) {
        if (width % heads != 0 || width <= heads + 2) continue;
        Regime regime = classify_regime(depth, width);
        if (regime == Regime::Boundary) continue;

        BoundEstimate estimate;
        try {
          if (regime == Regime::DepthEfficiency) {
            estimate = theorem1_bounds(depth, width, heads);
          } else {
            estimate = theorem2_bounds(depth, width, heads);
          }
        } catch (const allocatron::Error&) {
          continue;
        }
        ++evaluated;

        if (estimate.log3_lower < 0.0 || estimate.log3_lower > estimate.log3_upper) {
          check.require(false, "bound ordering at depth " + std::to_string(depth) +
                                   " width " + std::to_string(width) + " heads " +
                                   std::to_string(heads));
        }
        if (estimate.regime != regime) {
          check.require(false, "regime mismatch at depth " + std::to_string(depth) +
                                   " width " + std::to_string(width));
        }
        try {
          if (regime == Regime::DepthEfficiency) {
            theorem2_bounds(depth, width, heads);
          } else {
            theorem1_bounds(depth, width, heads);
          }
          check.require(false, "opposite theorem accepted depth " +
                                   std::to_string(depth) + " width " +
                                   std::to_string(width));
        } catch (const allocatron::Error& e) {
          if (e.kind() != allocatron::Error::Kind::RegimeMismatch) {
            check.require(false, "opposite theorem wrong rejection kind");
          }
        }
      }
    }
  }
  check.require(evaluated >= 1000,
                "at least 1000 configurations evaluated, got " +
                    std::to_string(evaluated));

  using namespace allocatron::lab;
  struct LabCase {
    int depth;
    int width;
    int seq_len;
  };
  for (const LabCase& lab_case : {LabCase{3, 5, 4}, LabCase{4, 5, 4}, LabCase{3, 7, 4}}) {
    NetworkConfig config{lab_case.depth, lab_case.width, 1, lab_case.seq_len};
    int half = (config.head_dim() - 1) / 2;
    MatrixD v = build_omega_matrix(
        half, static_cast<int>(allocatron::pow3(config.depth - 2)), 2.0);
    Assignment assignment = construct_assignment(v, config);
    int rank = grid_matricization_rank(assignment.theta, assignment.grid);
    double count_bound = allocatron::bounds::exact_count_log_deep(
        config.depth, config.width, config.heads);
    if (allocatron::log3(static_cast<double>(rank)) > count_bound) {
      check.require(false, "measured rank exceeds count bound at depth " +
                               std::to_string(lab_case.depth) + " width " +
                               std::to_string(lab_case.width));
    }
  }
  return check.pass;
}

bool criterion_fit_statistics(Check& check) {
  using allocatron::fit::FitResult;
  using allocatron::fit::TransitionPoint;

  const double a0 = 5.0;
  const double b0 = 0.05;
  const double sigma_log = 0.03;
  int recovered = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    allocatron::Rng rng(seed);
    std::vector<TransitionPoint> points;
    for (int depth = 3; depth <= 30; depth += 3) {
      double y = a0 + b0 * depth + sigma_log * rng.next_normal();
      double width = std::exp(y);
      points.push_back({depth, width, sigma_log * width});
    }
    FitResult fit = allocatron::fit::weighted_linear_fit(points);
    bool ok = std::abs(fit.a - a0) <= 3.0 * std::sqrt(fit.var_a) &&
              std::abs(fit.b - b0) <= 3.0 * std::sqrt(fit.var_b);
    if (ok) ++recovered;
  }
  check.require(recovered >= 99, "Monte-Carlo recovery " + std::to_string(recovered) +
                                     "/100, need >= 99");

  std::vector<TransitionPoint> collinear;
  for (int depth : {1, 2, 3}) {
    double width = std::exp(static_cast<double>(1 + 2 * depth));
    collinear.push_back({depth, width, 0.5 * width});
  }
  FitResult exact = allocatron::fit::weighted_linear_fit(collinear);
  check.require(exact.chi2_red == 0.0, "collinear chi2_red exactly 0");
  check.require(exact.r2 == 1.0, "collinear r2 exactly 1");
  return check.pass;
}

struct Criterion {
  const char* label;
  bool pass;
  double seconds;
  std::string detail;
};

}  // namespace

int main() {
  std::vector<Criterion> results;

  {
    Check check;
    double seconds = 0.0;
    bool pass = criterion_fit_reproduction(check, &seconds);
    results.push_back({"fit reproduction", pass, seconds, check.detail.str()});
  }
  {
    Check check;
    auto start = Clock::now();
    bool pass = criterion_transition_projections(check);
    double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    results.push_back({"transition projections", pass, seconds, check.detail.str()});
  }
  {
    Check check;
    auto start = Clock::now();
    bool pass = criterion_allocation_table(check);
    double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    results.push_back({"allocation table", pass, seconds, check.detail.str()});
  }
  {
    Check check;
    auto start = Clock::now();
    bool pass = criterion_parameter_count(check);
    double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    results.push_back({"parameter count", pass, seconds, check.detail.str()});
  }
  {
    Check check;
    auto start = Clock::now();
    bool pass = criterion_model_properties(check);
    double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    results.push_back({"model properties", pass, seconds, check.detail.str()});
  }
  {
    Check check;
    double seconds = 0.0;
    bool pass = criterion_lab_rank_identities(check, &seconds);
    results.push_back({"lab rank identities", pass, seconds, check.detail.str()});
  }
  {
    Check check;
    auto start = Clock::now();
    bool pass = criterion_bound_coherence(check);
    double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    results.push_back({"bound coherence", pass, seconds, check.detail.str()});
  }
  {
    Check check;
    auto start = Clock::now();
    bool pass = criterion_fit_statistics(check);
    double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    results.push_back({"fit statistics", pass, seconds, check.detail.str()});
  }

  bool all_pass = true;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const Criterion& criterion = results[i];
    std::printf("criterion %zu [%s] %s (%.3f s)\n", i + 1,
                criterion.pass ? "PASS" : "FAIL", criterion.label, criterion.seconds);
    if (!criterion.pass) {
      std::fputs(criterion.detail.c_str(), stdout);
      all_pass = false;
    }
  }
  return all_pass ? 0 : 1;
}

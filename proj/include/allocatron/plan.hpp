#pragma once

#include <optional>
#include <string>
#include <vector>

#include "allocatron/common.hpp"
#include "allocatron/fit.hpp"

namespace allocatron::plan {

// Recommended allocation for a non-embedding parameter budget. Two width
// figures are reported: one spends the budget exactly at the rounded depth,
// the other reads the fitted transition curve; the caller chooses.
struct ArchitectureSuggestion {
  double budget = 0.0;
  int depth_opt = 0;           // rounded root of 12 L e^{2a+2bL} = budget
  double depth_raw = 0.0;      // unrounded root
  double width_from_budget = 0.0;  // sqrt(budget / (12 depth_opt))
  double width_from_fit = 0.0;     // e^{a + b depth_opt}
  double n_transition = 0.0;       // transition size at depth_opt
  double dn = 0.0;
};

enum class Verdict { TooShallow, TooDeep, NearOptimal };
const char* verdict_name(Verdict verdict);

// margin = N / N_Transition(L); the NearOptimal zone is one propagated
// sigma wide on each side (tol = dN / N_Transition).
struct AuditVerdict {
  Verdict verdict = Verdict::NearOptimal;
  double margin = 0.0;
  double tol = 0.0;
  double params = 0.0;
  double n_transition = 0.0;
  double dn = 0.0;
};

// Unique root L* of 12 L e^{2a+2bL} = params, by bisection in log space over
// [1, 1e4]. Requires b > 0 so the left side is strictly increasing.
double optimal_depth(double params, const fit::FitResult& fit);

ArchitectureSuggestion suggest_architecture(double params, const fit::FitResult& fit);

AuditVerdict audit_architecture(int depth, int width, const fit::FitResult& fit);

struct CurvePoint {
  int depth = 0;
  double n = 0.0;
  double dn = 0.0;
};
std::vector<CurvePoint> emit_transition_curve(const fit::FitResult& fit, int depth_min,
                                              int depth_max, int step = 1);

// A named model: budget in non-embedding parameters, plus the trained
// architecture when known.
struct ModelSpec {
  std::string name;
  double params = 0.0;
  std::optional<int> depth;
  std::optional<int> width;
};

struct TableRow {
  ModelSpec model;
  double budget = 0.0;  // recomputed from the trained shape when known
  ArchitectureSuggestion suggestion;
  std::optional<AuditVerdict> audit;
};

// One row per model: trained columns echoed, optimal columns from
// suggest_architecture, audit verdict when the trained shape is known. The
// budget is 12 L d_x^2 of the trained shape when available, else the nominal
// parameter count.
std::vector<TableRow> generate_table1(const fit::FitResult& fit,
                                      const std::vector<ModelSpec>& models);

// Roster JSON: list of {"name": ..., "params": ..., "depth": ..., "width":
// ...} with depth/width optional.
std::vector<ModelSpec> roster_from_json(const std::string& text);
std::vector<ModelSpec> load_roster(const std::string& path);

std::string curve_to_csv(const std::vector<CurvePoint>& curve);
std::string table_to_csv(const std::vector<TableRow>& rows);
std::string table_to_text(const std::vector<TableRow>& rows);

}  // namespace allocatron::plan

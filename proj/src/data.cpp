#include "allocatron/data.hpp"

#include <cstdlib>

namespace allocatron::data {

namespace {

const char* kTransitionsCsv =
    "depth,width,width_err\n"
    "6,214,6\n"
    "12,308,12\n"
    "18,436,20\n"
    "24,572,12\n"
    "30,824,16\n";

const char* kRosterJson = R"([
  {"name": "GPT-3 Small", "params": 125000000, "depth": 12, "width": 768},
  {"name": "GPT-3 Medium", "params": 350000000, "depth": 24, "width": 1024},
  {"name": "GPT-3 Large", "params": 760000000, "depth": 24, "width": 1536},
  {"name": "GPT-3 XL", "params": 1300000000, "depth": 24, "width": 2048},
  {"name": "GPT-3 2.7B", "params": 2700000000, "depth": 32, "width": 2560},
  {"name": "GPT-3 6.7B", "params": 6700000000, "depth": 32, "width": 4096},
  {"name": "GPT-3 13B", "params": 13000000000, "depth": 40, "width": 5140},
  {"name": "GPT-3 175B", "params": 175000000000, "depth": 96, "width": 12288},
  {"name": "1-Trillion", "params": 1000000000000}
]
)";

}  // namespace

fit::FitResult paper_fit() {
  fit::FitResult f;
  f.a = 5.039;
  f.b = 5.55e-2;
  f.var_a = 9.4e-4;
  f.var_b = 1.7e-6;
  f.cov_ab = -3.74e-5;
  f.chi2_red = 0.854;
  f.r2 = 0.998;
  f.dof = 3;
  return f;
}

std::string bundled_transitions_csv() { return kTransitionsCsv; }

std::string bundled_roster_json() { return kRosterJson; }

std::vector<fit::TransitionPoint> bundled_transition_points() {
  return fit::parse_transition_csv(kTransitionsCsv);
}

std::vector<plan::ModelSpec> bundled_gpt3_roster() {
  return plan::roster_from_json(kRosterJson);
}

std::vector<fit::TransitionPoint> resolve_transitions() {
  if (const char* dir = std::getenv("ALLOCATRON_DATA_DIR"))
    return fit::load_transition_csv(std::string(dir) + "/transitions_scaling.csv");
  return bundled_transition_points();
}

std::vector<plan::ModelSpec> resolve_roster() {
  if (const char* dir = std::getenv("ALLOCATRON_DATA_DIR"))
    return plan::load_roster(std::string(dir) + "/gpt3_roster.json");
  return bundled_gpt3_roster();
}

}  // namespace allocatron::data

#pragma once

#include <string>
#include <vector>

#include "allocatron/fit.hpp"
#include "allocatron/plan.hpp"

namespace allocatron::data {

// Published fit of log(width) = a + b * depth over the bundled transition
// points, with its covariance, exactly as displayed.
fit::FitResult paper_fit();

// Embedded copies of the files under data/.
std::vector<fit::TransitionPoint> bundled_transition_points();
std::vector<plan::ModelSpec> bundled_gpt3_roster();
std::string bundled_transitions_csv();
std::string bundled_roster_json();

// Bundled data, except that when ALLOCATRON_DATA_DIR is set the files
// transitions_scaling.csv / gpt3_roster.json are read from that directory
// instead.
std::vector<fit::TransitionPoint> resolve_transitions();
std::vector<plan::ModelSpec> resolve_roster();

}  // namespace allocatron::data

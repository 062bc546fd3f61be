/*
Copyright 2026 The jtnoma Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "jtnoma/feasibility.hpp"

namespace jtnoma {

/// One convergence-log row. `phase` is "power", "schedule" or "outer".
struct TraceRow {
    std::string phase;
    std::size_t outer = 0;     // alternating-loop iteration (0 inside a single sub-solve)
    std::size_t iteration = 0; // ALM outer iteration within the phase
    double objective = 0.0;
    double max_violation = 0.0;
    double alpha = 0.0;
};

struct SolveReport {
    bool converged = false;
    bool feasible = false;
    FeasibilityResult audit;
    double utility = 0.0;       // total QoE under the exact interference model
    double model_utility = 0.0; // same under the optimization model (convex JT), power phase only
    std::size_t outer_iterations = 0;
    std::vector<TraceRow> trace;
    std::vector<double> utility_trace; // U after initialization and after every outer iteration
    std::vector<double> user_rate;     // bits/s/Hz
    std::vector<double> user_mos;
    double runtime_seconds = 0.0;
    std::string message;
};

} // namespace jtnoma

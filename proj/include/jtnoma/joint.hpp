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
#include <cstdint>

#include "jtnoma/model.hpp"
#include "jtnoma/power_solver.hpp"
#include "jtnoma/report.hpp"
#include "jtnoma/schedule_solver.hpp"

namespace jtnoma {

struct JointSettings {
    std::size_t max_outer_iters = 50;
    double err_tol = 1e-3; // stop once |U(T) - U(T-1)| < err_tol with an unchanged schedule
    PowerSolveConfig power;
    ScheduleSolveConfig schedule;
    // Seed of the random relaxed starting schedule; the instance seed when unset.
    std::uint64_t init_seed = 0;
    bool init_seed_from_instance = true;

    void validate() const;
};

struct JointResult {
    Schedule schedule;
    PowerAllocation power;
    SolveReport report;
};

/// Alternating joint allocation: uniform powers p = p_max/N and q = q_max/N, a random
/// relaxed schedule repaired to feasibility, then power and schedule solves in turn
/// until the utility settles at a feasible iterate and the schedule stops changing. A run
/// that hits the iteration limit returns its best iterate with converged = false. Throws
/// InfeasibleError when no start schedule exists or the MBS budget cannot carry the PUTs.
JointResult run_algorithm1(const NetworkInstance& inst, const JointSettings& settings = {});

} // namespace jtnoma

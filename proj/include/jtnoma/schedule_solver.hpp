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

#include <array>
#include <cstddef>

#include "jtnoma/alm.hpp"
#include "jtnoma/model.hpp"
#include "jtnoma/report.hpp"

namespace jtnoma {

/// Extra scheduling restrictions of the comparison schemes.
struct SchemeRules {
    bool allow_jt = true;   // false: every SUT has at most one serving SBS
    bool allow_noma = true; // false: at most one SUT per (SBS, subcarrier)
};

struct ScheduleSolveConfig {
    AlmSettings alm = default_alm();
    SchemeRules rules;
    double low_rate_slope = 0.1; // optimizer-side MOS continuation below the lower anchor
    bool run_alm = true;
    bool polish = true;
    std::size_t max_polish_passes = 50;

    static AlmSettings default_alm()
    {
        AlmSettings s;
        s.max_outer_iters = 30;
        s.max_inner_iters = 30;
        return s;
    }
};

struct LinearizationResiduals {
    Tensor3 chi_minus_theta;   // chi - theta
    Tensor3 chi_minus_eps;     // chi - eps
    Tensor3 product_lower;     // theta + eps - 1 - chi
};

LinearizationResiduals linearization_residuals(const Schedule& s);

/// sum(x - x^2) over theta, eps and chi.
std::array<double, 3> binary_forcing_residuals(const Schedule& s);

/// Rounds a relaxed schedule at 0.5 and repairs it until it satisfies the association,
/// subcarrier, load, SIC and precedence constraints and the scheme rules. Capped
/// resources are freed by dropping the assignments with the lowest marginal utility
/// under `pw`. Throws InfeasibleError when no repair exists.
Schedule round_and_repair(const Schedule& relaxed, const NetworkInstance& inst, const PowerAllocation& pw,
                          const SchemeRules& rules = {});

/// Checks the binary, association, subcarrier, load, SIC and precedence constraints
/// and the scheme rules only.
bool schedule_admissible(const NetworkInstance& inst, const Schedule& s, const SchemeRules& rules = {});

struct ScheduleSolveResult {
    Schedule schedule;
    PowerAllocation power; // pw_fixed, with powers for links the solver switched on
    SolveReport report;
};

/// Hill climbing over single-link add/remove/replace/relocate and pairwise subcarrier
/// swaps, keeping every constraint satisfied. New links take min(current entry,
/// PUT-protection cap) and may rescale their SBS to stay within budget.
ScheduleSolveResult local_search(const NetworkInstance& inst, const Schedule& start, const PowerAllocation& pw,
                                 const SchemeRules& rules = {}, std::size_t max_passes = 50);

ScheduleSolveResult solve_schedule(const NetworkInstance& inst, const PowerAllocation& pw_fixed,
                                   const Schedule& start, const ScheduleSolveConfig& cfg = {});

} // namespace jtnoma

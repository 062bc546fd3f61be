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

#include "jtnoma/alm.hpp"
#include "jtnoma/interference.hpp"
#include "jtnoma/model.hpp"
#include "jtnoma/report.hpp"

namespace jtnoma {

enum class LambdaPolicy { fixed, per_pair_ratio };

struct PowerSolveConfig {
    LambdaPolicy lambda_policy = LambdaPolicy::per_pair_ratio;
    double fixed_lambda = 1.0;
    double power_floor = 1e-12; // W
    // Slope fraction of the optimizer-side MOS continuation below the lower rate anchor.
    double low_rate_slope = 0.1;
    AlmSettings alm;

    void validate() const;
};

inline constexpr double kLambdaMin = 1e-6;
inline constexpr double kLambdaMax = 1e6;

/// p2/p1 clipped to [kLambdaMin, kLambdaMax]; 1 when p1 is below the floor.
double refresh_lambda(double p1, double p2, double power_floor = 1e-12);
/// Per-pair weights lambda(l1, l2, g, n) = p(l2,g,n) / p(l1,g,n) from a previous iterate.
PairLambda refresh_lambda(const NetworkInstance& inst, const PowerAllocation& prev, double power_floor = 1e-12);

/// Pulls a power allocation back into the power, PUT QoS and backhaul constraints for a fixed schedule by
/// clipping, budget scaling, raising MBS power on short PUTs and scaling down the SBS
/// powers that interfere with them. Never increases an SBS power entry.
PowerAllocation restore_power_feasibility(const NetworkInstance& inst, const Schedule& sched, PowerAllocation pw);

/// Least total MBS power meeting every PUT rate target with all SBSs silent. Above
/// q_max the instance has no feasible point under any schedule.
double min_mbs_power(const NetworkInstance& inst);

struct PowerSolveResult {
    PowerAllocation power;
    SolveReport report;
};

/// Maximizes total QoE over (p, q) for a fixed binary schedule. Unscheduled p entries
/// are returned unchanged.
PowerSolveResult solve_power(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& start,
                             const PowerSolveConfig& cfg = {});

} // namespace jtnoma

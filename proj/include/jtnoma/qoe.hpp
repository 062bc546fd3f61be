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

#include <vector>

#include "jtnoma/interference.hpp"
#include "jtnoma/model.hpp"

namespace jtnoma {

/// Log-rate MOS law calibrated so that rate_anchor_min maps to 1 and
/// rate_anchor_max maps to mos_max, clamped to [1, mos_max].
struct MosCurve {
    ServiceProfile profile;
    double slope = 0.0;     // MOS per log2(rate) unit
    double intercept = 0.0; // MOS at rate 1

    static MosCurve for_profile(const ServiceProfile& profile);
    static MosCurve for_kind(ServiceKind kind) { return for_profile(ServiceProfile::for_kind(kind)); }
};

inline constexpr double kRateFloor = 1e-6;

double mos(const MosCurve& curve, double rate);
/// d mos / d rate; 0 on the clamped parts (a valid subgradient at the kinks).
double mos_derivative(const MosCurve& curve, double rate);

/// Optimizer-only variant of the curve: below rate_anchor_min it continues linearly
/// with `low_slope_fraction` times the tangent slope at the anchor, so users on the
/// floor still see a gradient. With fraction 0 it equals mos() on [0, inf).
double surrogate_mos(const MosCurve& curve, double rate, double low_slope_fraction);
double surrogate_mos_derivative(const MosCurve& curve, double rate, double low_slope_fraction);

double qoe_from_rates(const MosCurve& curve, const std::vector<double>& rates);

std::vector<double> user_rates(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw);
std::vector<double> user_mos(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw);
/// Sum of per-SUT MOS under the exact interference model.
double total_qoe(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw);

/// Gradient of total_qoe with respect to p and q for a fixed schedule, through the
/// exact or the convexified JT term. Entries of unscheduled links are 0.
RateGradient mos_gradient_wrt_power(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw,
                                    JtModel jt = JtModel::exact, const PairLambda* lambda = nullptr);

} // namespace jtnoma

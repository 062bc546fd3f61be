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

#include "jtnoma/qoe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace jtnoma {

MosCurve MosCurve::for_profile(const ServiceProfile& profile)
{
    if (!(profile.rate_anchor_min > 0.0 && profile.rate_anchor_min < profile.rate_anchor_max))
        throw std::invalid_argument("MosCurve: rate anchors must satisfy 0 < min < max");
    if (!(profile.mos_max > 1.0)) throw std::invalid_argument("MosCurve: mos_max must exceed 1");
    MosCurve c;
    c.profile = profile;
    c.slope = (profile.mos_max - 1.0) / (std::log2(profile.rate_anchor_max) - std::log2(profile.rate_anchor_min));
    c.intercept = 1.0 - c.slope * std::log2(profile.rate_anchor_min);
    return c;
}

double mos(const MosCurve& curve, double rate)
{
    if (rate < kRateFloor) return 1.0;
    // Anchors are returned exactly rather than through the log arithmetic.
    if (rate <= curve.profile.rate_anchor_min) return 1.0;
    if (rate >= curve.profile.rate_anchor_max) return curve.profile.mos_max;
    return std::clamp(curve.intercept + curve.slope * std::log2(rate), 1.0, curve.profile.mos_max);
}

double mos_derivative(const MosCurve& curve, double rate)
{
    if (rate <= curve.profile.rate_anchor_min || rate >= curve.profile.rate_anchor_max) return 0.0;
    return curve.slope / (rate * std::numbers::ln2);
}

double surrogate_mos(const MosCurve& curve, double rate, double low_slope_fraction)
{
    const double r0 = curve.profile.rate_anchor_min;
    if (rate >= r0 || low_slope_fraction <= 0.0) return mos(curve, rate);
    const double tangent = curve.slope / (r0 * std::numbers::ln2);
    return 1.0 + low_slope_fraction * tangent * (std::max(rate, 0.0) - r0);
}

double surrogate_mos_derivative(const MosCurve& curve, double rate, double low_slope_fraction)
{
    const double r0 = curve.profile.rate_anchor_min;
    if (rate >= r0 || low_slope_fraction <= 0.0) return mos_derivative(curve, rate);
    return low_slope_fraction * curve.slope / (r0 * std::numbers::ln2);
}

double qoe_from_rates(const MosCurve& curve, const std::vector<double>& rates)
{
    double total = 0.0;
    for (double r : rates) total += mos(curve, r);
    return total;
}

std::vector<double> user_rates(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw)
{
    RateModel model(inst);
    model.set_indicator(sched);
    model.forward(pw, JtModel::exact, nullptr, false);
    return model.sut_rates();
}

std::vector<double> user_mos(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw)
{
    const auto curve = MosCurve::for_kind(inst.config.service);
    auto rates = user_rates(inst, sched, pw);
    for (double& r : rates) r = mos(curve, r);
    return rates;
}

double total_qoe(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw)
{
    return qoe_from_rates(MosCurve::for_kind(inst.config.service), user_rates(inst, sched, pw));
}

RateGradient mos_gradient_wrt_power(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw,
                                    JtModel jt, const PairLambda* lambda)
{
    const auto curve = MosCurve::for_kind(inst.config.service);
    RateModel model(inst);
    model.set_indicator(sched);
    model.forward(pw, jt, lambda, false);

    RateAdjoint adj;
    adj.link_weight = Tensor3(inst.num_sbs(), inst.num_sut(), inst.num_subcarriers());
    const auto& rates = model.sut_rates();
    for (std::size_t g = 0; g < inst.num_sut(); ++g) {
        const double d = mos_derivative(curve, rates[g]);
        for (std::size_t l = 0; l < inst.num_sbs(); ++l)
            for (std::size_t n = 0; n < inst.num_subcarriers(); ++n) adj.link_weight(l, g, n) = d;
    }
    RateGradient grad = model.backward(adj);
    for (std::size_t l = 0; l < inst.num_sbs(); ++l)
        for (std::size_t g = 0; g < inst.num_sut(); ++g)
            for (std::size_t n = 0; n < inst.num_subcarriers(); ++n)
                if (sched.link(l, g, n) == 0.0) grad.d_p(l, g, n) = 0.0;
    return grad;
}

} // namespace jtnoma

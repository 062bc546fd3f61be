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

#include "jtnoma/feasibility.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "jtnoma/interference.hpp"
#include "jtnoma/qoe.hpp"

namespace jtnoma {

std::string to_string(ConstraintFamily family)
{
    switch (family) {
    case ConstraintFamily::mbs_power: return "mbs_power";
    case ConstraintFamily::sbs_power: return "sbs_power";
    case ConstraintFamily::put_qos: return "put_qos";
    case ConstraintFamily::mos_floor: return "mos_floor";
    case ConstraintFamily::backhaul: return "backhaul";
    case ConstraintFamily::load: return "load";
    case ConstraintFamily::min_assoc: return "min_assoc";
    case ConstraintFamily::min_subc: return "min_subc";
    case ConstraintFamily::sic: return "sic";
    case ConstraintFamily::precedence: return "precedence";
    }
    return "unknown";
}

double FeasibilityTolerances::for_family(ConstraintFamily family) const
{
    switch (family) {
    case ConstraintFamily::mbs_power:
    case ConstraintFamily::sbs_power: return power;
    case ConstraintFamily::put_qos:
    case ConstraintFamily::mos_floor:
    case ConstraintFamily::backhaul: return rate;
    default: return count;
    }
}

std::string FeasibilityResult::describe() const
{
    std::ostringstream os;
    os << (feasible ? "feasible" : "infeasible") << " (worst " << to_string(worst.family);
    if (!worst.index.empty()) {
        os << '[';
        for (std::size_t i = 0; i < worst.index.size(); ++i) os << (i ? "," : "") << worst.index[i];
        os << ']';
    }
    os << " = " << worst.value << ')';
    return os.str();
}

ConstraintViolations violations(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw)
{
    const auto L = inst.num_sbs(), G = inst.num_sut(), M = inst.num_put(), N = inst.num_subcarriers();
    const auto& cfg = inst.config;
    ConstraintViolations v;

    double q_total = 0.0;
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t n = 0; n < N; ++n) q_total += pw.q(m, n);
    v.mbs_power = q_total - cfg.q_max;

    v.sbs_power.assign(L, 0.0);
    v.load.assign(L, 0.0);
    v.min_assoc.assign(G, 1.0);
    v.min_subc.assign(G, 1.0);
    v.sic.assign(N, 0.0);
    v.precedence = Tensor3(L, G, N);
    for (std::size_t l = 0; l < L; ++l) {
        double power = 0.0, users = 0.0;
        for (std::size_t g = 0; g < G; ++g) {
            users += sched.theta(l, g);
            v.min_assoc[g] -= sched.theta(l, g);
            for (std::size_t n = 0; n < N; ++n) {
                power += sched.link(l, g, n) * pw.p(l, g, n);
                v.min_subc[g] -= sched.eps(l, g, n);
                v.sic[n] += sched.eps(l, g, n);
                v.precedence(l, g, n) = sched.eps(l, g, n) - sched.theta(l, g);
            }
        }
        v.sbs_power[l] = power - cfg.p_max[l];
        v.load[l] = users - static_cast<double>(cfg.load_cap[l]);
    }
    for (std::size_t n = 0; n < N; ++n) v.sic[n] -= static_cast<double>(cfg.sic_cap[n]);

    RateModel model(inst);
    model.set_indicator(sched);
    model.forward(pw, JtModel::exact, nullptr, false);
    const auto curve = MosCurve::for_kind(cfg.service);

    v.put_qos.resize(M);
    for (std::size_t m = 0; m < M; ++m) v.put_qos[m] = cfg.put_rate_min[m] - model.put_rates()[m];
    v.mos_floor.resize(G);
    for (std::size_t g = 0; g < G; ++g) v.mos_floor[g] = cfg.mos_min[g] - mos(curve, model.sut_rates()[g]);
    v.backhaul.resize(L);
    for (std::size_t l = 0; l < L; ++l)
        v.backhaul[l] = model.backhaul_rates()[l] * cfg.subcarrier_bandwidth - cfg.backhaul_cap[l];
    return v;
}

FeasibilityResult is_feasible(const ConstraintViolations& v, const FeasibilityTolerances& tol)
{
    FeasibilityResult out;
    double worst_excess = -std::numeric_limits<double>::infinity();
    auto consider = [&](ConstraintFamily family, std::vector<std::size_t> index, double value) {
        const double t = tol.for_family(family);
        // NaN residuals count as violations.
        if (!(value <= t)) out.feasible = false;
        const double excess = std::isnan(value) ? std::numeric_limits<double>::infinity() : value - t;
        if (excess > worst_excess) {
            worst_excess = excess;
            out.worst = {family, std::move(index), value};
        }
    };
    consider(ConstraintFamily::mbs_power, {}, v.mbs_power);
    for (std::size_t i = 0; i < v.sbs_power.size(); ++i) consider(ConstraintFamily::sbs_power, {i}, v.sbs_power[i]);
    for (std::size_t i = 0; i < v.put_qos.size(); ++i) consider(ConstraintFamily::put_qos, {i}, v.put_qos[i]);
    for (std::size_t i = 0; i < v.mos_floor.size(); ++i) consider(ConstraintFamily::mos_floor, {i}, v.mos_floor[i]);
    for (std::size_t i = 0; i < v.backhaul.size(); ++i) consider(ConstraintFamily::backhaul, {i}, v.backhaul[i]);
    for (std::size_t i = 0; i < v.load.size(); ++i) consider(ConstraintFamily::load, {i}, v.load[i]);
    for (std::size_t i = 0; i < v.min_assoc.size(); ++i) consider(ConstraintFamily::min_assoc, {i}, v.min_assoc[i]);
    for (std::size_t i = 0; i < v.min_subc.size(); ++i) consider(ConstraintFamily::min_subc, {i}, v.min_subc[i]);
    for (std::size_t i = 0; i < v.sic.size(); ++i) consider(ConstraintFamily::sic, {i}, v.sic[i]);
    const auto& p = v.precedence;
    for (std::size_t l = 0; l < p.dim0(); ++l)
        for (std::size_t g = 0; g < p.dim1(); ++g)
            for (std::size_t n = 0; n < p.dim2(); ++n)
                consider(ConstraintFamily::precedence, {l, g, n}, p(l, g, n));
    return out;
}

} // namespace jtnoma

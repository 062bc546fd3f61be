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

#include "jtnoma/joint.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>

#include "jtnoma/feasibility.hpp"
#include "jtnoma/qoe.hpp"

namespace jtnoma {

void JointSettings::validate() const
{
    if (max_outer_iters == 0) throw std::invalid_argument("JointSettings: max_outer_iters must be positive");
    if (!(err_tol > 0.0)) throw std::invalid_argument("JointSettings: err_tol must be positive");
    power.validate();
    schedule.alm.validate();
}

namespace {

Schedule random_relaxed(const NetworkInstance& inst, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Schedule s = Schedule::empty_for(inst);
    s.relaxed = true;
    for (auto& v : s.theta.data()) v = unit(rng);
    for (auto& v : s.eps.data()) v = unit(rng);
    for (std::size_t l = 0; l < inst.num_sbs(); ++l)
        for (std::size_t g = 0; g < inst.num_sut(); ++g)
            for (std::size_t n = 0; n < inst.num_subcarriers(); ++n) s.chi(l, g, n) = s.theta(l, g) * s.eps(l, g, n);
    return s;
}

void fill_report(const NetworkInstance& inst, const Schedule& s, const PowerAllocation& pw, SolveReport& r)
{
    const MosCurve curve = MosCurve::for_kind(inst.config.service);
    r.user_rate = user_rates(inst, s, pw);
    r.user_mos.clear();
    for (double v : r.user_rate) r.user_mos.push_back(mos(curve, v));
    r.utility = qoe_from_rates(curve, r.user_rate);
    r.audit = audit(inst, s, pw);
    r.feasible = r.audit.feasible;
}

} // namespace

JointResult run_algorithm1(const NetworkInstance& inst, const JointSettings& settings)
{
    settings.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t seed = settings.init_seed_from_instance ? inst.config.rng_seed : settings.init_seed;

    if (const double need = min_mbs_power(inst); !(need <= inst.config.q_max))
        throw InfeasibleError("PUT rate targets need " + std::to_string(need) + " W of MBS power, budget " +
                              std::to_string(inst.config.q_max) + " W");

    PowerAllocation pw = PowerAllocation::uniform(inst);
    Schedule sched = round_and_repair(random_relaxed(inst, seed), inst, pw, settings.schedule.rules);
    pw = restore_power_feasibility(inst, sched, pw);

    JointResult best{sched, pw, {}};
    fill_report(inst, sched, pw, best.report);
    std::vector<double> utility_trace{best.report.utility};
    std::vector<TraceRow> trace;
    double prev = best.report.utility;
    bool converged = false;
    std::size_t T = 0;

    while (T < settings.max_outer_iters) {
        ++T;
        PowerSolveResult p2 = solve_power(inst, sched, pw, settings.power);
        for (auto row : p2.report.trace) {
            row.outer = T;
            trace.push_back(std::move(row));
        }
        ScheduleSolveResult p3 = solve_schedule(inst, p2.power, sched, settings.schedule);
        for (auto row : p3.report.trace) {
            row.outer = T;
            trace.push_back(std::move(row));
        }
        const bool schedule_changed = !(p3.schedule.theta == sched.theta && p3.schedule.eps == sched.eps);
        sched = std::move(p3.schedule);
        pw = std::move(p3.power);
        const double u = p3.report.utility;
        utility_trace.push_back(u);
        trace.push_back({"outer", T, 0, u, p3.report.feasible ? 0.0 : p3.report.audit.worst.value, 0.0});

        if (p3.report.feasible && (!best.report.feasible || u > best.report.utility)) {
            best.schedule = sched;
            best.power = pw;
            best.report.feasible = true;
            best.report.utility = u;
        }
        // A new schedule has not been through a power solve yet, so it does not end the run
        // even when the utility is flat (all users on one side of the MOS clamp).
        if (std::abs(u - prev) < settings.err_tol && !schedule_changed && p3.report.feasible) {
            converged = true;
            break;
        }
        prev = u;
    }

    JointResult out = converged ? JointResult{sched, pw, {}} : std::move(best);
    fill_report(inst, out.schedule, out.power, out.report);
    out.report.converged = converged;
    out.report.outer_iterations = T;
    out.report.trace = std::move(trace);
    out.report.utility_trace = std::move(utility_trace);
    out.report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!converged) out.report.message = "iteration limit reached; best iterate returned";
    return out;
}

} // namespace jtnoma

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

#include <doctest.h>

#include <stdexcept>

#include <random>

#include "jtnoma/feasibility.hpp"
#include "jtnoma/power_solver.hpp"
#include "jtnoma/qoe.hpp"
#include "jtnoma/schedule_solver.hpp"
#include "support.hpp"

using namespace jtnoma;

namespace {

Schedule random_relaxed(const NetworkInstance& inst, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Schedule s = Schedule::empty_for(inst);
    s.relaxed = true;
    for (auto& v : s.theta.data()) v = u(rng);
    for (auto& v : s.eps.data()) v = u(rng);
    s.sync_chi();
    return s;
}

std::size_t servers(const Schedule& s, std::size_t g)
{
    std::size_t c = 0;
    for (std::size_t l = 0; l < s.num_sbs(); ++l) c += s.theta(l, g) > 0.5;
    return c;
}

} // namespace

TEST_CASE("linearization residuals")
{
    std::mt19937_64 rng(1);
    const auto inst = test::random_instance(2, 3, 1, 2, 5);
    const auto s = test::random_schedule(inst, rng);
    const auto r = linearization_residuals(s);
    for (double v : r.chi_minus_theta.data()) CHECK(v <= 0.0);
    for (double v : r.chi_minus_eps.data()) CHECK(v <= 0.0);
    for (double v : r.product_lower.data()) CHECK(v <= 0.0);
    for (double v : binary_forcing_residuals(s)) CHECK(v == 0.0);

    Schedule half = Schedule::empty_for(inst);
    half.theta.fill(0.5);
    half.eps.fill(0.5);
    half.chi.fill(0.0);
    const auto h = linearization_residuals(half);
    CHECK(h.product_lower(0, 0, 0) == doctest::Approx(0.0));
    half.chi.fill(0.6);
    CHECK(linearization_residuals(half).chi_minus_theta(1, 2, 1) == doctest::Approx(0.1));
    const auto b = binary_forcing_residuals(half);
    CHECK(b[0] == doctest::Approx(6 * 0.25));
    CHECK(b[1] == doctest::Approx(12 * 0.25));
    CHECK(b[2] == doctest::Approx(12 * 0.24));
}

TEST_CASE("admissibility checks")
{
    auto inst = test::flat_instance(2, 2, 1, 2);
    Schedule s = Schedule::empty_for(inst);
    s.set_link(0, 0, 0, true);
    s.set_link(1, 1, 1, true);
    s.sync_chi();
    CHECK(schedule_admissible(inst, s));
    CHECK(schedule_admissible(inst, s, {false, false}));

    SUBCASE("orphan user")
    {
        Schedule t = Schedule::empty_for(inst);
        t.set_link(0, 0, 0, true);
        t.sync_chi();
        CHECK_FALSE(schedule_admissible(inst, t));
    }
    SUBCASE("JT under a non-JT rule")
    {
        s.set_link(1, 0, 0, true);
        s.sync_chi();
        CHECK(schedule_admissible(inst, s));
        CHECK_FALSE(schedule_admissible(inst, s, {false, true}));
    }
    SUBCASE("NOMA under an OMA rule")
    {
        s.set_link(0, 1, 0, true);
        s.sync_chi();
        CHECK(schedule_admissible(inst, s));
        CHECK_FALSE(schedule_admissible(inst, s, {true, false}));
    }
    SUBCASE("load")
    {
        inst.config.load_cap[0] = 0;
        CHECK_FALSE(schedule_admissible(inst, s));
    }
    SUBCASE("sic")
    {
        inst.config.sic_cap[0] = 0;
        CHECK_FALSE(schedule_admissible(inst, s));
    }
    SUBCASE("non-binary")
    {
        s.eps(0, 0, 1) = 0.3;
        CHECK_FALSE(schedule_admissible(inst, s));
    }
    SUBCASE("chi out of sync")
    {
        s.chi(0, 0, 0) = 0.0;
        CHECK_FALSE(schedule_admissible(inst, s));
    }
    SUBCASE("subcarrier without association")
    {
        s.eps(0, 1, 1) = 1.0;
        s.sync_chi();
        CHECK_FALSE(schedule_admissible(inst, s));
    }
}

TEST_CASE("rounding and repair yields admissible schedules under every rule set")
{
    std::mt19937_64 rng(2);
    for (int k = 0; k < 30; ++k) {
        const auto inst = test::random_instance(4, 8, 3, 6, 2000 + k);
        const auto relaxed = random_relaxed(inst, rng);
        for (SchemeRules rules : {SchemeRules{true, true}, SchemeRules{false, true}, SchemeRules{true, false},
                                  SchemeRules{false, false}}) {
            const auto s = round_and_repair(relaxed, inst, PowerAllocation::uniform(inst), rules);
            CHECK(schedule_admissible(inst, s, rules));
            CHECK_FALSE(s.relaxed);
            if (!rules.allow_jt)
                for (std::size_t g = 0; g < 8; ++g) CHECK(servers(s, g) == 1);
        }
    }
}

TEST_CASE("rounding keeps an admissible binary schedule")
{
    std::mt19937_64 rng(3);
    const auto inst = test::random_instance(3, 4, 2, 4, 31);
    const auto s = round_and_repair(random_relaxed(inst, rng), inst, PowerAllocation::uniform(inst));
    Schedule again = s;
    again.relaxed = true;
    const auto t = round_and_repair(again, inst, PowerAllocation::uniform(inst));
    CHECK(t.theta == s.theta);
    CHECK(t.eps == s.eps);
}

TEST_CASE("repair reports infeasible capacity")
{
    auto inst = test::flat_instance(1, 3, 1, 2);
    inst.config.load_cap[0] = 2;
    std::mt19937_64 rng(4);
    CHECK_THROWS_AS(round_and_repair(random_relaxed(inst, rng), inst, PowerAllocation::uniform(inst)), InfeasibleError);
}

TEST_CASE("local search keeps feasibility and never loses utility")
{
    std::mt19937_64 rng(5);
    for (int k = 0; k < 8; ++k) {
        const auto inst = test::random_instance(4, 6, 3, 8, 2100 + k, ServiceKind::audio);
        const auto s = round_and_repair(random_relaxed(inst, rng), inst, PowerAllocation::uniform(inst));
        const auto pw = restore_power_feasibility(inst, s, PowerAllocation::uniform(inst));
        REQUIRE(audit(inst, s, pw).feasible);
        const double before = total_qoe(inst, s, pw);
        const auto r = local_search(inst, s, pw);
        CHECK(schedule_admissible(inst, r.schedule));
        CHECK(audit(inst, r.schedule, r.power).feasible);
        CHECK(r.report.utility >= before - 1e-9);
        CHECK(r.report.utility == doctest::Approx(total_qoe(inst, r.schedule, r.power)));
    }
}

TEST_CASE("schedule solve under every rule set")
{
    std::mt19937_64 rng(6);
    for (int k = 0; k < 4; ++k) {
        const auto inst = test::random_instance(4, 6, 3, 8, 2200 + k, ServiceKind::audio);
        for (SchemeRules rules : {SchemeRules{true, true}, SchemeRules{false, true}, SchemeRules{true, false},
                                  SchemeRules{false, false}}) {
            const auto start = round_and_repair(random_relaxed(inst, rng), inst, PowerAllocation::uniform(inst), rules);
            const auto pw = restore_power_feasibility(inst, start, PowerAllocation::uniform(inst));
            ScheduleSolveConfig cfg;
            cfg.rules = rules;
            const auto r = solve_schedule(inst, pw, start, cfg);
            CHECK(schedule_admissible(inst, r.schedule, rules));
            CHECK(r.report.feasible);
            CHECK(r.report.utility >= total_qoe(inst, start, pw) - 1e-9);
            REQUIRE(r.report.utility_trace.size() == 2);
            for (const auto& row : r.report.trace) CHECK(row.phase == "schedule");
        }
    }
}

TEST_CASE("schedule solve without the relaxation step still polishes")
{
    std::mt19937_64 rng(7);
    const auto inst = test::random_instance(3, 5, 2, 6, 2300);
    const auto start = round_and_repair(random_relaxed(inst, rng), inst, PowerAllocation::uniform(inst));
    const auto pw = restore_power_feasibility(inst, start, PowerAllocation::uniform(inst));
    ScheduleSolveConfig cfg;
    cfg.run_alm = false;
    const auto r = solve_schedule(inst, pw, start, cfg);
    CHECK(r.report.trace.empty());
    CHECK(r.report.feasible);
    CHECK(r.report.utility >= total_qoe(inst, start, pw) - 1e-9);
}

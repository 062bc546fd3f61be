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

#include <cmath>
#include <random>

#include "jtnoma/interference.hpp"
#include "jtnoma/oracle.hpp"
#include "jtnoma/power_solver.hpp"
#include "support.hpp"

using namespace jtnoma;

TEST_CASE("UDL term")
{
    auto inst = test::flat_instance(1, 1, 2, 2);
    auto pw = PowerAllocation::zeros(inst);
    CHECK(udl_interference(inst, pw, 0, 1) == 0.0);
    // Round robin: PUT 1 holds subcarrier 1.
    REQUIRE(inst.primary_alloc(1, 1) == 1.0);
    inst.mbs_sut_gain(0, 1) = 0.5;
    pw.q(1, 1) = 2.0;
    CHECK(udl_interference(inst, pw, 0, 1) == doctest::Approx(1.0));
    pw.q(0, 1) = 5.0; // PUT 0 does not hold subcarrier 1
    CHECK(udl_interference(inst, pw, 0, 1) == doctest::Approx(1.0));
}

TEST_CASE("CCD term")
{
    auto inst = test::flat_instance(2, 3, 1, 1);
    auto pw = PowerAllocation::zeros(inst);
    Schedule s = Schedule::empty_for(inst);
    s.set_link(0, 0, 0, true);
    s.sync_chi();
    CHECK(ccd_interference(inst, s, pw, 0, 0, 0) == 0.0);

    auto single = test::flat_instance(1, 2, 1, 1);
    Schedule s1 = Schedule::empty_for(single);
    s1.set_link(0, 0, 0, true);
    s1.set_link(0, 1, 0, true);
    s1.sync_chi();
    CHECK(ccd_interference(single, s1, PowerAllocation::uniform(single), 0, 0, 0) == 0.0);

    s.set_link(1, 1, 0, true);
    s.set_link(0, 2, 0, true); // same SBS: belongs to the NOMA term
    s.sync_chi();
    pw.p(1, 1, 0) = 1.0;
    pw.p(0, 2, 0) = 3.0;
    inst.sbs_sut_gain(1, 0, 0) = 0.1;
    CHECK(ccd_interference(inst, s, pw, 0, 0, 0) == doctest::Approx(0.1));
}

TEST_CASE("NOMA term")
{
    auto inst = test::flat_instance(1, 2, 1, 1);
    inst.sbs_sut_gain(0, 0, 0) = 0.3; // weaker, decoded first
    inst.sbs_sut_gain(0, 1, 0) = 0.9;
    Schedule s = Schedule::empty_for(inst);
    s.set_link(0, 0, 0, true);
    s.set_link(0, 1, 0, true);
    s.sync_chi();
    auto pw = PowerAllocation::zeros(inst);
    pw.p(0, 0, 0) = 1.0;
    pw.p(0, 1, 0) = 2.0;
    CHECK(noma_interference(inst, s, pw, 0, 0, 0) == doctest::Approx(0.6));
    CHECK(noma_interference(inst, s, pw, 0, 1, 0) == 0.0);
}

TEST_CASE("SIC consistency on random clusters")
{
    std::mt19937_64 rng(8);
    for (int k = 0; k < 40; ++k) {
        const auto inst = test::random_instance(2, 4, 1, 2, 100 + k);
        const auto s = test::random_schedule(inst, rng, 0.6);
        const auto pw = test::random_power(inst, rng);
        for (std::size_t l = 0; l < 2; ++l)
            for (std::size_t n = 0; n < 2; ++n) {
                const auto order = decoding_order(inst, s, l, n);
                if (order.empty()) continue;
                CHECK(noma_interference(inst, s, pw, l, order.back(), n) == 0.0);
                double successors = 0.0;
                for (std::size_t i = 1; i < order.size(); ++i) successors += pw.p(l, order[i], n);
                const std::size_t first = order.front();
                CHECK(noma_interference(inst, s, pw, l, first, n) ==
                      doctest::Approx(successors * inst.sbs_sut_gain(l, first, n)));
            }
    }
}

TEST_CASE("JT exact term")
{
    auto inst = test::flat_instance(2, 2, 1, 1);
    auto pw = PowerAllocation::zeros(inst);
    Schedule s = Schedule::empty_for(inst);
    s.set_link(0, 0, 0, true);
    s.set_link(0, 1, 0, true);
    s.sync_chi();
    pw.p(0, 1, 0) = pw.p(1, 1, 0) = 1.0;
    CHECK(jt_interference_exact(inst, s, pw, 0, 0, 0) == 0.0);

    s.set_link(1, 1, 0, true);
    s.sync_chi();
    inst.sbs_sut_gain(0, 0, 0) = 0.2;
    inst.sbs_sut_gain(1, 0, 0) = 0.4;
    CHECK(jt_interference_exact(inst, s, pw, 0, 0, 0) == doctest::Approx(0.32));
    pw.p(1, 1, 0) = 2.0;
    CHECK(jt_interference_exact(inst, s, pw, 0, 0, 0) == doctest::Approx(0.64));
}

TEST_CASE("JT convex bound")
{
    auto inst = test::flat_instance(2, 2, 1, 1);
    Schedule s = Schedule::empty_for(inst);
    s.set_link(0, 0, 0, true);
    s.set_link(0, 1, 0, true);
    s.set_link(1, 1, 0, true);
    s.sync_chi();
    auto pw = PowerAllocation::zeros(inst);

    SUBCASE("tight at lambda = p''/p'")
    {
        pw.p(0, 1, 0) = pw.p(1, 1, 0) = 2.0;
        CHECK(jt_interference_convex(inst, s, pw, PairLambda(1.0), 0, 0, 0) ==
              doctest::Approx(jt_interference_exact(inst, s, pw, 0, 0, 0)));
    }
    SUBCASE("lambda 2, p' = 1, p'' = 3")
    {
        pw.p(0, 1, 0) = 1.0;
        pw.p(1, 1, 0) = 3.0;
        PairLambda lam(2, 2, 1, 1.0);
        lam.at(0, 1, 1, 0) = 2.0; // pair (p' = 1, p'' = 3): 3.25
        lam.at(1, 0, 1, 0) = 1.0 / 3.0; // reverse pair at its tight value: 3
        CHECK(jt_interference_exact(inst, s, pw, 0, 0, 0) == doctest::Approx(2.0 * (3.0 + 3.0)));
        CHECK(jt_interference_convex(inst, s, pw, lam, 0, 0, 0) == doctest::Approx(2.0 * (3.25 + 3.0)));
        CHECK(jt_interference_convex(inst, s, pw, PairLambda(2.0), 0, 0, 0) == doctest::Approx(2.0 * (3.25 + 9.25)));
    }
    SUBCASE("rejects non-positive lambda")
    {
        pw.p(0, 1, 0) = pw.p(1, 1, 0) = 1.0;
        CHECK_THROWS_AS(jt_interference_convex(inst, s, pw, PairLambda(0.0), 0, 0, 0), std::invalid_argument);
        CHECK_THROWS_AS(jt_interference_convex(inst, s, pw, PairLambda(-1.0), 0, 0, 0), std::invalid_argument);
    }
}

TEST_CASE("convex bound dominates the exact term; ratio weights make it tight")
{
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> loglam(std::log(1e-3), std::log(1e3));
    for (int k = 0; k < 200; ++k) {
        const auto inst = test::random_instance(3, 3, 1, 2, 500 + k);
        const auto s = test::random_schedule(inst, rng, 0.7);
        const auto pw = test::random_power(inst, rng);
        const PairLambda scalar(std::exp(loglam(rng)));
        const PairLambda ratio = refresh_lambda(inst, pw);
        for (std::size_t l = 0; l < 3; ++l)
            for (std::size_t g = 0; g < 3; ++g)
                for (std::size_t n = 0; n < 2; ++n) {
                    const double exact = jt_interference_exact(inst, s, pw, l, g, n);
                    CHECK(jt_interference_convex(inst, s, pw, scalar, l, g, n) >= exact * (1.0 - 1e-12));
                    CHECK(test::rel_err(jt_interference_convex(inst, s, pw, ratio, l, g, n), exact) <= 1e-9);
                }
    }
}

TEST_CASE("SINR and rates")
{
    auto inst = test::flat_instance(1, 1, 1, 2, 1.0, 1.0);
    Schedule s = Schedule::empty_for(inst);
    auto pw = PowerAllocation::zeros(inst);
    CHECK(sut_rate(inst, s, pw, 0) == 0.0);
    s.set_link(0, 0, 1, true);
    s.sync_chi();
    // PUT 0 holds both subcarriers; q = 0 keeps the link interference-free.
    pw.p(0, 0, 1) = 1.0;
    CHECK(sinr(inst, s, pw, 0, 0, 1) == doctest::Approx(1.0));
    CHECK(sut_rate(inst, s, pw, 0) == doctest::Approx(1.0));
    pw.p(0, 0, 1) = 3.0;
    CHECK(sut_rate(inst, s, pw, 0) == doctest::Approx(2.0));
    pw.p(0, 0, 1) = 0.0;
    CHECK(sinr(inst, s, pw, 0, 0, 1) == 0.0);

    // JT user on two links: rates add.
    auto jt = test::flat_instance(2, 1, 1, 1);
    Schedule sj = Schedule::empty_for(jt);
    sj.set_link(0, 0, 0, true);
    sj.set_link(1, 0, 0, true);
    sj.sync_chi();
    auto pj = PowerAllocation::zeros(jt);
    pj.p(0, 0, 0) = 1.0;
    pj.p(1, 0, 0) = 3.0;
    CHECK(sut_rate(jt, sj, pj, 0) == doctest::Approx(1.0 + 2.0));
}

TEST_CASE("zero-interference reduction")
{
    const auto inst = test::random_instance(1, 1, 1, 3, 4);
    Schedule s = Schedule::empty_for(inst);
    s.set_link(0, 0, 2, true);
    s.sync_chi();
    auto pw = PowerAllocation::zeros(inst);
    pw.p(0, 0, 2) = 0.7;
    CHECK(sinr(inst, s, pw, 0, 0, 2) == 0.7 * inst.sbs_sut_gain(0, 0, 2) / inst.config.noise_power[0]);
}

TEST_CASE("PUT rate")
{
    auto inst = test::flat_instance(1, 1, 1, 2, 1.0, 1.0);
    Schedule s = Schedule::empty_for(inst);
    auto pw = PowerAllocation::zeros(inst);
    pw.q(0, 0) = pw.q(0, 1) = 1.0;
    CHECK(put_rate(inst, s, pw, 0) == doctest::Approx(2.0));
    s.set_link(0, 0, 0, true);
    s.sync_chi();
    pw.p(0, 0, 0) = 2.0;
    inst.sbs_put_gain(0, 0, 0) = 0.5;
    pw.q(0, 0) = 4.0;
    CHECK(put_rate(inst, s, pw, 0) == doctest::Approx(std::log2(1.0 + 4.0 / (1.0 + 1.0)) + 1.0));

    auto two = test::flat_instance(1, 1, 2, 2);
    auto p2 = PowerAllocation::zeros(two);
    p2.q(0, 1) = 10.0; // PUT 0 does not hold subcarrier 1
    CHECK(put_rate(two, Schedule::empty_for(two), p2, 0) == 0.0);
}

TEST_CASE("backhaul rate")
{
    std::mt19937_64 rng(13);
    const auto inst = test::random_instance(3, 4, 2, 3, 77);
    CHECK(backhaul_rate(inst, Schedule::empty_for(inst), PowerAllocation::uniform(inst), 1) == 0.0);
    // Single serving SBS per link: backhaul totals equal SUT totals.
    Schedule s = Schedule::empty_for(inst);
    std::uniform_int_distribution<std::size_t> pick(0, 2);
    for (std::size_t g = 0; g < 4; ++g)
        for (std::size_t n = 0; n < 3; ++n) s.set_link(pick(rng), g, n, true);
    s.sync_chi();
    const auto pw = test::random_power(inst, rng);
    double bh = 0.0, su = 0.0;
    for (std::size_t l = 0; l < 3; ++l) bh += backhaul_rate(inst, s, pw, l);
    for (std::size_t g = 0; g < 4; ++g) su += sut_rate(inst, s, pw, g);
    CHECK(bh == doctest::Approx(su).epsilon(1e-12));
    CHECK(backhaul_rate_bps(inst, s, pw, 0) == doctest::Approx(backhaul_rate(inst, s, pw, 0) * 15e3));
}

TEST_CASE("SINR monotonicity")
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> bump(1.1, 3.0);
    for (int k = 0; k < 60; ++k) {
        const auto inst = test::random_instance(2, 3, 1, 2, 300 + k);
        const auto s = test::random_schedule(inst, rng, 0.6);
        const auto pw = test::random_power(inst, rng);
        for (std::size_t l = 0; l < 2; ++l)
            for (std::size_t g = 0; g < 3; ++g)
                for (std::size_t n = 0; n < 2; ++n) {
                    if (s.link(l, g, n) == 0.0) continue;
                    const double base = sinr(inst, s, pw, l, g, n);
                    auto up = pw;
                    up.p(l, g, n) *= bump(rng);
                    CHECK(sinr(inst, s, up, l, g, n) > base);
                    for (std::size_t l2 = 0; l2 < 2; ++l2)
                        for (std::size_t g2 = 0; g2 < 3; ++g2) {
                            if (l2 == l && g2 == g) continue;
                            auto other = pw;
                            other.p(l2, g2, n) *= bump(rng);
                            CHECK(sinr(inst, s, other, l, g, n) <= base);
                        }
                    auto q = pw;
                    for (auto& v : q.q.data()) v *= 2.0;
                    CHECK(sinr(inst, s, q, l, g, n) <= base);
                }
    }
}

TEST_CASE("batched RateModel matches the per-term functions")
{
    std::mt19937_64 rng(31);
    for (int k = 0; k < 40; ++k) {
        const auto inst = test::random_instance(3, 4, 2, 3, 700 + k);
        const auto s = test::random_schedule(inst, rng, 0.5);
        const auto pw = test::random_power(inst, rng);
        RateModel model(inst);
        model.set_indicator(s);
        model.forward(pw);
        for (std::size_t g = 0; g < 4; ++g)
            CHECK(test::rel_err(model.sut_rates()[g], sut_rate(inst, s, pw, g)) <= 1e-12);
        for (std::size_t m = 0; m < 2; ++m)
            CHECK(test::rel_err(model.put_rates()[m], put_rate(inst, s, pw, m)) <= 1e-12);
        for (std::size_t l = 0; l < 3; ++l) {
            CHECK(test::rel_err(model.backhaul_rates()[l], backhaul_rate(inst, s, pw, l)) <= 1e-12);
            for (std::size_t g = 0; g < 4; ++g)
                for (std::size_t n = 0; n < 3; ++n)
                    CHECK(test::rel_err(model.link_sinr(l, g, n), sinr(inst, s, pw, l, g, n)) <= 1e-12);
        }

        // Convex mode against the literal bound.
        const PairLambda lam = refresh_lambda(inst, test::random_power(inst, rng));
        model.forward(pw, JtModel::convex, &lam);
        for (std::size_t l = 0; l < 3; ++l)
            for (std::size_t g = 0; g < 4; ++g)
                for (std::size_t n = 0; n < 3; ++n) {
                    auto t = interference(inst, s, pw, l, g, n);
                    t.jt = jt_interference_convex(inst, s, pw, lam, l, g, n);
                    const double want = pw.p(l, g, n) * inst.sbs_sut_gain(l, g, n) / (t.total() + inst.config.noise_power[g]);
                    CHECK(test::rel_err(model.link_sinr(l, g, n), want) <= 1e-12);
                }
    }
}

TEST_CASE("independent recomputation on a 2-SBS / 3-SUT instance")
{
    std::mt19937_64 rng(2);
    const auto inst = test::random_instance(2, 3, 1, 2, 12);
    Schedule s = Schedule::empty_for(inst);
    // User 0 JT on n=0, users 1 and 2 share SBS 0 / SBS 1.
    s.set_link(0, 0, 0, true);
    s.set_link(1, 0, 0, true);
    s.set_link(0, 1, 0, true);
    s.set_link(1, 2, 0, true);
    s.set_link(1, 2, 1, true);
    s.sync_chi();
    const auto pw = test::random_power(inst, rng);
    for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t g = 0; g < 3; ++g)
            for (std::size_t n = 0; n < 2; ++n) {
                const auto a = interference(inst, s, pw, l, g, n);
                const auto b = oracle::interference_terms(inst, s, pw, l, g, n);
                CHECK(a.udl == doctest::Approx(b.udl));
                CHECK(a.ccd == doctest::Approx(b.ccd));
                CHECK(a.noma == doctest::Approx(b.noma));
                CHECK(a.jt == doctest::Approx(b.jt));
                CHECK(test::rel_err(sinr(inst, s, pw, l, g, n), oracle::sinr(inst, s, pw, l, g, n)) <= 1e-12);
            }
}

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
#include <limits>

#include "jtnoma/alm.hpp"
#include "toy_problems.hpp"

using namespace jtnoma;

TEST_CASE("augmented objective by hand")
{
    AlmState st;
    st.multipliers = {0.5, 0.2};
    st.alpha = 2.0;
    // (2.5^2 - 0.25) + (0 - 0.04) = 5.96, divided by 2 alpha.
    CHECK(augmented_objective(10.0, {1.0, -3.0}, st) == doctest::Approx(10.0 - 1.49));
    CHECK(augmented_objective(10.0, {0.0, 0.0}, AlmState::initial(2, AlmSettings{})) == doctest::Approx(10.0));
    CHECK_THROWS_AS(augmented_objective(1.0, {1.0}, st), std::invalid_argument);
    st.alpha = 0.0;
    CHECK_THROWS_AS(augmented_objective(1.0, {1.0, 1.0}, st), std::invalid_argument);
}

TEST_CASE("multiplier update is projected")
{
    CHECK(update_multiplier(0.5, 2.0, 1.0) == 2.5);
    CHECK(update_multiplier(0.5, 2.0, -1.0) == 0.0);
    CHECK(update_multiplier(0.0, 10.0, 0.0) == 0.0);
}

TEST_CASE("multipliers stay non-negative under random residual streams")
{
    double psi = 0.1;
    unsigned s = 1;
    for (int i = 0; i < 1000; ++i) {
        s = s * 1103515245u + 12345u;
        const double r = (static_cast<double>(s % 2001) - 1000.0) / 100.0;
        psi = update_multiplier(psi, 3.0, r);
        CHECK(psi >= 0.0);
    }
}

TEST_CASE("box projection")
{
    Box b{{0.0, -1.0}, {1.0, 1.0}};
    std::vector<double> x{2.0, -3.0};
    b.project(x);
    CHECK(x == std::vector<double>{1.0, -1.0});
}

TEST_CASE("settings validation")
{
    AlmSettings s;
    CHECK_NOTHROW(s.validate());
    s.err_tol = 0.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = AlmSettings{};
    s.penalty_growth = 0.5;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = AlmSettings{};
    s.max_outer_iters = 0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("inner ascent on a concave quadratic with a box")
{
    auto value = [](const std::vector<double>& x) { return -(x[0] - 2) * (x[0] - 2) - 4 * (x[1] + 1) * (x[1] + 1); };
    std::vector<double> last;
    ValueFn v = [&](const std::vector<double>& x) {
        last = x;
        return value(x);
    };
    GradientFn g = [&](std::vector<double>& gr) { gr = {-2 * (last[0] - 2), -8 * (last[1] + 1)}; };
    AlmSettings s;
    s.max_inner_iters = 500;
    const auto r = inner_maximize(v, g, {0.0, 0.0}, Box{{-5.0, 0.0}, {5.0, 5.0}}, s);
    CHECK(r.x[0] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(r.x[1] == doctest::Approx(0.0)); // clipped at the lower face
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] >= r.trace[i - 1]);
}

TEST_CASE("inner ascent rejects a non-finite start")
{
    ValueFn v = [](const std::vector<double>&) { return std::numeric_limits<double>::quiet_NaN(); };
    GradientFn g = [](std::vector<double>& gr) { gr.assign(1, 0.0); };
    CHECK_THROWS_AS(inner_maximize(v, g, {0.0}, Box{{-1.0}, {1.0}}, AlmSettings{}), std::domain_error);
}

TEST_CASE("outer loop recovers KKT points of convex toys")
{
    for (const auto& toy : test::convex_toys()) {
        CAPTURE(toy.name);
        test::ToyProblem prob(toy);
        const auto settings = test::toy_settings();
        const auto r = outer_loop(prob, toy.start, AlmState::initial(toy.r.size(), settings), settings);
        CHECK(r.converged);
        CHECK(r.objective == doctest::Approx(toy.f_star).epsilon(1e-3).scale(1.0));
        for (std::size_t i = 0; i < toy.x_star.size(); ++i) CHECK(std::abs(r.x[i] - toy.x_star[i]) <= 1e-3);
        for (std::size_t c = 0; c < toy.mu_star.size(); ++c) {
            CHECK(std::abs(r.state.multipliers[c] - toy.mu_star[c]) <= 1e-2);
            CHECK(std::abs(r.state.multipliers[c] * toy.r[c](r.x)) <= 1e-3);
            CHECK(r.state.multipliers[c] >= 0.0);
        }
        CHECK(r.max_violation <= 1e-5);
    }
}

TEST_CASE("outer loop returns the best iterate when out of iterations")
{
    auto toy = test::convex_toys().front();
    test::ToyProblem prob(toy);
    AlmSettings s;
    s.max_outer_iters = 1;
    s.max_inner_iters = 1;
    s.err_tol = 1e-12;
    const auto r = outer_loop(prob, toy.start, AlmState::initial(1, s), s);
    CHECK_FALSE(r.converged);
    CHECK(r.trace.size() == 1);
}

TEST_CASE("max violation")
{
    CHECK(max_violation({}) == 0.0);
    CHECK(max_violation({-1.0, -2.0}) == 0.0);
    CHECK(max_violation({-1.0, 0.5}) == 0.5);
}

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

#include "jtnoma/channel.hpp"
#include "jtnoma/serialization.hpp"
#include "support.hpp"

using namespace jtnoma;

TEST_CASE("same seed gives identical instances")
{
    const auto cfg = NetworkConfig::defaults(10, 8, 6, 32, ServiceKind::web, 42);
    CHECK(instance_to_json(generate_instance(cfg)) == instance_to_json(generate_instance(cfg)));
    auto other = cfg;
    other.rng_seed = 43;
    CHECK(instance_to_json(generate_instance(cfg)) != instance_to_json(generate_instance(other)));
}

TEST_CASE("placement and gains")
{
    const auto inst = test::random_instance(10, 8, 6, 32, 3);
    CHECK(inst.mbs == Point{0.0, 0.0});
    for (const auto* pts : {&inst.sbs, &inst.sut, &inst.put})
        for (const auto& p : *pts) CHECK(std::hypot(p.x, p.y) <= inst.config.mbs_radius);
    for (double g : inst.sbs_sut_gain.data()) CHECK((g > 0.0 && std::isfinite(g)));
    CHECK(validate_instance(inst).empty());
}

TEST_CASE("round-robin primary allocation, M=6 N=32")
{
    const auto inst = test::random_instance(10, 8, 6, 32, 1);
    for (std::size_t n = 0; n < 32; ++n) {
        double holders = 0.0;
        for (std::size_t m = 0; m < 6; ++m) holders += inst.primary_alloc(m, n);
        CHECK(holders <= 1.0);
    }
    for (std::size_t m = 0; m < 6; ++m) {
        double held = 0.0;
        for (std::size_t n = 0; n < 32; ++n) held += inst.primary_alloc(m, n);
        CHECK((held == 5.0 || held == 6.0));
    }
}

TEST_CASE("rejects empty node sets")
{
    auto cfg = NetworkConfig::defaults(2, 2, 1, 2);
    cfg.num_subcarriers = 0;
    CHECK_THROWS_AS(generate_instance(cfg), InvalidConfigError);
    ChannelModelParams ch;
    ch.pathloss_exponent_sbs = 7.0;
    CHECK_FALSE(ch.validate().empty());
    CHECK_THROWS_AS(generate_instance(NetworkConfig::defaults(2, 2, 1, 2), ch), InvalidConfigError);
}

TEST_CASE("path loss")
{
    CHECK(pathloss_gain(1.0, 3.67, 38.0) == doctest::Approx(std::pow(10.0, -3.8)));
    CHECK(pathloss_gain(0.2, 3.67, 38.0) == pathloss_gain(1.0, 3.67, 38.0));
    CHECK(pathloss_gain(200.0, 3.76, 38.0) / pathloss_gain(100.0, 3.76, 38.0) ==
          doctest::Approx(std::pow(2.0, -3.76)).epsilon(1e-12));
}

TEST_CASE("fading has unit mean")
{
    auto cfg = NetworkConfig::defaults(1, 1, 1, 1000000, ServiceKind::web, 11);
    const auto inst = generate_instance(cfg);
    const double pl = pathloss_gain(distance(inst.sbs[0], inst.sut[0]), 3.67, 38.0);
    double mean = 0.0;
    for (std::size_t n = 0; n < cfg.num_subcarriers; ++n) mean += inst.sbs_sut_gain(0, 0, n) / pl;
    mean /= static_cast<double>(cfg.num_subcarriers);
    CHECK(mean == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("doubling distance scales the mean MBS gain by 2^-3.76")
{
    // Fading draws of two users over 2e5 subcarriers, placed at d and 2d.
    auto cfg = NetworkConfig::defaults(1, 2, 1, 200000, ServiceKind::web, 5);
    const auto inst = generate_instance(cfg);
    const double d = 120.0;
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t n = 0; n < cfg.num_subcarriers; ++n) {
        const double f0 = inst.mbs_sut_gain(0, n) / pathloss_gain(distance(inst.mbs, inst.sut[0]), 3.76, 38.0);
        const double f1 = inst.mbs_sut_gain(1, n) / pathloss_gain(distance(inst.mbs, inst.sut[1]), 3.76, 38.0);
        m1 += f0 * pathloss_gain(d, 3.76, 38.0);
        m2 += f1 * pathloss_gain(2.0 * d, 3.76, 38.0);
    }
    CHECK(m2 / m1 == doctest::Approx(std::pow(2.0, -3.76)).epsilon(0.02));
}

TEST_CASE("decoding order rules")
{
    auto inst = test::flat_instance(2, 2, 1, 1);
    Schedule s = Schedule::empty_for(inst);
    SUBCASE("non-JT by ascending gain")
    {
        inst.sbs_sut_gain(0, 0, 0) = 0.9;
        inst.sbs_sut_gain(0, 1, 0) = 0.2;
        s.set_link(0, 0, 0, true);
        s.set_link(0, 1, 0, true);
        s.sync_chi();
        CHECK(decoding_order(inst, s, 0, 0) == std::vector<std::size_t>{1, 0});
    }
    SUBCASE("JT user precedes non-JT user")
    {
        inst.sbs_sut_gain(0, 0, 0) = 0.1; // would come first on gain alone if it were non-JT
        s.set_link(0, 0, 0, true);
        s.set_link(0, 1, 0, true);
        s.set_link(1, 1, 0, true);
        s.sync_chi();
        CHECK(decoding_order(inst, s, 0, 0) == std::vector<std::size_t>{1, 0});
    }
    SUBCASE("JT users by larger mean distance")
    {
        inst.sbs = {{0.0, 0.0}, {40.0, 0.0}};
        inst.sut = {{20.0, std::sqrt(900.0 - 400.0)}, {20.0, std::sqrt(6400.0 - 400.0)}}; // 30 m and 80 m
        for (std::size_t l = 0; l < 2; ++l)
            for (std::size_t g = 0; g < 2; ++g) s.set_link(l, g, 0, true);
        s.sync_chi();
        CHECK(decoding_order(inst, s, 0, 0) == std::vector<std::size_t>{1, 0});
        CHECK(decoding_order(inst, s, 1, 0) == std::vector<std::size_t>{1, 0});
    }
    SUBCASE("equal keys fall back to index")
    {
        s.set_link(0, 1, 0, true);
        s.set_link(0, 0, 0, true);
        s.sync_chi();
        CHECK(decoding_order(inst, s, 0, 0) == std::vector<std::size_t>{0, 1});
    }
}

TEST_CASE("decoded_before is a strict total order on clusters")
{
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> coarse(0, 3);
    std::bernoulli_distribution jt(0.4);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<DecodingKey> keys(6);
        for (std::size_t i = 0; i < keys.size(); ++i)
            keys[i] = {jt(rng), 10.0 * coarse(rng), 0.1 * coarse(rng), i};
        for (const auto& a : keys) {
            CHECK_FALSE(decoded_before(a, a));
            for (const auto& b : keys) {
                if (a.index == b.index) continue;
                CHECK(decoded_before(a, b) != decoded_before(b, a));
                for (const auto& c : keys)
                    if (decoded_before(a, b) && decoded_before(b, c)) CHECK(decoded_before(a, c));
            }
        }
    }
}

TEST_CASE("decoding_rank agrees with decoding_order on binary schedules")
{
    std::mt19937_64 rng(5);
    const auto inst = test::random_instance(3, 5, 2, 3, 9);
    for (int k = 0; k < 30; ++k) {
        const Schedule s = test::random_schedule(inst, rng, 0.5);
        for (std::size_t l = 0; l < 3; ++l)
            for (std::size_t n = 0; n < 3; ++n) {
                const auto order = decoding_order(inst, s, l, n);
                const auto rank = decoding_rank(inst, s.chi, l, n);
                for (std::size_t i = 1; i < order.size(); ++i) CHECK(rank[order[i - 1]] < rank[order[i]]);
            }
    }
}

TEST_CASE("instance snapshot round trip")
{
    const auto inst = test::random_instance(3, 4, 2, 5, 21, ServiceKind::video);
    const std::string text = instance_to_json(inst);
    const auto back = instance_from_json(text);
    CHECK(instance_to_json(back) == text);
    CHECK(back.sbs_sut_gain == inst.sbs_sut_gain);
    CHECK(back.primary_alloc == inst.primary_alloc);
    CHECK(back.config.service == ServiceKind::video);
    CHECK(text.find(kInstanceSchema) != std::string::npos);
    CHECK_THROWS(instance_from_json("{\"schema\": \"other/1\"}"));
}

TEST_CASE("config overlay")
{
    const auto base = NetworkConfig::defaults(2, 3, 1, 4);
    nlohmann::json j = {{"num_sut", 5}, {"load_cap", 2}};
    const auto cfg = config_from_json(j, base);
    CHECK(cfg.num_sut == 5);
    CHECK(cfg.mos_min.size() == 5);
    CHECK(cfg.load_cap == std::vector<std::size_t>{2, 2});
    CHECK_THROWS_AS(config_from_json({{"bogus", 1}}, base), InvalidConfigError);
    CHECK(config_from_json(config_to_json(base), NetworkConfig{}).p_max == base.p_max);
}

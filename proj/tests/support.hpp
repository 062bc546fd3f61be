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

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "jtnoma/channel.hpp"
#include "jtnoma/interference.hpp"
#include "jtnoma/model.hpp"

namespace jtnoma::test {

// Instance with every gain set to `gain`, unit noise and the default round-robin map.
inline NetworkInstance flat_instance(std::size_t L, std::size_t G, std::size_t M, std::size_t N, double gain = 1.0,
                                     double noise = 1.0)
{
    NetworkConfig cfg = NetworkConfig::defaults(L, G, M, N);
    cfg.noise_power.assign(G, noise);
    cfg.put_noise_power = noise;
    NetworkInstance inst = NetworkInstance::blank(cfg, gain);
    inst.sbs.assign(L, Point{});
    inst.sut.assign(G, Point{});
    inst.put.assign(M, Point{});
    for (std::size_t l = 0; l < L; ++l) inst.sbs[l] = {100.0 * static_cast<double>(l + 1), 0.0};
    for (std::size_t g = 0; g < G; ++g) inst.sut[g] = {0.0, 10.0 * static_cast<double>(g + 1)};
    for (std::size_t m = 0; m < M; ++m) inst.put[m] = {-50.0, 10.0 * static_cast<double>(m + 1)};
    return inst;
}

// Random binary schedule where each link is on with probability `density`; every SUT
// gets at least one link. Caps are not enforced.
inline Schedule random_schedule(const NetworkInstance& inst, std::mt19937_64& rng, double density = 0.4)
{
    std::bernoulli_distribution on(density);
    std::uniform_int_distribution<std::size_t> pick_l(0, inst.num_sbs() - 1), pick_n(0, inst.num_subcarriers() - 1);
    Schedule s = Schedule::empty_for(inst);
    for (std::size_t l = 0; l < inst.num_sbs(); ++l)
        for (std::size_t g = 0; g < inst.num_sut(); ++g)
            for (std::size_t n = 0; n < inst.num_subcarriers(); ++n)
                if (on(rng)) s.set_link(l, g, n, true);
    for (std::size_t g = 0; g < inst.num_sut(); ++g) {
        bool any = false;
        for (std::size_t l = 0; l < inst.num_sbs(); ++l)
            for (std::size_t n = 0; n < inst.num_subcarriers(); ++n) any = any || s.link(l, g, n) > 0.5;
        if (!any) s.set_link(pick_l(rng), g, pick_n(rng), true);
    }
    s.sync_chi();
    return s;
}

// Log-uniform powers in [lo, hi] on every entry.
inline PowerAllocation random_power(const NetworkInstance& inst, std::mt19937_64& rng, double lo = 1e-3, double hi = 5.0)
{
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    PowerAllocation pw = PowerAllocation::zeros(inst);
    for (auto& v : pw.p.data()) v = std::exp(u(rng));
    for (std::size_t m = 0; m < inst.num_put(); ++m)
        for (std::size_t n = 0; n < inst.num_subcarriers(); ++n)
            if (inst.primary_alloc(m, n) != 0.0) pw.q(m, n) = std::exp(u(rng));
    return pw;
}

// Seeded default-parameter instance of the given size.
inline NetworkInstance random_instance(std::size_t L, std::size_t G, std::size_t M, std::size_t N, std::uint64_t seed,
                                       ServiceKind svc = ServiceKind::web)
{
    return generate_instance(NetworkConfig::defaults(L, G, M, N, svc, seed));
}

struct Point3 {
    NetworkInstance inst;
    Schedule sched;
    PowerAllocation power;
};

// Flat-noise instance with random gains, a random schedule and powers such that every
// SUT rate lies strictly inside the unclamped part of the MOS curve (margin 0.2).
inline Point3 smooth_point(std::mt19937_64& rng, std::size_t L, std::size_t G, std::size_t M, std::size_t N,
                           double lo_rate = 2.2, double hi_rate = 6.8)
{
    std::uniform_real_distribution<double> ug(0.2, 2.0), up(std::log(0.5), std::log(60.0));
    for (int attempt = 0; attempt < 100000; ++attempt) {
        Point3 pt{flat_instance(L, G, M, N), {}, {}};
        for (auto& v : pt.inst.sbs_sut_gain.data()) v = ug(rng);
        for (auto& v : pt.inst.sbs_put_gain.data()) v = 0.05 * ug(rng);
        for (auto& v : pt.inst.mbs_sut_gain.data()) v = 0.05 * ug(rng);
        for (auto& v : pt.inst.mbs_put_gain.data()) v = ug(rng);
        pt.sched = random_schedule(pt.inst, rng, 0.5);
        pt.power = PowerAllocation::zeros(pt.inst);
        for (auto& v : pt.power.p.data()) v = std::exp(up(rng));
        for (std::size_t m = 0; m < M; ++m)
            for (std::size_t n = 0; n < N; ++n)
                if (pt.inst.primary_alloc(m, n) != 0.0) pt.power.q(m, n) = std::exp(up(rng));
        RateModel model(pt.inst);
        model.set_indicator(pt.sched);
        model.forward(pt.power);
        bool ok = true;
        for (double r : model.sut_rates()) ok = ok && r > lo_rate && r < hi_rate;
        if (ok) return pt;
    }
    throw std::runtime_error("smooth_point: no sample found");
}

inline double rel_err(double a, double b)
{
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

} // namespace jtnoma::test

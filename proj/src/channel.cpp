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

#include "jtnoma/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "jtnoma/serialization.hpp"

namespace jtnoma {

std::vector<ValidationIssue> ChannelModelParams::validate() const
{
    std::vector<ValidationIssue> out;
    auto in_range = [](double e) { return std::isfinite(e) && e >= 2.0 && e <= 6.0; };
    if (!in_range(pathloss_exponent_mbs))
        out.push_back({IssueKind::bad_parameter, "pathloss_exponent_mbs outside [2,6]"});
    if (!in_range(pathloss_exponent_sbs))
        out.push_back({IssueKind::bad_parameter, "pathloss_exponent_sbs outside [2,6]"});
    if (!std::isfinite(reference_loss_db)) out.push_back({IssueKind::bad_parameter, "reference_loss_db not finite"});
    if (!(std::isfinite(rayleigh_scale) && rayleigh_scale > 0.0))
        out.push_back({IssueKind::bad_parameter, "rayleigh_scale must be > 0"});
    return out;
}

double pathloss_gain(double distance_m, double exponent, double reference_loss_db)
{
    const double d = std::max(distance_m, 1.0);
    const double loss_db = reference_loss_db + 10.0 * exponent * std::log10(d);
    return std::pow(10.0, -loss_db / 10.0);
}

namespace {

Point uniform_in_disc(std::mt19937_64& rng, double radius)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double r = radius * std::sqrt(unit(rng));
    const double a = 2.0 * std::numbers::pi * unit(rng);
    return {r * std::cos(a), r * std::sin(a)};
}

[[noreturn]] void reject(const std::vector<ValidationIssue>& issues)
{
    std::string msg = "invalid network config:";
    for (const auto& i : issues) msg += " " + i.detail + ";";
    throw InvalidConfigError(msg);
}

} // namespace

NetworkInstance generate_instance(const NetworkConfig& cfg, const ChannelModelParams& ch)
{
    if (auto issues = validate_config(cfg); !issues.empty()) reject(issues);
    if (auto issues = ch.validate(); !issues.empty()) reject(issues);
    if (cfg.num_put > cfg.num_subcarriers)
        throw InvalidConfigError("num_put exceeds num_subcarriers: some PUT would hold no subcarrier");

    NetworkInstance inst = NetworkInstance::blank(cfg, 0.0);
    std::mt19937_64 rng(cfg.rng_seed);

    inst.mbs = {0.0, 0.0};
    for (auto& p : inst.sbs) p = uniform_in_disc(rng, cfg.mbs_radius);
    for (auto& p : inst.sut) p = uniform_in_disc(rng, cfg.mbs_radius);
    for (auto& p : inst.put) p = uniform_in_disc(rng, cfg.mbs_radius);

    std::exponential_distribution<double> fading(1.0 / ch.rayleigh_scale);
    const auto L = cfg.num_sbs, G = cfg.num_sut, M = cfg.num_put, N = cfg.num_subcarriers;
    // A draw of exactly zero is measure-zero but would break the positive-gain invariant.
    auto draw = [&] { return std::max(fading(rng), 1e-300); };

    for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t g = 0; g < G; ++g) {
            const double mean = pathloss_gain(distance(inst.sbs[l], inst.sut[g]), ch.pathloss_exponent_sbs,
                                              ch.reference_loss_db);
            for (std::size_t n = 0; n < N; ++n) inst.sbs_sut_gain(l, g, n) = mean * draw();
        }
        for (std::size_t m = 0; m < M; ++m) {
            const double mean = pathloss_gain(distance(inst.sbs[l], inst.put[m]), ch.pathloss_exponent_sbs,
                                              ch.reference_loss_db);
            for (std::size_t n = 0; n < N; ++n) inst.sbs_put_gain(l, m, n) = mean * draw();
        }
    }
    for (std::size_t g = 0; g < G; ++g) {
        const double mean =
            pathloss_gain(distance(inst.mbs, inst.sut[g]), ch.pathloss_exponent_mbs, ch.reference_loss_db);
        for (std::size_t n = 0; n < N; ++n) inst.mbs_sut_gain(g, n) = mean * draw();
    }
    for (std::size_t m = 0; m < M; ++m) {
        const double mean =
            pathloss_gain(distance(inst.mbs, inst.put[m]), ch.pathloss_exponent_mbs, ch.reference_loss_db);
        for (std::size_t n = 0; n < N; ++n) inst.mbs_put_gain(m, n) = mean * draw();
    }
    return inst;
}

bool decoded_before(const DecodingKey& a, const DecodingKey& b)
{
    if (a.jt != b.jt) return a.jt;
    if (a.jt) {
        if (a.mean_distance != b.mean_distance) return a.mean_distance > b.mean_distance;
    } else if (a.gain != b.gain) {
        return a.gain < b.gain;
    }
    return a.index < b.index;
}

namespace {

template <typename Indicator>
DecodingKey order_key(const NetworkInstance& inst, Indicator&& on, std::size_t l, std::size_t g, std::size_t n)
{
    DecodingKey key;
    key.index = g;
    key.gain = inst.sbs_sut_gain(l, g, n);
    std::size_t serving = 0;
    double dist = 0.0;
    for (std::size_t k = 0; k < inst.num_sbs(); ++k)
        if (on(k, g, n)) {
            ++serving;
            dist += distance(inst.sbs[k], inst.sut[g]);
        }
    key.jt = serving >= 2;
    key.mean_distance = serving > 0 ? dist / static_cast<double>(serving) : 0.0;
    return key;
}

} // namespace

std::vector<std::size_t> decoding_order(const NetworkInstance& inst, const Schedule& sched, std::size_t l,
                                        std::size_t n)
{
    auto on = [&](std::size_t k, std::size_t g, std::size_t c) { return sched.link(k, g, c) >= 0.5; };
    std::vector<DecodingKey> keys;
    for (std::size_t g = 0; g < inst.num_sut(); ++g)
        if (on(l, g, n)) keys.push_back(order_key(inst, on, l, g, n));
    std::sort(keys.begin(), keys.end(), decoded_before);
    std::vector<std::size_t> order;
    order.reserve(keys.size());
    for (const auto& k : keys) order.push_back(k.index);
    return order;
}

std::vector<std::size_t> decoding_rank(const NetworkInstance& inst, const Tensor3& indicator, std::size_t l,
                                       std::size_t n)
{
    auto on = [&](std::size_t k, std::size_t g, std::size_t c) { return indicator(k, g, c) >= 0.5; };
    const std::size_t G = inst.num_sut();
    std::vector<DecodingKey> keys(G);
    for (std::size_t g = 0; g < G; ++g) keys[g] = order_key(inst, on, l, g, n);
    std::vector<std::size_t> order(G);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return decoded_before(keys[a], keys[b]); });
    std::vector<std::size_t> rank(G);
    for (std::size_t r = 0; r < G; ++r) rank[order[r]] = r;
    return rank;
}

std::string instance_to_json(const NetworkInstance& inst) { return instance_to_json_value(inst).dump(1); }

NetworkInstance instance_from_json(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfigError(std::string("instance snapshot is not valid JSON: ") + e.what());
    }
    return instance_from_json_value(j);
}

} // namespace jtnoma

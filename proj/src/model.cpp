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

#include "jtnoma/model.hpp"

#include <cmath>
#include <sstream>

#include "jtnoma/channel.hpp"

namespace jtnoma {

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

std::string to_string(ServiceKind kind)
{
    switch (kind) {
    case ServiceKind::web: return "web";
    case ServiceKind::video: return "video";
    case ServiceKind::audio: return "audio";
    }
    return "unknown";
}

ServiceKind parse_service(const std::string& name)
{
    if (name == "web" || name == "1") return ServiceKind::web;
    if (name == "video" || name == "2") return ServiceKind::video;
    if (name == "audio" || name == "3") return ServiceKind::audio;
    throw InvalidConfigError("unknown service kind '" + name + "'");
}

ServiceProfile ServiceProfile::for_kind(ServiceKind kind)
{
    ServiceProfile p;
    p.kind = kind;
    p.mos_max = kind == ServiceKind::web ? 5.0 : 4.5;
    return p;
}

NetworkConfig NetworkConfig::defaults(std::size_t sbs, std::size_t sut, std::size_t put, std::size_t subcarriers,
                                      ServiceKind service, std::uint64_t seed)
{
    NetworkConfig cfg;
    cfg.num_sbs = sbs;
    cfg.num_sut = sut;
    cfg.num_put = put;
    cfg.num_subcarriers = subcarriers;
    cfg.service = service;
    cfg.rng_seed = seed;
    cfg.q_max = dbm_to_watts(42.0);
    cfg.put_noise_power = dbm_to_watts(-117.0);
    cfg.p_max.assign(sbs, dbm_to_watts(37.0));
    cfg.backhaul_cap.assign(sbs, 11.183e6);
    cfg.load_cap.assign(sbs, 3);
    cfg.sic_cap.assign(subcarriers, 2);
    cfg.put_rate_min.assign(put, 2.0);
    cfg.mos_min.assign(sut, 1.0);
    cfg.noise_power.assign(sut, dbm_to_watts(-117.0));
    return cfg;
}

namespace {

template <typename T>
void broadcast(std::vector<T>& v, std::size_t n, T fallback)
{
    const T seed = v.empty() ? fallback : v.front();
    if (v.size() != n) v.assign(n, seed);
}

} // namespace

void NetworkConfig::broadcast_per_index()
{
    broadcast(p_max, num_sbs, dbm_to_watts(37.0));
    broadcast(backhaul_cap, num_sbs, 11.183e6);
    broadcast(load_cap, num_sbs, std::size_t{3});
    broadcast(sic_cap, num_subcarriers, std::size_t{2});
    broadcast(put_rate_min, num_put, 2.0);
    broadcast(mos_min, num_sut, 1.0);
    broadcast(noise_power, num_sut, dbm_to_watts(-117.0));
}

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::size_t NetworkInstance::put_on(std::size_t n) const
{
    for (std::size_t m = 0; m < num_put(); ++m)
        if (primary_alloc(m, n) > 0.5) return m;
    return num_put();
}

NetworkInstance NetworkInstance::blank(const NetworkConfig& cfg, double gain)
{
    NetworkInstance inst;
    inst.config = cfg;
    const auto L = cfg.num_sbs, G = cfg.num_sut, M = cfg.num_put, N = cfg.num_subcarriers;
    inst.sbs.assign(L, Point{});
    inst.sut.assign(G, Point{});
    inst.put.assign(M, Point{});
    inst.sbs_sut_gain = Tensor3(L, G, N, gain);
    inst.sbs_put_gain = Tensor3(L, M, N, gain);
    inst.mbs_sut_gain = Matrix(G, N, gain);
    inst.mbs_put_gain = Matrix(M, N, gain);
    inst.primary_alloc = Matrix(M, N, 0.0);
    if (M > 0)
        for (std::size_t n = 0; n < N; ++n) inst.primary_alloc(n % M, n) = 1.0;
    return inst;
}

Schedule Schedule::empty(std::size_t sbs, std::size_t sut, std::size_t subcarriers)
{
    Schedule s;
    s.theta = Matrix(sbs, sut, 0.0);
    s.eps = Tensor3(sbs, sut, subcarriers, 0.0);
    s.chi = Tensor3(sbs, sut, subcarriers, 0.0);
    return s;
}

Schedule Schedule::empty_for(const NetworkInstance& inst)
{
    return empty(inst.num_sbs(), inst.num_sut(), inst.num_subcarriers());
}

void Schedule::set_link(std::size_t l, std::size_t g, std::size_t n, bool on)
{
    eps(l, g, n) = on ? 1.0 : 0.0;
    if (on) theta(l, g) = 1.0;
    chi(l, g, n) = theta(l, g) * eps(l, g, n);
}

void Schedule::sync_chi()
{
    for (std::size_t l = 0; l < num_sbs(); ++l)
        for (std::size_t g = 0; g < num_sut(); ++g)
            for (std::size_t n = 0; n < num_subcarriers(); ++n) chi(l, g, n) = theta(l, g) * eps(l, g, n);
}

void Schedule::canonicalize_theta()
{
    for (std::size_t l = 0; l < num_sbs(); ++l)
        for (std::size_t g = 0; g < num_sut(); ++g) {
            double any = 0.0;
            for (std::size_t n = 0; n < num_subcarriers(); ++n) any = std::max(any, eps(l, g, n));
            theta(l, g) = any > 0.5 ? 1.0 : 0.0;
        }
    sync_chi();
}

PowerAllocation PowerAllocation::zeros(const NetworkInstance& inst)
{
    PowerAllocation pw;
    pw.p = Tensor3(inst.num_sbs(), inst.num_sut(), inst.num_subcarriers(), 0.0);
    pw.q = Matrix(inst.num_put(), inst.num_subcarriers(), 0.0);
    return pw;
}

PowerAllocation PowerAllocation::uniform(const NetworkInstance& inst)
{
    PowerAllocation pw = zeros(inst);
    const double N = static_cast<double>(inst.num_subcarriers());
    for (std::size_t l = 0; l < inst.num_sbs(); ++l)
        for (std::size_t g = 0; g < inst.num_sut(); ++g)
            for (std::size_t n = 0; n < inst.num_subcarriers(); ++n) pw.p(l, g, n) = inst.config.p_max[l] / N;
    for (std::size_t m = 0; m < inst.num_put(); ++m)
        for (std::size_t n = 0; n < inst.num_subcarriers(); ++n)
            pw.q(m, n) = inst.primary_alloc(m, n) * inst.config.q_max / N;
    return pw;
}

namespace {

void issue(std::vector<ValidationIssue>& out, IssueKind kind, const std::string& detail)
{
    out.push_back({kind, detail});
}

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

} // namespace

std::vector<ValidationIssue> validate_config(const NetworkConfig& cfg)
{
    std::vector<ValidationIssue> out;
    if (cfg.num_sbs == 0) issue(out, IssueKind::bad_count, "num_sbs must be >= 1");
    if (cfg.num_sut == 0) issue(out, IssueKind::bad_count, "num_sut must be >= 1");
    if (cfg.num_put == 0) issue(out, IssueKind::bad_count, "num_put must be >= 1");
    if (cfg.num_subcarriers == 0) issue(out, IssueKind::bad_count, "num_subcarriers must be >= 1");
    if (!positive_finite(cfg.mbs_radius)) issue(out, IssueKind::bad_parameter, "mbs_radius must be > 0");
    if (!positive_finite(cfg.sbs_radius)) issue(out, IssueKind::bad_parameter, "sbs_radius must be > 0");
    if (!positive_finite(cfg.subcarrier_bandwidth))
        issue(out, IssueKind::bad_parameter, "subcarrier_bandwidth must be > 0");
    if (!positive_finite(cfg.q_max)) issue(out, IssueKind::bad_parameter, "q_max must be > 0");
    if (!positive_finite(cfg.put_noise_power)) issue(out, IssueKind::bad_parameter, "put_noise_power must be > 0");

    auto check_size = [&](std::size_t have, std::size_t want, const char* name) {
        if (have != want) {
            std::ostringstream os;
            os << name << " has " << have << " entries, expected " << want;
            issue(out, IssueKind::shape_mismatch, os.str());
            return false;
        }
        return true;
    };
    auto check_positive = [&](const std::vector<double>& v, const char* name) {
        for (std::size_t i = 0; i < v.size(); ++i)
            if (!positive_finite(v[i])) {
                std::ostringstream os;
                os << name << "[" << i << "] must be > 0";
                issue(out, IssueKind::bad_parameter, os.str());
            }
    };
    if (check_size(cfg.p_max.size(), cfg.num_sbs, "p_max")) check_positive(cfg.p_max, "p_max");
    if (check_size(cfg.backhaul_cap.size(), cfg.num_sbs, "backhaul_cap")) check_positive(cfg.backhaul_cap, "backhaul_cap");
    if (check_size(cfg.load_cap.size(), cfg.num_sbs, "load_cap"))
        for (std::size_t l = 0; l < cfg.load_cap.size(); ++l)
            if (cfg.load_cap[l] < 1) issue(out, IssueKind::bad_parameter, "load_cap[" + std::to_string(l) + "] must be >= 1");
    if (check_size(cfg.sic_cap.size(), cfg.num_subcarriers, "sic_cap"))
        for (std::size_t n = 0; n < cfg.sic_cap.size(); ++n)
            if (cfg.sic_cap[n] < 1) issue(out, IssueKind::bad_parameter, "sic_cap[" + std::to_string(n) + "] must be >= 1");
    if (check_size(cfg.put_rate_min.size(), cfg.num_put, "put_rate_min")) check_positive(cfg.put_rate_min, "put_rate_min");
    if (check_size(cfg.noise_power.size(), cfg.num_sut, "noise_power")) check_positive(cfg.noise_power, "noise_power");
    if (check_size(cfg.mos_min.size(), cfg.num_sut, "mos_min")) {
        const double cap = ServiceProfile::for_kind(cfg.service).mos_max;
        for (std::size_t g = 0; g < cfg.mos_min.size(); ++g)
            if (!(cfg.mos_min[g] >= 1.0 && cfg.mos_min[g] <= cap))
                issue(out, IssueKind::bad_parameter, "mos_min[" + std::to_string(g) + "] outside [1, mos_max]");
    }
    return out;
}

std::vector<ValidationIssue> validate_instance(const NetworkInstance& inst)
{
    std::vector<ValidationIssue> out = validate_config(inst.config);
    if (!out.empty()) return out;

    const auto L = inst.num_sbs(), G = inst.num_sut(), M = inst.num_put(), N = inst.num_subcarriers();
    auto dims3 = [](const Tensor3& t, std::size_t a, std::size_t b, std::size_t c) {
        return t.dim0() == a && t.dim1() == b && t.dim2() == c;
    };
    auto dims2 = [](const Matrix& t, std::size_t a, std::size_t b) { return t.rows() == a && t.cols() == b; };
    if (inst.sbs.size() != L || inst.sut.size() != G || inst.put.size() != M)
        issue(out, IssueKind::shape_mismatch, "position lists do not match node counts");
    if (!dims3(inst.sbs_sut_gain, L, G, N) || !dims3(inst.sbs_put_gain, L, M, N) || !dims2(inst.mbs_sut_gain, G, N) ||
        !dims2(inst.mbs_put_gain, M, N) || !dims2(inst.primary_alloc, M, N)) {
        issue(out, IssueKind::shape_mismatch, "gain or allocation tensor shape does not match config");
        return out;
    }

    auto check_pos = [&](Point p, const std::string& name) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) issue(out, IssueKind::bad_position, name + " is not finite");
    };
    check_pos(inst.mbs, "mbs");
    for (std::size_t i = 0; i < inst.sbs.size(); ++i) check_pos(inst.sbs[i], "sbs[" + std::to_string(i) + "]");
    for (std::size_t i = 0; i < inst.sut.size(); ++i) check_pos(inst.sut[i], "sut[" + std::to_string(i) + "]");
    for (std::size_t i = 0; i < inst.put.size(); ++i) check_pos(inst.put[i], "put[" + std::to_string(i) + "]");

    auto check_gain = [&](double v, const std::string& where) {
        if (!std::isfinite(v))
            issue(out, IssueKind::non_finite_gain, "gain " + where + " is not finite");
        else if (v <= 0.0)
            issue(out, IssueKind::non_positive_gain, "gain " + where + " is not positive");
    };
    auto idx = [](std::initializer_list<std::size_t> ix) {
        std::string s;
        for (auto i : ix) s += "[" + std::to_string(i) + "]";
        return s;
    };
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t l = 0; l < L; ++l) {
            for (std::size_t g = 0; g < G; ++g) check_gain(inst.sbs_sut_gain(l, g, n), "sbs_sut" + idx({l, g, n}));
            for (std::size_t m = 0; m < M; ++m) check_gain(inst.sbs_put_gain(l, m, n), "sbs_put" + idx({l, m, n}));
        }
        for (std::size_t g = 0; g < G; ++g) check_gain(inst.mbs_sut_gain(g, n), "mbs_sut" + idx({g, n}));
        for (std::size_t m = 0; m < M; ++m) check_gain(inst.mbs_put_gain(m, n), "mbs_put" + idx({m, n}));
    }

    for (std::size_t n = 0; n < N; ++n) {
        double holders = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            const double v = inst.primary_alloc(m, n);
            if (v != 0.0 && v != 1.0) issue(out, IssueKind::non_binary_alloc, "primary_alloc" + idx({m, n}) + " is not binary");
            holders += v;
        }
        if (holders > 1.0)
            issue(out, IssueKind::ofdma_overlap, "subcarrier " + std::to_string(n) + " is held by more than one PUT");
    }
    for (std::size_t m = 0; m < M; ++m) {
        double held = 0.0;
        for (std::size_t n = 0; n < N; ++n) held += inst.primary_alloc(m, n);
        if (held < 1.0) issue(out, IssueKind::put_without_subcarrier, "PUT " + std::to_string(m) + " holds no subcarrier");
    }
    return out;
}

std::vector<std::size_t> noma_cluster(const NetworkInstance& inst, const Schedule& sched, std::size_t l,
                                      std::size_t n)
{
    return decoding_order(inst, sched, l, n);
}

} // namespace jtnoma

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

#include "jtnoma/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "jtnoma/qoe.hpp"

namespace jtnoma::oracle {

namespace {

bool on(const Schedule& s, std::size_t l, std::size_t g, std::size_t n) { return s.link(l, g, n) >= 0.5; }

struct Order {
    bool jt;
    double dist;
    double gain;
    std::size_t g;
};

Order order_of(const NetworkInstance& inst, const Schedule& s, std::size_t l, std::size_t g, std::size_t n)
{
    std::size_t servers = 0;
    double dist = 0.0;
    for (std::size_t k = 0; k < inst.num_sbs(); ++k)
        if (on(s, k, g, n)) {
            ++servers;
            const double dx = inst.sbs[k].x - inst.sut[g].x, dy = inst.sbs[k].y - inst.sut[g].y;
            dist += std::sqrt(dx * dx + dy * dy);
        }
    return {servers >= 2, servers ? dist / static_cast<double>(servers) : 0.0, inst.sbs_sut_gain(l, g, n), g};
}

// a is decoded (and cancelled) before b.
bool earlier(const Order& a, const Order& b)
{
    if (a.jt && !b.jt) return true;
    if (!a.jt && b.jt) return false;
    if (a.jt && a.dist != b.dist) return a.dist > b.dist;
    if (!a.jt && a.gain != b.gain) return a.gain < b.gain;
    return a.g < b.g;
}

} // namespace

Terms interference_terms(const NetworkInstance& inst, const Schedule& s, const PowerAllocation& pw, std::size_t l,
                         std::size_t g, std::size_t n)
{
    const auto L = inst.num_sbs(), G = inst.num_sut(), M = inst.num_put();
    const auto& h = inst.sbs_sut_gain;
    Terms t;
    for (std::size_t m = 0; m < M; ++m) t.udl += inst.primary_alloc(m, n) * pw.q(m, n) * inst.mbs_sut_gain(g, n);

    const Order mine = order_of(inst, s, l, g, n);
    for (std::size_t o = 0; o < G; ++o) {
        if (o == g) continue;
        for (std::size_t k = 0; k < L; ++k) {
            const double w = s.link(k, o, n) * pw.p(k, o, n);
            if (k != l) t.ccd += w * h(k, g, n);
        }
        if (earlier(mine, order_of(inst, s, l, o, n))) t.noma += s.link(l, o, n) * pw.p(l, o, n) * h(l, g, n);
        // Cross terms of the coherent JT superposition of user o, unordered pairs counted twice.
        for (std::size_t a = 0; a < L; ++a)
            for (std::size_t b = a + 1; b < L; ++b) {
                const double wa = s.link(a, o, n) * pw.p(a, o, n), wb = s.link(b, o, n) * pw.p(b, o, n);
                t.jt += 4.0 * wa * wb * h(a, g, n) * h(b, g, n);
            }
    }
    return t;
}

double sinr(const NetworkInstance& inst, const Schedule& s, const PowerAllocation& pw, std::size_t l, std::size_t g,
            std::size_t n)
{
    const Terms t = interference_terms(inst, s, pw, l, g, n);
    return pw.p(l, g, n) * inst.sbs_sut_gain(l, g, n) / (t.udl + t.ccd + t.noma + t.jt + inst.config.noise_power[g]);
}

double sut_rate(const NetworkInstance& inst, const Schedule& s, const PowerAllocation& pw, std::size_t g)
{
    double r = 0.0;
    for (std::size_t n = 0; n < inst.num_subcarriers(); ++n)
        for (std::size_t l = 0; l < inst.num_sbs(); ++l)
            if (s.link(l, g, n) != 0.0) r += s.link(l, g, n) * std::log2(1.0 + oracle::sinr(inst, s, pw, l, g, n));
    return r;
}

double put_rate(const NetworkInstance& inst, const Schedule& s, const PowerAllocation& pw, std::size_t m)
{
    double r = 0.0;
    for (std::size_t n = 0; n < inst.num_subcarriers(); ++n) {
        if (inst.primary_alloc(m, n) == 0.0) continue;
        double i = inst.config.put_noise_power;
        for (std::size_t l = 0; l < inst.num_sbs(); ++l)
            for (std::size_t g = 0; g < inst.num_sut(); ++g) i += s.link(l, g, n) * pw.p(l, g, n) * inst.sbs_put_gain(l, m, n);
        r += inst.primary_alloc(m, n) * std::log2(1.0 + pw.q(m, n) * inst.mbs_put_gain(m, n) / i);
    }
    return r;
}

double utility(const NetworkInstance& inst, const Schedule& s, const PowerAllocation& pw)
{
    const MosCurve curve = MosCurve::for_kind(inst.config.service);
    double u = 0.0;
    for (std::size_t g = 0; g < inst.num_sut(); ++g) u += mos(curve, oracle::sut_rate(inst, s, pw, g));
    return u;
}

bool power_feasible(const NetworkInstance& inst, const Schedule& s, const PowerAllocation& pw)
{
    const auto& cfg = inst.config;
    const auto L = inst.num_sbs(), G = inst.num_sut(), M = inst.num_put(), N = inst.num_subcarriers();
    constexpr double rel = 1e-9;
    double q_total = 0.0;
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t n = 0; n < N; ++n) q_total += pw.q(m, n);
    if (q_total > cfg.q_max * (1.0 + rel)) return false;
    for (std::size_t l = 0; l < L; ++l) {
        double p_total = 0.0, carried = 0.0;
        for (std::size_t g = 0; g < G; ++g)
            for (std::size_t n = 0; n < N; ++n)
                if (s.link(l, g, n) != 0.0) {
                    p_total += s.link(l, g, n) * pw.p(l, g, n);
                    carried += s.link(l, g, n) * std::log2(1.0 + oracle::sinr(inst, s, pw, l, g, n));
                }
        if (p_total > cfg.p_max[l] * (1.0 + rel)) return false;
        if (cfg.subcarrier_bandwidth * carried > cfg.backhaul_cap[l] * (1.0 + rel)) return false;
    }
    for (std::size_t m = 0; m < M; ++m)
        if (oracle::put_rate(inst, s, pw, m) < cfg.put_rate_min[m] - rel) return false;
    const MosCurve curve = MosCurve::for_kind(cfg.service);
    for (std::size_t g = 0; g < G; ++g)
        if (mos(curve, oracle::sut_rate(inst, s, pw, g)) < cfg.mos_min[g] - rel) return false;
    return true;
}

std::vector<Schedule> enumerate_schedules(const NetworkInstance& inst, const SchemeRules& rules)
{
    const auto L = inst.num_sbs(), G = inst.num_sut(), N = inst.num_subcarriers();
    const std::size_t bits = L * G * N;
    if (bits > kMaxEnumerationSize)
        throw std::invalid_argument("enumerate_schedules: L*G*N = " + std::to_string(bits) + " exceeds " +
                                    std::to_string(kMaxEnumerationSize));
    const auto& cfg = inst.config;
    std::vector<Schedule> out;
    auto bit = [&](std::size_t mask, std::size_t l, std::size_t g, std::size_t n) {
        return (mask >> ((l * G + g) * N + n)) & 1U;
    };
    for (std::size_t mask = 0; mask < (std::size_t{1} << bits); ++mask) {
        bool ok = true;
        for (std::size_t g = 0; g < G && ok; ++g) {
            std::size_t servers = 0;
            for (std::size_t l = 0; l < L; ++l) {
                bool any = false;
                for (std::size_t n = 0; n < N; ++n) any = any || bit(mask, l, g, n);
                servers += any;
            }
            ok = servers >= 1 && (rules.allow_jt || servers <= 1);
        }
        for (std::size_t l = 0; l < L && ok; ++l) {
            std::size_t users = 0;
            for (std::size_t g = 0; g < G; ++g) {
                bool any = false;
                for (std::size_t n = 0; n < N; ++n) any = any || bit(mask, l, g, n);
                users += any;
            }
            ok = users <= cfg.load_cap[l];
        }
        for (std::size_t n = 0; n < N && ok; ++n) {
            std::size_t used = 0;
            for (std::size_t l = 0; l < L && ok; ++l) {
                std::size_t here = 0;
                for (std::size_t g = 0; g < G; ++g) here += bit(mask, l, g, n);
                ok = rules.allow_noma || here <= 1;
                used += here;
            }
            ok = ok && used <= cfg.sic_cap[n];
        }
        if (!ok) continue;
        Schedule s = Schedule::empty_for(inst);
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t g = 0; g < G; ++g)
                for (std::size_t n = 0; n < N; ++n)
                    if (bit(mask, l, g, n)) s.set_link(l, g, n, true);
        s.sync_chi();
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

struct Variable {
    bool is_q;
    std::size_t a, b, c; // (l,g,n) or (m,n,-)
    double cap;
};

class GridProblem {
public:
    GridProblem(const NetworkInstance& inst, const Schedule& s, const GridSettings& settings)
        : inst_(inst), s_(s), settings_(settings), pw_(PowerAllocation::zeros(inst))
    {
        const auto L = inst.num_sbs(), G = inst.num_sut(), M = inst.num_put(), N = inst.num_subcarriers();
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t g = 0; g < G; ++g)
                for (std::size_t n = 0; n < N; ++n)
                    if (on(s, l, g, n)) vars_.push_back({false, l, g, n, inst.config.p_max[l]});
        for (std::size_t m = 0; m < M; ++m) {
            std::vector<std::size_t> held;
            for (std::size_t n = 0; n < N; ++n)
                if (inst.primary_alloc(m, n) != 0.0) held.push_back(n);
            if (held.size() == 1)
                closed_.push_back({m, held[0]});
            else
                for (std::size_t n : held) vars_.push_back({true, m, n, 0, inst.config.q_max});
        }
        if (vars_.size() > kMaxGridVariables)
            throw std::invalid_argument("grid_power_search: " + std::to_string(vars_.size()) +
                                        " free power variables exceed " + std::to_string(kMaxGridVariables));
    }

    std::size_t size() const { return vars_.size(); }
    double lo() const { return std::log(settings_.power_floor); }
    double hi(std::size_t i) const { return std::log(vars_[i].cap); }

    // Utility at log-powers u, or -inf when infeasible.
    double value(const std::vector<double>& u)
    {
        ++evaluations;
        for (std::size_t i = 0; i < vars_.size(); ++i) {
            const auto& v = vars_[i];
            (v.is_q ? pw_.q(v.a, v.b) : pw_.p(v.a, v.b, v.c)) = std::exp(u[i]);
        }
        for (const auto& [m, n] : closed_) {
            double interf = inst_.config.put_noise_power;
            for (std::size_t l = 0; l < inst_.num_sbs(); ++l)
                for (std::size_t g = 0; g < inst_.num_sut(); ++g)
                    interf += s_.link(l, g, n) * pw_.p(l, g, n) * inst_.sbs_put_gain(l, m, n);
            pw_.q(m, n) = (std::exp2(inst_.config.put_rate_min[m]) - 1.0) * interf / inst_.mbs_put_gain(m, n) *
                          (1.0 + 1e-12);
        }
        if (!power_feasible(inst_, s_, pw_)) return -std::numeric_limits<double>::infinity();
        return utility(inst_, s_, pw_);
    }

    const PowerAllocation& power() const { return pw_; }
    std::size_t evaluations = 0;

private:
    const NetworkInstance& inst_;
    const Schedule& s_;
    GridSettings settings_;
    PowerAllocation pw_;
    std::vector<Variable> vars_;
    std::vector<std::pair<std::size_t, std::size_t>> closed_;
};

} // namespace

GridResult grid_power_search(const NetworkInstance& inst, const Schedule& s, const GridSettings& settings)
{
    if (settings.grid_points < 2) throw std::invalid_argument("grid_power_search: grid_points must be >= 2");
    GridProblem prob(inst, s, settings);
    const std::size_t k = prob.size();
    GridResult res;
    res.variables = k;

    std::size_t pts = settings.grid_points;
    if (k > 0)
        while (pts > 2 && std::pow(static_cast<double>(pts), static_cast<double>(k)) >
                              static_cast<double>(settings.max_evaluations))
            --pts;

    auto coord = [&](std::size_t i, std::size_t j) {
        return prob.lo() + (prob.hi(i) - prob.lo()) * static_cast<double>(j) / static_cast<double>(pts - 1);
    };

    // Grid pass, keeping the best `refine_starts` feasible points (best first).
    const std::size_t keep = std::max<std::size_t>(1, settings.refine_starts);
    std::vector<std::pair<double, std::vector<double>>> top;
    std::vector<double> u(k);
    std::vector<std::size_t> idx(k, 0);
    for (;;) {
        for (std::size_t i = 0; i < k; ++i) u[i] = coord(i, idx[i]);
        const double v = prob.value(u);
        if (std::isfinite(v) && (top.size() < keep || v > top.back().first)) {
            auto pos = std::find_if(top.begin(), top.end(), [&](const auto& e) { return v > e.first; });
            top.insert(pos, {v, u});
            if (top.size() > keep) top.pop_back();
        }
        std::size_t i = 0;
        while (i < k && ++idx[i] == pts) idx[i++] = 0;
        if (i == k) break;
    }

    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> best_u(k);
    for (auto& [v0, start] : top) {
        double cur = v0;
        std::vector<double> cur_u = start;
        if (settings.refine && k > 0) {
            double step = (prob.hi(0) - prob.lo()) / static_cast<double>(pts - 1);
            std::size_t budget = 20000;
            while (step > 1e-7 && budget > 0) {
                bool moved = false;
                for (std::size_t i = 0; i < k && budget > 0; ++i)
                    for (double dir : {1.0, -1.0}) {
                        u = cur_u;
                        u[i] = std::clamp(u[i] + dir * step, prob.lo(), prob.hi(i));
                        if (u[i] == cur_u[i]) continue;
                        --budget;
                        const double v = prob.value(u);
                        if (v > cur + 1e-13) {
                            cur = v;
                            cur_u = u;
                            moved = true;
                        }
                    }
                if (!moved) step *= 0.5;
            }
        }
        if (cur > best) {
            best = cur;
            best_u = cur_u;
        }
    }

    res.evaluations = prob.evaluations;
    if (!std::isfinite(best)) return res;
    prob.value(best_u);
    res.found = true;
    res.power = prob.power();
    res.utility = best;
    res.evaluations = prob.evaluations - 1;
    return res;
}

JointResult best_joint(const NetworkInstance& inst, const SchemeRules& rules, const GridSettings& settings)
{
    JointResult best;
    for (const Schedule& s : enumerate_schedules(inst, rules)) {
        ++best.schedules;
        GridResult r = grid_power_search(inst, s, settings);
        if (r.found && (!best.found || r.utility > best.utility)) {
            best.found = true;
            best.schedule = s;
            best.power = r.power;
            best.utility = r.utility;
        }
    }
    return best;
}

} // namespace jtnoma::oracle

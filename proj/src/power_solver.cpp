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

#include "jtnoma/power_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "jtnoma/feasibility.hpp"
#include "jtnoma/qoe.hpp"

namespace jtnoma {

void PowerSolveConfig::validate() const
{
    if (lambda_policy == LambdaPolicy::fixed && !(fixed_lambda > 0.0))
        throw std::invalid_argument("PowerSolveConfig: fixed lambda must be > 0");
    if (!(power_floor > 0.0)) throw std::invalid_argument("PowerSolveConfig: power floor must be > 0");
    if (!(low_rate_slope >= 0.0)) throw std::invalid_argument("PowerSolveConfig: low_rate_slope must be >= 0");
    alm.validate();
}

double refresh_lambda(double p1, double p2, double power_floor)
{
    if (!(p1 >= power_floor)) return 1.0;
    return std::clamp(p2 / p1, kLambdaMin, kLambdaMax);
}

PairLambda refresh_lambda(const NetworkInstance& inst, const PowerAllocation& prev, double power_floor)
{
    const auto L = inst.num_sbs(), G = inst.num_sut(), N = inst.num_subcarriers();
    PairLambda lambda(L, G, N, 1.0);
    for (std::size_t l1 = 0; l1 < L; ++l1)
        for (std::size_t l2 = 0; l2 < L; ++l2) {
            if (l1 == l2) continue;
            for (std::size_t g = 0; g < G; ++g)
                for (std::size_t n = 0; n < N; ++n)
                    lambda.at(l1, l2, g, n) = refresh_lambda(prev.p(l1, g, n), prev.p(l2, g, n), power_floor);
        }
    return lambda;
}

namespace {

constexpr double kBudgetMargin = 1e-9;
constexpr double kRateMargin = 1e-7;

double put_rate_fast(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw, std::size_t m)
{
    double total = 0.0;
    for (std::size_t n = 0; n < inst.num_subcarriers(); ++n) {
        if (inst.primary_alloc(m, n) == 0.0) continue;
        double interf = 0.0;
        for (std::size_t l = 0; l < inst.num_sbs(); ++l)
            for (std::size_t g = 0; g < inst.num_sut(); ++g)
                interf += sched.link(l, g, n) * pw.p(l, g, n) * inst.sbs_put_gain(l, m, n);
        total += std::log2(1.0 + pw.q(m, n) * inst.mbs_put_gain(m, n) / (interf + inst.config.put_noise_power));
    }
    return total;
}

// Least total MBS power on PUT m's subcarriers reaching `target` bits/s/Hz at the
// current SBS interference (water-filling). Returns the per-subcarrier powers.
std::vector<std::pair<std::size_t, double>> min_put_power(const NetworkInstance& inst, const Schedule& sched,
                                                          const PowerAllocation& pw, std::size_t m, double target)
{
    std::vector<std::pair<double, std::size_t>> a; // gain over interference-plus-noise
    for (std::size_t n = 0; n < inst.num_subcarriers(); ++n) {
        if (inst.primary_alloc(m, n) == 0.0) continue;
        double interf = 0.0;
        for (std::size_t l = 0; l < inst.num_sbs(); ++l)
            for (std::size_t g = 0; g < inst.num_sut(); ++g)
                interf += sched.link(l, g, n) * pw.p(l, g, n) * inst.sbs_put_gain(l, m, n);
        a.push_back({inst.mbs_put_gain(m, n) / (interf + inst.config.put_noise_power), n});
    }
    std::sort(a.begin(), a.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
    std::vector<std::pair<std::size_t, double>> out;
    if (a.empty()) return out;
    double log_sum = 0.0; // sum of log2 a over the active set
    std::size_t k = 0;
    double level = 0.0;
    for (k = 1; k <= a.size(); ++k) {
        log_sum += std::log2(a[k - 1].first);
        // Water level with the top k subcarriers active.
        level = std::exp2((target - log_sum) / static_cast<double>(k));
        if (k == a.size() || level <= 1.0 / a[k].first) break;
    }
    for (std::size_t i = 0; i < a.size(); ++i)
        out.push_back({a[i].second, i < k ? std::max(0.0, level - 1.0 / a[i].first) : 0.0});
    return out;
}

double total_of(const std::vector<std::pair<std::size_t, double>>& alloc)
{
    double t = 0.0;
    for (const auto& e : alloc) t += e.second;
    return t;
}

template <typename Pred>
double bisect_largest(Pred ok, double lo, double hi, int iters = 60)
{
    // Largest t in [lo, hi] with ok(t), given ok(lo) holds and ok is monotone.
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (ok(mid))
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

} // namespace

double min_mbs_power(const NetworkInstance& inst)
{
    const Schedule silent = Schedule::empty_for(inst);
    const PowerAllocation none = PowerAllocation::zeros(inst);
    double total = 0.0;
    for (std::size_t m = 0; m < inst.num_put(); ++m)
        total += total_of(min_put_power(inst, silent, none, m, inst.config.put_rate_min[m]));
    return total;
}

PowerAllocation restore_power_feasibility(const NetworkInstance& inst, const Schedule& sched, PowerAllocation pw)
{
    const auto L = inst.num_sbs(), G = inst.num_sut(), M = inst.num_put(), N = inst.num_subcarriers();
    const auto& cfg = inst.config;

    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t g = 0; g < G; ++g)
            for (std::size_t n = 0; n < N; ++n) {
                double& p = pw.p(l, g, n);
                p = std::isfinite(p) ? std::clamp(p, 0.0, cfg.p_max[l]) : 0.0;
            }
    double q_total = 0.0;
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t n = 0; n < N; ++n) {
            double& q = pw.q(m, n);
            q = (std::isfinite(q) && inst.primary_alloc(m, n) != 0.0) ? std::clamp(q, 0.0, cfg.q_max) : 0.0;
            q_total += q;
        }

    // Budgets.
    for (std::size_t l = 0; l < L; ++l) {
        double s = 0.0;
        for (std::size_t g = 0; g < G; ++g)
            for (std::size_t n = 0; n < N; ++n) s += sched.link(l, g, n) * pw.p(l, g, n);
        const double cap = cfg.p_max[l] * (1.0 - kBudgetMargin);
        if (s > cap) {
            const double f = cap / s;
            for (std::size_t g = 0; g < G; ++g)
                for (std::size_t n = 0; n < N; ++n)
                    if (sched.link(l, g, n) != 0.0) pw.p(l, g, n) *= f;
        }
    }
    if (const double cap = cfg.q_max * (1.0 - kBudgetMargin); q_total > cap) {
        const double f = cap / q_total;
        for (auto& q : pw.q.data()) q *= f;
        q_total = cap;
    }

    // A PUT served late can leave an earlier one short, so repeat a few rounds.
    for (int round = 0; round < 4; ++round) {
        bool all_met = true;
        for (std::size_t m = 0; m < M; ++m)
            all_met = all_met && put_rate_fast(inst, sched, pw, m) >= cfg.put_rate_min[m] + kRateMargin;
        if (all_met) break;

        // Trim the PUTs above their target to the least MBS power that keeps them there,
        // freeing budget for the short ones.
        for (std::size_t m = 0; m < M; ++m) {
            const double target = cfg.put_rate_min[m] + kRateMargin;
            if (put_rate_fast(inst, sched, pw, m) < target) continue;
            double current = 0.0;
            for (std::size_t n = 0; n < N; ++n) current += pw.q(m, n);
            const auto alloc = min_put_power(inst, sched, pw, m, target * (1.0 + 1e-9));
            if (total_of(alloc) >= current) continue;
            const Matrix before = pw.q;
            for (const auto& [n, q] : alloc) pw.q(m, n) = q;
            if (put_rate_fast(inst, sched, pw, m) < target) pw.q = before;
        }
        q_total = 0.0;
        for (double q : pw.q.data()) q_total += q;

        // PUT QoS: each PUT only sees the SBS links on its own subcarriers.
        for (std::size_t m = 0; m < M; ++m) {
            const double target = cfg.put_rate_min[m] + kRateMargin;
            if (put_rate_fast(inst, sched, pw, m) >= target) continue;

            std::vector<std::size_t> held;
            double own = 0.0;
            for (std::size_t n = 0; n < N; ++n)
                if (inst.primary_alloc(m, n) != 0.0) {
                    held.push_back(n);
                    own += pw.q(m, n);
                }
            {
                const auto alloc = min_put_power(inst, sched, pw, m, target * (1.0 + 1e-9));
                const double need = total_of(alloc);
                if (need <= own + std::max(0.0, cfg.q_max * (1.0 - kBudgetMargin) - q_total)) {
                    for (const auto& [n, q] : alloc) pw.q(m, n) = q;
                    q_total += need - own;
                    if (put_rate_fast(inst, sched, pw, m) >= target) continue;
                }
            }
            const double spare = std::max(0.0, cfg.q_max * (1.0 - kBudgetMargin) - q_total);
            if (spare > 0.0 && !held.empty()) {
                const Matrix base_q = pw.q;
                auto with_extra = [&](double s) {
                    for (std::size_t n : held) pw.q(m, n) = base_q(m, n) + s * spare / static_cast<double>(held.size());
                };
                with_extra(1.0);
                double s = 1.0;
                if (put_rate_fast(inst, sched, pw, m) >= target) {
                    // Smallest extra power that meets the target.
                    double lo = 0.0, hi = 1.0;
                    for (int i = 0; i < 60; ++i) {
                        const double mid = 0.5 * (lo + hi);
                        with_extra(mid);
                        if (put_rate_fast(inst, sched, pw, m) >= target)
                            hi = mid;
                        else
                            lo = mid;
                    }
                    s = hi;
                }
                with_extra(s);
                q_total += s * spare;
            }
            if (put_rate_fast(inst, sched, pw, m) >= target) continue;

            const PowerAllocation base = pw;
            auto scaled = [&](double t) {
                for (std::size_t n : held)
                    for (std::size_t l = 0; l < L; ++l)
                        for (std::size_t g = 0; g < G; ++g)
                            if (sched.link(l, g, n) != 0.0) pw.p(l, g, n) = base.p(l, g, n) * t;
            };
            const double t = bisect_largest(
                [&](double tt) {
                    scaled(tt);
                    return put_rate_fast(inst, sched, pw, m) >= target;
                },
                0.0, 1.0);
            scaled(t);
            // With less interference the PUT may need less MBS power than it now holds.
            double held_q = 0.0;
            const Matrix before = pw.q;
            for (std::size_t n : held) held_q += pw.q(m, n);
            const auto alloc = min_put_power(inst, sched, pw, m, target * (1.0 + 1e-9));
            if (const double need = total_of(alloc); need < held_q) {
                for (const auto& [n, q] : alloc) pw.q(m, n) = q;
                if (put_rate_fast(inst, sched, pw, m) >= target)
                    q_total -= held_q - need;
                else
                    pw.q = before;
            }
        }
    }

    // Last resort: one common scale on every SBS link that reaches a PUT, with every PUT
    // water-filled; t = 0 leaves the PUTs noise-limited.
    {
        bool all_met = true;
        for (std::size_t m = 0; m < M; ++m)
            all_met = all_met && put_rate_fast(inst, sched, pw, m) >= cfg.put_rate_min[m] + kRateMargin;
        if (!all_met) {
            const PowerAllocation base = pw;
            auto apply = [&](double t) {
                pw = base;
                for (std::size_t n = 0; n < N; ++n) {
                    if (inst.put_on(n) >= M) continue;
                    for (std::size_t l = 0; l < L; ++l)
                        for (std::size_t g = 0; g < G; ++g)
                            if (sched.link(l, g, n) != 0.0) pw.p(l, g, n) *= t;
                }
                double need = 0.0;
                for (std::size_t m = 0; m < M; ++m) {
                    const auto alloc = min_put_power(inst, sched, pw, m, (cfg.put_rate_min[m] + kRateMargin) * (1.0 + 1e-9));
                    for (const auto& [n, q] : alloc) pw.q(m, n) = q;
                    need += total_of(alloc);
                }
                return need <= cfg.q_max * (1.0 - kBudgetMargin);
            };
            if (apply(0.0)) apply(bisect_largest(apply, 0.0, 1.0));
            else pw = base; // no MBS allocation can meet every PUT target
        }
    }

    // Backhaul: scale the offending SBS down; other SBSs' rates can rise in turn.
    RateModel model(inst);
    model.set_indicator(sched);
    for (int round = 0; round < 50; ++round) {
        model.forward(pw, JtModel::exact, nullptr, false);
        bool changed = false;
        for (std::size_t l = 0; l < L; ++l) {
            const double cap = cfg.backhaul_cap[l] / cfg.subcarrier_bandwidth * (1.0 - kBudgetMargin);
            if (model.backhaul_rates()[l] <= cap) continue;
            const PowerAllocation base = pw;
            auto scaled = [&](double t) {
                for (std::size_t g = 0; g < G; ++g)
                    for (std::size_t n = 0; n < N; ++n)
                        if (sched.link(l, g, n) != 0.0) pw.p(l, g, n) = base.p(l, g, n) * t;
            };
            const double t = bisect_largest(
                [&](double tt) {
                    scaled(tt);
                    return backhaul_rate(inst, sched, pw, l) <= cap;
                },
                0.0, 1.0);
            scaled(t);
            changed = true;
            model.forward(pw, JtModel::exact, nullptr, false);
        }
        if (!changed) break;
    }
    return pw;
}

namespace {

class PowerProblem final : public AlmProblem {
public:
    PowerProblem(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& start,
                 const PowerSolveConfig& cfg)
        : inst_(inst), cfg_(cfg), curve_(MosCurve::for_kind(inst.config.service)), model_(inst), pw_(start),
          lambda_(cfg.lambda_policy == LambdaPolicy::fixed ? PairLambda(cfg.fixed_lambda) : PairLambda(1.0))
    {
        const auto L = inst.num_sbs(), G = inst.num_sut(), M = inst.num_put(), N = inst.num_subcarriers();
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t g = 0; g < G; ++g)
                for (std::size_t n = 0; n < N; ++n)
                    if (sched.link(l, g, n) != 0.0) links_.push_back({l, g, n});
        for (std::size_t m = 0; m < M; ++m)
            for (std::size_t n = 0; n < N; ++n)
                if (inst.primary_alloc(m, n) != 0.0) puts_.push_back({m, n});
        model_.set_indicator(sched);
        adj_.link_weight = Tensor3(L, G, N);
        adj_.put_weight.assign(M, 0.0);
        if (cfg.lambda_policy == LambdaPolicy::per_pair_ratio) lambda_ = refresh_lambda(inst, start, cfg.power_floor);
    }

    std::size_t num_variables() const override { return links_.size() + puts_.size(); }
    std::size_t num_constraints() const override
    {
        return 1 + 2 * inst_.num_sbs() + inst_.num_put() + inst_.num_sut();
    }

    Box box() const override
    {
        Box b;
        const double lo = std::log(cfg_.power_floor);
        for (const auto& k : links_) {
            b.lower.push_back(lo);
            b.upper.push_back(std::log(inst_.config.p_max[k.a]));
        }
        for (std::size_t i = 0; i < puts_.size(); ++i) {
            b.lower.push_back(lo);
            b.upper.push_back(std::log(inst_.config.q_max));
        }
        return b;
    }

    std::vector<double> encode(const PowerAllocation& pw) const
    {
        std::vector<double> x;
        x.reserve(num_variables());
        for (const auto& k : links_) x.push_back(std::log(std::max(pw.p(k.a, k.b, k.n), cfg_.power_floor)));
        for (const auto& k : puts_) x.push_back(std::log(std::max(pw.q(k.a, k.n), cfg_.power_floor)));
        return x;
    }

    void decode(const std::vector<double>& x, PowerAllocation& pw) const
    {
        std::size_t i = 0;
        for (const auto& k : links_) pw.p(k.a, k.b, k.n) = std::exp(x[i++]);
        for (const auto& k : puts_) pw.q(k.a, k.n) = std::exp(x[i++]);
    }

    double evaluate(const std::vector<double>& x, std::vector<double>& r) override
    {
        const auto L = inst_.num_sbs(), G = inst_.num_sut(), M = inst_.num_put();
        const auto& cfg = inst_.config;
        decode(x, pw_);
        model_.forward(pw_, JtModel::convex, &lambda_, false);

        double base = 0.0;
        for (double rate : model_.sut_rates()) base += surrogate_mos(curve_, rate, cfg_.low_rate_slope);

        r.assign(num_constraints(), 0.0);
        double q_total = 0.0;
        for (const auto& k : puts_) q_total += pw_.q(k.a, k.n);
        r[0] = (q_total - cfg.q_max) / cfg.q_max;
        std::vector<double> sbs(L, 0.0);
        for (const auto& k : links_) sbs[k.a] += pw_.p(k.a, k.b, k.n);
        for (std::size_t l = 0; l < L; ++l) r[1 + l] = (sbs[l] - cfg.p_max[l]) / cfg.p_max[l];
        for (std::size_t m = 0; m < M; ++m) r[1 + L + m] = cfg.put_rate_min[m] - model_.put_rates()[m];
        for (std::size_t g = 0; g < G; ++g) r[1 + L + M + g] = cfg.mos_min[g] - mos(curve_, model_.sut_rates()[g]);
        for (std::size_t l = 0; l < L; ++l) {
            const double cap = cfg.backhaul_cap[l] / cfg.subcarrier_bandwidth;
            r[1 + L + M + G + l] = (model_.backhaul_rates()[l] - cap) / cap;
        }
        return base;
    }

    void gradient(const std::vector<double>& w, std::vector<double>& grad) override
    {
        const auto L = inst_.num_sbs(), G = inst_.num_sut(), M = inst_.num_put();
        const auto& cfg = inst_.config;
        const auto& rates = model_.sut_rates();
        std::vector<double> user_w(G);
        for (std::size_t g = 0; g < G; ++g)
            user_w[g] = surrogate_mos_derivative(curve_, rates[g], cfg_.low_rate_slope) +
                        w[1 + L + M + g] * mos_derivative(curve_, rates[g]);
        for (const auto& k : links_) {
            const double cap = cfg.backhaul_cap[k.a] / cfg.subcarrier_bandwidth;
            adj_.link_weight(k.a, k.b, k.n) = user_w[k.b] - w[1 + L + M + G + k.a] / cap;
        }
        for (std::size_t m = 0; m < M; ++m) adj_.put_weight[m] = w[1 + L + m];
        model_.backward(adj_, grad_);

        grad.assign(num_variables(), 0.0);
        std::size_t i = 0;
        for (const auto& k : links_) {
            const double p = pw_.p(k.a, k.b, k.n);
            grad[i++] = (grad_.d_p(k.a, k.b, k.n) - w[1 + k.a] / cfg.p_max[k.a]) * p;
        }
        for (const auto& k : puts_) {
            const double q = pw_.q(k.a, k.n);
            grad[i++] = (grad_.d_q(k.a, k.n) - w[0] / cfg.q_max) * q;
        }
    }

    void begin_outer_iteration(const std::vector<double>& x) override
    {
        if (cfg_.lambda_policy != LambdaPolicy::per_pair_ratio) return;
        decode(x, pw_);
        lambda_ = refresh_lambda(inst_, pw_, cfg_.power_floor);
    }

    double model_utility(const PowerAllocation& pw)
    {
        model_.forward(pw, JtModel::convex, &lambda_, false);
        return qoe_from_rates(curve_, model_.sut_rates());
    }

    const PowerAllocation& current() const { return pw_; }

private:
    struct Index {
        std::size_t a, b, n;
    };
    struct PutIndex {
        std::size_t a, n;
    };

    const NetworkInstance& inst_;
    PowerSolveConfig cfg_;
    MosCurve curve_;
    RateModel model_;
    PowerAllocation pw_;
    PairLambda lambda_;
    std::vector<Index> links_;
    std::vector<PutIndex> puts_;
    RateAdjoint adj_;
    RateGradient grad_;
};

void fill_user_stats(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw, SolveReport& r)
{
    const auto curve = MosCurve::for_kind(inst.config.service);
    r.user_rate = user_rates(inst, sched, pw);
    r.user_mos.clear();
    for (double v : r.user_rate) r.user_mos.push_back(mos(curve, v));
    r.utility = qoe_from_rates(curve, r.user_rate);
    r.audit = audit(inst, sched, pw);
    r.feasible = r.audit.feasible;
}

} // namespace

PowerSolveResult solve_power(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& start,
                             const PowerSolveConfig& cfg)
{
    cfg.validate();
    if (sched.relaxed) throw std::invalid_argument("solve_power: schedule must be binary");
    const auto t0 = std::chrono::steady_clock::now();

    const PowerAllocation feasible_start = restore_power_feasibility(inst, sched, start);
    PowerProblem problem(inst, sched, feasible_start, cfg);

    PowerSolveResult out;
    SolveReport& report = out.report;
    PowerAllocation candidate = feasible_start;
    if (problem.num_variables() > 0) {
        AlmResult alm = outer_loop(problem, problem.encode(feasible_start),
                                   AlmState::initial(problem.num_constraints(), cfg.alm), cfg.alm);
        report.converged = alm.converged;
        report.outer_iterations = alm.state.iteration;
        for (const auto& row : alm.trace)
            report.trace.push_back({"power", 0, row.iteration, row.objective, row.max_violation, row.alpha});
        problem.decode(alm.x, candidate);
        candidate = restore_power_feasibility(inst, sched, candidate);
    } else {
        report.converged = true;
    }

    SolveReport start_report, cand_report;
    fill_user_stats(inst, sched, feasible_start, start_report);
    fill_user_stats(inst, sched, candidate, cand_report);
    const bool take_candidate = (cand_report.feasible && !start_report.feasible) ||
                                (cand_report.feasible == start_report.feasible &&
                                 cand_report.utility >= start_report.utility);
    out.power = take_candidate ? candidate : feasible_start;
    const SolveReport& chosen = take_candidate ? cand_report : start_report;
    report.utility = chosen.utility;
    report.user_rate = chosen.user_rate;
    report.user_mos = chosen.user_mos;
    report.audit = chosen.audit;
    report.feasible = chosen.feasible;
    report.model_utility = problem.model_utility(out.power);
    report.utility_trace = {start_report.utility, report.utility};
    if (!take_candidate) report.message = "kept feasible start";
    report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

} // namespace jtnoma

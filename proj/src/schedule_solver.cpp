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

#include "jtnoma/schedule_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "jtnoma/channel.hpp"
#include "jtnoma/feasibility.hpp"
#include "jtnoma/interference.hpp"
#include "jtnoma/power_solver.hpp"
#include "jtnoma/qoe.hpp"

namespace jtnoma {

LinearizationResiduals linearization_residuals(const Schedule& s)
{
    const auto L = s.num_sbs(), G = s.num_sut(), N = s.num_subcarriers();
    LinearizationResiduals r{Tensor3(L, G, N), Tensor3(L, G, N), Tensor3(L, G, N)};
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t g = 0; g < G; ++g)
            for (std::size_t n = 0; n < N; ++n) {
                const double th = s.theta(l, g), e = s.eps(l, g, n), c = s.chi(l, g, n);
                r.chi_minus_theta(l, g, n) = c - th;
                r.chi_minus_eps(l, g, n) = c - e;
                r.product_lower(l, g, n) = th + e - 1.0 - c;
            }
    return r;
}

std::array<double, 3> binary_forcing_residuals(const Schedule& s)
{
    auto f = [](const std::vector<double>& v) {
        double t = 0.0;
        for (double x : v) t += x - x * x;
        return t;
    };
    return {f(s.theta.data()), f(s.eps.data()), f(s.chi.data())};
}

bool schedule_admissible(const NetworkInstance& inst, const Schedule& s, const SchemeRules& rules)
{
    const auto L = inst.num_sbs(), G = inst.num_sut(), N = inst.num_subcarriers();
    const auto& cfg = inst.config;
    for (double v : s.theta.data())
        if (v != 0.0 && v != 1.0) return false;
    for (double v : s.eps.data())
        if (v != 0.0 && v != 1.0) return false;
    for (std::size_t l = 0; l < L; ++l) {
        double users = 0.0;
        for (std::size_t g = 0; g < G; ++g) users += s.theta(l, g);
        if (users > static_cast<double>(cfg.load_cap[l])) return false;
    }
    for (std::size_t g = 0; g < G; ++g) {
        double assoc = 0.0, subc = 0.0;
        for (std::size_t l = 0; l < L; ++l) {
            assoc += s.theta(l, g);
            for (std::size_t n = 0; n < N; ++n) {
                subc += s.eps(l, g, n);
                if (s.eps(l, g, n) > s.theta(l, g)) return false;
                if (s.chi(l, g, n) != s.theta(l, g) * s.eps(l, g, n)) return false;
            }
        }
        if (assoc < 1.0 || subc < 1.0) return false;
        if (!rules.allow_jt && assoc > 1.0) return false;
    }
    for (std::size_t n = 0; n < N; ++n) {
        double used = 0.0;
        for (std::size_t l = 0; l < L; ++l) {
            double here = 0.0;
            for (std::size_t g = 0; g < G; ++g) here += s.eps(l, g, n);
            if (!rules.allow_noma && here > 1.0) return false;
            used += here;
        }
        if (used > static_cast<double>(cfg.sic_cap[n])) return false;
    }
    return true;
}

namespace {

constexpr double kTieBreak = 1e-4;
constexpr double kImprove = 1e-9;
constexpr double kPutMargin = 1e-7;
constexpr double kMinLinkPower = 1e-12;
constexpr double kShareTrace = 1e-6;

struct Link {
    std::size_t l = 0, g = 0;
    double p = 0.0;
};
using LinkList = std::vector<Link>;

struct SubEval {
    std::vector<double> rate; // per link, list order
    double put_rate = 0.0;
};

struct Trial {
    std::map<std::size_t, LinkList> lists; // replaced subcarrier lists
    std::map<std::size_t, double> q;        // raised MBS power on PUT-held subcarriers
};

struct Outcome {
    bool ok = false;
    double score = 0.0;
    std::map<std::size_t, SubEval> evals;
};

// Binary schedule held as per-subcarrier link lists with incremental rate bookkeeping.
// Changing the links of subcarrier n only changes rates on n and the PUT holding n.
class LinkState {
public:
    LinkState(const NetworkInstance& inst, const Schedule& s, const PowerAllocation& pw, const SchemeRules& rules)
        : inst_(inst), rules_(rules), curve_(MosCurve::for_kind(inst.config.service)), pw_(pw),
          L_(inst.num_sbs()), G_(inst.num_sut()), M_(inst.num_put()), N_(inst.num_subcarriers()), lists_(N_),
          evals_(N_), count_(L_ * G_, 0), user_rate_(G_, 0.0), bh_(L_, 0.0), sbs_power_(L_, 0.0),
          put_rate_(M_, 0.0), user_links_(G_, 0), cnt_(G_), dist_(G_)
    {
        for (double v : pw.q.data()) q_total_ += v;
        for (std::size_t n = 0; n < N_; ++n)
            for (std::size_t l = 0; l < L_; ++l)
                for (std::size_t g = 0; g < G_; ++g)
                    if (s.link(l, g, n) >= 0.5) lists_[n].push_back({l, g, pw.p(l, g, n)});
        rebuild();
    }

    void rebuild()
    {
        std::fill(count_.begin(), count_.end(), 0);
        std::fill(user_rate_.begin(), user_rate_.end(), 0.0);
        std::fill(bh_.begin(), bh_.end(), 0.0);
        std::fill(sbs_power_.begin(), sbs_power_.end(), 0.0);
        std::fill(put_rate_.begin(), put_rate_.end(), 0.0);
        std::fill(user_links_.begin(), user_links_.end(), 0);
        for (std::size_t n = 0; n < N_; ++n) {
            evals_[n] = eval(n, lists_[n]);
            const auto& list = lists_[n];
            for (std::size_t i = 0; i < list.size(); ++i) {
                ++count_[list[i].l * G_ + list[i].g];
                ++user_links_[list[i].g];
                user_rate_[list[i].g] += evals_[n].rate[i];
                bh_[list[i].l] += evals_[n].rate[i];
                sbs_power_[list[i].l] += list[i].p;
            }
            if (std::size_t m = inst_.put_on(n); m < M_) put_rate_[m] += evals_[n].put_rate;
        }
        score_ = score_of(user_rate_);
    }

    double q_at(std::size_t n) const
    {
        const std::size_t m = inst_.put_on(n);
        return m < M_ ? pw_.q(m, n) : 0.0;
    }
    double mbs_spare() const { return inst_.config.q_max * (1.0 - 1e-9) - q_total_; }

    SubEval eval(std::size_t n, const LinkList& links) const { return eval(n, links, q_at(n)); }

    SubEval eval(std::size_t n, const LinkList& links, double q) const
    {
        SubEval ev;
        ev.rate.resize(links.size());
        const std::size_t m = inst_.put_on(n);
        std::fill(cnt_.begin(), cnt_.end(), 0);
        std::fill(dist_.begin(), dist_.end(), 0.0);
        for (const auto& k : links) {
            ++cnt_[k.g];
            dist_[k.g] += distance(inst_.sbs[k.l], inst_.sut[k.g]);
        }
        auto key = [&](std::size_t l, std::size_t g) {
            return DecodingKey{cnt_[g] >= 2, cnt_[g] > 0 ? dist_[g] / cnt_[g] : 0.0, inst_.sbs_sut_gain(l, g, n), g};
        };
        const auto& h = inst_.sbs_sut_gain;
        for (std::size_t i = 0; i < links.size(); ++i) {
            const auto [l, g, p] = links[i];
            const double hg = h(l, g, n);
            double I = q * inst_.mbs_sut_gain(g, n);
            const DecodingKey ki = key(l, g);
            for (std::size_t j = 0; j < links.size(); ++j) {
                const auto& o = links[j];
                if (o.g == g) continue;
                if (o.l != l) {
                    I += o.p * h(o.l, g, n);
                } else if (decoded_before(ki, key(l, o.g))) {
                    I += o.p * hg;
                }
                if (cnt_[o.g] >= 2) {
                    for (std::size_t k = 0; k < links.size(); ++k)
                        if (k != j && links[k].g == o.g) I += 2.0 * o.p * links[k].p * h(o.l, g, n) * h(links[k].l, g, n);
                }
            }
            ev.rate[i] = std::log2(1.0 + p * hg / (I + inst_.config.noise_power[g]));
        }
        if (m < M_) {
            double ip = 0.0;
            for (const auto& k : links) ip += k.p * inst_.sbs_put_gain(k.l, m, n);
            ev.put_rate = std::log2(1.0 + q * inst_.mbs_put_gain(m, n) / (ip + inst_.config.put_noise_power));
        }
        return ev;
    }

    double score_of(const std::vector<double>& rates) const
    {
        const double r0 = curve_.profile.rate_anchor_min;
        double s = 0.0;
        for (double r : rates) s += mos(curve_, r) + kTieBreak * std::min(r, r0) / r0;
        return s;
    }

    Outcome try_trial(const Trial& t, bool check) const
    {
        Outcome out;
        std::vector<double> rate = user_rate_, bh = bh_, power = sbs_power_, put = put_rate_;
        std::map<std::size_t, int> dcount; // (l*G+g) -> delta links
        std::vector<int> dlinks(G_, 0);
        std::vector<char> user_touched(G_, 0), sbs_touched(L_, 0), put_touched(M_, 0);
        for (const auto& [n, list] : t.lists) {
            if (check && !list_ok(n, list)) return out;
            const auto qi = t.q.find(n);
            SubEval ev = qi == t.q.end() ? eval(n, list) : eval(n, list, qi->second);
            const auto& old = lists_[n];
            for (std::size_t i = 0; i < old.size(); ++i) {
                rate[old[i].g] -= evals_[n].rate[i];
                bh[old[i].l] -= evals_[n].rate[i];
                power[old[i].l] -= old[i].p;
                --dcount[old[i].l * G_ + old[i].g];
                --dlinks[old[i].g];
                user_touched[old[i].g] = sbs_touched[old[i].l] = 1;
            }
            for (std::size_t i = 0; i < list.size(); ++i) {
                rate[list[i].g] += ev.rate[i];
                bh[list[i].l] += ev.rate[i];
                power[list[i].l] += list[i].p;
                ++dcount[list[i].l * G_ + list[i].g];
                ++dlinks[list[i].g];
                user_touched[list[i].g] = sbs_touched[list[i].l] = 1;
            }
            if (std::size_t m = inst_.put_on(n); m < M_) {
                put[m] += ev.put_rate - evals_[n].put_rate;
                put_touched[m] = 1;
            }
            out.evals.emplace(n, std::move(ev));
        }
        if (check) {
            const auto& cfg = inst_.config;
            double dq = 0.0;
            for (const auto& [n, v] : t.q) dq += v - q_at(n);
            if (dq > 0.0 && dq > mbs_spare()) return out;
            std::vector<int> users(L_, 0), servers(G_, 0);
            for (std::size_t l = 0; l < L_; ++l)
                for (std::size_t g = 0; g < G_; ++g) {
                    auto it = dcount.find(l * G_ + g);
                    const int c = count_[l * G_ + g] + (it == dcount.end() ? 0 : it->second);
                    if (c > 0) {
                        ++users[l];
                        ++servers[g];
                    }
                }
            for (std::size_t l = 0; l < L_; ++l) {
                if (!sbs_touched[l]) continue;
                if (users[l] > static_cast<int>(cfg.load_cap[l]) && users[l] > sbs_users(l)) return out;
                if (power[l] > cfg.p_max[l] && power[l] > sbs_power_[l]) return out;
                const double cap = cfg.backhaul_cap[l] / cfg.subcarrier_bandwidth;
                if (bh[l] > cap && bh[l] > bh_[l]) return out;
            }
            for (std::size_t g = 0; g < G_; ++g) {
                if (!user_touched[g]) continue;
                if (user_links_[g] + dlinks[g] < 1) return out;
                if (!rules_.allow_jt && servers[g] > 1) return out;
                const double need = std::min(cfg.mos_min[g], mos(curve_, user_rate_[g]));
                if (mos(curve_, rate[g]) < need - 1e-12) return out;
            }
            for (std::size_t m = 0; m < M_; ++m) {
                if (!put_touched[m]) continue;
                const double need = std::min(cfg.put_rate_min[m] + 1e-9, put_rate_[m]);
                if (put[m] < need) return out;
            }
        }
        out.score = score_of(rate);
        out.ok = true;
        return out;
    }

    void commit(Trial&& t, Outcome&& o)
    {
        for (const auto& [n, v] : t.q) {
            q_total_ += v - q_at(n);
            pw_.q(inst_.put_on(n), n) = v;
        }
        for (auto& [n, list] : t.lists) {
            lists_[n] = std::move(list);
            evals_[n] = std::move(o.evals.at(n));
        }
        rebuild_totals();
    }

    void rebuild_totals()
    {
        std::fill(count_.begin(), count_.end(), 0);
        std::fill(user_rate_.begin(), user_rate_.end(), 0.0);
        std::fill(bh_.begin(), bh_.end(), 0.0);
        std::fill(sbs_power_.begin(), sbs_power_.end(), 0.0);
        std::fill(put_rate_.begin(), put_rate_.end(), 0.0);
        std::fill(user_links_.begin(), user_links_.end(), 0);
        for (std::size_t n = 0; n < N_; ++n) {
            const auto& list = lists_[n];
            for (std::size_t i = 0; i < list.size(); ++i) {
                ++count_[list[i].l * G_ + list[i].g];
                ++user_links_[list[i].g];
                user_rate_[list[i].g] += evals_[n].rate[i];
                bh_[list[i].l] += evals_[n].rate[i];
                sbs_power_[list[i].l] += list[i].p;
            }
            if (std::size_t m = inst_.put_on(n); m < M_) put_rate_[m] += evals_[n].put_rate;
        }
        score_ = score_of(user_rate_);
    }

    // Largest power SBS l may put on n next to `others` while the PUT on n keeps its
    // rate target, given the PUT's rate on its other subcarriers.
    double put_cap(std::size_t n, const LinkList& others, std::size_t l, double q) const
    {
        const std::size_t m = inst_.put_on(n);
        if (m >= M_) return std::numeric_limits<double>::infinity();
        const double other = put_rate_[m] - evals_[n].put_rate;
        const double need = inst_.config.put_rate_min[m] + kPutMargin - other;
        if (need <= 0.0) return std::numeric_limits<double>::infinity();
        const double signal = q * inst_.mbs_put_gain(m, n);
        const double i_max = signal / (std::exp2(need) - 1.0) - inst_.config.put_noise_power;
        double i0 = 0.0;
        for (const auto& k : others) i0 += k.p * inst_.sbs_put_gain(k.l, m, n);
        return (i_max - i0) / inst_.sbs_put_gain(l, m, n) * (1.0 - 1e-6);
    }

    // MBS power on n that keeps the PUT on n at its target next to `links`.
    double put_need(std::size_t n, const LinkList& links) const
    {
        const std::size_t m = inst_.put_on(n);
        if (m >= M_) return 0.0;
        const double other = put_rate_[m] - evals_[n].put_rate;
        const double need = inst_.config.put_rate_min[m] + kPutMargin - other;
        if (need <= 0.0) return 0.0;
        double ip = inst_.config.put_noise_power;
        for (const auto& k : links) ip += k.p * inst_.sbs_put_gain(k.l, m, n);
        return (std::exp2(need) - 1.0) * ip / inst_.mbs_put_gain(m, n) * (1.0 + 1e-6);
    }

    bool list_ok(std::size_t n, const LinkList& list) const
    {
        if (list.size() > inst_.config.sic_cap[n] && list.size() > lists_[n].size()) return false;
        for (std::size_t i = 0; i < list.size(); ++i)
            for (std::size_t j = i + 1; j < list.size(); ++j) {
                if (list[i].l == list[j].l && list[i].g == list[j].g) return false;
                if (!rules_.allow_noma && list[i].l == list[j].l) return false;
            }
        return true;
    }

    int sbs_users(std::size_t l) const
    {
        int u = 0;
        for (std::size_t g = 0; g < G_; ++g) u += count_[l * G_ + g] > 0 ? 1 : 0;
        return u;
    }
    int servers(std::size_t g) const
    {
        int s = 0;
        for (std::size_t l = 0; l < L_; ++l) s += count_[l * G_ + g] > 0 ? 1 : 0;
        return s;
    }
    bool associated(std::size_t l, std::size_t g) const { return count_[l * G_ + g] > 0; }
    int user_links(std::size_t g) const { return user_links_[g]; }
    double sbs_power(std::size_t l) const { return sbs_power_[l]; }
    double score() const { return score_; }
    const LinkList& links(std::size_t n) const { return lists_[n]; }
    const std::vector<double>& rates(std::size_t n) const { return evals_[n].rate; }
    double entry_power(std::size_t l, std::size_t g, std::size_t n) const { return pw_.p(l, g, n); }

    Schedule schedule() const
    {
        Schedule s = Schedule::empty_for(inst_);
        for (std::size_t n = 0; n < N_; ++n)
            for (const auto& k : lists_[n]) s.set_link(k.l, k.g, n, true);
        s.sync_chi();
        return s;
    }
    PowerAllocation power() const
    {
        PowerAllocation pw = pw_;
        for (std::size_t n = 0; n < N_; ++n)
            for (const auto& k : lists_[n]) pw.p(k.l, k.g, n) = k.p;
        return pw;
    }

    const NetworkInstance& inst() const { return inst_; }
    const SchemeRules& rules() const { return rules_; }

private:
    const NetworkInstance& inst_;
    SchemeRules rules_;
    MosCurve curve_;
    PowerAllocation pw_;
    std::size_t L_, G_, M_, N_;
    std::vector<LinkList> lists_;
    std::vector<SubEval> evals_;
    std::vector<int> count_;
    std::vector<double> user_rate_, bh_, sbs_power_, put_rate_;
    std::vector<int> user_links_;
    double score_ = 0.0, q_total_ = 0.0;
    mutable std::vector<int> cnt_;
    mutable std::vector<double> dist_;
};

// Trial under construction: copies subcarrier lists on first touch.
class TrialBuilder {
public:
    explicit TrialBuilder(const LinkState& st) : st_(st) {}

    LinkList& list(std::size_t n)
    {
        auto it = t_.lists.find(n);
        if (it == t_.lists.end()) it = t_.lists.emplace(n, st_.links(n)).first;
        return it->second;
    }

    // Removes (l,g) from n and returns its power (0 if absent).
    double remove(std::size_t n, std::size_t l, std::size_t g)
    {
        auto& ls = list(n);
        for (auto it = ls.begin(); it != ls.end(); ++it)
            if (it->l == l && it->g == g) {
                const double p = it->p;
                ls.erase(it);
                return p;
            }
        return 0.0;
    }

    // Places (l,g) on n with power p, raising the MBS power of the PUT on n from the
    // spare budget when that suffices and capping p at the PUT limit otherwise.
    // False if no power is left.
    bool place(std::size_t n, std::size_t l, std::size_t g, double p)
    {
        auto& ls = list(n);
        p = std::min(p, st_.inst().config.p_max[l]);
        const auto qi = t_.q.find(n);
        const double q = qi == t_.q.end() ? st_.q_at(n) : qi->second;
        const double cap = st_.put_cap(n, ls, l, q);
        if (p > cap) {
            ls.push_back({l, g, p});
            const double need = st_.put_need(n, ls);
            double raised = 0.0;
            for (const auto& [c, v] : t_.q) raised += v - st_.q_at(c);
            const double avail = st_.mbs_spare() - raised;
            if (need - q <= avail) {
                t_.q[n] = need;
                return true;
            }
            ls.pop_back();
            p = cap;
            if (avail > 0.0 && st_.inst().put_on(n) < st_.inst().num_put()) {
                const double up = st_.put_cap(n, ls, l, q + avail);
                if (up > p) {
                    p = up;
                    t_.q[n] = q + avail;
                }
            }
        }
        if (!(p > kMinLinkPower)) return false;
        ls.push_back({l, g, p});
        return true;
    }

    // Scales every link of SBS l uniformly when the trial overdraws its budget.
    void fit_budget(std::size_t l)
    {
        const auto& inst = st_.inst();
        double total = 0.0;
        for (std::size_t n = 0; n < inst.num_subcarriers(); ++n) {
            const auto it = t_.lists.find(n);
            const LinkList& ls = it == t_.lists.end() ? st_.links(n) : it->second;
            for (const auto& k : ls)
                if (k.l == l) total += k.p;
        }
        const double cap = inst.config.p_max[l] * (1.0 - 1e-9);
        if (total <= cap) return;
        const double f = cap / total;
        for (std::size_t n = 0; n < inst.num_subcarriers(); ++n) {
            bool has = false;
            for (const auto& k : st_.links(n)) has = has || k.l == l;
            if (!has && !t_.lists.count(n)) continue;
            for (auto& k : list(n))
                if (k.l == l) k.p *= f;
        }
    }

    Trial take() { return std::move(t_); }

private:
    const LinkState& st_;
    Trial t_;
};

// Tries the trial with the MBS power on its subcarriers lowered to what the PUTs need,
// then as built.
bool attempt(LinkState& st, TrialBuilder& b, bool check = true)
{
    Trial t = b.take();
    Trial low = t;
    bool lowered = false;
    for (const auto& [n, list] : low.lists) {
        const auto qi = low.q.find(n);
        const double q = qi == low.q.end() ? st.q_at(n) : qi->second;
        const double need = st.put_need(n, list);
        if (need > 0.0 && need < q * (1.0 - 1e-9)) {
            low.q[n] = need;
            lowered = true;
        }
    }
    if (lowered) {
        Outcome o = st.try_trial(low, check);
        if (o.ok && o.score > st.score() + kImprove) {
            st.commit(std::move(low), std::move(o));
            return true;
        }
    }
    Outcome o = st.try_trial(t, check);
    if (!o.ok || !(o.score > st.score() + kImprove)) return false;
    st.commit(std::move(t), std::move(o));
    return true;
}

// One sweep of first-improvement moves; returns whether anything changed.
bool improve_pass(LinkState& st)
{
    const auto& inst = st.inst();
    const auto L = inst.num_sbs(), G = inst.num_sut(), N = inst.num_subcarriers();
    bool changed = false;

    for (std::size_t n = 0; n < N; ++n) {
        // Remove.
        for (std::size_t i = 0; i < st.links(n).size();) {
            const Link k = st.links(n)[i];
            TrialBuilder b(st);
            b.remove(n, k.l, k.g);
            if (attempt(st, b))
                changed = true;
            else
                ++i;
        }
        // Give a link its SBS's spare budget.
        for (std::size_t i = 0; i < st.links(n).size(); ++i) {
            const Link k = st.links(n)[i];
            const double spare = inst.config.p_max[k.l] * (1.0 - 1e-9) - st.sbs_power(k.l);
            if (!(spare > 1e-6 * inst.config.p_max[k.l])) continue;
            TrialBuilder b(st);
            b.remove(n, k.l, k.g);
            if (b.place(n, k.l, k.g, k.p + spare) && attempt(st, b)) changed = true;
        }
        // Add, at the stored power or at the SBS's spare budget.
        if (st.links(n).size() < inst.config.sic_cap[n]) {
            for (std::size_t l = 0; l < L; ++l)
                for (std::size_t g = 0; g < G; ++g) {
                    if (st.links(n).size() >= inst.config.sic_cap[n]) break;
                    bool present = false;
                    for (const auto& k : st.links(n)) present = present || (k.l == l && k.g == g);
                    if (present) continue;
                    const double spare = inst.config.p_max[l] - st.sbs_power(l);
                    for (double p : {st.entry_power(l, g, n), spare}) {
                        if (!(p > kMinLinkPower)) continue;
                        TrialBuilder b(st);
                        if (!b.place(n, l, g, p)) continue;
                        b.fit_budget(l);
                        if (attempt(st, b)) {
                            changed = true;
                            break;
                        }
                    }
                }
        }
        // Replace a link on n by another (SBS, SUT) pair.
        for (std::size_t i = 0; i < st.links(n).size(); ++i) {
            bool replaced = false;
            for (std::size_t l = 0; l < L && !replaced; ++l)
                for (std::size_t g = 0; g < G && !replaced; ++g) {
                    if (i >= st.links(n).size()) break;
                    const Link k = st.links(n)[i];
                    if (k.l == l && k.g == g) continue;
                    bool present = false;
                    for (const auto& o : st.links(n)) present = present || (o.l == l && o.g == g);
                    if (present) continue;
                    TrialBuilder b(st);
                    const double freed = b.remove(n, k.l, k.g);
                    const double p = l == k.l ? freed : st.entry_power(l, g, n);
                    if (!b.place(n, l, g, p)) continue;
                    b.fit_budget(l);
                    if (attempt(st, b)) replaced = changed = true;
                }
        }
        // Hand the power of a link on n to a new user of the same SBS, keeping a trace of it.
        for (std::size_t i = 0; i < st.links(n).size(); ++i) {
            if (st.links(n).size() >= inst.config.sic_cap[n]) break;
            bool shared = false;
            for (std::size_t g = 0; g < G && !shared; ++g) {
                const Link k = st.links(n)[i];
                bool present = false;
                for (const auto& o : st.links(n)) present = present || (o.l == k.l && o.g == g);
                if (present) continue;
                TrialBuilder b(st);
                b.remove(n, k.l, k.g);
                b.list(n).push_back({k.l, k.g, k.p * kShareTrace});
                if (!b.place(n, k.l, g, k.p * (1.0 - kShareTrace))) continue;
                if (attempt(st, b)) shared = changed = true;
            }
        }
        // Relocate a link of n to another subcarrier of the same SBS, or swap two links.
        for (std::size_t i = 0; i < st.links(n).size(); ++i) {
            bool moved = false;
            for (std::size_t n2 = 0; n2 < N && !moved; ++n2) {
                if (n2 == n || i >= st.links(n).size()) continue;
                const Link k = st.links(n)[i];
                if (st.links(n2).size() < inst.config.sic_cap[n2]) {
                    bool present = false;
                    for (const auto& o : st.links(n2)) present = present || (o.l == k.l && o.g == k.g);
                    if (!present) {
                        TrialBuilder b(st);
                        b.remove(n, k.l, k.g);
                        if (b.place(n2, k.l, k.g, k.p) && attempt(st, b)) {
                            moved = changed = true;
                            break;
                        }
                    }
                }
                if (n2 < n) continue;
                for (std::size_t j = 0; j < st.links(n2).size() && !moved; ++j) {
                    const Link o = st.links(n2)[j];
                    if (o.g == k.g) continue;
                    TrialBuilder b(st);
                    b.remove(n, k.l, k.g);
                    b.remove(n2, o.l, o.g);
                    if (!b.place(n, o.l, o.g, o.p) || !b.place(n2, k.l, k.g, k.p)) continue;
                    if (attempt(st, b)) moved = changed = true;
                }
            }
        }
    }
    return changed;
}

// Utility lost by applying the removal trial.
double removal_cost(const LinkState& st, const Trial& t)
{
    return st.score() - st.try_trial(t, false).score;
}

void drop_cheapest(LinkState& st, const std::vector<std::pair<std::size_t, Link>>& candidates, bool per_association)
{
    const auto& inst = st.inst();
    double best_cost = std::numeric_limits<double>::infinity();
    bool best_orphans = true;
    Trial best;
    for (const auto& [n, k] : candidates) {
        TrialBuilder b(st);
        int removed = 0;
        if (per_association) {
            for (std::size_t c = 0; c < inst.num_subcarriers(); ++c)
                for (const auto& o : st.links(c))
                    if (o.l == k.l && o.g == k.g) {
                        b.remove(c, k.l, k.g);
                        ++removed;
                        break;
                    }
        } else {
            b.remove(n, k.l, k.g);
            removed = 1;
        }
        const bool orphans = st.user_links(k.g) - removed < 1;
        Trial t = b.take();
        const double cost = removal_cost(st, t);
        if ((best_orphans && !orphans) || (orphans == best_orphans && cost < best_cost)) {
            best_cost = cost;
            best_orphans = orphans;
            best = std::move(t);
        }
    }
    Outcome o = st.try_trial(best, false);
    st.commit(std::move(best), std::move(o));
}

} // namespace

Schedule round_and_repair(const Schedule& relaxed, const NetworkInstance& inst, const PowerAllocation& pw,
                          const SchemeRules& rules)
{
    const auto L = inst.num_sbs(), G = inst.num_sut(), N = inst.num_subcarriers();
    const auto& cfg = inst.config;

    Schedule b = Schedule::empty_for(inst);
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t g = 0; g < G; ++g) {
            if (relaxed.theta(l, g) < 0.5) continue;
            for (std::size_t n = 0; n < N; ++n)
                if (relaxed.eps(l, g, n) >= 0.5) b.set_link(l, g, n, true);
        }
    b.sync_chi();
    LinkState st(inst, b, pw, rules);

    // Caps first: OMA exclusivity, SIC capacity, single association, SBS load.
    if (!rules.allow_noma) {
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t l = 0; l < L; ++l)
                for (;;) {
                    std::vector<std::pair<std::size_t, Link>> cand;
                    for (const auto& k : st.links(n))
                        if (k.l == l) cand.push_back({n, k});
                    if (cand.size() <= 1) break;
                    drop_cheapest(st, cand, false);
                }
    }
    for (std::size_t n = 0; n < N; ++n)
        while (st.links(n).size() > cfg.sic_cap[n]) {
            std::vector<std::pair<std::size_t, Link>> cand;
            for (const auto& k : st.links(n)) cand.push_back({n, k});
            drop_cheapest(st, cand, false);
        }
    auto associations = [&](auto pred) {
        std::vector<std::pair<std::size_t, Link>> cand;
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t g = 0; g < G; ++g)
                if (st.associated(l, g) && pred(l, g)) cand.push_back({0, Link{l, g, 0.0}});
        return cand;
    };
    if (!rules.allow_jt)
        for (std::size_t g = 0; g < G; ++g)
            while (st.servers(g) > 1) drop_cheapest(st, associations([&](std::size_t, std::size_t gg) { return gg == g; }), true);
    for (std::size_t l = 0; l < L; ++l)
        while (st.sbs_users(l) > static_cast<int>(cfg.load_cap[l]))
            drop_cheapest(st, associations([&](std::size_t ll, std::size_t) { return ll == l; }), true);

    // Every SUT needs one association and one subcarrier.
    for (std::size_t g = 0; g < G; ++g) {
        if (st.user_links(g) > 0) continue;
        std::vector<std::size_t> order(L);
        std::iota(order.begin(), order.end(), 0);
        std::vector<double> mean(L, 0.0);
        for (std::size_t l = 0; l < L; ++l) {
            for (std::size_t n = 0; n < N; ++n) mean[l] += inst.sbs_sut_gain(l, g, n);
            mean[l] /= static_cast<double>(N);
        }
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) { return mean[a] > mean[c]; });

        bool placed = false;
        for (std::size_t l : order) {
            if (st.sbs_users(l) >= static_cast<int>(cfg.load_cap[l])) continue;
            double best_rate = -1.0;
            Trial best;
            for (std::size_t n = 0; n < N; ++n) {
                const auto& ls = st.links(n);
                // Free slot, or a slot taken from a user that keeps another link.
                std::vector<int> victims;
                if (ls.size() < cfg.sic_cap[n]) victims.push_back(-1);
                for (std::size_t i = 0; i < ls.size(); ++i)
                    if (st.user_links(ls[i].g) > 1) victims.push_back(static_cast<int>(i));
                for (int v : victims) {
                    TrialBuilder tb(st);
                    if (v >= 0) tb.remove(n, ls[static_cast<std::size_t>(v)].l, ls[static_cast<std::size_t>(v)].g);
                    if (!rules.allow_noma) {
                        bool busy = false;
                        for (const auto& k : tb.list(n)) busy = busy || k.l == l;
                        if (busy) continue;
                    }
                    if (tb.list(n).size() >= cfg.sic_cap[n]) continue;
                    tb.list(n).push_back({l, g, st.entry_power(l, g, n)});
                    Trial t = tb.take();
                    const SubEval ev = st.try_trial(t, false).evals.at(n);
                    // Prefer free slots over bumping.
                    const double r = ev.rate.back() + (v < 0 ? 1e6 : 0.0);
                    if (r > best_rate) {
                        best_rate = r;
                        best = std::move(t);
                    }
                }
            }
            if (best_rate >= 0.0) {
                Outcome o = st.try_trial(best, false);
                st.commit(std::move(best), std::move(o));
                placed = true;
                break;
            }
        }
        if (!placed)
            throw InfeasibleError("round_and_repair: SUT " + std::to_string(g) +
                                  " cannot be given an association and a subcarrier under the caps");
    }

    Schedule out = st.schedule();
    if (!schedule_admissible(inst, out, rules))
        throw InfeasibleError("round_and_repair: repaired schedule violates the combinatorial constraints");
    return out;
}

namespace {

void finish_report(const NetworkInstance& inst, const Schedule& s, const PowerAllocation& pw, SolveReport& r)
{
    const auto curve = MosCurve::for_kind(inst.config.service);
    r.user_rate = user_rates(inst, s, pw);
    r.user_mos.clear();
    for (double v : r.user_rate) r.user_mos.push_back(mos(curve, v));
    r.utility = qoe_from_rates(curve, r.user_rate);
    r.audit = audit(inst, s, pw);
    r.feasible = r.audit.feasible;
}

} // namespace

ScheduleSolveResult local_search(const NetworkInstance& inst, const Schedule& start, const PowerAllocation& pw,
                                 const SchemeRules& rules, std::size_t max_passes)
{
    LinkState st(inst, start, pw, rules);
    std::size_t passes = 0;
    while (passes < max_passes && improve_pass(st)) ++passes;
    ScheduleSolveResult out;
    out.schedule = st.schedule();
    out.power = st.power();
    out.report.outer_iterations = passes;
    out.report.converged = passes < max_passes;
    finish_report(inst, out.schedule, out.power, out.report);
    return out;
}

namespace {

// Relaxed scheduling problem over (theta, eps, chi) in [0,1] with fixed powers.
class ScheduleProblem final : public AlmProblem {
public:
    ScheduleProblem(const NetworkInstance& inst, const PowerAllocation& pw, const ScheduleSolveConfig& cfg)
        : inst_(inst), pw_(pw), cfg_(cfg), curve_(MosCurve::for_kind(inst.config.service)), model_(inst),
          L_(inst.num_sbs()), G_(inst.num_sut()), M_(inst.num_put()), N_(inst.num_subcarriers()), LG_(L_ * G_),
          LGN_(L_ * G_ * N_), chi_(L_, G_, N_)
    {
        // Constraint block offsets.
        std::size_t o = 0;
        c_power_ = o, o += L_;
        c_put_ = o, o += M_;
        c_mos_ = o, o += G_;
        c_bh_ = o, o += L_;
        c_load_ = o, o += L_;
        c_assoc_ = o, o += G_;
        c_subc_ = o, o += G_;
        c_sic_ = o, o += N_;
        c_prec_ = o, o += LGN_;
        c_lin_ = o, o += 3 * LGN_;
        c_bin_ = o, o += 3;
        c_nonjt_ = o, o += cfg.rules.allow_jt ? 0 : G_;
        c_oma_ = o, o += cfg.rules.allow_noma ? 0 : L_ * N_;
        nc_ = o;
        adj_.link_weight = Tensor3(L_, G_, N_);
        adj_.put_weight.assign(M_, 0.0);
    }

    std::size_t num_variables() const override { return LG_ + 2 * LGN_; }
    std::size_t num_constraints() const override { return nc_; }
    Box box() const override { return {std::vector<double>(num_variables(), 0.0), std::vector<double>(num_variables(), 1.0)}; }
    bool convergence_requires_feasibility() const override { return false; }

    std::vector<double> encode(const Schedule& s) const
    {
        std::vector<double> x(num_variables());
        std::copy(s.theta.data().begin(), s.theta.data().end(), x.begin());
        std::copy(s.eps.data().begin(), s.eps.data().end(), x.begin() + static_cast<std::ptrdiff_t>(LG_));
        std::copy(s.chi.data().begin(), s.chi.data().end(), x.begin() + static_cast<std::ptrdiff_t>(LG_ + LGN_));
        return x;
    }

    Schedule decode(const std::vector<double>& x) const
    {
        Schedule s = Schedule::empty_for(inst_);
        s.relaxed = true;
        std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(LG_), s.theta.data().begin());
        std::copy(x.begin() + static_cast<std::ptrdiff_t>(LG_), x.begin() + static_cast<std::ptrdiff_t>(LG_ + LGN_),
                  s.eps.data().begin());
        std::copy(x.begin() + static_cast<std::ptrdiff_t>(LG_ + LGN_), x.end(), s.chi.data().begin());
        return s;
    }

    double th(const std::vector<double>& x, std::size_t l, std::size_t g) const { return x[l * G_ + g]; }
    std::size_t ie(std::size_t l, std::size_t g, std::size_t n) const { return LG_ + (l * G_ + g) * N_ + n; }
    std::size_t ic(std::size_t l, std::size_t g, std::size_t n) const { return LG_ + LGN_ + (l * G_ + g) * N_ + n; }

    double evaluate(const std::vector<double>& x, std::vector<double>& r) override
    {
        const auto& cfg = inst_.config;
        std::copy(x.begin() + static_cast<std::ptrdiff_t>(LG_ + LGN_), x.end(), chi_.data().begin());
        model_.set_indicator(chi_);
        model_.forward(pw_, JtModel::exact, nullptr, true);
        const auto& rates = model_.sut_rates();
        double base = 0.0;
        for (double rate : rates) base += surrogate_mos(curve_, rate, cfg_.low_rate_slope);

        r.assign(nc_, 0.0);
        for (std::size_t l = 0; l < L_; ++l) {
            double pw = 0.0, users = 0.0;
            for (std::size_t g = 0; g < G_; ++g) {
                users += th(x, l, g);
                for (std::size_t n = 0; n < N_; ++n) pw += x[ic(l, g, n)] * pw_.p(l, g, n);
            }
            r[c_power_ + l] = (pw - cfg.p_max[l]) / cfg.p_max[l];
            r[c_load_ + l] = users - static_cast<double>(cfg.load_cap[l]);
            const double cap = cfg.backhaul_cap[l] / cfg.subcarrier_bandwidth;
            r[c_bh_ + l] = (model_.backhaul_rates()[l] - cap) / cap;
        }
        for (std::size_t m = 0; m < M_; ++m) r[c_put_ + m] = cfg.put_rate_min[m] - model_.put_rates()[m];
        for (std::size_t g = 0; g < G_; ++g) {
            r[c_mos_ + g] = cfg.mos_min[g] - mos(curve_, rates[g]);
            double a = 0.0, e = 0.0;
            for (std::size_t l = 0; l < L_; ++l) {
                a += th(x, l, g);
                for (std::size_t n = 0; n < N_; ++n) e += x[ie(l, g, n)];
            }
            r[c_assoc_ + g] = 1.0 - a;
            r[c_subc_ + g] = 1.0 - e;
            if (!cfg_.rules.allow_jt) r[c_nonjt_ + g] = a - 1.0;
        }
        for (std::size_t n = 0; n < N_; ++n) {
            double used = 0.0;
            for (std::size_t l = 0; l < L_; ++l) {
                double here = 0.0;
                for (std::size_t g = 0; g < G_; ++g) here += x[ie(l, g, n)];
                used += here;
                if (!cfg_.rules.allow_noma) r[c_oma_ + l * N_ + n] = here - 1.0;
            }
            r[c_sic_ + n] = used - static_cast<double>(cfg.sic_cap[n]);
        }
        double bt = 0.0, be = 0.0, bc = 0.0;
        for (std::size_t l = 0; l < L_; ++l)
            for (std::size_t g = 0; g < G_; ++g) {
                const double t = th(x, l, g);
                bt += t - t * t;
                for (std::size_t n = 0; n < N_; ++n) {
                    const std::size_t k = (l * G_ + g) * N_ + n;
                    const double e = x[ie(l, g, n)], c = x[ic(l, g, n)];
                    r[c_prec_ + k] = e - t;
                    r[c_lin_ + 3 * k] = c - t;
                    r[c_lin_ + 3 * k + 1] = c - e;
                    r[c_lin_ + 3 * k + 2] = t + e - 1.0 - c;
                    be += e - e * e;
                    bc += c - c * c;
                }
            }
        r[c_bin_] = bt;
        r[c_bin_ + 1] = be;
        r[c_bin_ + 2] = bc;
        last_x_ = x;
        return base;
    }

    void gradient(const std::vector<double>& w, std::vector<double>& grad) override
    {
        const auto& cfg = inst_.config;
        const auto& x = last_x_;
        const auto& rates = model_.sut_rates();
        for (std::size_t l = 0; l < L_; ++l) {
            const double cap = cfg.backhaul_cap[l] / cfg.subcarrier_bandwidth;
            for (std::size_t g = 0; g < G_; ++g) {
                const double uw = surrogate_mos_derivative(curve_, rates[g], cfg_.low_rate_slope) +
                                  w[c_mos_ + g] * mos_derivative(curve_, rates[g]);
                for (std::size_t n = 0; n < N_; ++n) adj_.link_weight(l, g, n) = uw - w[c_bh_ + l] / cap;
            }
        }
        for (std::size_t m = 0; m < M_; ++m) adj_.put_weight[m] = w[c_put_ + m];
        model_.backward(adj_, grad_);

        grad.assign(num_variables(), 0.0);
        for (std::size_t l = 0; l < L_; ++l)
            for (std::size_t g = 0; g < G_; ++g) {
                const double t = th(x, l, g);
                double dt = -w[c_load_ + l] + w[c_assoc_ + g] - w[c_bin_] * (1.0 - 2.0 * t);
                if (!cfg_.rules.allow_jt) dt -= w[c_nonjt_ + g];
                for (std::size_t n = 0; n < N_; ++n) {
                    const std::size_t k = (l * G_ + g) * N_ + n;
                    const double e = x[ie(l, g, n)], c = x[ic(l, g, n)];
                    const double mp = w[c_prec_ + k], m1 = w[c_lin_ + 3 * k], m2 = w[c_lin_ + 3 * k + 1],
                                 m3 = w[c_lin_ + 3 * k + 2];
                    dt += mp + m1 - m3;
                    double de = -mp + w[c_subc_ + g] - w[c_sic_ + n] + m2 - m3 - w[c_bin_ + 1] * (1.0 - 2.0 * e);
                    if (!cfg_.rules.allow_noma) de -= w[c_oma_ + l * N_ + n];
                    grad[ie(l, g, n)] = de;
                    grad[ic(l, g, n)] = grad_.d_indicator(l, g, n) - w[c_power_ + l] * pw_.p(l, g, n) / cfg.p_max[l] -
                                        m1 - m2 + m3 - w[c_bin_ + 2] * (1.0 - 2.0 * c);
                }
                grad[l * G_ + g] = dt;
            }
    }

    bool converged(const std::vector<double>& prev, const std::vector<double>& x,
                   const AlmSettings&) const override
    {
        // Fixpoint of the rounded indicators.
        for (std::size_t i = 0; i < x.size(); ++i)
            if ((prev[i] >= 0.5) != (x[i] >= 0.5)) return false;
        return true;
    }

private:
    const NetworkInstance& inst_;
    const PowerAllocation& pw_;
    ScheduleSolveConfig cfg_;
    MosCurve curve_;
    RateModel model_;
    std::size_t L_, G_, M_, N_, LG_, LGN_;
    std::size_t c_power_ = 0, c_put_ = 0, c_mos_ = 0, c_bh_ = 0, c_load_ = 0, c_assoc_ = 0, c_subc_ = 0, c_sic_ = 0,
                c_prec_ = 0, c_lin_ = 0, c_bin_ = 0, c_nonjt_ = 0, c_oma_ = 0, nc_ = 0;
    Tensor3 chi_;
    RateAdjoint adj_;
    RateGradient grad_;
    std::vector<double> last_x_;
};

bool better(const ScheduleSolveResult& a, const ScheduleSolveResult& b)
{
    if (a.report.feasible != b.report.feasible) return a.report.feasible;
    return a.report.utility > b.report.utility + kImprove;
}

} // namespace

ScheduleSolveResult solve_schedule(const NetworkInstance& inst, const PowerAllocation& pw_fixed, const Schedule& start,
                                   const ScheduleSolveConfig& cfg)
{
    const auto t0 = std::chrono::steady_clock::now();
    Schedule base = start.relaxed ? round_and_repair(start, inst, pw_fixed, cfg.rules) : start;
    if (!schedule_admissible(inst, base, cfg.rules)) base = round_and_repair(base, inst, pw_fixed, cfg.rules);

    auto finish = [&](const Schedule& s, const PowerAllocation& pw) {
        const PowerAllocation feasible = restore_power_feasibility(inst, s, pw);
        if (cfg.polish) return local_search(inst, s, feasible, cfg.rules, cfg.max_polish_passes);
        ScheduleSolveResult r{s, feasible, {}};
        finish_report(inst, s, feasible, r.report);
        return r;
    };

    ScheduleSolveResult best = finish(base, pw_fixed);
    const double start_utility = total_qoe(inst, base, restore_power_feasibility(inst, base, pw_fixed));

    std::vector<TraceRow> trace;
    bool alm_converged = true;
    std::size_t alm_iters = 0;
    if (cfg.run_alm) {
        ScheduleProblem problem(inst, pw_fixed, cfg);
        Schedule relaxed = base;
        relaxed.relaxed = true;
        AlmResult alm = outer_loop(problem, problem.encode(relaxed),
                                   AlmState::initial(problem.num_constraints(), cfg.alm), cfg.alm);
        alm_converged = alm.converged;
        alm_iters = alm.state.iteration;
        for (const auto& row : alm.trace)
            trace.push_back({"schedule", 0, row.iteration, row.objective, row.max_violation, row.alpha});
        try {
            const Schedule rounded = round_and_repair(problem.decode(alm.x), inst, pw_fixed, cfg.rules);
            ScheduleSolveResult cand = finish(rounded, pw_fixed);
            if (better(cand, best)) best = std::move(cand);
        } catch (const InfeasibleError&) {
            // The start-side candidate stands.
        }
    }

    best.report.trace = std::move(trace);
    best.report.converged = alm_converged;
    best.report.outer_iterations = alm_iters;
    best.report.utility_trace = {start_utility, best.report.utility};
    best.report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return best;
}

} // namespace jtnoma

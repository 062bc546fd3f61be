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

#include "jtnoma/interference.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "jtnoma/channel.hpp"

namespace jtnoma {

namespace {

constexpr double kLn2 = std::numbers::ln2;

Tensor3 link_tensor(const Schedule& sched)
{
    Tensor3 x(sched.num_sbs(), sched.num_sut(), sched.num_subcarriers());
    for (std::size_t l = 0; l < x.dim0(); ++l)
        for (std::size_t g = 0; g < x.dim1(); ++g)
            for (std::size_t n = 0; n < x.dim2(); ++n) x(l, g, n) = sched.link(l, g, n);
    return x;
}

} // namespace

PairLambda::PairLambda(double scalar) : scalar_(scalar) {}

PairLambda::PairLambda(std::size_t sbs, std::size_t sut, std::size_t subcarriers, double fill)
    : scalar_(fill), L_(sbs), G_(sut), N_(subcarriers), per_pair_(sbs * sbs * sut * subcarriers, fill)
{
}

double udl_interference(const NetworkInstance& inst, const PowerAllocation& pw, std::size_t g, std::size_t n)
{
    double total = 0.0;
    for (std::size_t m = 0; m < inst.num_put(); ++m)
        total += inst.primary_alloc(m, n) * pw.q(m, n) * inst.mbs_sut_gain(g, n);
    return total;
}

double ccd_interference(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw, std::size_t l,
                        std::size_t g, std::size_t n)
{
    double total = 0.0;
    for (std::size_t lp = 0; lp < inst.num_sbs(); ++lp) {
        if (lp == l) continue;
        for (std::size_t gp = 0; gp < inst.num_sut(); ++gp) {
            if (gp == g) continue;
            total += sched.link(lp, gp, n) * pw.p(lp, gp, n) * inst.sbs_sut_gain(lp, g, n);
        }
    }
    return total;
}

double noma_interference(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw, std::size_t l,
                         std::size_t g, std::size_t n)
{
    const auto rank = decoding_rank(inst, link_tensor(sched), l, n);
    double total = 0.0;
    for (std::size_t gp = 0; gp < inst.num_sut(); ++gp) {
        if (gp == g || rank[gp] < rank[g]) continue;
        total += sched.link(l, gp, n) * pw.p(l, gp, n) * inst.sbs_sut_gain(l, g, n);
    }
    return total;
}

double jt_interference_exact(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw,
                             std::size_t /*l*/, std::size_t g, std::size_t n)
{
    double total = 0.0;
    const auto L = inst.num_sbs();
    for (std::size_t l1 = 0; l1 < L; ++l1)
        for (std::size_t l2 = 0; l2 < L; ++l2) {
            if (l2 == l1) continue;
            for (std::size_t gp = 0; gp < inst.num_sut(); ++gp) {
                if (gp == g) continue;
                total += 2.0 * sched.link(l1, gp, n) * pw.p(l1, gp, n) * sched.link(l2, gp, n) * pw.p(l2, gp, n) *
                         inst.sbs_sut_gain(l1, g, n) * inst.sbs_sut_gain(l2, g, n);
            }
        }
    return total;
}

double jt_interference_convex(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw,
                              const PairLambda& lambda, std::size_t /*l*/, std::size_t g, std::size_t n)
{
    double total = 0.0;
    const auto L = inst.num_sbs();
    for (std::size_t l1 = 0; l1 < L; ++l1)
        for (std::size_t l2 = 0; l2 < L; ++l2) {
            if (l2 == l1) continue;
            for (std::size_t gp = 0; gp < inst.num_sut(); ++gp) {
                if (gp == g) continue;
                const double both = sched.link(l1, gp, n) * sched.link(l2, gp, n);
                if (both == 0.0) continue;
                const double lam = lambda(l1, l2, gp, n);
                if (!(lam > 0.0)) throw std::invalid_argument("jt_interference_convex: lambda must be > 0");
                const double p1 = pw.p(l1, gp, n), p2 = pw.p(l2, gp, n);
                total += 2.0 * both * inst.sbs_sut_gain(l1, g, n) * inst.sbs_sut_gain(l2, g, n) *
                         (0.5 * lam * p1 * p1 + 0.5 / lam * p2 * p2);
            }
        }
    if (lambda.is_scalar() && !(lambda(0, 0, 0, 0) > 0.0))
        throw std::invalid_argument("jt_interference_convex: lambda must be > 0");
    return total;
}

InterferenceBreakdown interference(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw,
                                   std::size_t l, std::size_t g, std::size_t n)
{
    return {udl_interference(inst, pw, g, n), ccd_interference(inst, sched, pw, l, g, n),
            noma_interference(inst, sched, pw, l, g, n), jt_interference_exact(inst, sched, pw, l, g, n)};
}

double sinr(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw, std::size_t l,
            std::size_t g, std::size_t n)
{
    const double signal = pw.p(l, g, n) * inst.sbs_sut_gain(l, g, n);
    return signal / (interference(inst, sched, pw, l, g, n).total() + inst.config.noise_power[g]);
}

double sut_rate(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw, std::size_t g)
{
    double total = 0.0;
    for (std::size_t l = 0; l < inst.num_sbs(); ++l)
        for (std::size_t n = 0; n < inst.num_subcarriers(); ++n) {
            const double x = sched.link(l, g, n);
            if (x != 0.0) total += x * std::log2(1.0 + sinr(inst, sched, pw, l, g, n));
        }
    return total;
}

double put_rate(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw, std::size_t m)
{
    double total = 0.0;
    for (std::size_t n = 0; n < inst.num_subcarriers(); ++n) {
        if (inst.primary_alloc(m, n) == 0.0) continue;
        double interf = 0.0;
        for (std::size_t l = 0; l < inst.num_sbs(); ++l)
            for (std::size_t g = 0; g < inst.num_sut(); ++g)
                interf += sched.link(l, g, n) * pw.p(l, g, n) * inst.sbs_put_gain(l, m, n);
        total += inst.primary_alloc(m, n) *
                 std::log2(1.0 + pw.q(m, n) * inst.mbs_put_gain(m, n) / (interf + inst.config.put_noise_power));
    }
    return total;
}

double backhaul_rate(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw, std::size_t l)
{
    double total = 0.0;
    for (std::size_t g = 0; g < inst.num_sut(); ++g)
        for (std::size_t n = 0; n < inst.num_subcarriers(); ++n) {
            const double x = sched.link(l, g, n);
            if (x != 0.0) total += x * std::log2(1.0 + sinr(inst, sched, pw, l, g, n));
        }
    return total;
}

double backhaul_rate_bps(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw,
                         std::size_t l)
{
    return backhaul_rate(inst, sched, pw, l) * inst.config.subcarrier_bandwidth;
}

// ---------------------------------------------------------------------------------------------
// RateModel

RateModel::RateModel(const NetworkInstance& inst)
    : inst_(inst), L_(inst.num_sbs()), G_(inst.num_sut()), M_(inst.num_put()), N_(inst.num_subcarriers()),
      x_(L_, G_, N_), rank_(L_ * N_ * G_), sinr_(L_, G_, N_), rate_(L_, G_, N_), interf_(L_, G_, N_),
      sut_rate_(G_), put_rate_(M_), backhaul_(L_), put_interf_(N_)
{
    set_indicator(x_);
}

void RateModel::set_indicator(const Tensor3& indicator)
{
    if (&indicator != &x_) x_ = indicator;
    for (std::size_t l = 0; l < L_; ++l)
        for (std::size_t n = 0; n < N_; ++n) {
            const auto r = decoding_rank(inst_, x_, l, n);
            std::copy(r.begin(), r.end(), rank_.begin() + static_cast<std::ptrdiff_t>((l * N_ + n) * G_));
        }
}

void RateModel::set_indicator(const Schedule& sched) { set_indicator(link_tensor(sched)); }

void RateModel::forward(const PowerAllocation& pw, JtModel jt, const PairLambda* lambda, bool all_links)
{
    if (jt == JtModel::convex && lambda == nullptr) throw std::invalid_argument("RateModel: convex JT needs lambda");
    pw_ = &pw;
    jt_ = jt;
    lambda_ = lambda;
    all_links_ = all_links;

    std::fill(sut_rate_.begin(), sut_rate_.end(), 0.0);
    std::fill(put_rate_.begin(), put_rate_.end(), 0.0);
    std::fill(backhaul_.begin(), backhaul_.end(), 0.0);
    sinr_.fill(0.0);
    rate_.fill(0.0);
    interf_.fill(0.0);

    const auto& hs = inst_.sbs_sut_gain;
    std::vector<double> w(L_ * G_), others(L_ * G_), jt_term(G_), suffix(G_ + 1);
    std::vector<std::size_t> order(G_), jt_users;
    std::vector<std::size_t> links_of(G_);

    for (std::size_t n = 0; n < N_; ++n) {
        std::fill(links_of.begin(), links_of.end(), 0);
        bool any = false;
        for (std::size_t l = 0; l < L_; ++l)
            for (std::size_t g = 0; g < G_; ++g) {
                const double x = x_(l, g, n);
                const double v = x * pw.p(l, g, n);
                w[l * G_ + g] = v;
                if (x > 0.0) {
                    ++links_of[g];
                    any = true;
                }
            }
        const std::size_t m = inst_.put_on(n);
        const double q = m < M_ ? pw.q(m, n) : 0.0;

        // Secondary interference seen by the PUT on n.
        if (m < M_) {
            double pi = 0.0;
            for (std::size_t l = 0; l < L_; ++l)
                for (std::size_t g = 0; g < G_; ++g) pi += w[l * G_ + g] * inst_.sbs_put_gain(l, m, n);
            put_interf_[n] = pi;
            put_rate_[m] += std::log2(1.0 + q * inst_.mbs_put_gain(m, n) / (pi + inst_.config.put_noise_power));
        }
        if (!any && !all_links) continue;

        // others[l][g]: power of SBS l on n towards users other than g, summed directly
        // (a total-minus-own difference loses digits when one user dominates).
        for (std::size_t l = 0; l < L_; ++l)
            for (std::size_t g = 0; g < G_; ++g) {
                double o = 0.0;
                for (std::size_t gp = 0; gp < G_; ++gp)
                    if (gp != g) o += w[l * G_ + gp];
                others[l * G_ + g] = o;
            }

        jt_users.clear();
        for (std::size_t g = 0; g < G_; ++g)
            if (links_of[g] >= 2) jt_users.push_back(g);
        for (std::size_t g = 0; g < G_; ++g) {
            double total = 0.0;
            for (std::size_t gp : jt_users) {
                if (gp == g) continue;
                if (jt == JtModel::exact) {
                    for (std::size_t l1 = 0; l1 < L_; ++l1) {
                        const double a1 = w[l1 * G_ + gp] * hs(l1, g, n);
                        if (a1 == 0.0) continue;
                        for (std::size_t l2 = 0; l2 < L_; ++l2)
                            if (l2 != l1) total += 2.0 * a1 * w[l2 * G_ + gp] * hs(l2, g, n);
                    }
                } else {
                    for (std::size_t l1 = 0; l1 < L_; ++l1) {
                        const double x1 = x_(l1, gp, n);
                        if (x1 == 0.0) continue;
                        const double p1 = pw.p(l1, gp, n);
                        for (std::size_t l2 = 0; l2 < L_; ++l2) {
                            if (l2 == l1) continue;
                            const double x2 = x_(l2, gp, n);
                            if (x2 == 0.0) continue;
                            const double p2 = pw.p(l2, gp, n);
                            const double lam = (*lambda)(l1, l2, gp, n);
                            total += 2.0 * x1 * x2 * hs(l1, g, n) * hs(l2, g, n) *
                                     (0.5 * lam * p1 * p1 + 0.5 / lam * p2 * p2);
                        }
                    }
                }
            }
            jt_term[g] = total;
        }

        for (std::size_t l = 0; l < L_; ++l) {
            const std::size_t* rk = &rank_[(l * N_ + n) * G_];
            for (std::size_t g = 0; g < G_; ++g) order[rk[g]] = g;
            suffix[G_] = 0.0;
            for (std::size_t r = G_; r-- > 0;) suffix[r] = suffix[r + 1] + w[l * G_ + order[r]];

            for (std::size_t g = 0; g < G_; ++g) {
                const double x = x_(l, g, n);
                if (!all_links && x == 0.0) continue;
                const double h = hs(l, g, n);
                const double udl = q * inst_.mbs_sut_gain(g, n);
                double ccd = 0.0;
                for (std::size_t lp = 0; lp < L_; ++lp)
                    if (lp != l) ccd += hs(lp, g, n) * others[lp * G_ + g];
                const double noma = h * suffix[rk[g] + 1];
                const double I = udl + ccd + noma + jt_term[g];
                const double s = pw.p(l, g, n) * h / (I + inst_.config.noise_power[g]);
                const double r = std::log2(1.0 + s);
                interf_(l, g, n) = I;
                sinr_(l, g, n) = s;
                rate_(l, g, n) = r;
                sut_rate_[g] += x * r;
                backhaul_[l] += x * r;
            }
        }
    }
}

RateGradient RateModel::backward(const RateAdjoint& adjoint) const
{
    RateGradient out;
    backward(adjoint, out);
    return out;
}

void RateModel::backward(const RateAdjoint& adjoint, RateGradient& out) const
{
    if (pw_ == nullptr) throw std::logic_error("RateModel::backward before forward");
    const PowerAllocation& pw = *pw_;
    if (out.d_p.dim0() != L_ || out.d_p.dim1() != G_ || out.d_p.dim2() != N_) out.d_p = Tensor3(L_, G_, N_);
    if (out.d_indicator.dim0() != L_ || out.d_indicator.dim1() != G_ || out.d_indicator.dim2() != N_)
        out.d_indicator = Tensor3(L_, G_, N_);
    if (out.d_q.rows() != M_ || out.d_q.cols() != N_) out.d_q = Matrix(M_, N_);
    out.d_p.fill(0.0);
    out.d_q.fill(0.0);
    out.d_indicator.fill(0.0);
    const bool exact = jt_ == JtModel::exact;

    const auto& hs = inst_.sbs_sut_gain;
    std::vector<double> w(L_ * G_), b(L_ * G_), dw(L_ * G_), Bsum(G_), E(L_ * G_), Esum(L_), prefix(G_ + 1);
    std::vector<std::size_t> order(G_);

    for (std::size_t n = 0; n < N_; ++n) {
        const std::size_t m = inst_.put_on(n);
        bool any_b = false;
        for (std::size_t l = 0; l < L_; ++l)
            for (std::size_t g = 0; g < G_; ++g) {
                const std::size_t k = l * G_ + g;
                const double x = x_(l, g, n);
                w[k] = x * pw.p(l, g, n);
                dw[k] = 0.0;
                b[k] = 0.0;
                if (!all_links_ && x == 0.0) continue;
                const double omega = adjoint.link_weight(l, g, n);
                if (omega == 0.0) continue;
                const double h = hs(l, g, n);
                const double S = pw.p(l, g, n) * h;
                const double D = interf_(l, g, n) + inst_.config.noise_power[g];
                out.d_indicator(l, g, n) += omega * rate_(l, g, n);
                const double a = omega * x;
                if (a == 0.0) continue;
                out.d_p(l, g, n) += a * h / (kLn2 * (D + S));
                b[k] = -a * S / (kLn2 * D * (D + S));
                any_b = any_b || b[k] != 0.0;
            }

        if (any_b) {
            // UDL
            if (m < M_) {
                double acc = 0.0;
                for (std::size_t l = 0; l < L_; ++l)
                    for (std::size_t g = 0; g < G_; ++g) acc += b[l * G_ + g] * inst_.mbs_sut_gain(g, n);
                out.d_q(m, n) += acc;
            }
            // CCD
            for (std::size_t g = 0; g < G_; ++g) {
                double s = 0.0;
                for (std::size_t l = 0; l < L_; ++l) s += b[l * G_ + g];
                Bsum[g] = s;
            }
            for (std::size_t l = 0; l < L_; ++l) {
                double s = 0.0;
                for (std::size_t g = 0; g < G_; ++g) {
                    const double e = (Bsum[g] - b[l * G_ + g]) * hs(l, g, n);
                    E[l * G_ + g] = e;
                    s += e;
                }
                Esum[l] = s;
            }
            for (std::size_t l = 0; l < L_; ++l)
                for (std::size_t g = 0; g < G_; ++g) dw[l * G_ + g] += Esum[l] - E[l * G_ + g];
            // NOMA
            for (std::size_t l = 0; l < L_; ++l) {
                const std::size_t* rk = &rank_[(l * N_ + n) * G_];
                for (std::size_t g = 0; g < G_; ++g) order[rk[g]] = g;
                prefix[0] = 0.0;
                for (std::size_t r = 0; r < G_; ++r) {
                    const std::size_t g = order[r];
                    prefix[r + 1] = prefix[r] + b[l * G_ + g] * hs(l, g, n);
                }
                for (std::size_t g = 0; g < G_; ++g) dw[l * G_ + g] += prefix[rk[g]];
            }
            // JT
            if (exact) {
                for (std::size_t gp = 0; gp < G_; ++gp) {
                    bool served = false;
                    for (std::size_t l = 0; l < L_ && !served; ++l) served = w[l * G_ + gp] != 0.0;
                    if (!served) continue;
                    for (std::size_t g = 0; g < G_; ++g) {
                        if (g == gp || Bsum[g] == 0.0) continue;
                        double s = 0.0;
                        for (std::size_t l = 0; l < L_; ++l) s += w[l * G_ + gp] * hs(l, g, n);
                        for (std::size_t l = 0; l < L_; ++l) {
                            const double h = hs(l, g, n);
                            dw[l * G_ + gp] += 4.0 * Bsum[g] * h * (s - w[l * G_ + gp] * h);
                        }
                    }
                }
                // Users with no link: derivative wrt a first indicator is 4*sum(beta h (S - 0)) with S = 0.
            } else {
                for (std::size_t gp = 0; gp < G_; ++gp) {
                    std::size_t count = 0;
                    for (std::size_t l = 0; l < L_; ++l) count += x_(l, gp, n) > 0.0 ? 1 : 0;
                    if (count < 2) continue;
                    for (std::size_t g = 0; g < G_; ++g) {
                        if (g == gp || Bsum[g] == 0.0) continue;
                        for (std::size_t l = 0; l < L_; ++l) {
                            const double xl = x_(l, gp, n);
                            if (xl == 0.0) continue;
                            const double pl = pw.p(l, gp, n);
                            double acc = 0.0;
                            for (std::size_t o = 0; o < L_; ++o) {
                                if (o == l) continue;
                                const double xo = x_(o, gp, n);
                                if (xo == 0.0) continue;
                                const double hh = xl * xo * hs(l, g, n) * hs(o, g, n);
                                acc += hh * ((*lambda_)(l, o, gp, n) * pl + pl / (*lambda_)(o, l, gp, n));
                            }
                            out.d_p(l, gp, n) += 2.0 * Bsum[g] * acc;
                        }
                    }
                }
            }
        }

        // PUT rate
        if (m < M_ && !adjoint.put_weight.empty()) {
            const double nu = adjoint.put_weight[m];
            if (nu != 0.0) {
                const double S = pw.q(m, n) * inst_.mbs_put_gain(m, n);
                const double D = put_interf_[n] + inst_.config.put_noise_power;
                out.d_q(m, n) += nu * inst_.mbs_put_gain(m, n) / (kLn2 * (D + S));
                const double dD = -nu * S / (kLn2 * D * (D + S));
                for (std::size_t l = 0; l < L_; ++l)
                    for (std::size_t g = 0; g < G_; ++g) dw[l * G_ + g] += dD * inst_.sbs_put_gain(l, m, n);
            }
        }

        for (std::size_t l = 0; l < L_; ++l)
            for (std::size_t g = 0; g < G_; ++g) {
                const double d = dw[l * G_ + g];
                if (d == 0.0) continue;
                out.d_p(l, g, n) += d * x_(l, g, n);
                if (exact) out.d_indicator(l, g, n) += d * pw.p(l, g, n);
            }
    }
}

} // namespace jtnoma

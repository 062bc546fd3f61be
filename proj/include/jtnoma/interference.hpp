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

#include <cstddef>
#include <vector>

#include "jtnoma/model.hpp"

namespace jtnoma {

struct InterferenceBreakdown {
    double udl = 0.0;
    double ccd = 0.0;
    double noma = 0.0;
    double jt = 0.0;

    double total() const { return udl + ccd + noma + jt; }
};

/// Weights for the convexified JT term, one per ordered SBS pair (l', l'') and
/// served user g' on subcarrier n. A scalar policy stores a single value.
class PairLambda {
public:
    PairLambda() = default;
    explicit PairLambda(double scalar);
    PairLambda(std::size_t sbs, std::size_t sut, std::size_t subcarriers, double fill = 1.0);

    double operator()(std::size_t l1, std::size_t l2, std::size_t g, std::size_t n) const
    {
        return per_pair_.empty() ? scalar_ : per_pair_[((l1 * L_ + l2) * G_ + g) * N_ + n];
    }
    double& at(std::size_t l1, std::size_t l2, std::size_t g, std::size_t n)
    {
        return per_pair_[((l1 * L_ + l2) * G_ + g) * N_ + n];
    }
    bool is_scalar() const { return per_pair_.empty(); }

private:
    double scalar_ = 1.0;
    std::size_t L_ = 0, G_ = 0, N_ = 0;
    std::vector<double> per_pair_;
};

// Per-term evaluation for one receiving link (l, g, n). The schedule's link indicator
// theta*eps masks every transmitting link.

double udl_interference(const NetworkInstance& inst, const PowerAllocation& pw, std::size_t g, std::size_t n);
double ccd_interference(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw, std::size_t l,
                        std::size_t g, std::size_t n);
/// Power of co-cluster users decoded after g (not removable by SIC at g).
double noma_interference(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw, std::size_t l,
                         std::size_t g, std::size_t n);
/// Sum over ordered SBS pairs (l', l'' != l') and other users g' of
/// 2 x' p' x'' p'' |h_{l',g}|^2 |h_{l'',g}|^2.
double jt_interference_exact(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw,
                             std::size_t l, std::size_t g, std::size_t n);
/// Convex upper bound of the exact term: each product p' p'' is replaced by
/// lambda/2 p'^2 + 1/(2 lambda) p''^2. Throws std::invalid_argument for lambda <= 0.
double jt_interference_convex(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw,
                              const PairLambda& lambda, std::size_t l, std::size_t g, std::size_t n);

InterferenceBreakdown interference(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw,
                                   std::size_t l, std::size_t g, std::size_t n);

double sinr(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw, std::size_t l,
            std::size_t g, std::size_t n);
double sut_rate(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw, std::size_t g);
double put_rate(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw, std::size_t m);
/// bits/s/Hz carried by SBS l.
double backhaul_rate(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw, std::size_t l);
/// bits/s carried by SBS l (spectral rate times subcarrier bandwidth).
double backhaul_rate_bps(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw,
                         std::size_t l);

enum class JtModel { exact, convex };

/// Adjoint seeds for RateModel::backward.
struct RateAdjoint {
    Tensor3 link_weight;          // d objective / d (x_{lgn} * rate_{lgn})
    std::vector<double> put_weight; // d objective / d put_rate_m
};

struct RateGradient {
    Tensor3 d_p;         // [l][g][n]
    Matrix d_q;          // [m][n]
    Tensor3 d_indicator; // [l][g][n]; filled only for JtModel::exact
};

/// Batched evaluation of every SINR and rate for an indicator tensor x (theta*eps for a
/// binary schedule, chi for a relaxed one), with an analytic reverse pass. Instances are
/// bound to one NetworkInstance; buffers are reused between calls (not thread-safe).
class RateModel {
public:
    explicit RateModel(const NetworkInstance& inst);

    /// Indicator used by the next forward passes; recomputes decoding ranks.
    void set_indicator(const Tensor3& indicator);
    void set_indicator(const Schedule& sched);
    const Tensor3& indicator() const { return x_; }

    /// Evaluates all link SINRs. With `all_links` false only links with x > 0 get SINR values
    /// (others read 0), which is all rates and constraints need.
    void forward(const PowerAllocation& pw, JtModel jt = JtModel::exact, const PairLambda* lambda = nullptr,
                 bool all_links = true);

    RateGradient backward(const RateAdjoint& adjoint) const;
    void backward(const RateAdjoint& adjoint, RateGradient& out) const;

    double link_sinr(std::size_t l, std::size_t g, std::size_t n) const { return sinr_(l, g, n); }
    double link_rate(std::size_t l, std::size_t g, std::size_t n) const { return rate_(l, g, n); }
    double link_interference(std::size_t l, std::size_t g, std::size_t n) const { return interf_(l, g, n); }
    const std::vector<double>& sut_rates() const { return sut_rate_; }
    const std::vector<double>& put_rates() const { return put_rate_; }
    const std::vector<double>& backhaul_rates() const { return backhaul_; } // bits/s/Hz
    std::size_t rank(std::size_t l, std::size_t g, std::size_t n) const { return rank_[(l * N_ + n) * G_ + g]; }

    const NetworkInstance& instance() const { return inst_; }

private:
    const NetworkInstance& inst_;
    std::size_t L_, G_, M_, N_;
    Tensor3 x_;
    std::vector<std::size_t> rank_; // [(l*N + n)*G + g]

    // Cached forward state.
    const PowerAllocation* pw_ = nullptr;
    JtModel jt_ = JtModel::exact;
    const PairLambda* lambda_ = nullptr;
    bool all_links_ = true;
    Tensor3 sinr_, rate_, interf_;
    std::vector<double> sut_rate_, put_rate_, backhaul_;
    std::vector<double> put_interf_; // [n] secondary interference at the PUT holding n
};

} // namespace jtnoma

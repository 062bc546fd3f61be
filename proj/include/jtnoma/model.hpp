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
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace jtnoma {

// Index convention everywhere: [SBS l][SUT g][subcarrier n], [PUT m][subcarrier n].
// The MBS is never an element of the SBS range.

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }
    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(std::size_t d0, std::size_t d1, std::size_t d2, double fill = 0.0)
        : d0_(d0), d1_(d1), d2_(d2), data_(d0 * d1 * d2, fill) {}

    double& operator()(std::size_t a, std::size_t b, std::size_t c) { return data_[(a * d1_ + b) * d2_ + c]; }
    double operator()(std::size_t a, std::size_t b, std::size_t c) const { return data_[(a * d1_ + b) * d2_ + c]; }

    std::size_t dim0() const { return d0_; }
    std::size_t dim1() const { return d1_; }
    std::size_t dim2() const { return d2_; }
    std::size_t size() const { return data_.size(); }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }
    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool operator==(const Tensor3&) const = default;

private:
    std::size_t d0_ = 0;
    std::size_t d1_ = 0;
    std::size_t d2_ = 0;
    std::vector<double> data_;
};

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

enum class ServiceKind { web = 1, video = 2, audio = 3 };

std::string to_string(ServiceKind kind);
ServiceKind parse_service(const std::string& name);

struct ServiceProfile {
    ServiceKind kind = ServiceKind::web;
    double mos_max = 5.0;
    double rate_anchor_min = 2.0; // bits/s/Hz mapped to MOS 1
    double rate_anchor_max = 7.0; // bits/s/Hz mapped to mos_max

    static ServiceProfile for_kind(ServiceKind kind);
};

struct NetworkConfig {
    std::size_t num_sbs = 10;
    std::size_t num_sut = 8;
    std::size_t num_put = 6;
    std::size_t num_subcarriers = 32;
    double mbs_radius = 500.0;          // m
    double sbs_radius = 50.0;           // m
    double subcarrier_bandwidth = 15e3; // Hz
    double q_max = 0.0;                 // W, MBS budget
    std::vector<double> p_max;          // W per SBS
    std::vector<double> backhaul_cap;   // bits/s per SBS
    std::vector<std::size_t> load_cap;  // users per SBS
    std::vector<std::size_t> sic_cap;   // multiplexed links per subcarrier
    std::vector<double> put_rate_min;   // bits/s/Hz per PUT
    std::vector<double> mos_min;        // MOS per SUT
    std::vector<double> noise_power;    // W per SUT
    double put_noise_power = 0.0;       // W, shared by every PUT
    ServiceKind service = ServiceKind::web;
    std::uint64_t rng_seed = 1;

    // Default operating point: 42/37 dBm, 15 kHz, 11.183 Mbps, -117 dBm, R_min 2, MOS_min 1, Z 3, Omega 2.
    static NetworkConfig defaults(std::size_t sbs, std::size_t sut, std::size_t put, std::size_t subcarriers,
                                  ServiceKind service = ServiceKind::web, std::uint64_t seed = 1);

    // Resizes every per-index vector to the current counts, repeating the first entry (or the default).
    void broadcast_per_index();
};

struct Point {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point&) const = default;
};

double distance(Point a, Point b);

// All gains are power gains |h|^2.
struct NetworkInstance {
    NetworkConfig config;
    Point mbs;
    std::vector<Point> sbs;
    std::vector<Point> sut;
    std::vector<Point> put;
    Tensor3 sbs_sut_gain; // [l][g][n]
    Tensor3 sbs_put_gain; // [l][m][n]
    Matrix mbs_sut_gain;  // [g][n]
    Matrix mbs_put_gain;  // [m][n]
    Matrix primary_alloc; // [m][n], binary

    std::size_t num_sbs() const { return config.num_sbs; }
    std::size_t num_sut() const { return config.num_sut; }
    std::size_t num_put() const { return config.num_put; }
    std::size_t num_subcarriers() const { return config.num_subcarriers; }

    // PUT holding subcarrier n, or num_put() when none does.
    std::size_t put_on(std::size_t n) const;

    // Sizes every tensor from config and fills gains with `gain`; PUTs take subcarriers round-robin.
    static NetworkInstance blank(const NetworkConfig& cfg, double gain = 1.0);
};

struct Schedule {
    Matrix theta; // [l][g]
    Tensor3 eps;  // [l][g][n]
    Tensor3 chi;  // [l][g][n]
    bool relaxed = false;

    static Schedule empty(std::size_t sbs, std::size_t sut, std::size_t subcarriers);
    static Schedule empty_for(const NetworkInstance& inst);

    std::size_t num_sbs() const { return theta.rows(); }
    std::size_t num_sut() const { return theta.cols(); }
    std::size_t num_subcarriers() const { return eps.dim2(); }

    // theta * eps, the link indicator used by every interference term.
    double link(std::size_t l, std::size_t g, std::size_t n) const { return theta(l, g) * eps(l, g, n); }

    // Sets link (l,g,n) on or off; turning a link on associates g with l.
    void set_link(std::size_t l, std::size_t g, std::size_t n, bool on);
    // Recomputes chi = theta * eps.
    void sync_chi();
    // theta(l,g) = 1 iff g holds any subcarrier of l.
    void canonicalize_theta();

    bool operator==(const Schedule&) const = default;
};

struct PowerAllocation {
    Tensor3 p; // [l][g][n], W
    Matrix q;  // [m][n], W

    static PowerAllocation zeros(const NetworkInstance& inst);
    // p = p_max/N on every link, q = q_max/N on every PUT-held subcarrier.
    static PowerAllocation uniform(const NetworkInstance& inst);

    bool operator==(const PowerAllocation&) const = default;
};

enum class IssueKind {
    bad_count,
    bad_parameter,
    shape_mismatch,
    bad_position,
    non_positive_gain,
    non_finite_gain,
    ofdma_overlap,
    put_without_subcarrier,
    non_binary_alloc,
};

struct ValidationIssue {
    IssueKind kind;
    std::string detail;
};

std::vector<ValidationIssue> validate_config(const NetworkConfig& cfg);
std::vector<ValidationIssue> validate_instance(const NetworkInstance& inst);

// Members of the NOMA cluster at (l,n) in SIC decoding order.
std::vector<std::size_t> noma_cluster(const NetworkInstance& inst, const Schedule& sched, std::size_t l,
                                      std::size_t n);

class InvalidConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace jtnoma

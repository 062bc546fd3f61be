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

#include <iosfwd>
#include <string>
#include <vector>

#include "jtnoma/model.hpp"

namespace jtnoma {

/// Log-distance path loss with unit-mean exponential (Rayleigh power) fading.
struct ChannelModelParams {
    double pathloss_exponent_mbs = 3.76;
    double pathloss_exponent_sbs = 3.67;
    double reference_loss_db = 38.0; // at 1 m
    double rayleigh_scale = 1.0;     // mean of the exponential power-gain draw

    std::vector<ValidationIssue> validate() const;
};

/// Mean power gain at distance d (meters, clamped to >= 1 m).
double pathloss_gain(double distance_m, double exponent, double reference_loss_db);

/// Draws a seeded instance: MBS at the origin, SBSs and users uniform in the MBS disc,
/// i.i.d. fading per (BS, user, subcarrier), primary subcarriers dealt round-robin over PUTs.
/// Throws InvalidConfigError when the config is unusable.
NetworkInstance generate_instance(const NetworkConfig& cfg, const ChannelModelParams& ch = {});

/// Sort key of one cluster member under the SIC rule below.
struct DecodingKey {
    bool jt = false;           // served by >= 2 SBSs on the subcarrier
    double mean_distance = 0.0; // to those serving SBSs
    double gain = 0.0;         // |h_{l,g,n}|^2 towards the cluster's SBS
    std::size_t index = 0;
};

/// Strict weak order: true when `a` is decoded before `b`.
bool decoded_before(const DecodingKey& a, const DecodingKey& b);

/// SIC order of the cluster at (l,n): JT users first (larger mean distance to their
/// serving SBSs on n first), then single-served users by ascending gain, ties by index.
/// Expects a binary schedule.
std::vector<std::size_t> decoding_order(const NetworkInstance& inst, const Schedule& sched, std::size_t l,
                                        std::size_t n);

/// Decoding rank of every SUT at (l,n) under the same rule, for indicator tensors that may
/// be fractional; JT status of a user counts links with indicator >= 0.5.
/// rank[g] < rank[g'] means g is decoded before g'.
std::vector<std::size_t> decoding_rank(const NetworkInstance& inst, const Tensor3& indicator, std::size_t l,
                                       std::size_t n);

// Snapshot schema "jtnoma-instance/1" (JSON):
//   schema, config{...NetworkConfig field names...}, positions{mbs, sbs[], sut[], put[]} as [x,y],
//   gains{sbs_sut[l][g][n], sbs_put[l][m][n], mbs_sut[g][n], mbs_put[m][n]}, primary_alloc[m][n].
std::string instance_to_json(const NetworkInstance& inst);
NetworkInstance instance_from_json(const std::string& text);

} // namespace jtnoma

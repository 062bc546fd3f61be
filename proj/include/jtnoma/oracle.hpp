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
#include "jtnoma/schedule_solver.hpp"

// Brute-force reference for micro instances. The rate formulas here are written
// independently of interference.cpp and only share the data types.
namespace jtnoma::oracle {

struct Terms {
    double udl = 0.0, ccd = 0.0, noma = 0.0, jt = 0.0;
};

Terms interference_terms(const NetworkInstance& inst, const Schedule& s, const PowerAllocation& pw, std::size_t l,
                         std::size_t g, std::size_t n);
double sinr(const NetworkInstance& inst, const Schedule& s, const PowerAllocation& pw, std::size_t l, std::size_t g,
            std::size_t n);
double sut_rate(const NetworkInstance& inst, const Schedule& s, const PowerAllocation& pw, std::size_t g);
double put_rate(const NetworkInstance& inst, const Schedule& s, const PowerAllocation& pw, std::size_t m);
double utility(const NetworkInstance& inst, const Schedule& s, const PowerAllocation& pw);

/// Power budgets, PUT QoS, MOS floors and backhaul, checked directly.
bool power_feasible(const NetworkInstance& inst, const Schedule& s, const PowerAllocation& pw);

inline constexpr std::size_t kMaxEnumerationSize = 16; // L*G*N
inline constexpr std::size_t kMaxGridVariables = 4;

/// Every binary schedule with theta = OR_n eps meeting the association, subcarrier,
/// load, SIC and scheme constraints. Throws std::invalid_argument when L*G*N > 16.
std::vector<Schedule> enumerate_schedules(const NetworkInstance& inst, const SchemeRules& rules = {});

struct GridSettings {
    std::size_t grid_points = 64;         // per variable, log-spaced from power_floor to the cap
    std::size_t max_evaluations = 1 << 16; // grid points per variable shrink to fit
    double power_floor = 1e-12;
    bool refine = true;            // pattern search from the best grid points
    std::size_t refine_starts = 8; // how many grid points seed a pattern search
};

struct GridResult {
    bool found = false; // false: no grid point satisfies the constraints
    PowerAllocation power;
    double utility = 0.0;
    std::size_t evaluations = 0;
    std::size_t variables = 0;
};

/// Exhaustive search over the powers of the scheduled links. A PUT holding a single
/// subcarrier gets the least MBS power that meets its rate target; other MBS entries
/// are grid variables. Throws std::invalid_argument for more than 4 variables.
GridResult grid_power_search(const NetworkInstance& inst, const Schedule& s, const GridSettings& settings = {});

struct JointResult {
    bool found = false;
    Schedule schedule;
    PowerAllocation power;
    double utility = 0.0;
    std::size_t schedules = 0;
};

JointResult best_joint(const NetworkInstance& inst, const SchemeRules& rules = {}, const GridSettings& settings = {});

} // namespace jtnoma::oracle

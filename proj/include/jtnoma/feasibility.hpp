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

#include <string>
#include <vector>

#include "jtnoma/model.hpp"

namespace jtnoma {

/// Signed residual of every constraint; positive means violated.
struct ConstraintViolations {
    double mbs_power = 0.0;            // W
    std::vector<double> sbs_power;     // [l] W
    std::vector<double> put_qos;       // [m] bits/s/Hz shortfall
    std::vector<double> mos_floor;     // [g] MOS shortfall
    std::vector<double> backhaul;      // [l] bits/s excess
    std::vector<double> load;          // [l] users over the cap
    std::vector<double> min_assoc;     // [g]
    std::vector<double> min_subc;      // [g]
    std::vector<double> sic;           // [n]
    Tensor3 precedence;                // [l][g][n] eps - theta
};

enum class ConstraintFamily {
    mbs_power,
    sbs_power,
    put_qos,
    mos_floor,
    backhaul,
    load,
    min_assoc,
    min_subc,
    sic,
    precedence,
};

std::string to_string(ConstraintFamily family);

struct FeasibilityTolerances {
    double power = 1e-6; // mbs_power, sbs_power (W)
    double count = 1e-6; // load, min_assoc, min_subc, sic, precedence
    double rate = 1e-4;  // put_qos, mos_floor, backhaul

    double for_family(ConstraintFamily family) const;
};

struct Offender {
    ConstraintFamily family = ConstraintFamily::mbs_power;
    std::vector<std::size_t> index; // empty for scalar families
    double value = 0.0;             // signed residual
};

struct FeasibilityResult {
    bool feasible = true;
    Offender worst; // largest residual relative to its family tolerance
    std::string describe() const;
};

ConstraintViolations violations(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw);

/// True iff every residual is <= its family tolerance (closed comparison).
FeasibilityResult is_feasible(const ConstraintViolations& v, const FeasibilityTolerances& tol = {});

inline FeasibilityResult audit(const NetworkInstance& inst, const Schedule& sched, const PowerAllocation& pw,
                               const FeasibilityTolerances& tol = {})
{
    return is_feasible(violations(inst, sched, pw), tol);
}

} // namespace jtnoma

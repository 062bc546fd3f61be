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

#include <array>
#include <string>

#include "jtnoma/joint.hpp"
#include "jtnoma/schedule_solver.hpp"

namespace jtnoma {

enum class Scheme { jt_noma, non_jt_noma, jt_oma, non_jt_oma };

inline constexpr std::array<Scheme, 4> kAllSchemes{Scheme::jt_noma, Scheme::non_jt_noma, Scheme::jt_oma,
                                                   Scheme::non_jt_oma};

std::string to_string(Scheme s);
/// Accepts the to_string names; throws std::invalid_argument otherwise.
Scheme scheme_from_string(const std::string& name);

/// non-JT: one serving SBS per SUT. OMA: one SUT per (SBS, subcarrier); reuse across
/// SBSs, and with it CCD interference, stays.
SchemeRules rules_for(Scheme s);

/// The joint allocation loop with the scheme's scheduling rules.
JointResult run_scheme(const NetworkInstance& inst, Scheme scheme, JointSettings settings = {});

} // namespace jtnoma

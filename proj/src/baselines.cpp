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

#include "jtnoma/baselines.hpp"

#include <stdexcept>

namespace jtnoma {

std::string to_string(Scheme s)
{
    switch (s) {
    case Scheme::jt_noma: return "jt_noma";
    case Scheme::non_jt_noma: return "non_jt_noma";
    case Scheme::jt_oma: return "jt_oma";
    case Scheme::non_jt_oma: return "non_jt_oma";
    }
    throw std::invalid_argument("unknown scheme");
}

Scheme scheme_from_string(const std::string& name)
{
    for (Scheme s : kAllSchemes)
        if (to_string(s) == name) return s;
    throw std::invalid_argument("unknown scheme '" + name + "' (expected jt_noma, non_jt_noma, jt_oma or non_jt_oma)");
}

SchemeRules rules_for(Scheme s)
{
    SchemeRules r;
    r.allow_jt = s == Scheme::jt_noma || s == Scheme::jt_oma;
    r.allow_noma = s == Scheme::jt_noma || s == Scheme::non_jt_noma;
    return r;
}

JointResult run_scheme(const NetworkInstance& inst, Scheme scheme, JointSettings settings)
{
    settings.schedule.rules = rules_for(scheme);
    return run_algorithm1(inst, settings);
}

} // namespace jtnoma

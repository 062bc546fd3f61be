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
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "jtnoma/baselines.hpp"
#include "jtnoma/joint.hpp"
#include "jtnoma/model.hpp"

namespace jtnoma {

inline constexpr const char* kResultsSchema = "jtnoma-results/1";

enum class SweepAxis { num_sut, num_put, num_subcarriers };
std::string to_string(SweepAxis a);
SweepAxis parse_axis(const std::string& name);

struct ScenarioSpec {
    std::string name = "scenario";
    ServiceKind service = ServiceKind::web;
    SweepAxis axis = SweepAxis::num_sut;
    std::vector<std::size_t> axis_values;
    std::vector<std::uint64_t> seeds;
    std::vector<Scheme> schemes{Scheme::jt_noma};
    std::size_t num_sbs = 10, num_sut = 8, num_put = 6, num_subcarriers = 32; // axis entry is overridden
    nlohmann::json network = nlohmann::json::object(); // extra NetworkConfig keys
    JointSettings settings;
    std::string output_dir = "out";
    std::size_t workers = 1; // 0: hardware concurrency
    bool write_convergence = true;
    bool write_plots = true;

    /// Throws InvalidConfigError for empty axis values / seeds / schemes or bad counts.
    void validate() const;
    NetworkConfig network_config(std::size_t axis_value, std::uint64_t seed) const;

    // Default sweeps: web over G, video over M, audio over N.
    static ScenarioSpec web(std::size_t seeds = 30);
    static ScenarioSpec video(std::size_t seeds = 30);
    static ScenarioSpec audio(std::size_t seeds = 30);
};

/// Reads the structured-text (JSON) scenario format; unknown keys are rejected.
ScenarioSpec scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioSpec& spec);
JointSettings joint_settings_from_json(const nlohmann::json& j, JointSettings base = {});

struct SweepRow {
    std::size_t axis_value = 0;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::jt_noma;
    double total_qoe = 0.0;
    double avg_mos = 0.0;
    double avg_rate = 0.0; // bits/s/Hz per SUT
    std::size_t outer_iters = 0;
    bool converged = false;
    bool feasible = false;
    double runtime_seconds = 0.0;
    std::string status = "ok"; // ok | nonconverged | infeasible | error: ...
    std::vector<double> utility_trace;
    std::vector<TraceRow> trace;
};

struct SweepResult {
    std::vector<SweepRow> rows; // sorted by (axis value, seed, scheme order in the scenario)
};

/// Runs every (axis value, seed, scheme) cell. Per-cell failures are recorded in the
/// row status and the sweep continues.
SweepResult run_sweep(const ScenarioSpec& spec);

/// results.csv (no wall-clock data, byte-stable for a given scenario), timing.csv,
/// convergence/*.csv and the SVG plots, under spec.output_dir.
void write_outputs(const ScenarioSpec& spec, const SweepResult& result);
std::string results_csv(const ScenarioSpec& spec, const SweepResult& result);
std::string timing_csv(const ScenarioSpec& spec, const SweepResult& result);
std::string convergence_csv(const SweepRow& row);
/// Mean of `metric` ("avg_mos" or "avg_rate") per scheme against the axis, with
/// standard-error bars and the seed count of each point.
std::string sweep_svg(const ScenarioSpec& spec, const SweepResult& result, const std::string& metric);

struct TrendTest {
    double rho = 0.0;
    double p_value = 1.0; // one-sided, in the direction of `expected_sign`
    std::size_t n = 0;
};

/// Spearman rank correlation (average ranks for ties) with the t approximation.
/// A constant sample gives rho = 0 and p = 1.
TrendTest spearman_trend(const std::vector<double>& x, const std::vector<double>& y, int expected_sign);

} // namespace jtnoma

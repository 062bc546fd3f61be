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
#include <functional>
#include <string>
#include <vector>

namespace jtnoma {

struct AlmSettings {
    double err_tol = 1e-3;         // outer stop on successive variable change
    double violation_tol = 1e-5;   // max residual accepted at convergence
    std::size_t max_outer_iters = 100;
    std::size_t max_inner_iters = 200;
    double inner_tol = 1e-9;       // projected-gradient step norm (infinity norm)
    double penalty_init = 2.0;
    double multiplier_init = 0.1;
    double penalty_growth = 1.5;
    double penalty_cap = 1e6;
    double shrink_factor = 0.9;    // required decrease of max violation per outer iteration
    double inner_step_init = 1.0;
    double armijo_c = 1e-4;
    double min_step = 1e-14;
    bool barzilai_borwein = true;

    void validate() const;
};

struct AlmState {
    std::vector<double> multipliers;
    std::vector<std::string> names; // optional, one per multiplier
    double alpha = 2.0;
    std::size_t iteration = 0;
    std::vector<double> violation_history;

    static AlmState initial(std::size_t num_constraints, const AlmSettings& settings);
};

/// base - (1/2 alpha) * sum_c ([psi_c + alpha r_c]^+^2 - psi_c^2), residuals positive when violated.
double augmented_objective(double base_utility, const std::vector<double>& residuals, const AlmState& state);

/// [psi + alpha * residual]^+
double update_multiplier(double psi, double alpha, double residual);

struct Box {
    std::vector<double> lower;
    std::vector<double> upper;

    void project(std::vector<double>& x) const;
};

struct InnerResult {
    std::vector<double> x;
    double value = 0.0;
    std::vector<double> trace; // objective after each accepted step, starting with the initial value
    std::size_t iterations = 0;
    bool converged = false;
};

/// Objective value at x. A gradient callback is always invoked right after the value
/// callback for the same point, so implementations may reuse cached forward state.
using ValueFn = std::function<double(const std::vector<double>& x)>;
using GradientFn = std::function<void(std::vector<double>& grad)>;

/// Projected gradient ascent with Armijo backtracking (halving) on a box.
/// Throws std::domain_error when the objective is not finite at the start point.
InnerResult inner_maximize(const ValueFn& value, const GradientFn& gradient, std::vector<double> start,
                           const Box& box, const AlmSettings& settings);

/// A maximization problem with inequality constraints r_c(x) <= 0.
class AlmProblem {
public:
    virtual ~AlmProblem() = default;

    virtual std::size_t num_variables() const = 0;
    virtual std::size_t num_constraints() const = 0;
    virtual Box box() const = 0;

    /// Base objective at x; fills residuals (size num_constraints).
    virtual double evaluate(const std::vector<double>& x, std::vector<double>& residuals) = 0;
    /// Gradient of base - sum_c weights_c * r_c at the point of the last evaluate().
    virtual void gradient(const std::vector<double>& weights, std::vector<double>& grad) = 0;

    /// Called once per outer iteration before the inner solve.
    virtual void begin_outer_iteration(const std::vector<double>& /*x*/) {}
    /// Outer stop test. Defaults to max |x - prev| < err_tol.
    virtual bool converged(const std::vector<double>& prev, const std::vector<double>& x,
                           const AlmSettings& settings) const;
    /// Whether convergence additionally requires max violation <= violation_tol.
    virtual bool convergence_requires_feasibility() const { return true; }
};

struct OuterTraceRow {
    std::size_t iteration = 0;
    double objective = 0.0; // base objective
    double max_violation = 0.0;
    double alpha = 0.0;
};

struct AlmResult {
    std::vector<double> x;         // last iterate, or best iterate when not converged
    AlmState state;
    bool converged = false;
    std::vector<OuterTraceRow> trace;
    double objective = 0.0;
    double max_violation = 0.0;
};

AlmResult outer_loop(AlmProblem& problem, std::vector<double> start, AlmState state, const AlmSettings& settings);

double max_violation(const std::vector<double>& residuals);

} // namespace jtnoma

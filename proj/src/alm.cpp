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

#include "jtnoma/alm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace jtnoma {

void AlmSettings::validate() const
{
    if (!(err_tol > 0.0)) throw std::invalid_argument("AlmSettings: err_tol must be > 0");
    if (!(violation_tol >= 0.0)) throw std::invalid_argument("AlmSettings: violation_tol must be >= 0");
    if (!(penalty_init > 0.0)) throw std::invalid_argument("AlmSettings: penalty_init must be > 0");
    if (!(multiplier_init >= 0.0)) throw std::invalid_argument("AlmSettings: multiplier_init must be >= 0");
    if (!(penalty_growth >= 1.0)) throw std::invalid_argument("AlmSettings: penalty_growth must be >= 1");
    if (!(penalty_cap >= penalty_init)) throw std::invalid_argument("AlmSettings: penalty_cap below penalty_init");
    if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw std::invalid_argument("AlmSettings: armijo_c must be in (0,1)");
    if (!(inner_step_init > 0.0)) throw std::invalid_argument("AlmSettings: inner_step_init must be > 0");
    if (max_outer_iters == 0) throw std::invalid_argument("AlmSettings: max_outer_iters must be >= 1");
}

AlmState AlmState::initial(std::size_t num_constraints, const AlmSettings& settings)
{
    AlmState s;
    s.multipliers.assign(num_constraints, settings.multiplier_init);
    s.alpha = settings.penalty_init;
    return s;
}

double augmented_objective(double base_utility, const std::vector<double>& residuals, const AlmState& state)
{
    if (!(state.alpha > 0.0)) throw std::invalid_argument("augmented_objective: alpha must be > 0");
    if (residuals.size() != state.multipliers.size())
        throw std::invalid_argument("augmented_objective: residual/multiplier size mismatch");
    double penalty = 0.0;
    for (std::size_t c = 0; c < residuals.size(); ++c) {
        const double psi = state.multipliers[c];
        const double h = std::max(0.0, psi + state.alpha * residuals[c]);
        penalty += h * h - psi * psi;
    }
    return base_utility - penalty / (2.0 * state.alpha);
}

double update_multiplier(double psi, double alpha, double residual) { return std::max(0.0, psi + alpha * residual); }

void Box::project(std::vector<double>& x) const
{
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
}

double max_violation(const std::vector<double>& residuals)
{
    double worst = 0.0;
    for (double r : residuals) worst = std::max(worst, r);
    return worst;
}

InnerResult inner_maximize(const ValueFn& value, const GradientFn& gradient, std::vector<double> start,
                           const Box& box, const AlmSettings& settings)
{
    const std::size_t n = start.size();
    if (box.lower.size() != n || box.upper.size() != n) throw std::invalid_argument("inner_maximize: box size");
    for (std::size_t i = 0; i < n; ++i)
        if (!(box.lower[i] <= box.upper[i])) throw std::invalid_argument("inner_maximize: empty box");

    InnerResult out;
    std::vector<double> x = std::move(start);
    box.project(x);
    double f = value(x);
    if (!std::isfinite(f)) throw std::domain_error("inner_maximize: objective not finite at start point");
    std::vector<double> g(n, 0.0), g_new(n, 0.0), xt(n), pg(n);
    gradient(g);
    out.trace.push_back(f);

    double t = settings.inner_step_init;
    for (std::size_t it = 0; it < settings.max_inner_iters; ++it) {
        double pg_norm = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            pg_norm = std::max(pg_norm, std::abs(std::clamp(x[i] + g[i], box.lower[i], box.upper[i]) - x[i]));
        if (pg_norm <= settings.inner_tol) {
            out.converged = true;
            break;
        }

        bool accepted = false;
        double ft = f;
        while (t >= settings.min_step) {
            double slope = 0.0, step_norm = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                xt[i] = std::clamp(x[i] + t * g[i], box.lower[i], box.upper[i]);
                const double d = xt[i] - x[i];
                slope += g[i] * d;
                step_norm = std::max(step_norm, std::abs(d));
            }
            if (step_norm == 0.0) break;
            ft = value(xt);
            if (std::isfinite(ft) && ft >= f + settings.armijo_c * slope) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            // No ascent step above the resolution of the line search.
            out.converged = true;
            break;
        }
        gradient(g_new);
        ++out.iterations;

        double ss = 0.0, sy = 0.0, step_norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double s = xt[i] - x[i];
            const double y = g_new[i] - g[i];
            ss += s * s;
            sy += s * y;
            step_norm = std::max(step_norm, std::abs(s));
        }
        if (settings.barzilai_borwein && sy < 0.0)
            t = std::clamp(ss / -sy, settings.min_step * 16.0, 1e12);
        else
            t = std::min(t * 2.0, 1e12);

        x.swap(xt);
        g.swap(g_new);
        f = ft;
        out.trace.push_back(f);
        if (step_norm <= settings.inner_tol) {
            out.converged = true;
            break;
        }
    }
    out.x = std::move(x);
    out.value = f;
    return out;
}

bool AlmProblem::converged(const std::vector<double>& prev, const std::vector<double>& x,
                           const AlmSettings& settings) const
{
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) d = std::max(d, std::abs(x[i] - prev[i]));
    return d < settings.err_tol;
}

AlmResult outer_loop(AlmProblem& problem, std::vector<double> start, AlmState state, const AlmSettings& settings)
{
    settings.validate();
    const std::size_t nc = problem.num_constraints();
    if (state.multipliers.size() != nc) state.multipliers.assign(nc, settings.multiplier_init);
    if (!(state.alpha > 0.0)) state.alpha = settings.penalty_init;
    const Box box = problem.box();
    if (start.size() != problem.num_variables()) throw std::invalid_argument("outer_loop: start size mismatch");
    box.project(start);

    AlmResult result;
    std::vector<double> x = std::move(start), res(nc, 0.0), mu(nc, 0.0);
    double prev_violation = std::numeric_limits<double>::infinity();

    std::vector<double> best_x = x;
    double best_obj = -std::numeric_limits<double>::infinity();
    double best_violation = std::numeric_limits<double>::infinity();
    bool best_feasible = false;

    for (std::size_t t = 0; t < settings.max_outer_iters; ++t) {
        problem.begin_outer_iteration(x);

        ValueFn value = [&](const std::vector<double>& xx) {
            const double base = problem.evaluate(xx, res);
            return augmented_objective(base, res, state);
        };
        GradientFn grad = [&](std::vector<double>& gr) {
            for (std::size_t c = 0; c < nc; ++c) mu[c] = std::max(0.0, state.multipliers[c] + state.alpha * res[c]);
            problem.gradient(mu, gr);
        };
        InnerResult inner = inner_maximize(value, grad, x, box, settings);

        const double base = problem.evaluate(inner.x, res);
        const double viol = max_violation(res);
        double multiplier_change = 0.0;
        for (std::size_t c = 0; c < nc; ++c) {
            const double next = update_multiplier(state.multipliers[c], state.alpha, res[c]);
            multiplier_change = std::max(multiplier_change, std::abs(next - state.multipliers[c]));
            state.multipliers[c] = next;
        }
        ++state.iteration;
        state.violation_history.push_back(viol);
        result.trace.push_back({state.iteration, base, viol, state.alpha});

        const bool feasible = viol <= settings.violation_tol;
        if (feasible ? (!best_feasible || base > best_obj) : (!best_feasible && viol < best_violation)) {
            best_x = inner.x;
            best_obj = base;
            best_violation = viol;
            best_feasible = feasible;
        }

        const bool feasible_enough = !problem.convergence_requires_feasibility() || feasible;
        const bool stationary = inner.converged && multiplier_change <= settings.err_tol;
        if (feasible_enough && (problem.converged(x, inner.x, settings) || stationary)) {
            result.converged = true;
            result.x = std::move(inner.x);
            result.objective = base;
            result.max_violation = viol;
            result.state = std::move(state);
            return result;
        }
        if (!feasible && viol > settings.shrink_factor * prev_violation)
            state.alpha = std::min(state.alpha * settings.penalty_growth, settings.penalty_cap);
        prev_violation = viol;
        x = std::move(inner.x);
    }

    result.x = std::move(best_x);
    result.objective = problem.evaluate(result.x, res);
    result.max_violation = max_violation(res);
    result.state = std::move(state);
    return result;
}

} // namespace jtnoma

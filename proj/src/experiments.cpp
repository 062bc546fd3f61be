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

#include "jtnoma/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "jtnoma/channel.hpp"
#include "jtnoma/serialization.hpp"

namespace jtnoma {

std::string to_string(SweepAxis a)
{
    switch (a) {
    case SweepAxis::num_sut: return "num_sut";
    case SweepAxis::num_put: return "num_put";
    case SweepAxis::num_subcarriers: return "num_subcarriers";
    }
    throw std::invalid_argument("unknown axis");
}

SweepAxis parse_axis(const std::string& name)
{
    if (name == "num_sut" || name == "G") return SweepAxis::num_sut;
    if (name == "num_put" || name == "M") return SweepAxis::num_put;
    if (name == "num_subcarriers" || name == "N") return SweepAxis::num_subcarriers;
    throw InvalidConfigError("unknown sweep axis '" + name + "' (expected num_sut, num_put or num_subcarriers)");
}

void ScenarioSpec::validate() const
{
    if (axis_values.empty()) throw InvalidConfigError("scenario '" + name + "': axis_values is empty");
    if (seeds.empty()) throw InvalidConfigError("scenario '" + name + "': seeds is empty");
    if (schemes.empty()) throw InvalidConfigError("scenario '" + name + "': schemes is empty");
    for (std::size_t v : axis_values)
        if (v == 0) throw InvalidConfigError("scenario '" + name + "': axis values must be positive");
    if (num_sbs == 0 || num_sut == 0 || num_put == 0 || num_subcarriers == 0)
        throw InvalidConfigError("scenario '" + name + "': counts must be positive");
    try {
        settings.validate();
    } catch (const std::invalid_argument& e) {
        throw InvalidConfigError(e.what());
    }
}

NetworkConfig ScenarioSpec::network_config(std::size_t axis_value, std::uint64_t seed) const
{
    std::size_t G = num_sut, M = num_put, N = num_subcarriers;
    switch (axis) {
    case SweepAxis::num_sut: G = axis_value; break;
    case SweepAxis::num_put: M = axis_value; break;
    case SweepAxis::num_subcarriers: N = axis_value; break;
    }
    NetworkConfig cfg = NetworkConfig::defaults(num_sbs, G, M, N, service, seed);
    if (!network.empty()) cfg = config_from_json(network, cfg);
    return cfg;
}

namespace {

std::vector<std::uint64_t> seed_range(std::size_t count)
{
    std::vector<std::uint64_t> s(count);
    std::iota(s.begin(), s.end(), std::uint64_t{1});
    return s;
}

} // namespace

ScenarioSpec ScenarioSpec::web(std::size_t seeds)
{
    ScenarioSpec s;
    s.name = "web";
    s.service = ServiceKind::web;
    s.axis = SweepAxis::num_sut;
    s.axis_values = {4, 5, 6, 7, 8, 9, 10, 11, 12};
    s.seeds = seed_range(seeds);
    s.num_sbs = 10, s.num_put = 6, s.num_subcarriers = 32;
    return s;
}

ScenarioSpec ScenarioSpec::video(std::size_t seeds)
{
    ScenarioSpec s;
    s.name = "video";
    s.service = ServiceKind::video;
    s.axis = SweepAxis::num_put;
    s.axis_values = {2, 4, 6, 8, 10};
    s.seeds = seed_range(seeds);
    s.num_sbs = 10, s.num_sut = 10, s.num_subcarriers = 16;
    return s;
}

ScenarioSpec ScenarioSpec::audio(std::size_t seeds)
{
    ScenarioSpec s;
    s.name = "audio";
    s.service = ServiceKind::audio;
    s.axis = SweepAxis::num_subcarriers;
    s.axis_values = {8, 16, 24, 32};
    s.seeds = seed_range(seeds);
    s.num_sbs = 10, s.num_sut = 8, s.num_put = 4;
    return s;
}

JointSettings joint_settings_from_json(const nlohmann::json& j, JointSettings base)
{
    if (!j.is_object()) throw InvalidConfigError("solver settings must be an object");
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "max_outer_iters")
                base.max_outer_iters = value.get<std::size_t>();
            else if (key == "err_tol")
                base.err_tol = value.get<double>();
            else if (key == "init_seed") {
                base.init_seed = value.get<std::uint64_t>();
                base.init_seed_from_instance = false;
            } else if (key == "power_max_outer_iters")
                base.power.alm.max_outer_iters = value.get<std::size_t>();
            else if (key == "power_max_inner_iters")
                base.power.alm.max_inner_iters = value.get<std::size_t>();
            else if (key == "schedule_max_outer_iters")
                base.schedule.alm.max_outer_iters = value.get<std::size_t>();
            else if (key == "schedule_max_inner_iters")
                base.schedule.alm.max_inner_iters = value.get<std::size_t>();
            else if (key == "low_rate_slope")
                base.power.low_rate_slope = base.schedule.low_rate_slope = value.get<double>();
            else if (key == "schedule_alm")
                base.schedule.run_alm = value.get<bool>();
            else if (key == "polish")
                base.schedule.polish = value.get<bool>();
            else if (key == "max_polish_passes")
                base.schedule.max_polish_passes = value.get<std::size_t>();
            else if (key == "lambda_policy") {
                const auto p = value.get<std::string>();
                if (p == "fixed")
                    base.power.lambda_policy = LambdaPolicy::fixed;
                else if (p == "per_pair_ratio")
                    base.power.lambda_policy = LambdaPolicy::per_pair_ratio;
                else
                    throw InvalidConfigError("lambda_policy must be 'fixed' or 'per_pair_ratio'");
            } else if (key == "fixed_lambda")
                base.power.fixed_lambda = value.get<double>();
            else
                throw InvalidConfigError("unknown solver setting '" + key + "'");
        } catch (const nlohmann::json::exception& e) {
            throw InvalidConfigError("solver setting '" + key + "': " + e.what());
        }
    }
    return base;
}

ScenarioSpec scenario_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) throw InvalidConfigError("scenario must be a JSON object");
    ScenarioSpec s;
    if (j.contains("service")) {
        s = j.at("service") == "video" ? ScenarioSpec::video(0)
            : j.at("service") == "audio" ? ScenarioSpec::audio(0)
                                         : ScenarioSpec::web(0);
    }
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "name")
                s.name = value.get<std::string>();
            else if (key == "service")
                s.service = parse_service(value.get<std::string>());
            else if (key == "axis")
                s.axis = parse_axis(value.get<std::string>());
            else if (key == "axis_values")
                s.axis_values = value.get<std::vector<std::size_t>>();
            else if (key == "seeds")
                s.seeds = value.get<std::vector<std::uint64_t>>();
            else if (key == "seed_count")
                s.seeds = seed_range(value.get<std::size_t>());
            else if (key == "schemes") {
                s.schemes.clear();
                for (const auto& name : value) s.schemes.push_back(scheme_from_string(name.get<std::string>()));
            } else if (key == "num_sbs")
                s.num_sbs = value.get<std::size_t>();
            else if (key == "num_sut")
                s.num_sut = value.get<std::size_t>();
            else if (key == "num_put")
                s.num_put = value.get<std::size_t>();
            else if (key == "num_subcarriers")
                s.num_subcarriers = value.get<std::size_t>();
            else if (key == "network")
                s.network = value;
            else if (key == "solver")
                s.settings = joint_settings_from_json(value, s.settings);
            else if (key == "output_dir")
                s.output_dir = value.get<std::string>();
            else if (key == "workers")
                s.workers = value.get<std::size_t>();
            else if (key == "write_convergence")
                s.write_convergence = value.get<bool>();
            else if (key == "write_plots")
                s.write_plots = value.get<bool>();
            else
                throw InvalidConfigError("unknown scenario key '" + key + "'");
        } catch (const nlohmann::json::exception& e) {
            throw InvalidConfigError("scenario key '" + key + "': " + e.what());
        } catch (const std::invalid_argument& e) {
            throw InvalidConfigError(e.what());
        }
    }
    s.validate();
    return s;
}

nlohmann::json scenario_to_json(const ScenarioSpec& spec)
{
    nlohmann::json schemes = nlohmann::json::array();
    for (Scheme sc : spec.schemes) schemes.push_back(to_string(sc));
    return {{"name", spec.name},
            {"service", to_string(spec.service)},
            {"axis", to_string(spec.axis)},
            {"axis_values", spec.axis_values},
            {"seeds", spec.seeds},
            {"schemes", schemes},
            {"num_sbs", spec.num_sbs},
            {"num_sut", spec.num_sut},
            {"num_put", spec.num_put},
            {"num_subcarriers", spec.num_subcarriers},
            {"network", spec.network},
            {"solver",
             {{"max_outer_iters", spec.settings.max_outer_iters},
              {"err_tol", spec.settings.err_tol},
              {"power_max_outer_iters", spec.settings.power.alm.max_outer_iters},
              {"power_max_inner_iters", spec.settings.power.alm.max_inner_iters},
              {"schedule_max_outer_iters", spec.settings.schedule.alm.max_outer_iters},
              {"schedule_max_inner_iters", spec.settings.schedule.alm.max_inner_iters}}},
            {"output_dir", spec.output_dir},
            {"workers", spec.workers}};
}

namespace {

SweepRow run_cell(const NetworkInstance& inst, Scheme scheme, const JointSettings& settings)
{
    SweepRow row;
    row.scheme = scheme;
    try {
        JointResult r = run_scheme(inst, scheme, settings);
        const auto& rep = r.report;
        const double G = static_cast<double>(inst.num_sut());
        row.total_qoe = rep.utility;
        row.avg_mos = rep.utility / G;
        row.avg_rate = std::accumulate(rep.user_rate.begin(), rep.user_rate.end(), 0.0) / G;
        row.outer_iters = rep.outer_iterations;
        row.converged = rep.converged;
        row.feasible = rep.feasible;
        row.runtime_seconds = rep.runtime_seconds;
        row.status = !rep.feasible ? "infeasible" : rep.converged ? "ok" : "nonconverged";
        row.utility_trace = rep.utility_trace;
        row.trace = rep.trace;
    } catch (const InfeasibleError& e) {
        row.status = std::string("infeasible: ") + e.what();
    } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
    }
    return row;
}

} // namespace

SweepResult run_sweep(const ScenarioSpec& spec)
{
    spec.validate();
    struct Cell {
        std::size_t axis_value;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (std::size_t v : spec.axis_values)
        for (std::uint64_t s : spec.seeds) cells.push_back({v, s});

    const std::size_t S = spec.schemes.size();
    std::vector<SweepRow> rows(cells.size() * S);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t c; (c = next.fetch_add(1)) < cells.size();) {
            const Cell cell = cells[c];
            try {
                const NetworkInstance inst = generate_instance(spec.network_config(cell.axis_value, cell.seed));
                for (std::size_t k = 0; k < S; ++k) rows[c * S + k] = run_cell(inst, spec.schemes[k], spec.settings);
            } catch (const std::exception& e) {
                for (std::size_t k = 0; k < S; ++k) {
                    rows[c * S + k] = SweepRow{};
                    rows[c * S + k].scheme = spec.schemes[k];
                    rows[c * S + k].status = std::string("error: ") + e.what();
                }
            }
            for (std::size_t k = 0; k < S; ++k) {
                rows[c * S + k].axis_value = cell.axis_value;
                rows[c * S + k].seed = cell.seed;
            }
        }
    };
    std::size_t workers = spec.workers ? spec.workers : std::max(1U, std::thread::hardware_concurrency());
    workers = std::min(workers, cells.size());
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return {std::move(rows)};
}

namespace {

std::string fmt(double v)
{
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

void write_file(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
}

std::string run_stem(const ScenarioSpec& spec, const SweepRow& r)
{
    return to_string(r.scheme) + "_" + to_string(spec.axis) + "-" + std::to_string(r.axis_value) + "_seed-" +
           std::to_string(r.seed);
}

} // namespace

std::string results_csv(const ScenarioSpec& spec, const SweepResult& result)
{
    std::ostringstream os;
    os << "# " << kResultsSchema << "\n";
    os << "scenario,service,axis,axis_value,seed,scheme,total_qoe,avg_mos,avg_rate,outer_iters,converged,feasible,"
          "status\n";
    for (const auto& r : result.rows)
        os << csv_field(spec.name) << ',' << to_string(spec.service) << ',' << to_string(spec.axis) << ','
           << r.axis_value << ',' << r.seed << ',' << to_string(r.scheme) << ',' << fmt(r.total_qoe) << ','
           << fmt(r.avg_mos) << ',' << fmt(r.avg_rate) << ',' << r.outer_iters << ',' << (r.converged ? 1 : 0) << ','
           << (r.feasible ? 1 : 0) << ',' << csv_field(r.status) << '\n';
    return os.str();
}

std::string timing_csv(const ScenarioSpec& spec, const SweepResult& result)
{
    std::ostringstream os;
    os << "# " << kResultsSchema << " timing\n";
    os << "scenario,axis_value,seed,scheme,runtime_seconds\n";
    for (const auto& r : result.rows)
        os << csv_field(spec.name) << ',' << r.axis_value << ',' << r.seed << ',' << to_string(r.scheme) << ','
           << std::fixed << std::setprecision(6) << r.runtime_seconds << std::defaultfloat << '\n';
    return os.str();
}

std::string convergence_csv(const SweepRow& row)
{
    std::ostringstream os;
    os << "phase,outer,iteration,objective,max_violation,alpha\n";
    for (std::size_t t = 0; t < row.utility_trace.size(); ++t)
        os << "utility," << t << ",0," << fmt(row.utility_trace[t]) << ",0,0\n";
    for (const auto& tr : row.trace)
        os << tr.phase << ',' << tr.outer << ',' << tr.iteration << ',' << fmt(tr.objective) << ','
           << fmt(tr.max_violation) << ',' << fmt(tr.alpha) << '\n';
    return os.str();
}

std::string sweep_svg(const ScenarioSpec& spec, const SweepResult& result, const std::string& metric)
{
    if (metric != "avg_mos" && metric != "avg_rate") throw std::invalid_argument("sweep_svg: unknown metric " + metric);
    struct Point {
        double mean = 0.0, se = 0.0;
        std::size_t n = 0;
    };
    std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> samples; // (scheme idx, axis value)
    for (const auto& r : result.rows) {
        if (r.status.rfind("error", 0) == 0 || r.status.rfind("infeasible", 0) == 0) continue;
        const auto idx = static_cast<std::size_t>(
            std::find(spec.schemes.begin(), spec.schemes.end(), r.scheme) - spec.schemes.begin());
        samples[{idx, r.axis_value}].push_back(metric == "avg_mos" ? r.avg_mos : r.avg_rate);
    }
    std::map<std::pair<std::size_t, std::size_t>, Point> pts;
    double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
    for (const auto& [key, v] : samples) {
        Point p;
        p.n = v.size();
        p.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(p.n);
        if (p.n > 1) {
            double ss = 0.0;
            for (double x : v) ss += (x - p.mean) * (x - p.mean);
            p.se = std::sqrt(ss / static_cast<double>(p.n - 1) / static_cast<double>(p.n));
        }
        ymin = std::min(ymin, p.mean - p.se);
        ymax = std::max(ymax, p.mean + p.se);
        pts[key] = p;
    }
    if (pts.empty()) ymin = 0.0, ymax = 1.0;
    if (ymax - ymin < 1e-9) ymin -= 0.5, ymax += 0.5;
    const double pad = 0.08 * (ymax - ymin);
    ymin -= pad, ymax += pad;

    const double W = 720, H = 440, left = 70, right = 170, top = 30, bottom = 60;
    const auto [xmin_it, xmax_it] = std::minmax_element(spec.axis_values.begin(), spec.axis_values.end());
    const double xmin = static_cast<double>(*xmin_it), xmax = static_cast<double>(*xmax_it);
    auto X = [&](double v) { return left + (xmax > xmin ? (v - xmin) / (xmax - xmin) : 0.5) * (W - left - right); };
    auto Y = [&](double v) { return top + (ymax - v) / (ymax - ymin) * (H - top - bottom); };
    auto f2 = [](double v) {
        std::ostringstream os;
        os << std::fixed << std::setprecision(2) << v;
        return os.str();
    };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << left << "\" y=\"18\">" << spec.name << ": mean " << metric << " per SUT vs "
       << to_string(spec.axis) << " (error bars: 1 s.e.)</text>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\"" << H - bottom
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << H - bottom
       << "\" stroke=\"black\"/>\n";
    for (std::size_t v : spec.axis_values)
        os << "<text x=\"" << f2(X(static_cast<double>(v))) << "\" y=\"" << H - bottom + 16
           << "\" text-anchor=\"middle\">" << v << "</text>\n";
    for (int k = 0; k <= 4; ++k) {
        const double v = ymin + (ymax - ymin) * k / 4.0;
        os << "<text x=\"" << left - 6 << "\" y=\"" << f2(Y(v) + 4) << "\" text-anchor=\"end\">" << f2(v)
           << "</text>\n";
    }
    os << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 14 << "\" text-anchor=\"middle\">"
       << to_string(spec.axis) << "</text>\n";

    for (std::size_t s = 0; s < spec.schemes.size(); ++s) {
        const char* c = colors[s % 4];
        std::ostringstream line;
        for (std::size_t v : spec.axis_values) {
            auto it = pts.find({s, v});
            if (it == pts.end()) continue;
            const auto& p = it->second;
            const double x = X(static_cast<double>(v));
            line << f2(x) << ',' << f2(Y(p.mean)) << ' ';
            os << "<line x1=\"" << f2(x) << "\" y1=\"" << f2(Y(p.mean - p.se)) << "\" x2=\"" << f2(x) << "\" y2=\""
               << f2(Y(p.mean + p.se)) << "\" stroke=\"" << c << "\"/>\n";
            os << "<circle cx=\"" << f2(x) << "\" cy=\"" << f2(Y(p.mean)) << "\" r=\"3\" fill=\"" << c << "\"/>\n";
            os << "<text x=\"" << f2(x + 4) << "\" y=\"" << f2(Y(p.mean) - 6 - 12.0 * static_cast<double>(s))
               << "\" font-size=\"9\" fill=\"" << c << "\">n=" << p.n << "</text>\n";
        }
        os << "<polyline fill=\"none\" stroke=\"" << c << "\" points=\"" << line.str() << "\"/>\n";
        os << "<text x=\"" << W - right + 12 << "\" y=\"" << top + 16 + 18 * s << "\" fill=\"" << c << "\">"
           << to_string(spec.schemes[s]) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void write_outputs(const ScenarioSpec& spec, const SweepResult& result)
{
    namespace fs = std::filesystem;
    const fs::path dir(spec.output_dir);
    fs::create_directories(dir);
    write_file(dir / "results.csv", results_csv(spec, result));
    write_file(dir / "timing.csv", timing_csv(spec, result));
    write_file(dir / "scenario.json", scenario_to_json(spec).dump(2) + "\n");
    if (spec.write_convergence) {
        fs::create_directories(dir / "convergence");
        for (const auto& r : result.rows)
            write_file(dir / "convergence" / (run_stem(spec, r) + ".csv"), convergence_csv(r));
    }
    if (spec.write_plots) {
        write_file(dir / "avg_mos.svg", sweep_svg(spec, result, "avg_mos"));
        write_file(dir / "avg_rate.svg", sweep_svg(spec, result, "avg_rate"));
    }
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v)
{
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
        i = j + 1;
    }
    return rank;
}

} // namespace

TrendTest spearman_trend(const std::vector<double>& x, const std::vector<double>& y, int expected_sign)
{
    if (x.size() != y.size()) throw std::invalid_argument("spearman_trend: size mismatch");
    TrendTest t;
    t.n = x.size();
    if (t.n < 3) return t;
    const auto rx = average_ranks(x), ry = average_ranks(y);
    const double n = static_cast<double>(t.n);
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n, my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < t.n; ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return t;
    t.rho = sxy / std::sqrt(sxx * syy);
    const double signed_rho = expected_sign >= 0 ? t.rho : -t.rho;
    if (std::abs(t.rho) >= 1.0) {
        t.p_value = signed_rho > 0.0 ? 0.0 : 1.0;
        return t;
    }
    const double stat = signed_rho * std::sqrt((n - 2.0) / (1.0 - t.rho * t.rho));
    const boost::math::students_t dist(n - 2.0);
    t.p_value = boost::math::cdf(boost::math::complement(dist, stat));
    return t;
}

} // namespace jtnoma

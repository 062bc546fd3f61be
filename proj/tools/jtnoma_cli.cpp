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

// jtnoma: generate | solve | sweep | oracle
// Exit codes: 0 success, 1 invalid config, 2 infeasible instance, 3 non-convergence.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "jtnoma/baselines.hpp"
#include "jtnoma/channel.hpp"
#include "jtnoma/experiments.hpp"
#include "jtnoma/joint.hpp"
#include "jtnoma/oracle.hpp"
#include "jtnoma/serialization.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace jtnoma;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kInfeasible = 2, kNonConverged = 3 };

json read_json(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw InvalidConfigError("cannot open " + path);
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw InvalidConfigError(path + ": " + e.what());
    }
}

void write_text(const fs::path& p, const std::string& text)
{
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
}

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string service;
    std::string out_dir;
};

// Network config file: NetworkConfig keys plus optional "channel" and "solver" objects.
struct Loaded {
    NetworkConfig cfg;
    ChannelModelParams channel;
    JointSettings settings;
};

Loaded load_config(const Common& c, std::size_t L, std::size_t G, std::size_t M, std::size_t N)
{
    Loaded out;
    const ServiceKind svc = c.service.empty() ? ServiceKind::web : parse_service(c.service);
    out.cfg = NetworkConfig::defaults(L, G, M, N, svc, 1);
    if (!c.config.empty()) {
        json j = read_json(c.config);
        if (!j.is_object()) throw InvalidConfigError(c.config + ": expected an object");
        if (j.contains("channel")) {
            out.channel = channel_from_json(j.at("channel"));
            j.erase("channel");
        }
        if (j.contains("solver")) {
            out.settings = joint_settings_from_json(j.at("solver"));
            j.erase("solver");
        }
        out.cfg = config_from_json(j, out.cfg);
    }
    if (!c.service.empty()) out.cfg.service = svc;
    if (c.seed) out.cfg.rng_seed = *c.seed;
    return out;
}

json schedule_json(const NetworkInstance& inst, const Schedule& s, const PowerAllocation& pw)
{
    json links = json::array();
    for (std::size_t l = 0; l < inst.num_sbs(); ++l)
        for (std::size_t g = 0; g < inst.num_sut(); ++g)
            for (std::size_t n = 0; n < inst.num_subcarriers(); ++n)
                if (s.link(l, g, n) >= 0.5) links.push_back({{"sbs", l}, {"sut", g}, {"subcarrier", n}, {"p", pw.p(l, g, n)}});
    json q = json::array();
    for (std::size_t m = 0; m < inst.num_put(); ++m)
        for (std::size_t n = 0; n < inst.num_subcarriers(); ++n)
            if (inst.primary_alloc(m, n) != 0.0) q.push_back({{"put", m}, {"subcarrier", n}, {"q", pw.q(m, n)}});
    return {{"links", links}, {"mbs_power", q}};
}

json report_json(const SolveReport& r)
{
    return {{"utility", r.utility},
            {"converged", r.converged},
            {"feasible", r.feasible},
            {"audit", r.audit.describe()},
            {"outer_iterations", r.outer_iterations},
            {"utility_trace", r.utility_trace},
            {"user_rate", r.user_rate},
            {"user_mos", r.user_mos},
            {"runtime_seconds", r.runtime_seconds},
            {"message", r.message}};
}

void add_common(CLI::App* app, Common& c)
{
    app->add_option("--config", c.config, "JSON config file");
    app->add_option("--seed", c.seed, "RNG seed");
    app->add_option("--service", c.service, "web, video or audio")->check(CLI::IsMember({"web", "video", "audio"}));
    app->add_option("--out-dir", c.out_dir, "output directory");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"JT-NOMA joint scheduling and power allocation"};
    app.require_subcommand(1);

    Common gen_c, solve_c, sweep_c, oracle_c;
    std::size_t L = 10, G = 8, M = 6, N = 32;
    auto add_dims = [&](CLI::App* a) {
        a->add_option("--sbs", L, "number of SBSs");
        a->add_option("--sut", G, "number of SUTs");
        a->add_option("--put", M, "number of PUTs");
        a->add_option("--subcarriers", N, "number of subcarriers");
    };

    auto* gen = app.add_subcommand("generate", "write an instance snapshot");
    add_common(gen, gen_c);
    add_dims(gen);

    auto* solve = app.add_subcommand("solve", "solve one instance with one scheme");
    add_common(solve, solve_c);
    add_dims(solve);
    std::string scheme = "jt_noma", instance_file;
    solve->add_option("--scheme", scheme, "jt_noma, non_jt_noma, jt_oma or non_jt_oma");
    solve->add_option("--instance", instance_file, "instance snapshot from `generate`");

    auto* sweep = app.add_subcommand("sweep", "run a scenario sweep");
    add_common(sweep, sweep_c);
    std::optional<std::size_t> workers;
    sweep->add_option("--workers", workers, "parallel cells (0: all cores)");

    auto* orc = app.add_subcommand("oracle", "exhaustive solve of a micro instance");
    add_common(orc, oracle_c);
    std::size_t oL = 2, oG = 2, oM = 1, oN = 1;
    orc->add_option("--sbs", oL);
    orc->add_option("--sut", oG);
    orc->add_option("--put", oM);
    orc->add_option("--subcarriers", oN);
    orc->add_option("--scheme", scheme);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const Loaded ld = load_config(gen_c, L, G, M, N);
            const NetworkInstance inst = generate_instance(ld.cfg, ld.channel);
            const std::string text = instance_to_json(inst) + "\n";
            if (gen_c.out_dir.empty())
                std::cout << text;
            else
                write_text(fs::path(gen_c.out_dir) / "instance.json", text);
            return kOk;
        }
        if (*solve) {
            const Scheme sc = scheme_from_string(scheme);
            Loaded ld = load_config(solve_c, L, G, M, N);
            NetworkInstance inst;
            if (!instance_file.empty()) {
                std::ifstream f(instance_file);
                if (!f) throw InvalidConfigError("cannot open " + instance_file);
                std::stringstream ss;
                ss << f.rdbuf();
                inst = instance_from_json(ss.str());
            } else {
                inst = generate_instance(ld.cfg, ld.channel);
            }
            const JointResult r = run_scheme(inst, sc, ld.settings);
            json out = {{"scheme", to_string(sc)}, {"report", report_json(r.report)},
                        {"solution", schedule_json(inst, r.schedule, r.power)}};
            std::cout << "scheme " << to_string(sc) << "  U_QoE " << r.report.utility << "  outer "
                      << r.report.outer_iterations << "  converged " << r.report.converged << "  "
                      << r.report.audit.describe() << "\n";
            if (!solve_c.out_dir.empty()) {
                const fs::path dir(solve_c.out_dir);
                write_text(dir / "solution.json", out.dump(2) + "\n");
                SweepRow row;
                row.utility_trace = r.report.utility_trace;
                row.trace = r.report.trace;
                write_text(dir / "convergence.csv", convergence_csv(row));
            }
            if (!r.report.feasible) return kInfeasible;
            return r.report.converged ? kOk : kNonConverged;
        }
        if (*sweep) {
            if (sweep_c.config.empty()) throw InvalidConfigError("sweep requires --config <scenario.json>");
            json j = read_json(sweep_c.config);
            if (!sweep_c.service.empty()) j["service"] = sweep_c.service;
            ScenarioSpec spec = scenario_from_json(j);
            if (sweep_c.seed) spec.seeds = {*sweep_c.seed};
            if (!sweep_c.out_dir.empty()) spec.output_dir = sweep_c.out_dir;
            if (workers) spec.workers = *workers;
            const SweepResult res = run_sweep(spec);
            write_outputs(spec, res);
            std::size_t bad = 0, nonconv = 0;
            for (const auto& r : res.rows) {
                if (r.status.rfind("infeasible", 0) == 0 || r.status.rfind("error", 0) == 0) ++bad;
                if (!r.converged) ++nonconv;
            }
            std::cout << res.rows.size() << " runs written to " << spec.output_dir << " (" << bad
                      << " failed, " << nonconv << " not converged)\n";
            return nonconv ? kNonConverged : kOk;
        }
        if (*orc) {
            const Loaded ld = load_config(oracle_c, oL, oG, oM, oN);
            const NetworkInstance inst = generate_instance(ld.cfg, ld.channel);
            const auto best = oracle::best_joint(inst, rules_for(scheme_from_string(scheme)));
            if (!best.found) {
                std::cout << "no feasible schedule/power pair among " << best.schedules << " schedules\n";
                return kInfeasible;
            }
            json out = {{"utility", best.utility}, {"schedules", best.schedules},
                        {"solution", schedule_json(inst, best.schedule, best.power)}};
            std::cout << out.dump(2) << "\n";
            if (!oracle_c.out_dir.empty()) write_text(fs::path(oracle_c.out_dir) / "oracle.json", out.dump(2) + "\n");
            return kOk;
        }
    } catch (const InvalidConfigError& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return kInvalid;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kInvalid;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kInfeasible;
    }
    return kOk;
}

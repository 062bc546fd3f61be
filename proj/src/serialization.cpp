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

#include "jtnoma/serialization.hpp"

#include <set>

namespace jtnoma {

using nlohmann::json;

json config_to_json(const NetworkConfig& cfg)
{
    return json{
        {"num_sbs", cfg.num_sbs},
        {"num_sut", cfg.num_sut},
        {"num_put", cfg.num_put},
        {"num_subcarriers", cfg.num_subcarriers},
        {"mbs_radius", cfg.mbs_radius},
        {"sbs_radius", cfg.sbs_radius},
        {"subcarrier_bandwidth", cfg.subcarrier_bandwidth},
        {"q_max", cfg.q_max},
        {"p_max", cfg.p_max},
        {"backhaul_cap", cfg.backhaul_cap},
        {"load_cap", cfg.load_cap},
        {"sic_cap", cfg.sic_cap},
        {"put_rate_min", cfg.put_rate_min},
        {"mos_min", cfg.mos_min},
        {"noise_power", cfg.noise_power},
        {"put_noise_power", cfg.put_noise_power},
        {"service", to_string(cfg.service)},
        {"rng_seed", cfg.rng_seed},
    };
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& out)
{
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InvalidConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

// A scalar where a per-index vector is expected is accepted and broadcast later.
template <typename T>
void read_vector(const json& j, const char* key, std::vector<T>& out)
{
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    try {
        if (v.is_array())
            out = v.get<std::vector<T>>();
        else
            out = {v.get<T>()};
    } catch (const json::exception& e) {
        throw InvalidConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

const std::set<std::string>& config_keys()
{
    static const std::set<std::string> keys = {
        "num_sbs",     "num_sut", "num_put",      "num_subcarriers", "mbs_radius",  "sbs_radius",
        "subcarrier_bandwidth", "q_max", "p_max", "backhaul_cap",    "load_cap",    "sic_cap",
        "put_rate_min", "mos_min", "noise_power", "put_noise_power", "service",     "rng_seed",
        "q_max_dbm",   "p_max_dbm", "noise_dbm",
    };
    return keys;
}

} // namespace

NetworkConfig config_from_json(const json& j, NetworkConfig base)
{
    if (!j.is_object()) throw InvalidConfigError("network config must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (!config_keys().count(key)) throw InvalidConfigError("unknown network config field '" + key + "'");

    NetworkConfig cfg = std::move(base);
    read(j, "num_sbs", cfg.num_sbs);
    read(j, "num_sut", cfg.num_sut);
    read(j, "num_put", cfg.num_put);
    read(j, "num_subcarriers", cfg.num_subcarriers);
    read(j, "mbs_radius", cfg.mbs_radius);
    read(j, "sbs_radius", cfg.sbs_radius);
    read(j, "subcarrier_bandwidth", cfg.subcarrier_bandwidth);
    read(j, "q_max", cfg.q_max);
    read_vector(j, "p_max", cfg.p_max);
    read_vector(j, "backhaul_cap", cfg.backhaul_cap);
    read_vector(j, "load_cap", cfg.load_cap);
    read_vector(j, "sic_cap", cfg.sic_cap);
    read_vector(j, "put_rate_min", cfg.put_rate_min);
    read_vector(j, "mos_min", cfg.mos_min);
    read_vector(j, "noise_power", cfg.noise_power);
    read(j, "put_noise_power", cfg.put_noise_power);
    read(j, "rng_seed", cfg.rng_seed);
    if (j.contains("service")) {
        std::string s;
        read(j, "service", s);
        cfg.service = parse_service(s);
    }
    // dBm conveniences.
    if (j.contains("q_max_dbm")) {
        double v = 0.0;
        read(j, "q_max_dbm", v);
        cfg.q_max = dbm_to_watts(v);
    }
    if (j.contains("p_max_dbm")) {
        double v = 0.0;
        read(j, "p_max_dbm", v);
        cfg.p_max = {dbm_to_watts(v)};
    }
    if (j.contains("noise_dbm")) {
        double v = 0.0;
        read(j, "noise_dbm", v);
        cfg.noise_power = {dbm_to_watts(v)};
        cfg.put_noise_power = dbm_to_watts(v);
    }
    auto shrink_to_seed = [](auto& v, std::size_t want) {
        if (v.size() != want && !v.empty()) v.resize(1);
    };
    shrink_to_seed(cfg.p_max, cfg.num_sbs);
    shrink_to_seed(cfg.backhaul_cap, cfg.num_sbs);
    shrink_to_seed(cfg.load_cap, cfg.num_sbs);
    shrink_to_seed(cfg.sic_cap, cfg.num_subcarriers);
    shrink_to_seed(cfg.put_rate_min, cfg.num_put);
    shrink_to_seed(cfg.mos_min, cfg.num_sut);
    shrink_to_seed(cfg.noise_power, cfg.num_sut);
    cfg.broadcast_per_index();
    return cfg;
}

json channel_to_json(const ChannelModelParams& ch)
{
    return json{{"pathloss_exponent_mbs", ch.pathloss_exponent_mbs},
                {"pathloss_exponent_sbs", ch.pathloss_exponent_sbs},
                {"reference_loss_db", ch.reference_loss_db},
                {"rayleigh_scale", ch.rayleigh_scale}};
}

ChannelModelParams channel_from_json(const json& j, ChannelModelParams base)
{
    if (!j.is_object()) throw InvalidConfigError("channel parameters must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (key != "pathloss_exponent_mbs" && key != "pathloss_exponent_sbs" && key != "reference_loss_db" &&
            key != "rayleigh_scale")
            throw InvalidConfigError("unknown channel field '" + key + "'");
    read(j, "pathloss_exponent_mbs", base.pathloss_exponent_mbs);
    read(j, "pathloss_exponent_sbs", base.pathloss_exponent_sbs);
    read(j, "reference_loss_db", base.reference_loss_db);
    read(j, "rayleigh_scale", base.rayleigh_scale);
    return base;
}

namespace {

json points(const std::vector<Point>& pts)
{
    json a = json::array();
    for (const auto& p : pts) a.push_back({p.x, p.y});
    return a;
}

std::vector<Point> read_points(const json& a, std::size_t want, const char* name)
{
    if (!a.is_array() || a.size() != want)
        throw InvalidConfigError(std::string("snapshot positions.") + name + " has wrong length");
    std::vector<Point> out;
    for (const auto& p : a) out.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return out;
}

json nested(const Tensor3& t)
{
    json a = json::array();
    for (std::size_t i = 0; i < t.dim0(); ++i) {
        json b = json::array();
        for (std::size_t k = 0; k < t.dim1(); ++k) {
            json c = json::array();
            for (std::size_t n = 0; n < t.dim2(); ++n) c.push_back(t(i, k, n));
            b.push_back(std::move(c));
        }
        a.push_back(std::move(b));
    }
    return a;
}

json nested(const Matrix& t)
{
    json a = json::array();
    for (std::size_t i = 0; i < t.rows(); ++i) {
        json b = json::array();
        for (std::size_t n = 0; n < t.cols(); ++n) b.push_back(t(i, n));
        a.push_back(std::move(b));
    }
    return a;
}

void fill(const json& a, Tensor3& t, const char* name)
{
    auto bad = [&] { throw InvalidConfigError(std::string("snapshot field ") + name + " has wrong shape"); };
    if (!a.is_array() || a.size() != t.dim0()) bad();
    for (std::size_t i = 0; i < t.dim0(); ++i) {
        if (!a[i].is_array() || a[i].size() != t.dim1()) bad();
        for (std::size_t k = 0; k < t.dim1(); ++k) {
            if (!a[i][k].is_array() || a[i][k].size() != t.dim2()) bad();
            for (std::size_t n = 0; n < t.dim2(); ++n) t(i, k, n) = a[i][k][n].get<double>();
        }
    }
}

void fill(const json& a, Matrix& t, const char* name)
{
    auto bad = [&] { throw InvalidConfigError(std::string("snapshot field ") + name + " has wrong shape"); };
    if (!a.is_array() || a.size() != t.rows()) bad();
    for (std::size_t i = 0; i < t.rows(); ++i) {
        if (!a[i].is_array() || a[i].size() != t.cols()) bad();
        for (std::size_t n = 0; n < t.cols(); ++n) t(i, n) = a[i][n].get<double>();
    }
}

} // namespace

json instance_to_json_value(const NetworkInstance& inst)
{
    return json{
        {"schema", kInstanceSchema},
        {"config", config_to_json(inst.config)},
        {"positions",
         {{"mbs", {inst.mbs.x, inst.mbs.y}},
          {"sbs", points(inst.sbs)},
          {"sut", points(inst.sut)},
          {"put", points(inst.put)}}},
        {"gains",
         {{"sbs_sut", nested(inst.sbs_sut_gain)},
          {"sbs_put", nested(inst.sbs_put_gain)},
          {"mbs_sut", nested(inst.mbs_sut_gain)},
          {"mbs_put", nested(inst.mbs_put_gain)}}},
        {"primary_alloc", nested(inst.primary_alloc)},
    };
}

NetworkInstance instance_from_json_value(const json& j)
{
    try {
        if (j.value("schema", std::string{}) != kInstanceSchema)
            throw InvalidConfigError(std::string("snapshot schema must be '") + kInstanceSchema + "'");
        NetworkConfig cfg = config_from_json(j.at("config"), NetworkConfig::defaults(1, 1, 1, 1));
        NetworkInstance inst = NetworkInstance::blank(cfg, 0.0);
        const auto& pos = j.at("positions");
        inst.mbs = {pos.at("mbs").at(0).get<double>(), pos.at("mbs").at(1).get<double>()};
        inst.sbs = read_points(pos.at("sbs"), cfg.num_sbs, "sbs");
        inst.sut = read_points(pos.at("sut"), cfg.num_sut, "sut");
        inst.put = read_points(pos.at("put"), cfg.num_put, "put");
        const auto& gains = j.at("gains");
        fill(gains.at("sbs_sut"), inst.sbs_sut_gain, "gains.sbs_sut");
        fill(gains.at("sbs_put"), inst.sbs_put_gain, "gains.sbs_put");
        fill(gains.at("mbs_sut"), inst.mbs_sut_gain, "gains.mbs_sut");
        fill(gains.at("mbs_put"), inst.mbs_put_gain, "gains.mbs_put");
        fill(j.at("primary_alloc"), inst.primary_alloc, "primary_alloc");
        return inst;
    } catch (const json::exception& e) {
        throw InvalidConfigError(std::string("malformed instance snapshot: ") + e.what());
    }
}

} // namespace jtnoma

#include "bpdg/driver.hpp"

#include "bpdg/errors.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

namespace bpdg {

using nlohmann::json;

PotentialMode potential_mode_from_string(std::string_view name) {
    if (name == "self_consistent") return PotentialMode::SelfConsistent;
    if (name == "frozen") return PotentialMode::Frozen;
    if (name == "zero") return PotentialMode::Zero;
    throw ConfigError("unknown potential mode '" + std::string(name) + "'");
}

std::string_view to_string(PotentialMode mode) {
    switch (mode) {
    case PotentialMode::SelfConsistent: return "self_consistent";
    case PotentialMode::Frozen: return "frozen";
    case PotentialMode::Zero: return "zero";
    }
    return "?";
}

InitialKind initial_kind_from_string(std::string_view name) {
    if (name == "uniform") return InitialKind::Uniform;
    if (name == "maxwellian") return InitialKind::Maxwellian;
    if (name == "table") return InitialKind::Table;
    throw ConfigError("unknown initial condition '" + std::string(name) + "'");
}

std::string_view to_string(InitialKind kind) {
    switch (kind) {
    case InitialKind::Uniform: return "uniform";
    case InitialKind::Maxwellian: return "maxwellian";
    case InitialKind::Table: return "table";
    }
    return "?";
}

PhononParams RunConfig::phonon() const {
    if (detailed_balance) return PhononParams::with_detailed_balance(hbar_omega, K, c0);
    return {hbar_omega, n_ph.value_or(0.0), K, c0, false};
}

void RunConfig::validate() const {
    if (!(L > 0.0) || !(p_max > 0.0)) throw ConfigError("mesh: L and p_max must be positive");
    if (nx < 1 || np < 1 || nmu < 1) throw ConfigError("mesh: cell counts must be at least 1");
    if (degree < 1 || degree > 3) throw ConfigError("mesh: degree must lie in [1,3]");
    band.validate();
    if (!detailed_balance && !n_ph) throw ConfigError("phonon: n_ph is required without detailed_balance");
    if (detailed_balance && n_ph) throw ConfigError("phonon: n_ph is derived when detailed_balance is set");
    phonon().validate();
    if (!(doping_background >= 0.0)) throw ConfigError("doping: background must be non-negative");
    for (const auto& r : doping_regions) {
        if (!(r.x_min < r.x_max)) throw ConfigError("doping: region needs x_min < x_max");
        if (!(r.value >= 0.0)) throw ConfigError("doping: region value must be non-negative");
    }
    if (!(poisson.permittivity > 0.0) || !(poisson.q > 0.0))
        throw ConfigError("poisson: permittivity and q must be positive");
    if (initial == InitialKind::Table && initial_table.empty()) throw ConfigError("initial: table needs a path");
    if (!(initial_value >= 0.0)) throw ConfigError("initial: value must be non-negative");
    if (!(t_end >= 0.0)) throw ConfigError("time: t_end must be non-negative");
    if (max_steps < 0) throw ConfigError("time: max_steps must be non-negative");
    if (rk_order < 1 || rk_order > 3) throw ConfigError("time: rk_order must be 1, 2 or 3");
    if (!(safety > 0.0 && safety <= 1.0)) throw ConfigError("time: safety must lie in (0,1]");
    if (snapshot_every < 0) throw ConfigError("output: snapshot_every must be non-negative");
}

namespace {

void check_keys(const json& obj, const std::string& section, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError("section '" + section + "' must be an object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError("unknown key '" + key + "' in section '" + section + "'");
    }
}

template <class T>
void read(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

} // namespace

RunConfig parse_config(const std::string& json_text) {
    RunConfig c;
    try {
        const json root = json::parse(json_text);
        check_keys(root, "<root>", {"mesh", "band", "phonon", "doping", "poisson", "boundary", "initial", "time", "output"});
        if (root.contains("mesh")) {
            const auto& m = root["mesh"];
            check_keys(m, "mesh", {"L", "p_max", "Nx", "Np", "Nmu", "degree"});
            read(m, "L", c.L);
            read(m, "p_max", c.p_max);
            read(m, "Nx", c.nx);
            read(m, "Np", c.np);
            read(m, "Nmu", c.nmu);
            read(m, "degree", c.degree);
        }
        if (root.contains("band")) {
            const auto& b = root["band"];
            check_keys(b, "band", {"model", "m_eff", "alpha"});
            std::string model = "parabolic";
            read(b, "model", model);
            c.band.kind = band_kind_from_string(model);
            read(b, "m_eff", c.band.m_eff);
            read(b, "alpha", c.band.kane_alpha);
            if (c.band.kind == BandKind::Parabolic && c.band.kane_alpha != 0.0)
                throw ConfigError("band: alpha applies to the kane model only");
        }
        if (root.contains("phonon")) {
            const auto& p = root["phonon"];
            check_keys(p, "phonon", {"hbar_omega", "K", "c0", "detailed_balance", "n_ph"});
            read(p, "hbar_omega", c.hbar_omega);
            read(p, "K", c.K);
            read(p, "c0", c.c0);
            read(p, "detailed_balance", c.detailed_balance);
            if (p.contains("n_ph")) c.n_ph = p["n_ph"].get<double>();
        }
        if (root.contains("doping")) {
            const auto& d = root["doping"];
            check_keys(d, "doping", {"background", "regions"});
            read(d, "background", c.doping_background);
            if (d.contains("regions")) {
                for (const auto& r : d["regions"]) {
                    check_keys(r, "doping.regions", {"x_min", "x_max", "value"});
                    c.doping_regions.push_back({r.at("x_min").get<double>(), r.at("x_max").get<double>(),
                                                r.at("value").get<double>()});
                }
            }
        }
        if (root.contains("poisson")) {
            const auto& p = root["poisson"];
            check_keys(p, "poisson", {"V0", "permittivity", "q", "mode"});
            read(p, "V0", c.poisson.V0);
            read(p, "permittivity", c.poisson.permittivity);
            read(p, "q", c.poisson.q);
            if (p.contains("mode")) c.potential_mode = potential_mode_from_string(p["mode"].get<std::string>());
        }
        if (root.contains("boundary")) c.boundary = boundary_mode_from_string(root["boundary"].get<std::string>());
        if (root.contains("initial")) {
            const auto& i = root["initial"];
            check_keys(i, "initial", {"kind", "value", "path"});
            if (i.contains("kind")) c.initial = initial_kind_from_string(i["kind"].get<std::string>());
            read(i, "value", c.initial_value);
            read(i, "path", c.initial_table);
        }
        if (root.contains("time")) {
            const auto& t = root["time"];
            check_keys(t, "time", {"t_end", "max_steps", "rk_order", "safety"});
            read(t, "t_end", c.t_end);
            read(t, "max_steps", c.max_steps);
            read(t, "rk_order", c.rk_order);
            read(t, "safety", c.safety);
        }
        if (root.contains("output")) {
            const auto& o = root["output"];
            check_keys(o, "output", {"dir", "snapshot_every"});
            read(o, "dir", c.output_dir);
            read(o, "snapshot_every", c.snapshot_every);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    RunConfig c = parse_config(ss.str());
    const auto base = std::filesystem::path(path).parent_path();
    if (!c.initial_table.empty() && std::filesystem::path(c.initial_table).is_relative())
        c.initial_table = (base / c.initial_table).string();
    return c;
}

} // namespace bpdg

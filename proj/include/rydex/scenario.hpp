#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rydex/constants.hpp"
#include "rydex/interactions.hpp"
#include "rydex/pulse.hpp"

namespace rydex {

/// Flat dotted-key configuration: "key = value" lines, '#' comments.
class KeyValues {
public:
    static KeyValues parse_text(const std::string& text) {
        KeyValues kv;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string t = trim(line);
            if (t.empty()) continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": expected 'key = value', got '" + t + "'");
            const std::string key = trim(t.substr(0, eq));
            const std::string val = trim(t.substr(eq + 1));
            if (key.empty())
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": empty key");
            kv.set(key, val);
        }
        return kv;
    }

    static KeyValues parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::invalid_argument("cannot open config file: " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse_text(ss.str());
    }

    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    void merge(const KeyValues& other) {
        for (const auto& [k, v] : other.kv_) kv_[k] = v;
    }
    const std::map<std::string, std::string>& items() const { return kv_; }

    static std::string trim(const std::string& s) {
        auto b = s.begin(), e = s.end();
        while (b != e && std::isspace(static_cast<unsigned char>(*b))) ++b;
        while (e != b && std::isspace(static_cast<unsigned char>(*(e - 1)))) --e;
        return {b, e};
    }

private:
    std::map<std::string, std::string> kv_;
};

enum class Command { GammaTable, Pexc, Correlation, Saturation, DensitySweep, Oracle, McValidate };

inline const char* to_string(Command c) {
    switch (c) {
        case Command::GammaTable: return "gamma-table";
        case Command::Pexc: return "pexc";
        case Command::Correlation: return "correlation";
        case Command::Saturation: return "saturation";
        case Command::DensitySweep: return "density-sweep";
        case Command::Oracle: return "oracle";
        case Command::McValidate: return "mc-validate";
    }
    return "?";
}

inline std::optional<Command> command_from_string(const std::string& s) {
    for (Command c : {Command::GammaTable, Command::Pexc, Command::Correlation,
                      Command::Saturation, Command::DensitySweep, Command::Oracle,
                      Command::McValidate})
        if (s == to_string(c)) return c;
    return std::nullopt;
}

enum class CorrelationFamily { Single, ChirpFamily, DetuningFamily };

/// Fully resolved, validated scenario. `resolved` echoes every key that
/// applied to the run, defaults included.
struct ScenarioConfig {
    Command command = Command::GammaTable;
    PulseSpec pulse;
    InteractionKernel kernel;
    double rho_cm3 = 0.0;
    // sweeps
    double sweep_i_max = 0.3;
    std::size_t sweep_i_points = 301;
    std::size_t sweep_rho_points = 201;
    // correlation scan
    CorrelationFamily corr_family = CorrelationFamily::Single;
    double corr_base_bandwidth_mhz = 60.0;
    std::vector<double> corr_bandwidths_mhz;
    std::optional<double> corr_negative_mhz;
    std::vector<double> corr_detunings_mhz;
    double scan_r_min_um = 0.5, scan_r_max_um = 20.0;
    std::size_t scan_r_points = 200;
    // oracle
    int oracle_n = 3;
    double oracle_k = 10.0;
    double oracle_omega = 1.0;
    std::size_t oracle_points = 101;
    double oracle_tol = 1e-10;
    // monte carlo
    std::size_t mc_samples = 200;
    std::size_t mc_atoms = 500;
    Geometry mc_geometry = Geometry::Sphere;
    // run controls
    std::uint64_t seed = 12345;
    unsigned workers = 1;
    std::string out;  // empty = "<command>.<format>"
    std::string format = "csv";

    std::map<std::string, std::string> resolved;

    std::string output_path() const {
        if (!out.empty()) return out;
        return std::string(to_string(command)) + "." + format;
    }
};

struct ConfigError {
    std::string field;
    std::string message;
};

namespace detail {

struct KeyReader {
    const std::map<std::string, std::string>& kv;
    std::set<std::string> used;
    std::vector<ConfigError>& errors;
    std::map<std::string, std::string>& resolved;

    std::string raw(const std::string& key, const std::string& fallback, bool record = true) {
        auto it = kv.find(key);
        std::string v = fallback;
        if (it != kv.end()) {
            used.insert(key);
            v = it->second;
        }
        if (record) resolved[key] = v;
        return v;
    }

    bool has(const std::string& key) const { return kv.count(key) > 0; }

    double number(const std::string& key, double fallback) {
        const std::string v = raw(key, format_fallback(fallback));
        try {
            std::size_t pos = 0;
            const double x = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            errors.push_back({key, "not a number: '" + v + "'"});
            return fallback;
        }
    }

    std::optional<double> number_opt(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return number(key, 0.0);
    }

    std::size_t count(const std::string& key, std::size_t fallback) {
        const double x = number(key, static_cast<double>(fallback));
        if (x < 0 || x != std::floor(x)) {
            errors.push_back({key, "must be a nonnegative integer"});
            return fallback;
        }
        return static_cast<std::size_t>(x);
    }

    std::vector<double> list(const std::string& key, const std::string& fallback) {
        const std::string v = raw(key, fallback);
        std::vector<double> vals;
        std::istringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = KeyValues::trim(item);
            if (item.empty()) continue;
            try {
                vals.push_back(std::stod(item));
            } catch (const std::exception&) {
                errors.push_back({key, "not a number list: '" + v + "'"});
                return {};
            }
        }
        return vals;
    }

    static std::string format_fallback(double x);
};

inline std::string KeyReader::format_fallback(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

}  // namespace detail

/// Pure validation/resolution pass: no computation side effects. Returns the
/// resolved config or the list of diagnostics (field + message).
inline std::variant<ScenarioConfig, std::vector<ConfigError>> resolve_scenario(
    Command command, const KeyValues& kv) {
    std::vector<ConfigError> errors;
    ScenarioConfig cfg;
    cfg.command = command;
    detail::KeyReader r{kv.items(), {}, errors, cfg.resolved};
    cfg.resolved["command"] = to_string(command);

    const bool needs_pulse = command != Command::GammaTable;
    const bool needs_kernel =
        command != Command::GammaTable && command != Command::Oracle;

    // --- pulse ---
    if (needs_pulse) {
        const std::string shape_s = r.raw("pulse.shape", "gaussian");
        PulseShape shape = PulseShape::Gaussian;
        if (shape_s == "square")
            shape = PulseShape::Square;
        else if (shape_s != "gaussian")
            errors.push_back({"pulse.shape", "must be 'gaussian' or 'square'"});

        const auto duration_ns = r.number_opt("pulse.duration_ns");
        const auto bandwidth_mhz = r.number_opt("pulse.bandwidth_mhz");
        const auto base_mhz = r.number_opt("pulse.base_bandwidth_mhz");
        const double chirp_sign = r.number("pulse.chirp_sign", 1.0);
        const auto beta = r.number_opt("pulse.beta");
        const double detuning_mhz = r.number("pulse.detuning_mhz", 0.0);
        const double window = r.number("pulse.window", 4.0);

        double duration_s = 0.0;
        double chirp = beta.value_or(0.0);
        if (duration_ns) {
            if (bandwidth_mhz)
                errors.push_back({"pulse.duration_ns", "give either a duration or a bandwidth, not both"});
            if (!(*duration_ns > 0.0))
                errors.push_back({"pulse.duration_ns", "must be positive"});
            else
                duration_s = *duration_ns * 1e-9;
        } else if (bandwidth_mhz) {
            try {
                if (base_mhz) {
                    const PulseSpec ps = chirped_from_base(shape, *bandwidth_mhz * 1e6,
                                                           *base_mhz * 1e6,
                                                           chirp_sign < 0 ? -1 : +1);
                    duration_s = ps.duration_s;
                    if (!beta) chirp = ps.chirp;
                } else {
                    duration_s = transform_limited_duration_s(shape, *bandwidth_mhz * 1e6);
                }
            } catch (const std::exception& e) {
                errors.push_back({"pulse.bandwidth_mhz", e.what()});
            }
        } else {
            errors.push_back(
                {"pulse.duration_ns", "missing pulse width: set pulse.duration_ns or pulse.bandwidth_mhz"});
        }

        if (duration_s > 0.0) {
            const double delta = 2.0 * constants::pi * detuning_mhz * 1e6 * duration_s;
            cfg.pulse = shape == PulseShape::Square
                            ? PulseSpec::square(duration_s, delta, chirp)
                            : PulseSpec::gaussian(duration_s, delta, chirp, window);
            cfg.resolved["pulse.duration_ns"] = detail::KeyReader::format_fallback(duration_s * 1e9);
            cfg.resolved["pulse.beta"] = detail::KeyReader::format_fallback(chirp);
            cfg.resolved["pulse.delta"] = detail::KeyReader::format_fallback(delta);
        }
    }

    // --- kernel ---
    if (needs_kernel) {
        const double s = r.number("kernel.s", 6.0);
        if (s != 3.0 && s != 6.0)
            errors.push_back({"kernel.s", "only s = 3 and s = 6 are supported"});
        else
            cfg.kernel.s = static_cast<int>(s);
        cfg.kernel.c_au = r.number("kernel.c_au", 0.0);
        const std::string ang = r.raw("kernel.angular", "isotropic");
        if (ang == "aligned")
            cfg.kernel.angular = AngularForm::AlignedDipole;
        else if (ang != "isotropic")
            errors.push_back({"kernel.angular", "must be 'isotropic' or 'aligned'"});
        if (cfg.kernel.angular == AngularForm::AlignedDipole && cfg.kernel.s != 3)
            errors.push_back({"kernel.angular", "aligned dipoles require kernel.s = 3"});
    }

    // --- per-command requirements ---
    const bool needs_rho = command == Command::Pexc || command == Command::Saturation ||
                           command == Command::DensitySweep || command == Command::McValidate;
    if (needs_rho) {
        if (!r.has("rho_cm3"))
            errors.push_back({"rho_cm3", "required for " + std::string(to_string(command))});
        cfg.rho_cm3 = r.number("rho_cm3", 0.0);
        if (r.has("rho_cm3") && !(cfg.rho_cm3 > 0.0))
            errors.push_back({"rho_cm3", "must be positive"});
    }
    const bool needs_nonzero_kernel = command == Command::Pexc || command == Command::Saturation ||
                                      command == Command::DensitySweep ||
                                      command == Command::Correlation ||
                                      command == Command::McValidate;
    if (needs_nonzero_kernel && needs_kernel && cfg.kernel.c_au == 0.0 && !r.has("kernel.c_au"))
        errors.push_back({"kernel.c_au", "required for " + std::string(to_string(command))});

    if (command == Command::Pexc) {
        cfg.sweep_i_max = r.number("sweep.i_max", 0.3);
        cfg.sweep_i_points = r.count("sweep.i_points", 301);
        if (!(cfg.sweep_i_max > 0.0)) errors.push_back({"sweep.i_max", "must be positive"});
        if (cfg.sweep_i_points < 2) errors.push_back({"sweep.i_points", "need at least 2 points"});
    }
    if (command == Command::DensitySweep) {
        cfg.sweep_rho_points = r.count("sweep.rho_points", 201);
        if (cfg.sweep_rho_points < 2)
            errors.push_back({"sweep.rho_points", "need at least 2 points"});
    }
    if (command == Command::Correlation) {
        const std::string fam = r.raw("corr.family", "single");
        if (fam == "single")
            cfg.corr_family = CorrelationFamily::Single;
        else if (fam == "chirp-family")
            cfg.corr_family = CorrelationFamily::ChirpFamily;
        else if (fam == "detuning-family")
            cfg.corr_family = CorrelationFamily::DetuningFamily;
        else
            errors.push_back({"corr.family", "must be single, chirp-family or detuning-family"});
        cfg.corr_base_bandwidth_mhz = r.number("corr.base_bandwidth_mhz", 60.0);
        cfg.corr_bandwidths_mhz = r.list("corr.bandwidths_mhz", "60,80,100,120");
        if (r.has("corr.negative_mhz")) cfg.corr_negative_mhz = r.number("corr.negative_mhz", 0.0);
        cfg.corr_detunings_mhz = r.list("corr.detunings_mhz", "-30,-15,0,15,30");
        cfg.scan_r_min_um = r.number("scan.r_min_um", 0.5);
        cfg.scan_r_max_um = r.number("scan.r_max_um", 20.0);
        cfg.scan_r_points = r.count("scan.r_points", 200);
        if (!(cfg.scan_r_min_um > 0.0 && cfg.scan_r_min_um < cfg.scan_r_max_um))
            errors.push_back({"scan.r_min_um", "need 0 < r_min < r_max"});
        if (cfg.scan_r_points < 2) errors.push_back({"scan.r_points", "need at least 2 points"});
    }
    if (command == Command::Oracle) {
        cfg.oracle_n = static_cast<int>(r.number("oracle.n", 3));
        cfg.oracle_k = r.number("oracle.k", 10.0);
        cfg.oracle_omega = r.number("oracle.omega", 1.0);
        cfg.oracle_points = r.count("oracle.points", 101);
        cfg.oracle_tol = r.number("oracle.tol", 1e-10);
        if (cfg.oracle_n < 1 || cfg.oracle_n > 14)
            errors.push_back({"oracle.n", "need 1 <= N <= 14"});
        if (cfg.oracle_points < 2) errors.push_back({"oracle.points", "need at least 2 points"});
    }
    if (command == Command::McValidate) {
        cfg.mc_samples = r.count("mc.samples", 200);
        cfg.mc_atoms = r.count("mc.atoms", 500);
        const std::string geo = r.raw("mc.geometry", "sphere");
        if (geo == "box")
            cfg.mc_geometry = Geometry::Box;
        else if (geo != "sphere")
            errors.push_back({"mc.geometry", "must be 'box' or 'sphere'"});
        if (cfg.mc_samples < 2) errors.push_back({"mc.samples", "need at least 2 samples"});
        if (cfg.mc_atoms < 2) errors.push_back({"mc.atoms", "need at least 2 atoms"});
    }

    // --- run controls ---
    cfg.seed = static_cast<std::uint64_t>(r.number("seed", 12345));
    cfg.workers = static_cast<unsigned>(r.count("workers", 1));
    if (cfg.workers < 1) cfg.workers = 1;
    cfg.out = r.raw("out", "");
    cfg.format = r.raw("format", "csv");
    if (cfg.format != "csv" && cfg.format != "json")
        errors.push_back({"format", "must be 'csv' or 'json'"});

    // --- unknown keys ---
    for (const auto& [k, v] : kv.items())
        if (!r.used.count(k)) errors.push_back({k, "unknown key"});

    if (!errors.empty()) return errors;
    return cfg;
}

/// Hard-coded parameter sets for the reference pipelines.
inline const std::map<std::string, std::pair<Command, KeyValues>>& presets() {
    static const auto table = [] {
        std::map<std::string, std::pair<Command, KeyValues>> t;
        auto mk = [](std::initializer_list<std::pair<std::string, std::string>> items) {
            KeyValues kv;
            for (const auto& [k, v] : items) kv.set(k, v);
            return kv;
        };
        // saturation of the excitation fraction vs laser intensity
        // (C6 = 2.64e22 * 7/60 au attractive, rho = 6.5e10 cm^-3, 120 MHz)
        t["fig1"] = {Command::Pexc,
                     mk({{"pulse.shape", "gaussian"},
                         {"pulse.bandwidth_mhz", "120"},
                         {"kernel.s", "6"},
                         {"kernel.c_au", "-3.08e21"},
                         {"rho_cm3", "6.5e10"},
                         {"sweep.i_max", "0.3"},
                         {"sweep.i_points", "301"}})};
        // density dependence of the saturated fraction, same laser/interaction
        t["fig2"] = {Command::DensitySweep,
                     mk({{"pulse.shape", "gaussian"},
                         {"pulse.bandwidth_mhz", "120"},
                         {"kernel.s", "6"},
                         {"kernel.c_au", "-3.08e21"},
                         {"rho_cm3", "6.5e10"},
                         {"sweep.rho_points", "201"}})};
        // correlation function, chirp-broadened bandwidth family
        t["fig3a"] = {Command::Correlation,
                      mk({{"pulse.shape", "gaussian"},
                          {"pulse.bandwidth_mhz", "60"},
                          {"kernel.s", "6"},
                          {"kernel.c_au", "-3.08e21"},
                          {"corr.family", "chirp-family"},
                          {"corr.base_bandwidth_mhz", "60"},
                          {"corr.bandwidths_mhz", "60,80,100,120"},
                          {"corr.negative_mhz", "120"}})};
        // correlation function, detuning family at fixed 60 MHz bandwidth
        t["fig3b"] = {Command::Correlation,
                      mk({{"pulse.shape", "gaussian"},
                          {"pulse.bandwidth_mhz", "60"},
                          {"kernel.s", "6"},
                          {"kernel.c_au", "-3.08e21"},
                          {"corr.family", "detuning-family"},
                          {"corr.detunings_mhz", "-30,-15,0,15,30"}})};
        t["table1"] = {Command::GammaTable, mk({})};
        // two-step excitation experiment parameters: C6 = 4.97e22 au,
        // T = 37.5 ns, rho = 2e9 cm^-3
        t["singer-params"] = {Command::Saturation,
                              mk({{"pulse.shape", "gaussian"},
                                  {"pulse.duration_ns", "37.5"},
                                  {"kernel.s", "6"},
                                  {"kernel.c_au", "4.97e22"},
                                  {"rho_cm3", "2e9"}})};
        return t;
    }();
    return table;
}

inline std::string preset_names() {
    std::string s;
    for (const auto& [name, _] : presets()) {
        if (!s.empty()) s += ", ";
        s += name;
    }
    return s;
}

}  // namespace rydex

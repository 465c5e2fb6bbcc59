#pragma once

#include <array>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rydex/correlation.hpp"
#include "rydex/expansion.hpp"
#include "rydex/io.hpp"
#include "rydex/oracle.hpp"
#include "rydex/saturation.hpp"
#include "rydex/scenario.hpp"

namespace rydex {

namespace detail {

inline nlohmann::ordered_json config_json(const ScenarioConfig& cfg) {
    nlohmann::ordered_json j;
    for (const auto& [k, v] : cfg.resolved) j[k] = v;
    return j;
}

struct GammaRow {
    const char* pulse;
    const char* kernel;
    double gamma;
};

inline std::vector<GammaRow> gamma_table(const ExpansionOptions& opt) {
    std::vector<GammaRow> rows;
    const InteractionKernel iso3 = InteractionKernel::dipole(1.0);
    const InteractionKernel ali3 = InteractionKernel::aligned_dipole(1.0);
    const InteractionKernel iso6 = InteractionKernel::vdw(1.0);
    for (PulseShape shape : {PulseShape::Gaussian, PulseShape::Square}) {
        const char* pname = shape == PulseShape::Gaussian ? "gaussian" : "square";
        rows.push_back({pname, "C3/R^3", gamma_constant(shape, iso3, opt)});
        rows.push_back({pname, "U3/R^3(1-3cos^2)", gamma_constant(shape, ali3, opt)});
        rows.push_back({pname, "C6/R^6", gamma_constant(shape, iso6, opt)});
    }
    return rows;
}

inline void run_gamma_table(const ScenarioConfig& cfg, std::ostream& os) {
    ExpansionOptions opt;
    opt.workers = cfg.workers;
    const auto rows = gamma_table(opt);
    if (cfg.format == "json") {
        nlohmann::ordered_json j;
        j["tool"] = {{"name", "rydex"}, {"version", RYDEX_VERSION}};
        j["config"] = config_json(cfg);
        j["results"] = nlohmann::json::array();
        for (const auto& r : rows)
            j["results"].push_back({{"pulse", r.pulse}, {"kernel", r.kernel}, {"gamma", r.gamma}});
        os << j.dump(2) << "\n";
        return;
    }
    write_csv_header(os, cfg.resolved);
    os << "pulse,kernel,gamma\n";
    for (const auto& r : rows)
        os << r.pulse << "," << r.kernel << "," << format_g(r.gamma) << "\n";
}

inline void run_pexc(const ScenarioConfig& cfg, std::ostream& os) {
    ExpansionOptions opt;
    opt.workers = cfg.workers;
    const double gamma = cfg.kernel.c_au == 0.0
                             ? 0.0
                             : gamma_constant(cfg.pulse.shape, cfg.kernel, opt);
    const double nd = cfg.kernel.c_au == 0.0
                          ? 1.0
                          : suppression_factor(gamma, cfg.rho_cm3, cfg.kernel,
                                               cfg.pulse.duration_s);
    // truncated series trustworthy while the quadratic term stays below half
    // the linear one: I/I_sat < 6 / (pi^2 N_d)
    const double series_trust_limit = 6.0 / (constants::pi * constants::pi * nd);
    std::vector<std::array<double, 4>> rows(cfg.sweep_i_points);
    for (std::size_t i = 0; i < cfg.sweep_i_points; ++i) {
        const double x = cfg.sweep_i_max * static_cast<double>(i) /
                         static_cast<double>(cfg.sweep_i_points - 1);
        const double p_model = excitation_curve(nd, x);
        const double p_series =
            pexc_series(gamma, cfg.kernel, cfg.rho_cm3, cfg.pulse.duration_s, x).value;
        const double p_free = excitation_curve(1.0, x);
        rows[i] = {x, p_model, p_series, p_free};
    }
    if (cfg.format == "json") {
        nlohmann::ordered_json j;
        j["tool"] = {{"name", "rydex"}, {"version", RYDEX_VERSION}};
        j["config"] = config_json(cfg);
        j["gamma"] = gamma;
        j["n_d"] = nd;
        j["p0"] = 1.0 / nd;
        j["series_trust_limit"] = series_trust_limit;
        auto& res = j["results"] = nlohmann::json::array();
        for (const auto& row : rows)
            res.push_back({{"i_over_isat", row[0]},
                           {"p_model", row[1]},
                           {"p_series", row[2]},
                           {"p_noninteracting", row[3]}});
        os << j.dump(2) << "\n";
        return;
    }
    write_csv_header(os, cfg.resolved);
    os << "# gamma = " << format_g(gamma) << "\n";
    os << "# n_d = " << format_g(nd) << "\n";
    os << "# p_series trustworthy below i_over_isat = " << format_g(series_trust_limit) << "\n";
    os << "i_over_isat,p_model,p_series,p_noninteracting\n";
    for (const auto& row : rows)
        os << format_g(row[0]) << "," << format_g(row[1]) << "," << format_g(row[2]) << ","
           << format_g(row[3]) << "\n";
}

inline void run_saturation(const ScenarioConfig& cfg, std::ostream& os) {
    ExpansionOptions opt;
    opt.workers = cfg.workers;
    const double gamma = gamma_constant(cfg.pulse.shape, cfg.kernel, opt);
    const SaturationModel m =
        SaturationModel::compute(gamma, cfg.rho_cm3, cfg.kernel, cfg.pulse.duration_s);
    if (cfg.format == "json") {
        nlohmann::ordered_json j;
        j["tool"] = {{"name", "rydex"}, {"version", RYDEX_VERSION}};
        j["config"] = config_json(cfg);
        j["results"] = {{"gamma", m.gamma},       {"n_d", m.n_d},
                        {"p0", m.p0},             {"p0_truncated", m.p0_raw},
                        {"i0_over_isat", m.i0_over_isat}};
        os << j.dump(2) << "\n";
        return;
    }
    write_csv_header(os, cfg.resolved);
    os << "gamma,n_d,p0,p0_truncated,i0_over_isat\n";
    os << format_g(m.gamma) << "," << format_g(m.n_d) << "," << format_g(m.p0) << ","
       << format_g(m.p0_raw) << "," << format_g(m.i0_over_isat) << "\n";
}

inline void run_density_sweep(const ScenarioConfig& cfg, std::ostream& os) {
    ExpansionOptions opt;
    opt.workers = cfg.workers;
    const double gamma = gamma_constant(cfg.pulse.shape, cfg.kernel, opt);
    std::vector<double> rho(cfg.sweep_rho_points);
    for (std::size_t i = 0; i < rho.size(); ++i)
        rho[i] = cfg.rho_cm3 * static_cast<double>(i) / static_cast<double>(rho.size() - 1);
    const std::vector<double> p0 = density_sweep(gamma, cfg.kernel, cfg.pulse.duration_s, rho);
    if (cfg.format == "json") {
        nlohmann::ordered_json j;
        j["tool"] = {{"name", "rydex"}, {"version", RYDEX_VERSION}};
        j["config"] = config_json(cfg);
        j["gamma"] = gamma;
        auto& res = j["results"] = nlohmann::json::array();
        for (std::size_t i = 0; i < rho.size(); ++i)
            res.push_back({{"rho_cm3", rho[i]}, {"p0", p0[i]}});
        os << j.dump(2) << "\n";
        return;
    }
    write_csv_header(os, cfg.resolved);
    os << "# gamma = " << format_g(gamma) << "\n";
    os << "rho_cm3,p0\n";
    for (std::size_t i = 0; i < rho.size(); ++i)
        os << format_g(rho[i]) << "," << format_g(p0[i]) << "\n";
}

inline void run_correlation(const ScenarioConfig& cfg, std::ostream& os) {
    CorrelationOptions opt;
    opt.workers = cfg.workers;
    const auto grid = [&] {
        std::vector<double> g(cfg.scan_r_points);
        const double l0 = std::log(cfg.scan_r_min_um), l1 = std::log(cfg.scan_r_max_um);
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] = std::exp(l0 + (l1 - l0) * static_cast<double>(i) /
                                     static_cast<double>(g.size() - 1));
        return g;
    }();

    struct Labelled {
        std::string label;
        CorrelationCurve curve;
    };
    std::vector<Labelled> curves;
    const double tau = cfg.pulse.tau_end;

    if (cfg.corr_family == CorrelationFamily::Single) {
        Pulse p(cfg.pulse);
        curves.push_back({"single", correlation_scan(p, cfg.kernel, grid, tau, opt)});
    } else if (cfg.corr_family == CorrelationFamily::ChirpFamily) {
        const double base_hz = cfg.corr_base_bandwidth_mhz * 1e6;
        for (double mhz : cfg.corr_bandwidths_mhz) {
            PulseSpec spec = chirped_from_base(PulseShape::Gaussian, mhz * 1e6, base_hz, +1);
            Pulse p(spec);
            curves.push_back({format_g(mhz) + "MHz",
                              correlation_scan(p, cfg.kernel, grid, spec.tau_end, opt)});
        }
        if (cfg.corr_negative_mhz) {
            PulseSpec spec =
                chirped_from_base(PulseShape::Gaussian, *cfg.corr_negative_mhz * 1e6, base_hz, -1);
            Pulse p(spec);
            curves.push_back({format_g(*cfg.corr_negative_mhz) + "MHz_negchirp",
                              correlation_scan(p, cfg.kernel, grid, spec.tau_end, opt)});
        }
    } else {
        for (double mhz : cfg.corr_detunings_mhz) {
            PulseSpec spec = cfg.pulse;
            spec.delta = 2.0 * constants::pi * mhz * 1e6 * spec.duration_s;
            Pulse p(spec);
            curves.push_back({format_g(mhz) + "MHz",
                              correlation_scan(p, cfg.kernel, grid, spec.tau_end, opt)});
        }
    }

    if (cfg.format == "json") {
        nlohmann::ordered_json j;
        j["tool"] = {{"name", "rydex"}, {"version", RYDEX_VERSION}};
        j["config"] = config_json(cfg);
        auto& res = j["results"] = nlohmann::json::array();
        for (const auto& lc : curves) {
            nlohmann::ordered_json c;
            c["label"] = lc.label;
            c["r_um"] = lc.curve.r_um;
            c["k"] = lc.curve.k;
            c["p"] = lc.curve.p;
            res.push_back(c);
        }
        os << j.dump(2) << "\n";
        return;
    }
    write_csv_header(os, cfg.resolved);
    os << "curve,r_um,k,p\n";
    for (const auto& lc : curves)
        for (std::size_t i = 0; i < lc.curve.r_um.size(); ++i)
            os << lc.label << "," << format_g(lc.curve.r_um[i]) << "," << format_g(lc.curve.k[i])
               << "," << format_g(lc.curve.p[i]) << "\n";
}

inline void run_oracle(const ScenarioConfig& cfg, std::ostream& os) {
    Pulse p(cfg.pulse);
    OracleOptions opt;
    opt.tol = cfg.oracle_tol;
    const auto couplings = uniform_couplings(cfg.oracle_n, cfg.oracle_k);
    std::vector<double> taus(cfg.oracle_points);
    for (std::size_t i = 0; i < taus.size(); ++i)
        taus[i] = cfg.pulse.tau0 + (cfg.pulse.tau_end - cfg.pulse.tau0) * static_cast<double>(i) /
                                       static_cast<double>(taus.size() - 1);
    const auto states = propagate(cfg.oracle_n, couplings, p, cfg.oracle_omega, taus, opt);

    if (cfg.format == "json") {
        nlohmann::ordered_json j;
        j["tool"] = {{"name", "rydex"}, {"version", RYDEX_VERSION}};
        j["config"] = config_json(cfg);
        auto& res = j["results"] = nlohmann::json::array();
        for (const auto& st : states) {
            const Observables obs = observables(st);
            nlohmann::ordered_json row;
            row["tau"] = st.tau;
            row["p"] = obs.excitation;
            nlohmann::json pairs = nlohmann::json::array();
            for (int a = 0; a < st.n_atoms; ++a)
                for (int b = a + 1; b < st.n_atoms; ++b)
                    pairs.push_back(obs.pair[static_cast<std::size_t>(a) * st.n_atoms + b]);
            row["pair"] = pairs;
            res.push_back(row);
        }
        os << j.dump(2) << "\n";
        return;
    }
    write_csv_header(os, cfg.resolved);
    os << "tau";
    for (int i = 0; i < cfg.oracle_n; ++i) os << ",p_" << (i + 1);
    for (int a = 0; a < cfg.oracle_n; ++a)
        for (int b = a + 1; b < cfg.oracle_n; ++b) os << ",nn_" << (a + 1) << "_" << (b + 1);
    os << "\n";
    for (const auto& st : states) {
        const Observables obs = observables(st);
        os << format_g(st.tau);
        for (double v : obs.excitation) os << "," << format_g(v);
        for (int a = 0; a < st.n_atoms; ++a)
            for (int b = a + 1; b < st.n_atoms; ++b)
                os << "," << format_g(obs.pair[static_cast<std::size_t>(a) * st.n_atoms + b]);
        os << "\n";
    }
}

inline void run_mc_validate(const ScenarioConfig& cfg, std::ostream& os) {
    Pulse p(cfg.pulse);
    ExpansionOptions opt;
    opt.workers = 1;
    opt.asymptotic_threshold = 3e4;  // documented MC speed/accuracy tradeoff
    McOptions mc;
    mc.geometry = cfg.mc_geometry;
    mc.n_atoms = cfg.mc_atoms;
    mc.workers = cfg.workers;
    const McResult r = i4_montecarlo(p, cfg.kernel, cfg.rho_cm3, cfg.mc_samples, cfg.seed, mc, opt);
    const double analytic = i4_averaged(p, cfg.kernel, cfg.rho_cm3, p.tau_end(), opt);
    const double z = r.std_error > 0.0 ? (r.mean - analytic) / r.std_error : 0.0;
    const double c2 = second_order(p, p.tau_end());
    const double v41 = i41(p, p.tau_end(), opt);
    std::optional<double> gamma;
    if (p.spec().resonant() && cfg.kernel.c_au != 0.0)
        gamma = gamma_constant(p.shape(), cfg.kernel, opt);

    if (cfg.format == "json") {
        nlohmann::ordered_json j;
        j["tool"] = {{"name", "rydex"}, {"version", RYDEX_VERSION}};
        j["config"] = config_json(cfg);
        nlohmann::ordered_json res;
        res["c2"] = c2;
        res["i41"] = v41;
        res["i4_mc_mean"] = r.mean;
        res["i4_mc_std_error"] = r.std_error;
        res["i4_averaged"] = analytic;
        if (gamma) res["gamma"] = *gamma;
        res["z_score"] = z;
        res["n_samples"] = r.n_samples;
        res["n_atoms"] = r.n_atoms;
        j["results"] = res;
        os << j.dump(2) << "\n";
        return;
    }
    write_csv_header(os, cfg.resolved);
    os << "c2,i41,i4_mc_mean,i4_mc_std_error,i4_averaged,gamma,z_score,n_samples,n_atoms\n";
    os << format_g(c2) << "," << format_g(v41) << "," << format_g(r.mean) << ","
       << format_g(r.std_error) << "," << format_g(analytic) << ","
       << (gamma ? format_g(*gamma) : "") << "," << format_g(z) << "," << r.n_samples << ","
       << r.n_atoms << "\n";
}

}  // namespace detail

/// Executes a resolved scenario, writing one artifact file. Returns 0 on
/// success, 3 on a numerical failure (message on stderr).
inline int run_scenario(const ScenarioConfig& cfg, std::ostream& diag = std::cerr) {
    try {
        std::ofstream file(cfg.output_path(), std::ios::binary);
        if (!file) {
            diag << "rydex: cannot open output file " << cfg.output_path() << "\n";
            return 3;
        }
        switch (cfg.command) {
            case Command::GammaTable: detail::run_gamma_table(cfg, file); break;
            case Command::Pexc: detail::run_pexc(cfg, file); break;
            case Command::Correlation: detail::run_correlation(cfg, file); break;
            case Command::Saturation: detail::run_saturation(cfg, file); break;
            case Command::DensitySweep: detail::run_density_sweep(cfg, file); break;
            case Command::Oracle: detail::run_oracle(cfg, file); break;
            case Command::McValidate: detail::run_mc_validate(cfg, file); break;
        }
        return 0;
    } catch (const std::exception& e) {
        diag << "rydex: " << to_string(cfg.command) << " failed: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace rydex

// Command-line front end: scenario configuration, validation, execution.

#include <iostream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "rydex/runner.hpp"
#include "rydex/scenario.hpp"
#include "rydex/version.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::string preset;
    std::vector<std::string> sets;
    std::string out;
    std::string format;
    std::string workers;
    std::string seed;
    bool check_only = false;
};

int run_command(rydex::Command command, const CliOptions& cli) {
    using namespace rydex;

    KeyValues kv;
    if (!cli.config_path.empty()) {
        try {
            kv = KeyValues::parse_file(cli.config_path);
        } catch (const std::exception& e) {
            std::cerr << "rydex: config error: " << e.what() << "\n";
            return 2;
        }
    }
    if (!cli.preset.empty()) {
        const auto& table = presets();
        auto it = table.find(cli.preset);
        if (it == table.end()) {
            std::cerr << "rydex: unknown preset '" << cli.preset
                      << "'; available presets: " << preset_names() << "\n";
            return 2;
        }
        if (it->second.first != command) {
            std::cerr << "rydex: preset '" << cli.preset << "' belongs to command '"
                      << to_string(it->second.first) << "'\n";
            return 2;
        }
        kv.merge(it->second.second);
    }
    for (const std::string& s : cli.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            std::cerr << "rydex: --set expects key=value, got '" << s << "'\n";
            return 2;
        }
        kv.set(KeyValues::trim(s.substr(0, eq)), KeyValues::trim(s.substr(eq + 1)));
    }
    if (!cli.out.empty()) kv.set("out", cli.out);
    if (!cli.format.empty()) kv.set("format", cli.format);
    if (!cli.workers.empty()) kv.set("workers", cli.workers);
    if (!cli.seed.empty()) kv.set("seed", cli.seed);

    auto resolved = resolve_scenario(command, kv);
    if (std::holds_alternative<std::vector<ConfigError>>(resolved)) {
        for (const auto& e : std::get<std::vector<ConfigError>>(resolved))
            std::cerr << "rydex: config error: " << e.field << ": " << e.message << "\n";
        return 2;
    }
    const ScenarioConfig& cfg = std::get<ScenarioConfig>(resolved);
    if (cli.check_only) {
        for (const auto& [k, v] : cfg.resolved) std::cout << k << " = " << v << "\n";
        return 0;
    }
    const int rc = run_scenario(cfg);
    if (rc == 0) std::cout << "wrote " << cfg.output_path() << "\n";
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rydberg excitation dynamics: fourth-order expansion, pair correlations, "
                 "blockade saturation, exact small-N propagation"};
    app.set_version_flag("--version", std::string("rydex ") + RYDEX_VERSION);
    app.require_subcommand(1);

    CliOptions cli;
    int exit_code = 0;
    for (const char* name :
         {"gamma-table", "pexc", "correlation", "saturation", "density-sweep", "oracle",
          "mc-validate"}) {
        auto* sub = app.add_subcommand(name, "");
        sub->add_option("--config", cli.config_path, "key = value configuration file");
        sub->add_option("--preset", cli.preset, "named parameter set");
        sub->add_option("--set", cli.sets, "override: key=value (repeatable)");
        sub->add_option("--out", cli.out, "output path");
        sub->add_option("--format", cli.format, "csv or json");
        sub->add_option("--workers", cli.workers, "worker thread count");
        sub->add_option("--seed", cli.seed, "random seed");
        sub->add_flag("--check", cli.check_only, "validate and print the resolved config only");
        sub->callback([&, name] {
            exit_code = run_command(*rydex::command_from_string(name), cli);
        });
    }

    CLI11_PARSE(app, argc, argv);
    return exit_code;
}

// rowmarket: expected extra benefit per VOT level under right-of-way
// mechanisms, for the honest, abandonment and dishonest scenarios.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "rowmarket/cli.hpp"

namespace {

std::string flag_name(std::string_view key) {
    std::string name(key);
    for (char& c : name) {
        if (c == '_') {
            c = '-';
        }
    }
    return "--" + name;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace rowmarket::cli;

    CLI::App app{"Expected extra benefit per value-of-time level under intersection right-of-way mechanisms"};
    app.set_version_flag("--version", std::string(kToolVersion));

    std::string command;
    app.add_option("command", command, "honest, abandonment, dishonest or all")
        ->required()
        ->check(CLI::IsMember({"honest", "abandonment", "dishonest", "all"}));
    std::string config_path;
    app.add_option("--config", config_path, "flat key = value config file");

    // Every config key doubles as a flag, taken as text and validated with the file values.
    std::map<std::string, std::string> flag_values;
    for (const auto& key : kKeys) {
        app.add_option(flag_name(key.name), flag_values[std::string(key.name)], std::string(key.help));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        const ValueMap file = config_path.empty() ? ValueMap{} : parse_config_file(config_path);
        ValueMap flags;
        for (const auto& key : kKeys) {
            const std::string name(key.name);
            if (app.count(flag_name(key.name)) > 0) {
                flags[name] = flag_values[name];
            }
        }
        const RunConfig cfg = resolve_config(file, flags);
        return run_command(command, cfg, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "rowmarket: " << e.what() << '\n';
        return kConfigError;
    }
}

// oblimit <coeffs|verify|simulate|limit-study> --config <path> [--out <dir>]

#include <CLI11.hpp>

#include "oblimit/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Compressible-to-Oberbeck-Boussinesq limit toolkit"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    for (const char* name : {"coeffs", "verify", "simulate", "limit-study"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "INI configuration file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides [cli] out)");
    }
    CLI11_PARSE(app, argc, argv);
    return oblimit::commands::run(app.get_subcommands().front()->get_name(), config_path, out_dir);
}

#include "fpol/runner.hpp"
#include "fpol/version.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <utility>

int main(int argc, char** argv) {
    CLI::App app{"Linear-response simulator for a phase-modulated multimode cavity "
                 "coupled to an ultracold Bose gas"};
    app.set_version_flag("--version", FPOL_VERSION);
    app.require_subcommand(1);

    fpol::RunOptions options;
    std::string entry_text;
    std::string renormalize_text;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", options.config_path, "Path to the run configuration")
            ->required();
        cmd->add_option("--out", options.out_dir, "Output directory (default: current)");
        cmd->add_option("--threads", options.threads, "Worker threads for grid evaluation")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--entry", entry_text,
                        "Spectral entry i,j (off-diagonal column for sweeps, diagonal "
                        "entry for crossing)");
        cmd->add_option("--renormalize", renormalize_text,
                        "Override [drive] renormalize (true|false)")
            ->check(CLI::IsMember({"true", "false"}));
    };

    const char* names[] = {"spectrum", "sweep-lambda", "sweep-bm",      "weights",  "profile",
                           "poles",    "lambda-c",     "phase-diagram", "crossing", "overlaps"};
    const char* descriptions[] = {
        "Spectral function A(omega) at fixed coupling",
        "A(omega) over a lambda^2/lambda_c^2 sweep",
        "A(omega) over a modulation-depth sweep with lambda re-solved per point",
        "Mode-weight decomposition at (omega_eval, lambda)",
        "Real-space intensity profile of the polariton at (omega_eval, lambda)",
        "Quasienergy poles of the Green's function",
        "Critical-coupling curve over modulation depth (bare and renormalized)",
        "Leading-instability map over (b_m, epsilon)",
        "Avoided-crossing location and effective coupling extraction",
        "Cavity-atom overlap matrix elements",
    };
    for (std::size_t i = 0; i < std::size(names); ++i)
        add_common(app.add_subcommand(names[i], descriptions[i]));

    CLI11_PARSE(app, argc, argv);

    if (!entry_text.empty()) {
        const auto comma = entry_text.find(',');
        try {
            if (comma == std::string::npos) {
                const int e = std::stoi(entry_text);
                options.entry = std::make_pair(e, e);
            } else {
                options.entry = std::make_pair(std::stoi(entry_text.substr(0, comma)),
                                               std::stoi(entry_text.substr(comma + 1)));
            }
        } catch (const std::exception&) {
            std::fprintf(stderr, "config error: --entry expects i or i,j\n");
            return 1;
        }
    }
    if (!renormalize_text.empty())
        options.renormalize = renormalize_text == "true";

    return fpol::run_subcommand(app.get_subcommands().front()->get_name(), options);
}

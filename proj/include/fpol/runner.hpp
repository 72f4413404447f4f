#ifndef FPOL_RUNNER_HPP
#define FPOL_RUNNER_HPP

#include <optional>
#include <string>
#include <utility>

namespace fpol {

struct RunOptions {
    std::string config_path;
    std::string out_dir = ".";
    int threads = 1;
    std::optional<std::pair<int, int>> entry; // extra spectral entry (i, j)
    std::optional<bool> renormalize;          // overrides [drive] renormalize
};

// Executes one CLI subcommand. Returns the process exit code:
// 0 success, 1 config error, 2 numerical failure (operation named on stderr).
int run_subcommand(const std::string& name, const RunOptions& options);

} // namespace fpol

#endif

#include "fpol/config.hpp"
#include "fpol/output.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kReferenceConfig = R"([cavity]
delta0 = 0.8
omega_t = 100.0
kappa = 0.02
n_modes = 4

[drive]
b_m = 0.9
epsilon = 0.19

[medium]
waist_ratio = 1000

[coupling]
lambda = 0.2

[sweep]
omega_min = 0.0
omega_max = 1.0
omega_points = 51

[output]
prefix = ref
)";

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

struct CliRun {
    int exit_code;
    std::string stdout_text;
    std::string stderr_text;
};

CliRun run_cli(const std::string& args, const fs::path& dir) {
    const fs::path out = dir / "stdout.txt";
    const fs::path err = dir / "stderr.txt";
    const std::string command = std::string(FPOL_CLI_PATH) + " " + args + " > " + out.string()
                                + " 2> " + err.string();
    const int status = std::system(command.c_str());
    CliRun run;
    run.exit_code = WEXITSTATUS(status);
    run.stdout_text = slurp(out);
    run.stderr_text = slurp(err);
    return run;
}

fs::path make_workdir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("fpol_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    const fs::path path = dir / "run.cfg";
    std::ofstream out(path);
    out << text;
    return path;
}

} // namespace

TEST_CASE("parse_config_text applies defaults and validates") {
    const fpol::RunConfig cfg = fpol::parse_config_text(kReferenceConfig, "inline");
    CHECK(cfg.spec.delta0 == 0.8);
    CHECK(cfg.spec.geom.n_cavity_modes == 4);
    CHECK(cfg.spec.geom.delta == 1000.0);
    CHECK(cfg.spec.eta_atom == 1e-6); // default recorded
    CHECK(cfg.lambda.has_value());
    CHECK_FALSE(cfg.lambda_ratio_sq.has_value());
    CHECK(cfg.prefix == "ref");
    const std::string resolved = cfg.resolved_text();
    CHECK(resolved.find("eta_atom = 1e-06") != std::string::npos);
    CHECK(cfg.config_hash().size() == 16);

    CHECK_THROWS_WITH_AS(
        fpol::parse_config_text("[cavity]\nkappa = -0.5\n", "inline"),
        doctest::Contains("kappa"), fpol::ConfigError);
    CHECK_THROWS_WITH_AS(
        fpol::parse_config_text("[cavity]\nfoo = 1\n", "inline"),
        doctest::Contains("unknown key 'foo'"), fpol::ConfigError);
    CHECK_THROWS_WITH_AS(
        fpol::parse_config_text("[cavity]\ndelta0 = 0.8\n[coupling]\nlambda = 0.1\nlambda_ratio_sq = 0.5\n",
                                "inline"),
        doctest::Contains("not both"), fpol::ConfigError);
    CHECK_THROWS_WITH_AS(fpol::parse_config_text("delta0 = 0.8\n", "inline"),
                         doctest::Contains("before any section"), fpol::ConfigError);
    // Line numbers appear in parse errors.
    CHECK_THROWS_WITH_AS(fpol::parse_config_text("[cavity]\n\nbogus\n", "inline"),
                         doctest::Contains(":3:"), fpol::ConfigError);
}

TEST_CASE("format_double round trip") {
    for (double value : {0.1, 1e-6, 0.42, 3.141592653589793, 1e300, -7.25e-12}) {
        const std::string text = fpol::format_double(value);
        CHECK(std::stod(text) == value);
    }
    CHECK(fpol::format_double(std::nan("")) == "nan");
}

TEST_CASE("cli poles at lambda = 0") {
    const fs::path dir = make_workdir("poles");
    const std::string config = R"([cavity]
delta0 = 0.8
kappa = 0.02
n_modes = 3
[drive]
b_m = 0.9
epsilon = 0.19
[medium]
waist_ratio = 1000
[coupling]
lambda = 0.0
[output]
prefix = zero
)";
    const fs::path cfg = write_config(dir, config);
    const CliRun run = run_cli("poles --config " + cfg.string() + " --out " + dir.string(), dir);
    CHECK(run.exit_code == 0);
    const std::string json = slurp(dir / "zero_poles.json");
    CHECK(json.find("\"poles\"") != std::string::npos);
    // Bare poles at +-(0.8 - 0.19 j) - i kappa.
    CHECK(json.find("0.61") != std::string::npos);
    CHECK(json.find("-0.02") != std::string::npos);
    CHECK(fs::exists(dir / "zero.resolved.cfg"));
}

TEST_CASE("cli spectrum output is byte-identical across runs") {
    const fs::path dir1 = make_workdir("det1");
    const fs::path dir2 = make_workdir("det2");
    for (const auto& dir : {dir1, dir2}) {
        const fs::path cfg = write_config(dir, kReferenceConfig);
        const CliRun run =
            run_cli("spectrum --config " + cfg.string() + " --out " + dir.string() + " --threads 3",
                    dir);
        REQUIRE(run.exit_code == 0);
    }
    CHECK(slurp(dir1 / "ref_spectrum.csv") == slurp(dir2 / "ref_spectrum.csv"));
    const std::string csv = slurp(dir1 / "ref_spectrum.csv");
    CHECK(csv.rfind("# config=", 0) == 0);
    CHECK(csv.find("omega,a00,a11,a22,a33,stable") != std::string::npos);
}

TEST_CASE("cli config errors exit with code 1") {
    const fs::path dir = make_workdir("badcfg");
    const fs::path cfg = write_config(dir, "[cavity]\nkappa = -1\n");
    const CliRun run = run_cli("spectrum --config " + cfg.string() + " --out " + dir.string(), dir);
    CHECK(run.exit_code == 1);
    CHECK(run.stderr_text.find("kappa") != std::string::npos);

    const CliRun missing =
        run_cli("spectrum --config " + (dir / "nope.cfg").string() + " --out " + dir.string(), dir);
    CHECK(missing.exit_code == 1);
}

TEST_CASE("cli numerical failures exit with code 2") {
    const fs::path dir = make_workdir("numfail");
    // A crossing request in a window with no avoided crossing.
    const std::string config = R"([cavity]
delta0 = 0.8
kappa = 0.02
n_modes = 4
[drive]
b_m = 0.9
epsilon = 0.19
[medium]
waist_ratio = 1000
[sweep]
omega_points = 301
window_min = 0.10
window_max = 0.30
ratio_min = 0.02
ratio_max = 0.08
coarse_points = 7
entry = 3
[output]
prefix = fail
)";
    const fs::path cfg = write_config(dir, config);
    const CliRun run = run_cli("crossing --config " + cfg.string() + " --out " + dir.string(), dir);
    CHECK(run.exit_code == 2);
    CHECK(run.stderr_text.find("extract_effective_coupling") != std::string::npos);
}

TEST_CASE("cli overlaps emits the matrix") {
    const fs::path dir = make_workdir("overlaps");
    const std::string config = R"([cavity]
n_modes = 3
[medium]
waist_ratio = 2.0
n_atom_modes = 2
[output]
prefix = ov
)";
    const fs::path cfg = write_config(dir, config);
    const CliRun run = run_cli("overlaps --config " + cfg.string() + " --out " + dir.string(), dir);
    CHECK(run.exit_code == 0);
    const std::string csv = slurp(dir / "ov_overlaps.csv");
    CHECK(csv.find("j,n,value") != std::string::npos);
    CHECK(csv.find("0,0,0.8888888888888") != std::string::npos);
}

TEST_CASE("cli sweep-lambda emits the spectral map") {
    const fs::path dir = make_workdir("sweep");
    const std::string config = R"([cavity]
delta0 = 0.8
kappa = 0.02
n_modes = 3
[drive]
b_m = 0.9
epsilon = 0.19
[medium]
waist_ratio = 1000
[sweep]
omega_min = 0.0
omega_max = 1.0
omega_points = 21
axis_min = 0.0
axis_max = 0.8
axis_points = 5
[output]
prefix = map
)";
    const fs::path cfg = write_config(dir, config);
    const CliRun run = run_cli("sweep-lambda --config " + cfg.string() + " --out " + dir.string()
                                   + " --threads 2",
                               dir);
    CHECK(run.exit_code == 0);
    const std::string csv = slurp(dir / "map_sweep_lambda.csv");
    CHECK(csv.find("omega,lambda_ratio_sq,a00,a11,a22,stable") != std::string::npos);
    // 21 omega x 5 axis rows plus hash and header lines.
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 21 * 5 + 2);
}

TEST_CASE("cli sweep-bm resolves the coupling per column") {
    const fs::path dir = make_workdir("sweepbm");
    const std::string config = R"([cavity]
delta0 = 0.6
kappa = 0.02
n_modes = 3
[drive]
epsilon = -0.09
renormalize = true
[medium]
waist_ratio = 1000
[coupling]
lambda_ratio_sq = 0.7
[sweep]
omega_min = 0.2
omega_max = 1.2
omega_points = 11
axis_min = 0.0
axis_max = 2.0
axis_points = 3
[output]
prefix = bm
)";
    const fs::path cfg = write_config(dir, config);
    const CliRun run =
        run_cli("sweep-bm --config " + cfg.string() + " --out " + dir.string(), dir);
    CHECK(run.exit_code == 0);
    const std::string csv = slurp(dir / "bm_sweep_bm.csv");
    CHECK(csv.find("omega,b_m,a00,a11,a22,lambda,stable") != std::string::npos);
}

TEST_CASE("cli lambda-c and phase-diagram emit per-point kinds") {
    const fs::path dir = make_workdir("kinds");
    const std::string config = R"([cavity]
delta0 = 0.6
kappa = 0.05
n_modes = 5
[medium]
waist_ratio = 1000
[sweep]
bm_min = 0.0
bm_max = 2.0
bm_points = 3
eps_min = 0.0
eps_max = 0.3
eps_points = 3
[output]
prefix = k
)";
    const fs::path cfg = write_config(dir, config);
    const CliRun lc = run_cli("lambda-c --config " + cfg.string() + " --out " + dir.string(), dir);
    CHECK(lc.exit_code == 0);
    const std::string lc_csv = slurp(dir / "k_lambda_c.csv");
    CHECK(lc_csv.find("b_m,lambda_c_bare,kind_bare,lambda_c_renormalized,kind_renormalized")
          != std::string::npos);
    CHECK(lc_csv.find("zero_frequency") != std::string::npos);

    const CliRun pd =
        run_cli("phase-diagram --config " + cfg.string() + " --out " + dir.string() + " --threads 4",
                dir);
    CHECK(pd.exit_code == 0);
    const std::string pd_csv = slurp(dir / "k_phase_diagram.csv");
    CHECK(pd_csv.find("b_m,epsilon,kind,critical_lambda,abs_re_omega") != std::string::npos);
    // 3x3 grid rows plus hash and header lines.
    CHECK(std::count(pd_csv.begin(), pd_csv.end(), '\n') == 9 + 2);
}

TEST_CASE("cli weights and profile run on the reference system") {
    const fs::path dir = make_workdir("weights");
    const std::string config = R"([cavity]
delta0 = 0.8
kappa = 0.02
n_modes = 4
[drive]
b_m = 0.9
epsilon = 0.19
[medium]
waist_ratio = 1000
[coupling]
lambda_ratio_sq = 0.37
[sweep]
omega_eval = 0.62
[output]
prefix = w
)";
    const fs::path cfg = write_config(dir, config);
    const CliRun run = run_cli("weights --config " + cfg.string() + " --out " + dir.string(), dir);
    CHECK(run.exit_code == 0);
    const std::string json = slurp(dir / "w_weights.json");
    CHECK(json.find("\"weights\"") != std::string::npos);
    const CliRun profile =
        run_cli("profile --config " + cfg.string() + " --out " + dir.string(), dir);
    CHECK(profile.exit_code == 0);
    CHECK(slurp(dir / "w_profile.csv").find("r,intensity") != std::string::npos);
}

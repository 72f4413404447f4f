#include "fpol/runner.hpp"

#include "fpol/analysis.hpp"
#include "fpol/config.hpp"
#include "fpol/errors.hpp"
#include "fpol/output.hpp"
#include "fpol/version.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>

namespace fpol {

namespace {

using ordered_json = nlohmann::ordered_json;

struct RunContext {
    RunConfig config;
    std::string hash;
    std::string out_prefix; // out_dir / prefix
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
};

RunContext make_context(const RunOptions& options) {
    RunContext ctx;
    ctx.config = parse_config(options.config_path);
    if (options.renormalize)
        ctx.config.spec.drive.renormalize = *options.renormalize;
    if (options.entry) {
        const int n = ctx.config.spec.geom.n_cavity_modes;
        if (options.entry->first < 0 || options.entry->first >= n || options.entry->second < 0
            || options.entry->second >= n)
            throw ConfigError("--entry indices must name retained cavity modes");
    }
    ctx.hash = ctx.config.config_hash();
    std::filesystem::create_directories(options.out_dir);
    ctx.out_prefix = (std::filesystem::path(options.out_dir) / ctx.config.prefix).string();
    write_text_file(ctx.out_prefix + ".resolved.cfg", ctx.config.resolved_text());
    if (!ctx.config.spec.drive.cutoff_valid())
        std::cerr << "warning: |J_alpha(b_m)| at alpha_max exceeds 1e-8; "
                     "increase alpha_max for a safe sideband truncation\n";
    return ctx;
}

ordered_json provenance(const RunContext& ctx) {
    ordered_json p;
    p["config"] = ctx.hash;
    p["version"] = FPOL_VERSION;
    p["wall_clock_seconds"] = ctx.seconds();
    const SystemSpec& s = ctx.config.spec;
    ordered_json sys;
    sys["delta0"] = s.delta0;
    sys["omega_t"] = s.omega_t;
    sys["kappa"] = s.kappa;
    sys["n_modes"] = s.geom.n_cavity_modes;
    sys["b_m"] = s.drive.b_m;
    sys["epsilon"] = s.drive.epsilon;
    sys["alpha_max"] = s.drive.alpha_max;
    sys["renormalize"] = s.drive.renormalize;
    sys["waist_ratio"] = s.geom.delta;
    sys["n_atom_modes"] = s.geom.n_atom_modes;
    sys["eta_atom"] = s.eta_atom;
    sys["omega_trap"] = s.omega_trap;
    p["system"] = sys;
    ordered_json tol;
    tol["lambda_bisection"] = 1e-8;
    tol["freq_tol"] = 1e-6;
    tol["im_tol"] = 1e-10;
    tol["height_tol"] = 0.02;
    p["tolerances"] = tol;
    return p;
}

// Critical coupling of the configured system; used to resolve
// lambda_ratio_sq into an absolute coupling.
double resolve_lambda_c(const SystemSpec& spec) {
    const InstabilityReport report = critical_coupling(spec);
    if (report.kind == InstabilityKind::Stable)
        throw NumericalError("critical_coupling",
                             "no instability found; cannot normalize lambda_ratio_sq");
    return report.critical_lambda;
}

SystemSpec spec_with_resolved_lambda(const RunConfig& config) {
    SystemSpec spec = config.spec;
    if (config.lambda) {
        spec.lambda = *config.lambda;
    } else if (config.lambda_ratio_sq) {
        spec.lambda = std::sqrt(*config.lambda_ratio_sq) * resolve_lambda_c(spec);
    } else {
        spec.lambda = 0.0;
    }
    return spec;
}

std::vector<double> linspace(double lo, double hi, int points) {
    std::vector<double> grid(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        grid[static_cast<std::size_t>(i)] =
            points == 1 ? lo : lo + (hi - lo) * i / (points - 1.0);
    return grid;
}

std::vector<std::pair<int, int>> spectral_entries(const RunConfig& config,
                                                  const RunOptions& options) {
    std::vector<std::pair<int, int>> entries;
    for (int j = 0; j < config.spec.geom.n_cavity_modes; ++j)
        entries.emplace_back(j, j);
    if (options.entry && options.entry->first != options.entry->second)
        entries.push_back(*options.entry);
    return entries;
}

std::vector<std::string> entry_columns(const std::vector<std::pair<int, int>>& entries) {
    std::vector<std::string> columns;
    for (const auto& [i, j] : entries) {
        if (i == j) {
            columns.push_back("a" + std::to_string(i) + std::to_string(j));
        } else {
            columns.push_back("re_a" + std::to_string(i) + std::to_string(j));
            columns.push_back("im_a" + std::to_string(i) + std::to_string(j));
        }
    }
    return columns;
}

void add_entry_values(CsvWriter& csv, const std::vector<std::pair<int, int>>& entries,
                      const std::function<std::complex<double>(std::size_t)>& value) {
    for (std::size_t e = 0; e < entries.size(); ++e) {
        const std::complex<double> v = value(e);
        if (entries[e].first == entries[e].second) {
            csv.add(v.real());
        } else {
            csv.add(v.real());
            csv.add(v.imag());
        }
    }
}

void cmd_spectrum(const RunContext& ctx, const RunOptions& options) {
    const RunConfig& cfg = ctx.config;
    const SystemSpec spec = spec_with_resolved_lambda(cfg);
    const auto entries = spectral_entries(cfg, options);
    const OmegaGrid omega{cfg.omega_min, cfg.omega_max, cfg.omega_points};
    const SweepAxis axis{SweepAxisKind::LambdaRatioSq, 1.0, 1.0, 1};
    // Single column at the resolved coupling: reuse the grid path with the
    // ratio axis pinned to lambda itself.
    SystemSpec tmpl = spec;
    const SpectralGrid grid = spectral_grid(
        tmpl, omega, axis, 1.0, entries,
        [&](const SystemSpec&) { return spec.lambda; }, 1);

    std::vector<std::string> columns = {"omega"};
    const auto value_columns = entry_columns(entries);
    columns.insert(columns.end(), value_columns.begin(), value_columns.end());
    columns.push_back("stable");
    CsvWriter csv(ctx.hash, columns);
    csv.comment("lambda = " + format_double(spec.lambda));
    for (std::size_t row = 0; row < grid.omega.size(); ++row) {
        csv.begin_row();
        csv.add(grid.omega[row]);
        add_entry_values(csv, entries, [&](std::size_t e) {
            return grid.values[e](static_cast<Eigen::Index>(row), 0);
        });
        csv.add(static_cast<int>(grid.stable[0]));
        csv.end_row();
    }
    csv.write_file(ctx.out_prefix + "_spectrum.csv");
}

void cmd_sweep(const RunContext& ctx, const RunOptions& options, SweepAxisKind kind) {
    const RunConfig& cfg = ctx.config;
    const auto entries = spectral_entries(cfg, options);
    const OmegaGrid omega{cfg.omega_min, cfg.omega_max, cfg.omega_points};
    const SweepAxis axis{kind, cfg.axis_min, cfg.axis_max, cfg.axis_points};
    // sweep-bm tracks lambda^2 = ratio * lambda_c(b_m)^2 per column; a fixed
    // absolute coupling is honored when the config gives lambda instead.
    double ratio = cfg.lambda_ratio_sq.value_or(0.5);
    std::function<double(const SystemSpec&)> resolver = [](const SystemSpec& s) {
        return resolve_lambda_c(s);
    };
    if (kind == SweepAxisKind::ModulationDepth && cfg.lambda) {
        ratio = 1.0;
        const double fixed = *cfg.lambda;
        resolver = [fixed](const SystemSpec&) { return fixed; };
    }
    const SpectralGrid grid =
        spectral_grid(cfg.spec, omega, axis, ratio, entries, resolver, options.threads);

    const bool bm_axis = kind == SweepAxisKind::ModulationDepth;
    std::vector<std::string> columns = {"omega", bm_axis ? "b_m" : "lambda_ratio_sq"};
    const auto value_columns = entry_columns(entries);
    columns.insert(columns.end(), value_columns.begin(), value_columns.end());
    if (bm_axis)
        columns.push_back("lambda");
    columns.push_back("stable");
    CsvWriter csv(ctx.hash, columns);
    for (std::size_t col = 0; col < grid.axis.size(); ++col) {
        for (std::size_t row = 0; row < grid.omega.size(); ++row) {
            csv.begin_row();
            csv.add(grid.omega[row]);
            csv.add(grid.axis[col]);
            add_entry_values(csv, entries, [&](std::size_t e) {
                return grid.values[e](static_cast<Eigen::Index>(row),
                                      static_cast<Eigen::Index>(col));
            });
            if (bm_axis)
                csv.add(grid.lambda_abs[col]);
            csv.add(static_cast<int>(grid.stable[col]));
            csv.end_row();
        }
    }
    const std::string suffix = bm_axis ? "_sweep_bm.csv" : "_sweep_lambda.csv";
    csv.write_file(ctx.out_prefix + suffix);
    for (const auto& err : grid.point_errors)
        std::cerr << "warning: grid point skipped: " << err << "\n";
}

void cmd_weights(const RunContext& ctx) {
    const RunConfig& cfg = ctx.config;
    const SystemSpec spec = spec_with_resolved_lambda(cfg);
    const auto assignment = assign_sidebands(spec, spec.geom.n_cavity_modes);
    const auto overlaps = build_overlap_matrix(spec.geom);
    const ModeWeights mw = mode_weights(spec, assignment, overlaps, cfg.omega_eval);

    ordered_json doc;
    doc["provenance"] = provenance(ctx);
    doc["omega"] = cfg.omega_eval;
    doc["lambda"] = spec.lambda;
    doc["weights"] = std::vector<double>(mw.weights.data(), mw.weights.data() + mw.weights.size());
    const Eigen::VectorXd diag = mode_weights_diagonal(spec, assignment, overlaps, cfg.omega_eval);
    doc["weights_diagonal"] = std::vector<double>(diag.data(), diag.data() + diag.size());
    doc["min_abs_eigenvalue"] = mw.min_abs_eigenvalue;
    std::vector<double> re, im;
    for (int i = 0; i < mw.eigenvector.size(); ++i) {
        re.push_back(mw.eigenvector(i).real());
        im.push_back(mw.eigenvector(i).imag());
    }
    doc["eigenvector_re"] = re;
    doc["eigenvector_im"] = im;
    write_text_file(ctx.out_prefix + "_weights.json", doc.dump(2) + "\n");
}

void cmd_profile(const RunContext& ctx) {
    const RunConfig& cfg = ctx.config;
    const SystemSpec spec = spec_with_resolved_lambda(cfg);
    const auto assignment = assign_sidebands(spec, spec.geom.n_cavity_modes);
    const auto overlaps = build_overlap_matrix(spec.geom);
    const ModeWeights mw = mode_weights(spec, assignment, overlaps, cfg.omega_eval);
    const Eigen::VectorXcd positive =
        mw.eigenvector.head(spec.geom.n_cavity_modes);
    const auto r_grid = radial_render_grid();
    const auto intensity = intensity_profile(positive, r_grid);

    CsvWriter csv(ctx.hash, {"r", "intensity"});
    csv.comment("omega = " + format_double(cfg.omega_eval)
                + ", lambda = " + format_double(spec.lambda));
    for (std::size_t i = 0; i < r_grid.size(); ++i) {
        csv.begin_row();
        csv.add(r_grid[i]);
        csv.add(intensity[i]);
        csv.end_row();
    }
    csv.write_file(ctx.out_prefix + "_profile.csv");
}

void cmd_poles(const RunContext& ctx) {
    const RunConfig& cfg = ctx.config;
    const SystemSpec spec = spec_with_resolved_lambda(cfg);
    const auto assignment = assign_sidebands(spec, spec.geom.n_cavity_modes);
    const auto overlaps = build_overlap_matrix(spec.geom);
    const PoleSet set = find_poles(spec, assignment, overlaps);

    ordered_json doc;
    doc["provenance"] = provenance(ctx);
    doc["lambda"] = set.lambda;
    doc["b_m"] = set.drive.b_m;
    doc["epsilon"] = set.drive.epsilon;
    ordered_json poles = ordered_json::array();
    for (const auto& p : set.poles) {
        ordered_json entry;
        entry["re"] = p.omega.real();
        entry["im"] = p.omega.imag();
        entry["dominant_mode"] = p.dominant_mode;
        poles.push_back(entry);
    }
    doc["poles"] = poles;
    write_text_file(ctx.out_prefix + "_poles.json", doc.dump(2) + "\n");
}

void cmd_lambda_c(const RunContext& ctx) {
    const RunConfig& cfg = ctx.config;
    const auto grid = linspace(cfg.bm_min, cfg.bm_max, cfg.bm_points);
    const auto curve = lambda_c_curve(cfg.spec, grid);
    CsvWriter csv(ctx.hash, {"b_m", "lambda_c_bare", "kind_bare", "lambda_c_renormalized",
                             "kind_renormalized"});
    for (const auto& point : curve) {
        csv.begin_row();
        csv.add(point.b_m);
        csv.add(point.lambda_c_bare);
        csv.add(std::string(to_string(point.kind_bare)));
        csv.add(point.lambda_c_renormalized);
        csv.add(std::string(to_string(point.kind_renormalized)));
        csv.end_row();
    }
    csv.write_file(ctx.out_prefix + "_lambda_c.csv");
}

void cmd_phase_diagram(const RunContext& ctx, const RunOptions& options) {
    const RunConfig& cfg = ctx.config;
    const auto bm_grid = linspace(cfg.bm_min, cfg.bm_max, cfg.bm_points);
    const auto eps_grid = linspace(cfg.eps_min, cfg.eps_max, cfg.eps_points);
    const PhaseDiagram diagram =
        phase_diagram(cfg.spec, eps_grid, bm_grid, {}, options.threads);
    CsvWriter csv(ctx.hash, {"b_m", "epsilon", "kind", "critical_lambda", "abs_re_omega"});
    for (std::size_t i_eps = 0; i_eps < eps_grid.size(); ++i_eps) {
        for (std::size_t i_bm = 0; i_bm < bm_grid.size(); ++i_bm) {
            const std::size_t cell = diagram.index(i_eps, i_bm);
            csv.begin_row();
            csv.add(bm_grid[i_bm]);
            csv.add(eps_grid[i_eps]);
            csv.add(std::string(to_string(diagram.kind[cell])));
            csv.add(diagram.critical_lambda[cell]);
            csv.add(diagram.abs_re_omega[cell]);
            csv.end_row();
        }
    }
    csv.write_file(ctx.out_prefix + "_phase_diagram.csv");
    for (const auto& err : diagram.cell_errors)
        std::cerr << "warning: phase-diagram cell skipped: " << err << "\n";
}

void cmd_crossing(const RunContext& ctx, const RunOptions& options) {
    const RunConfig& cfg = ctx.config;
    CrossingOptions opts;
    opts.entry = options.entry ? options.entry->first : cfg.entry;
    opts.omega_lo = cfg.window_min;
    opts.omega_hi = cfg.window_max;
    opts.omega_points = cfg.omega_points;
    opts.ratio_lo = cfg.ratio_min;
    opts.ratio_hi = cfg.ratio_max;
    opts.coarse_points = cfg.coarse_points;
    const CrossingReport report = extract_effective_coupling(cfg.spec, opts);

    ordered_json doc;
    doc["provenance"] = provenance(ctx);
    doc["entry"] = report.entry;
    doc["lambda_c_reference"] = report.lambda_c_reference;
    ordered_json eq;
    eq["lambda_ac"] = report.lambda_ac;
    eq["lambda_ratio_sq"] = report.ratio_sq;
    eq["g_eff"] = report.g_eff;
    eq["g_eff_corrected"] = report.g_eff_corrected;
    eq["g_eff_over_kappa"] = report.g_eff / cfg.spec.kappa;
    eq["peak_positions"] = report.peak_positions;
    eq["peak_heights"] = report.peak_heights;
    doc["equal_height"] = eq;
    ordered_json markers;
    markers["lambda_min_gap"] = report.lambda_min_gap;
    markers["ratio_sq_min_gap"] = report.ratio_sq_min_gap;
    markers["g_min_gap"] = report.g_min_gap;
    markers["lambda_equal_damping"] = report.lambda_equal_damping;
    markers["ratio_sq_equal_damping"] = report.ratio_sq_equal_damping;
    markers["g_equal_damping"] = report.g_equal_damping;
    doc["pole_markers"] = markers;
    write_text_file(ctx.out_prefix + "_crossing.json", doc.dump(2) + "\n");
}

void cmd_overlaps(const RunContext& ctx) {
    const RunConfig& cfg = ctx.config;
    const OverlapMatrix matrix = build_overlap_matrix(cfg.spec.geom);
    CsvWriter csv(ctx.hash, {"j", "n", "value"});
    for (int j = 0; j < matrix.cavity_modes(); ++j) {
        for (int n = 0; n < matrix.atom_modes(); ++n) {
            csv.begin_row();
            csv.add(j);
            csv.add(n);
            csv.add(matrix(j, n));
            csv.end_row();
        }
    }
    csv.write_file(ctx.out_prefix + "_overlaps.csv");
}

} // namespace

int run_subcommand(const std::string& name, const RunOptions& options) {
    try {
        const RunContext ctx = make_context(options);
        if (name == "spectrum")
            cmd_spectrum(ctx, options);
        else if (name == "sweep-lambda")
            cmd_sweep(ctx, options, SweepAxisKind::LambdaRatioSq);
        else if (name == "sweep-bm")
            cmd_sweep(ctx, options, SweepAxisKind::ModulationDepth);
        else if (name == "weights")
            cmd_weights(ctx);
        else if (name == "profile")
            cmd_profile(ctx);
        else if (name == "poles")
            cmd_poles(ctx);
        else if (name == "lambda-c")
            cmd_lambda_c(ctx);
        else if (name == "phase-diagram")
            cmd_phase_diagram(ctx, options);
        else if (name == "crossing")
            cmd_crossing(ctx, options);
        else if (name == "overlaps")
            cmd_overlaps(ctx);
        else {
            std::cerr << "error: unknown subcommand '" << name << "'\n";
            return 1;
        }
        return 0;
    } catch (const ConfigError& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        return 1;
    } catch (const std::domain_error& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        return 1;
    } catch (const NumericalError& ex) {
        std::cerr << "numerical failure in " << ex.operation() << ": " << ex.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "numerical failure: " << ex.what() << "\n";
        return 2;
    }
}

} // namespace fpol

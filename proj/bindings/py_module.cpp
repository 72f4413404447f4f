#include "fpol/analysis.hpp"
#include "fpol/response.hpp"
#include "fpol/specfun.hpp"
#include "fpol/version.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace fpol;

namespace {

struct PreparedModel {
    SystemSpec spec;
    SidebandAssignment assignment;
    OverlapMatrix overlaps;
};

PreparedModel prepare(const SystemSpec& spec) {
    spec.validate();
    return {spec, assign_sidebands(spec, spec.geom.n_cavity_modes),
            build_overlap_matrix(spec.geom)};
}

} // namespace

PYBIND11_MODULE(_fpolariton, m) {
    m.doc() = "Linear response of a phase-modulated multimode cavity coupled to an "
              "ultracold Bose gas";
    m.attr("__version__") = FPOL_VERSION;

    // Special functions.
    m.def("bessel_j", &specfun::bessel_j, py::arg("order"), py::arg("x"));
    m.def("assoc_laguerre", &specfun::assoc_laguerre, py::arg("n"), py::arg("k"), py::arg("x"));
    m.def("hyp2f1_terminating", &specfun::hyp2f1_terminating, py::arg("m"), py::arg("n"),
          py::arg("z"));
    m.def("ln_factorial", &specfun::ln_factorial, py::arg("n"));

    // Geometry.
    py::class_<TrapGeometry>(m, "TrapGeometry")
        .def(py::init([](double delta, int n_cavity_modes, int n_atom_modes, double w0_over_q) {
                 TrapGeometry geom;
                 geom.delta = delta;
                 geom.n_cavity_modes = n_cavity_modes;
                 geom.n_atom_modes = n_atom_modes;
                 geom.w0_over_q = w0_over_q;
                 geom.validate();
                 return geom;
             }),
             py::arg("delta") = 1000.0, py::arg("n_cavity_modes") = 1,
             py::arg("n_atom_modes") = 1, py::arg("w0_over_q") = 200.0)
        .def_readwrite("delta", &TrapGeometry::delta)
        .def_readwrite("n_cavity_modes", &TrapGeometry::n_cavity_modes)
        .def_readwrite("n_atom_modes", &TrapGeometry::n_atom_modes)
        .def_readwrite("w0_over_q", &TrapGeometry::w0_over_q);

    m.def("lg_mode", &lg_mode, py::arg("j"), py::arg("p"), py::arg("r"), py::arg("theta"));
    m.def("overlap_closed_form", &overlap_closed_form, py::arg("j"), py::arg("n"),
          py::arg("delta"));
    m.def("overlap_quadrature_oracle", &overlap_quadrature_oracle, py::arg("j"), py::arg("n"),
          py::arg("delta"));
    m.def(
        "build_overlap_matrix",
        [](const TrapGeometry& geom) { return build_overlap_matrix(geom).entries(); },
        py::arg("geometry"));

    // Drive and system.
    py::class_<DriveSpec>(m, "DriveSpec")
        .def(py::init([](double b_m, double epsilon, int alpha_max, bool renormalize) {
                 DriveSpec drive;
                 drive.b_m = b_m;
                 drive.epsilon = epsilon;
                 drive.alpha_max = alpha_max;
                 drive.renormalize = renormalize;
                 drive.validate();
                 return drive;
             }),
             py::arg("b_m") = 0.0, py::arg("epsilon") = 0.0, py::arg("alpha_max") = 40,
             py::arg("renormalize") = false)
        .def_readwrite("b_m", &DriveSpec::b_m)
        .def_readwrite("epsilon", &DriveSpec::epsilon)
        .def_readwrite("alpha_max", &DriveSpec::alpha_max)
        .def_readwrite("renormalize", &DriveSpec::renormalize)
        .def("cutoff_valid", &DriveSpec::cutoff_valid);

    py::class_<SystemSpec>(m, "SystemSpec")
        .def(py::init([](const DriveSpec& drive, const TrapGeometry& geom, double delta0,
                         double omega_t, double kappa, double lambda, double eta_atom,
                         double omega_trap) {
                 SystemSpec spec;
                 spec.drive = drive;
                 spec.geom = geom;
                 spec.delta0 = delta0;
                 spec.omega_t = omega_t;
                 spec.kappa = kappa;
                 spec.lambda = lambda;
                 spec.eta_atom = eta_atom;
                 spec.omega_trap = omega_trap;
                 spec.validate();
                 return spec;
             }),
             py::arg("drive") = DriveSpec{}, py::arg("geometry") = TrapGeometry{},
             py::arg("delta0") = 0.8, py::arg("omega_t") = 100.0, py::arg("kappa") = 0.02,
             py::arg("lambda_") = 0.0, py::arg("eta_atom") = 1e-6, py::arg("omega_trap") = 0.0)
        .def_readwrite("drive", &SystemSpec::drive)
        .def_readwrite("geometry", &SystemSpec::geom)
        .def_readwrite("delta0", &SystemSpec::delta0)
        .def_readwrite("omega_t", &SystemSpec::omega_t)
        .def_readwrite("kappa", &SystemSpec::kappa)
        .def_readwrite("lambda_", &SystemSpec::lambda)
        .def_readwrite("eta_atom", &SystemSpec::eta_atom)
        .def_readwrite("omega_trap", &SystemSpec::omega_trap)
        .def("atom_energies", &SystemSpec::atom_energies);

    m.def("sideband_coefficients", &sideband_coefficients, py::arg("drive"));
    m.def(
        "assign_sidebands",
        [](const SystemSpec& spec) {
            const auto a = assign_sidebands(spec, spec.geom.n_cavity_modes);
            return py::make_tuple(a.sideband, a.detuning, a.coefficient);
        },
        py::arg("spec"), "Returns (sideband, effective_detuning, coefficient) per mode");
    m.def("renormalized_coupling", &renormalized_coupling, py::arg("spec"));

    m.def(
        "density_response",
        [](const SystemSpec& spec, std::complex<double> omega) {
            const auto model = prepare(spec);
            return density_response(model.spec, model.overlaps, omega);
        },
        py::arg("spec"), py::arg("omega"));
    m.def(
        "polarizability",
        [](const SystemSpec& spec, std::complex<double> omega) {
            const auto model = prepare(spec);
            return polarizability(model.spec, model.assignment, model.overlaps, omega);
        },
        py::arg("spec"), py::arg("omega"));
    m.def(
        "inverse_greens",
        [](const SystemSpec& spec, std::complex<double> omega) {
            const auto model = prepare(spec);
            return inverse_greens(model.spec, model.assignment, model.overlaps, omega);
        },
        py::arg("spec"), py::arg("omega"));
    m.def(
        "greens",
        [](const SystemSpec& spec, double omega) {
            const auto model = prepare(spec);
            return greens(model.spec, model.assignment, model.overlaps, omega);
        },
        py::arg("spec"), py::arg("omega"));
    m.def(
        "spectral_function",
        [](const SystemSpec& spec, double omega) {
            const auto model = prepare(spec);
            return spectral_function(model.spec, model.assignment, model.overlaps, omega);
        },
        py::arg("spec"), py::arg("omega"));
    m.def(
        "find_poles",
        [](const SystemSpec& spec) {
            const auto model = prepare(spec);
            const PoleSet set = find_poles(model.spec, model.assignment, model.overlaps);
            std::vector<std::pair<std::complex<double>, int>> out;
            for (const auto& p : set.poles)
                out.emplace_back(p.omega, p.dominant_mode);
            return out;
        },
        py::arg("spec"), "Quasienergy poles as (omega, dominant_mode) pairs");
    m.def(
        "mode_weights",
        [](const SystemSpec& spec, double omega) {
            const auto model = prepare(spec);
            const ModeWeights mw =
                mode_weights(model.spec, model.assignment, model.overlaps, omega);
            return py::make_tuple(mw.weights, mw.eigenvector, mw.min_abs_eigenvalue);
        },
        py::arg("spec"), py::arg("omega"),
        "Returns (weights, nambu_eigenvector, min_abs_eigenvalue)");
    m.def(
        "mode_weights_diagonal",
        [](const SystemSpec& spec, double omega) {
            const auto model = prepare(spec);
            return mode_weights_diagonal(model.spec, model.assignment, model.overlaps, omega);
        },
        py::arg("spec"), py::arg("omega"));
    m.def(
        "intensity_profile",
        [](const Eigen::VectorXcd& mode_vector, const std::vector<double>& r_grid) {
            return intensity_profile(mode_vector, r_grid);
        },
        py::arg("mode_vector"), py::arg("r_grid"));
    m.def("radial_render_grid", &radial_render_grid);

    // Analysis.
    py::enum_<InstabilityKind>(m, "InstabilityKind")
        .value("Stable", InstabilityKind::Stable)
        .value("ZeroFrequency", InstabilityKind::ZeroFrequency)
        .value("FiniteFrequency", InstabilityKind::FiniteFrequency);

    m.def("critical_coupling_single_mode", &critical_coupling_single_mode, py::arg("delta0"),
          py::arg("kappa"));
    m.def(
        "critical_coupling",
        [](const SystemSpec& spec) {
            const InstabilityReport report = critical_coupling(spec);
            return py::make_tuple(report.kind, report.critical_lambda, report.unstable_pole);
        },
        py::arg("spec"), "Returns (kind, critical_lambda, unstable_pole)");
    m.def(
        "lambda_c_curve",
        [](const SystemSpec& spec, const std::vector<double>& b_m_grid) {
            const auto curve = lambda_c_curve(spec, b_m_grid);
            py::list out;
            for (const auto& p : curve)
                out.append(py::make_tuple(p.b_m, p.lambda_c_bare, p.kind_bare,
                                          p.lambda_c_renormalized, p.kind_renormalized));
            return out;
        },
        py::arg("spec"), py::arg("b_m_grid"));
    m.def(
        "phase_diagram",
        [](const SystemSpec& spec, const std::vector<double>& epsilon_grid,
           const std::vector<double>& b_m_grid, int threads) {
            const PhaseDiagram d = phase_diagram(spec, epsilon_grid, b_m_grid, {}, threads);
            return py::make_tuple(d.kind, d.critical_lambda, d.abs_re_omega);
        },
        py::arg("spec"), py::arg("epsilon_grid"), py::arg("b_m_grid"), py::arg("threads") = 1,
        "Row-major over (epsilon, b_m); returns (kind, critical_lambda, abs_re_omega)");
    m.def(
        "detect_peaks",
        [](const std::vector<double>& omega, const std::vector<double>& values,
           double prominence_factor) {
            const auto peaks = detect_peaks(omega, values, prominence_factor);
            py::list out;
            for (const auto& p : peaks)
                out.append(py::make_tuple(p.omega, p.height, p.width));
            return out;
        },
        py::arg("omega"), py::arg("values"), py::arg("prominence_factor") = 3.0);
    m.def(
        "extract_effective_coupling",
        [](const SystemSpec& spec, int entry, double omega_lo, double omega_hi, int omega_points,
           double ratio_lo, double ratio_hi, int coarse_points) {
            CrossingOptions options;
            options.entry = entry;
            options.omega_lo = omega_lo;
            options.omega_hi = omega_hi;
            options.omega_points = omega_points;
            options.ratio_lo = ratio_lo;
            options.ratio_hi = ratio_hi;
            options.coarse_points = coarse_points;
            const CrossingReport report = extract_effective_coupling(spec, options);
            py::dict out;
            out["entry"] = report.entry;
            out["lambda_c_reference"] = report.lambda_c_reference;
            out["lambda_ac"] = report.lambda_ac;
            out["lambda_ratio_sq"] = report.ratio_sq;
            out["g_eff"] = report.g_eff;
            out["g_eff_corrected"] = report.g_eff_corrected;
            out["peak_positions"] = report.peak_positions;
            out["peak_heights"] = report.peak_heights;
            out["ratio_sq_min_gap"] = report.ratio_sq_min_gap;
            out["g_min_gap"] = report.g_min_gap;
            out["ratio_sq_equal_damping"] = report.ratio_sq_equal_damping;
            out["g_equal_damping"] = report.g_equal_damping;
            return out;
        },
        py::arg("spec"), py::arg("entry"), py::arg("omega_lo"), py::arg("omega_hi"),
        py::arg("omega_points") = 2001, py::arg("ratio_lo") = 0.05, py::arg("ratio_hi") = 0.95,
        py::arg("coarse_points") = 41);
}

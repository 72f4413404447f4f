#include "fpol/analysis.hpp"

#include "fpol/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace fpol {

namespace {

double default_lambda_hi(const SystemSpec& spec) {
    if (spec.delta0 > 0.0)
        return 5.0 * critical_coupling_single_mode(spec.delta0, spec.kappa);
    return 5.0 * std::sqrt((spec.kappa * spec.kappa + spec.delta0 * spec.delta0 + 1.0) / 4.0);
}

struct PreparedSystem {
    SystemSpec spec;
    SidebandAssignment assignment;
    OverlapMatrix overlaps;
};

PreparedSystem prepare(const SystemSpec& spec) {
    PreparedSystem sys{spec, assign_sidebands(spec, spec.geom.n_cavity_modes),
                       build_overlap_matrix(spec.geom)};
    return sys;
}

InstabilityReport classify_threshold(const PreparedSystem& sys, double lambda_lo,
                                     double lambda_hi, const CriticalSearchOptions& opts) {
    double lo = lambda_lo;
    double hi = lambda_hi;
    const auto unstable = [&](double lambda) {
        return max_pole_imag(sys.spec.with_lambda(lambda), sys.assignment, sys.overlaps)
               > opts.im_tol;
    };
    while (hi - lo > opts.lambda_tol) {
        const double mid = 0.5 * (lo + hi);
        if (unstable(mid))
            hi = mid;
        else
            lo = mid;
    }
    InstabilityReport report;
    report.critical_lambda = 0.5 * (lo + hi);
    const PoleSet poles =
        find_poles(sys.spec.with_lambda(hi), sys.assignment, sys.overlaps);
    const Pole* leader = nullptr;
    for (const auto& p : poles.poles)
        if (leader == nullptr || p.omega.imag() > leader->omega.imag())
            leader = &p;
    if (leader != nullptr) {
        report.unstable_pole = leader->omega;
        report.kind = std::abs(leader->omega.real()) < opts.freq_tol
                          ? InstabilityKind::ZeroFrequency
                          : InstabilityKind::FiniteFrequency;
    }
    return report;
}

} // namespace

double critical_coupling_single_mode(double delta0, double kappa) {
    if (!(delta0 > 0.0))
        throw std::domain_error("critical_coupling_single_mode: delta0 must be positive");
    return std::sqrt((kappa * kappa + delta0 * delta0) / (4.0 * delta0));
}

const char* to_string(InstabilityKind kind) {
    switch (kind) {
    case InstabilityKind::Stable: return "stable";
    case InstabilityKind::ZeroFrequency: return "zero_frequency";
    case InstabilityKind::FiniteFrequency: return "finite_frequency";
    }
    return "unknown";
}

InstabilityReport critical_coupling(const SystemSpec& spec, const CriticalSearchOptions& options) {
    spec.validate();
    const PreparedSystem sys = prepare(spec);
    const double lambda_hi =
        options.lambda_hi > 0.0 ? options.lambda_hi : default_lambda_hi(spec);
    const auto unstable = [&](double lambda) {
        return max_pole_imag(sys.spec.with_lambda(lambda), sys.assignment, sys.overlaps)
               > options.im_tol;
    };
    if (!unstable(lambda_hi)) {
        InstabilityReport report;
        report.kind = InstabilityKind::Stable;
        report.critical_lambda = std::numeric_limits<double>::quiet_NaN();
        return report;
    }
    double lo = 0.0;
    double hi = lambda_hi;
    const int points = std::max(2, options.coarse_points);
    for (int i = 1; i <= points; ++i) {
        const double lambda = lambda_hi * i / points;
        if (unstable(lambda)) {
            hi = lambda;
            break;
        }
        lo = lambda;
    }
    return classify_threshold(sys, lo, hi, options);
}

std::vector<LambdaCPoint> lambda_c_curve(const SystemSpec& spec_template,
                                         const std::vector<double>& b_m_grid,
                                         const CriticalSearchOptions& options) {
    std::vector<LambdaCPoint> curve;
    curve.reserve(b_m_grid.size());
    for (double b_m : b_m_grid) {
        SystemSpec spec = spec_template;
        spec.drive.b_m = b_m;
        LambdaCPoint point;
        point.b_m = b_m;
        spec.drive.renormalize = false;
        const InstabilityReport bare = critical_coupling(spec, options);
        point.lambda_c_bare = bare.critical_lambda;
        point.kind_bare = bare.kind;
        spec.drive.renormalize = true;
        const InstabilityReport renorm = critical_coupling(spec, options);
        point.lambda_c_renormalized = renorm.critical_lambda;
        point.kind_renormalized = renorm.kind;
        curve.push_back(point);
    }
    return curve;
}

PhaseDiagram phase_diagram(const SystemSpec& spec_template, const std::vector<double>& epsilon_grid,
                           const std::vector<double>& b_m_grid,
                           const CriticalSearchOptions& options, int threads) {
    PhaseDiagram diagram;
    diagram.b_m = b_m_grid;
    diagram.epsilon = epsilon_grid;
    const std::size_t cells = epsilon_grid.size() * b_m_grid.size();
    diagram.kind.assign(cells, InstabilityKind::Stable);
    diagram.critical_lambda.assign(cells, std::numeric_limits<double>::quiet_NaN());
    diagram.abs_re_omega.assign(cells, 0.0);
    std::vector<std::string> errors(cells);

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t cell = next.fetch_add(1);
            if (cell >= cells)
                return;
            const std::size_t i_eps = cell / b_m_grid.size();
            const std::size_t i_bm = cell % b_m_grid.size();
            SystemSpec spec = spec_template;
            spec.drive.epsilon = epsilon_grid[i_eps];
            spec.drive.b_m = b_m_grid[i_bm];
            try {
                const InstabilityReport report = critical_coupling(spec, options);
                diagram.kind[cell] = report.kind;
                diagram.critical_lambda[cell] = report.critical_lambda;
                diagram.abs_re_omega[cell] = std::abs(report.unstable_pole.real());
            } catch (const std::exception& ex) {
                errors[cell] = "cell (" + std::to_string(i_eps) + "," + std::to_string(i_bm)
                               + "): " + ex.what();
            }
        }
    };
    const int nthreads = std::max(1, std::min<int>(threads, static_cast<int>(cells)));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nthreads; ++i)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    for (auto& e : errors)
        if (!e.empty())
            diagram.cell_errors.push_back(std::move(e));
    return diagram;
}

std::vector<Peak> detect_peaks(const std::vector<double>& omega, const std::vector<double>& values,
                               double prominence_factor) {
    if (omega.size() != values.size())
        throw std::invalid_argument("detect_peaks: grid and values differ in length");
    if (omega.size() < 3)
        return {};
    for (double v : values)
        if (!std::isfinite(v))
            throw std::invalid_argument("detect_peaks: values must be finite");

    std::vector<double> sorted = values;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double median = sorted[sorted.size() / 2];
    const double threshold = prominence_factor * median;
    const double step = omega[1] - omega[0];

    std::vector<Peak> peaks;
    for (std::size_t k = 1; k + 1 < values.size(); ++k) {
        if (!(values[k] > values[k - 1] && values[k] > values[k + 1]))
            continue;
        if (!(values[k] > threshold))
            continue;
        const double y0 = values[k - 1];
        const double y1 = values[k];
        const double y2 = values[k + 1];
        const double curvature = y0 - 2.0 * y1 + y2;
        const double dx = curvature != 0.0 ? 0.5 * (y0 - y2) / curvature : 0.0;
        Peak peak;
        peak.omega = omega[k] + dx * step;
        peak.height = y1 - 0.25 * (y0 - y2) * dx;
        const double q = curvature / (step * step);
        peak.width = q < 0.0 ? 2.0 * std::sqrt(std::max(0.0, -peak.height / q)) : 0.0;
        peaks.push_back(peak);
    }
    return peaks;
}

Eigen::Matrix2cd TwoPeakModel::greens(double omega, double lambda) const {
    const double l2 = lambda * lambda;
    Eigen::Matrix2cd inv;
    const std::complex<double> ik(0.0, kappa);
    inv(0, 0) = omega - delta1 + ik - l2 * sigma11;
    inv(1, 1) = omega - delta2 + ik - l2 * sigma22;
    inv(0, 1) = -l2 * sigma12;
    inv(1, 0) = -l2 * sigma12;
    return inv.inverse();
}

double TwoPeakModel::spectral11(double omega, double lambda) const {
    const Eigen::Matrix2cd d = greens(omega, lambda);
    return (std::complex<double>(0.0, 1.0) * (d(0, 0) - std::conj(d(0, 0)))).real();
}

double TwoPeakModel::lambda_ac() const {
    const double l2 = (delta2 - delta1) / (sigma11 - sigma22);
    if (!(l2 > 0.0))
        throw std::domain_error("TwoPeakModel: detunings never coalesce for positive lambda");
    return std::sqrt(l2);
}

double TwoPeakModel::dressed_detuning() const {
    const double l2 = lambda_ac() * lambda_ac();
    return delta1 + l2 * sigma11;
}

double TwoPeakModel::coupling() const {
    if (!(sigma12 > 0.0))
        throw std::domain_error("TwoPeakModel: sigma12 must be positive");
    // The effective inter-mode coupling is the off-diagonal entry at the
    // crossing; the spectral peaks then sit at dressed +- sqrt(g^2 - kappa^2).
    const double l2 = lambda_ac() * lambda_ac();
    return l2 * sigma12;
}

EqualHeightCrossing equal_height_crossing(const std::function<std::vector<double>(double)>& slice,
                                          const std::vector<double>& omega_grid, double lambda_lo,
                                          double lambda_hi, int coarse_points, double height_tol) {
    const auto two_tallest = [&](double lambda) -> std::vector<Peak> {
        std::vector<Peak> peaks = detect_peaks(omega_grid, slice(lambda), 0.0);
        std::sort(peaks.begin(), peaks.end(),
                  [](const Peak& a, const Peak& b) { return a.height > b.height; });
        if (peaks.size() > 2)
            peaks.resize(2);
        std::sort(peaks.begin(), peaks.end(),
                  [](const Peak& a, const Peak& b) { return a.omega < b.omega; });
        return peaks;
    };
    const auto height_diff = [&](double lambda) -> std::pair<bool, double> {
        const auto peaks = two_tallest(lambda);
        if (peaks.size() != 2)
            return {false, 0.0};
        return {true, peaks[0].height - peaks[1].height};
    };

    double lo = 0.0;
    double hi = 0.0;
    double f_lo = 0.0;
    bool have_prev = false;
    bool bracketed = false;
    const int points = std::max(2, coarse_points);
    for (int i = 0; i < points; ++i) {
        const double lambda = lambda_lo + (lambda_hi - lambda_lo) * i / (points - 1.0);
        const auto [ok, diff] = height_diff(lambda);
        if (!ok) {
            have_prev = false;
            continue;
        }
        if (have_prev && f_lo * diff <= 0.0) {
            hi = lambda;
            bracketed = true;
            break;
        }
        lo = lambda;
        f_lo = diff;
        have_prev = true;
    }
    if (!bracketed)
        throw NumericalError("extract_effective_coupling",
                             "no-crossing-found: peak heights never equalize in the sweep range");

    for (int iter = 0; iter < 60; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const auto [ok, diff] = height_diff(mid);
        if (!ok)
            throw NumericalError("extract_effective_coupling",
                                 "no-crossing-found: lost the peak pair while bisecting");
        if (f_lo * diff <= 0.0)
            hi = mid;
        else {
            lo = mid;
            f_lo = diff;
        }
        if (hi - lo < 1e-9 * std::max(1.0, lambda_hi))
            break;
    }

    EqualHeightCrossing result;
    result.lambda_ac = 0.5 * (lo + hi);
    const auto peaks = two_tallest(result.lambda_ac);
    if (peaks.size() != 2)
        throw NumericalError("extract_effective_coupling",
                             "no-crossing-found: peak pair vanished at the crossing");
    const double mismatch = std::abs(peaks[0].height - peaks[1].height)
                            / std::max(peaks[0].height, peaks[1].height);
    if (mismatch > height_tol)
        throw NumericalError("extract_effective_coupling",
                             "no-crossing-found: residual height mismatch "
                                 + std::to_string(mismatch) + " exceeds tolerance");
    result.peaks = {peaks[0], peaks[1]};
    return result;
}

namespace {

// The two branch poles inside the omega window, chosen as the adjacent pair
// with the smallest real-part gap.
std::pair<std::complex<double>, std::complex<double>>
branch_pair(const PreparedSystem& sys, double lambda, double omega_lo, double omega_hi) {
    const PoleSet set = find_poles(sys.spec.with_lambda(lambda), sys.assignment, sys.overlaps);
    std::vector<std::complex<double>> in_window;
    for (const auto& p : set.poles)
        if (p.omega.real() > omega_lo && p.omega.real() < omega_hi)
            in_window.push_back(p.omega);
    if (in_window.size() < 2)
        throw NumericalError("extract_effective_coupling",
                             "no-crossing-found: fewer than two branches in the window");
    std::sort(in_window.begin(), in_window.end(),
              [](const std::complex<double>& a, const std::complex<double>& b) {
                  return a.real() < b.real();
              });
    std::size_t best = 0;
    for (std::size_t i = 0; i + 1 < in_window.size(); ++i)
        if (in_window[i + 1].real() - in_window[i].real()
            < in_window[best + 1].real() - in_window[best].real())
            best = i;
    return {in_window[best], in_window[best + 1]};
}

} // namespace

CrossingReport extract_effective_coupling(const SystemSpec& spec_template,
                                          const CrossingOptions& options) {
    spec_template.validate();
    if (options.entry < 0 || options.entry >= spec_template.geom.n_cavity_modes)
        throw std::invalid_argument("extract_effective_coupling: entry out of range");
    if (!(options.omega_hi > options.omega_lo) || options.omega_points < 5)
        throw std::invalid_argument("extract_effective_coupling: invalid omega window");

    const PreparedSystem sys = prepare(spec_template);
    const InstabilityReport threshold = critical_coupling(spec_template);
    if (threshold.kind == InstabilityKind::Stable)
        throw NumericalError("extract_effective_coupling",
                             "no critical coupling found to normalize the sweep");
    const double lambda_c = threshold.critical_lambda;

    std::vector<double> omega_grid(static_cast<std::size_t>(options.omega_points));
    for (int i = 0; i < options.omega_points; ++i)
        omega_grid[static_cast<std::size_t>(i)] =
            options.omega_lo
            + (options.omega_hi - options.omega_lo) * i / (options.omega_points - 1.0);

    const auto slice = [&](double lambda) {
        std::vector<double> values(omega_grid.size());
        const SystemSpec spec = sys.spec.with_lambda(lambda);
        for (std::size_t i = 0; i < omega_grid.size(); ++i) {
            const Eigen::MatrixXcd a =
                spectral_function(spec, sys.assignment, sys.overlaps, omega_grid[i]);
            values[i] = a(options.entry, options.entry).real();
        }
        return values;
    };

    const double lambda_lo = std::sqrt(options.ratio_lo) * lambda_c;
    const double lambda_hi = std::sqrt(options.ratio_hi) * lambda_c;
    const EqualHeightCrossing eq = equal_height_crossing(slice, omega_grid, lambda_lo, lambda_hi,
                                                         options.coarse_points, options.height_tol);

    CrossingReport report;
    report.entry = options.entry;
    report.lambda_c_reference = lambda_c;
    report.lambda_ac = eq.lambda_ac;
    report.ratio_sq = (eq.lambda_ac / lambda_c) * (eq.lambda_ac / lambda_c);
    report.peak_positions = {eq.peaks[0].omega, eq.peaks[1].omega};
    report.peak_heights = {eq.peaks[0].height, eq.peaks[1].height};
    const double splitting = eq.peaks[1].omega - eq.peaks[0].omega;
    if (splitting < 2.0 * spec_template.kappa)
        throw NumericalError("extract_effective_coupling",
                             "peaks-unresolved: splitting below 2 kappa");
    report.g_eff = 0.5 * splitting;
    report.g_eff_corrected =
        std::sqrt(report.g_eff * report.g_eff + spec_template.kappa * spec_template.kappa);

    // Pole-based crossing markers; best effort, NaN when the branch pair
    // cannot be tracked across the sweep range.
    const auto gap_at = [&](double lambda) {
        const auto pair = branch_pair(sys, lambda, options.omega_lo, options.omega_hi);
        return pair.second.real() - pair.first.real();
    };
    try {
        // Golden-section minimum of the branch gap.
        const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = lambda_lo;
        double b = lambda_hi;
        double c = b - inv_phi * (b - a);
        double d = a + inv_phi * (b - a);
        double fc = gap_at(c);
        double fd = gap_at(d);
        for (int iter = 0; iter < 80 && (b - a) > 1e-8; ++iter) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = gap_at(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = gap_at(d);
            }
        }
        report.lambda_min_gap = 0.5 * (a + b);
        report.ratio_sq_min_gap =
            (report.lambda_min_gap / lambda_c) * (report.lambda_min_gap / lambda_c);
        report.g_min_gap = 0.5 * gap_at(report.lambda_min_gap);
    } catch (const NumericalError&) {
        report.lambda_min_gap = std::numeric_limits<double>::quiet_NaN();
        report.ratio_sq_min_gap = std::numeric_limits<double>::quiet_NaN();
        report.g_min_gap = std::numeric_limits<double>::quiet_NaN();
    }
    try {
        // Equal damping of the two branches.
        const auto damping_diff = [&](double lambda) {
            const auto pair = branch_pair(sys, lambda, options.omega_lo, options.omega_hi);
            return pair.first.imag() - pair.second.imag();
        };
        double lo = lambda_lo;
        double hi = lambda_hi;
        double f_lo = damping_diff(lo);
        double f_hi = damping_diff(hi);
        if (f_lo * f_hi > 0.0) {
            report.lambda_equal_damping = std::numeric_limits<double>::quiet_NaN();
            report.ratio_sq_equal_damping = std::numeric_limits<double>::quiet_NaN();
            report.g_equal_damping = std::numeric_limits<double>::quiet_NaN();
        } else {
            for (int iter = 0; iter < 60 && hi - lo > 1e-10; ++iter) {
                const double mid = 0.5 * (lo + hi);
                const double f_mid = damping_diff(mid);
                if (f_lo * f_mid <= 0.0) {
                    hi = mid;
                    f_hi = f_mid;
                } else {
                    lo = mid;
                    f_lo = f_mid;
                }
            }
            report.lambda_equal_damping = 0.5 * (lo + hi);
            report.ratio_sq_equal_damping = (report.lambda_equal_damping / lambda_c)
                                            * (report.lambda_equal_damping / lambda_c);
            report.g_equal_damping = 0.5 * gap_at(report.lambda_equal_damping);
        }
    } catch (const NumericalError&) {
        report.lambda_equal_damping = std::numeric_limits<double>::quiet_NaN();
        report.ratio_sq_equal_damping = std::numeric_limits<double>::quiet_NaN();
        report.g_equal_damping = std::numeric_limits<double>::quiet_NaN();
    }
    return report;
}

} // namespace fpol

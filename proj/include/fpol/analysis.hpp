#ifndef FPOL_ANALYSIS_HPP
#define FPOL_ANALYSIS_HPP

#include "fpol/response.hpp"

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <functional>
#include <vector>

namespace fpol {

// Critical coupling of the single-mode system, lambda_c^2 = (kappa^2 + delta0^2)/(4 delta0).
// Requires delta0 > 0.
double critical_coupling_single_mode(double delta0, double kappa);

enum class InstabilityKind { Stable, ZeroFrequency, FiniteFrequency };

const char* to_string(InstabilityKind kind);

struct InstabilityReport {
    InstabilityKind kind = InstabilityKind::Stable;
    double critical_lambda = 0.0;            // NaN when Stable up to lambda_hi
    std::complex<double> unstable_pole{0.0, 0.0};
};

struct CriticalSearchOptions {
    double lambda_hi = 0.0;   // 0: defaults to 5x the single-mode analytic value
    double lambda_tol = 1e-8; // bisection tolerance in lambda
    double freq_tol = 1e-6;   // |Re omega| below this at threshold => ZeroFrequency
    double im_tol = 1e-10;    // stability margin guarding eigenvalue rounding
    int coarse_points = 64;   // scan resolution used to bracket the first crossing
};

// Smallest lambda in (0, lambda_hi] at which a pole crosses into the upper
// half plane, located by coarse scan plus bisection on the bare drive
// coupling (the renormalize flag acts inside the response). The threshold
// pole classifies the instability: ZeroFrequency for the stationary
// superradiant transition, FiniteFrequency for the atomic instability of
// red-detuned modes. Returns kind = Stable (critical_lambda = NaN) when no
// instability exists below lambda_hi; that outcome is reported, not fatal.
InstabilityReport critical_coupling(const SystemSpec& spec,
                                    const CriticalSearchOptions& options = {});

struct LambdaCPoint {
    double b_m = 0.0;
    double lambda_c_bare = 0.0;
    InstabilityKind kind_bare = InstabilityKind::Stable;
    double lambda_c_renormalized = 0.0;
    InstabilityKind kind_renormalized = InstabilityKind::Stable;
};

// Critical-coupling curve over a modulation-depth grid, with and without the
// lost-sideband renormalization.
std::vector<LambdaCPoint> lambda_c_curve(const SystemSpec& spec_template,
                                         const std::vector<double>& b_m_grid,
                                         const CriticalSearchOptions& options = {});

struct PhaseDiagram {
    std::vector<double> b_m;
    std::vector<double> epsilon;
    // Flattened row-major over (epsilon, b_m).
    std::vector<InstabilityKind> kind;
    std::vector<double> critical_lambda;
    std::vector<double> abs_re_omega; // |Re| of the threshold pole
    std::vector<std::string> cell_errors;

    std::size_t index(std::size_t i_eps, std::size_t i_bm) const {
        return i_eps * b_m.size() + i_bm;
    }
};

// Leading-instability map over (epsilon, b_m); cells evaluated independently.
PhaseDiagram phase_diagram(const SystemSpec& spec_template, const std::vector<double>& epsilon_grid,
                           const std::vector<double>& b_m_grid,
                           const CriticalSearchOptions& options = {}, int threads = 1);

struct Peak {
    double omega = 0.0;
    double height = 0.0;
    double width = 0.0; // parabolic FWHM proxy
};

// Local maxima above prominence_factor x median, positions refined by a
// three-point quadratic fit. Flat input yields an empty list.
std::vector<Peak> detect_peaks(const std::vector<double>& omega, const std::vector<double>& values,
                               double prominence_factor = 3.0);

// Two-mode coupled model of the avoided crossing: the retarded Green's
// function
//   D^R(omega) = [[omega - delta1 + ik - L^2 s11,  -L^2 s12],
//                 [-L^2 s12,  omega - delta2 + ik - L^2 s22]]^-1
// with real self-energies. The dressed detunings coalesce at
// lambda_ac^2 = (delta2 - delta1)/(s11 - s22); the spectral peaks then sit
// at dressed_detuning +- sqrt(g^2 - kappa^2) with g = lambda_ac^2 s12, the
// off-diagonal entry at the crossing.
struct TwoPeakModel {
    double delta1 = 0.0;
    double delta2 = 0.0;
    double kappa = 0.0;
    double sigma11 = 0.0;
    double sigma22 = 0.0;
    double sigma12 = 0.0;

    Eigen::Matrix2cd greens(double omega, double lambda) const;
    double spectral11(double omega, double lambda) const;
    double lambda_ac() const;
    double dressed_detuning() const;
    double coupling() const; // injected g
};

struct CrossingOptions {
    int entry = 0;           // diagonal spectral entry analyzed
    double omega_lo = 0.0;
    double omega_hi = 1.0;
    int omega_points = 2001;
    double ratio_lo = 0.05;  // sweep range in lambda^2 / lambda_c^2
    double ratio_hi = 0.95;
    int coarse_points = 41;
    double height_tol = 0.02;
};

struct CrossingReport {
    int entry = 0;
    double lambda_c_reference = 0.0; // critical coupling normalizing the ratios

    // Equal-height condition (the lambda where the two tallest peaks in the
    // window match within height_tol).
    double lambda_ac = 0.0;
    double ratio_sq = 0.0;
    double g_eff = 0.0;            // half the peak splitting
    double g_eff_corrected = 0.0;  // sqrt(g_eff^2 + kappa^2), from the exact peak positions
    std::array<double, 2> peak_positions{};
    std::array<double, 2> peak_heights{};

    // Pole-based markers of the crossing center: the minimum branch
    // splitting and the point where the two branches have equal damping.
    // In the full multimode spectrum the peak heights are weight-skewed, so
    // these locate the crossing more robustly than the height condition.
    double lambda_min_gap = 0.0;
    double ratio_sq_min_gap = 0.0;
    double g_min_gap = 0.0;
    double lambda_equal_damping = 0.0;
    double ratio_sq_equal_damping = 0.0;
    double g_equal_damping = 0.0;
};

// Avoided-crossing sweep on the configured system: scans lambda over the
// ratio range, locates the equal-height point of the two dominant peaks in
// A_{entry,entry} within the omega window, and reports the effective
// coupling as half the peak splitting. Throws NumericalError
// "no-crossing-found" when the height difference never changes sign and
// "peaks-unresolved" when the splitting at the crossing is below 2 kappa.
CrossingReport extract_effective_coupling(const SystemSpec& spec_template,
                                          const CrossingOptions& options);

// Slice-based equal-height search shared by the cavity model and the
// synthetic two-mode model: slice(lambda) returns spectral values on the
// fixed omega grid.
struct EqualHeightCrossing {
    double lambda_ac = 0.0;
    std::array<Peak, 2> peaks{};
};
EqualHeightCrossing equal_height_crossing(const std::function<std::vector<double>(double)>& slice,
                                          const std::vector<double>& omega_grid, double lambda_lo,
                                          double lambda_hi, int coarse_points, double height_tol);

} // namespace fpol

#endif

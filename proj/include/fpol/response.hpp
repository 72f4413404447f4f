#ifndef FPOL_RESPONSE_HPP
#define FPOL_RESPONSE_HPP

#include "fpol/medium.hpp"

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace fpol {

// Inverse Nambu Green's function, 2N x 2N with block layout
//   [[P^R + chi, chi], [chi, P^A(-omega) + chi]],
// P^R = diag(omega - dt_j + i kappa), P^A(-omega) = diag(-omega - dt_j - i kappa).
// Accepts complex omega (analytic continuation for the pole finder).
Eigen::MatrixXcd inverse_greens(const SystemSpec& spec, const SidebandAssignment& assignment,
                                const OverlapMatrix& overlaps, std::complex<double> omega);

// Numerical inverse of inverse_greens at real omega. Throws NumericalError
// when the 1-norm condition estimate reaches 1e12 (a pole on the real axis,
// signalling criticality).
Eigen::MatrixXcd greens(const SystemSpec& spec, const SidebandAssignment& assignment,
                        const OverlapMatrix& overlaps, double omega);

// Spectral function A = i (D^R - (D^R)^dagger), restricted to the
// positive-frequency N x N block. Hermitian by construction.
Eigen::MatrixXcd spectral_function(const SystemSpec& spec, const SidebandAssignment& assignment,
                                   const OverlapMatrix& overlaps, double omega);

struct Pole {
    std::complex<double> omega;
    int dominant_mode = 0; // cavity mode with the largest Nambu weight in the null vector
};

struct PoleSet {
    std::vector<Pole> poles;
    double lambda = 0.0;
    DriveSpec drive;

    double max_imag() const;
};

// Quasienergy poles of the Green's function at eta_atom = 0.
//
// The determinant is a rational function of omega whose denominators are the
// atomic lines (omega^2 - E_m^2); clearing them yields a polynomial of degree
// 2N + 2K. Its roots are computed as the eigenvalues of the structured
// companion linearization
//   L(omega) = omega*Sigma + T,  det L = cleared polynomial,
// built from the photon Nambu block and one (+E, -E) oscillator pair per
// atomic channel. This keeps clustered or repeated detunings exactly
// resolvable, where an expanded-coefficient companion matrix loses them.
// Roots coinciding with a cleared denominator are discarded by a residue
// test (sigma_min of the assembled Nambu matrix at distance 1e-7).
PoleSet find_poles(const SystemSpec& spec, const SidebandAssignment& assignment,
                   const OverlapMatrix& overlaps);

// Narrow-cloud fast path (single atomic channel): the rank-1 dispersion
//   1 + lambda_eff^2 Pi(omega) sum_j c_j^2 [(omega - dt_j + ik)^-1 + (-omega - dt_j - ik)^-1] = 0
// cleared to an explicit polynomial and solved through its companion matrix.
// Modes sharing an identical effective detuning are deflated into one
// effective channel plus exact bare poles. Cross-checked against find_poles.
PoleSet find_poles_scalar(const SystemSpec& spec, const SidebandAssignment& assignment,
                          const OverlapMatrix& overlaps);

// Largest pole imaginary part; the cheap stability probe used by bisection.
double max_pole_imag(const SystemSpec& spec, const SidebandAssignment& assignment,
                     const OverlapMatrix& overlaps);

struct ModeWeights {
    Eigen::VectorXd weights;        // per cavity mode, sums to 1
    Eigen::VectorXcd eigenvector;   // full 2N null-direction vector
    double min_abs_eigenvalue = 0.0;
};

// Weight of each cavity mode in the polariton at (omega, lambda): the
// eigenvector of inverse_greens with the minimum-magnitude eigenvalue,
// w_j = |v_j|^2 + |v_{j+N}|^2 normalized to unit sum. Throws NumericalError
// if the two smallest eigenvalue magnitudes are within 1e-10 (ambiguous).
ModeWeights mode_weights(const SystemSpec& spec, const SidebandAssignment& assignment,
                         const OverlapMatrix& overlaps, double omega);

// Alternative estimator for comparison: the normalized diagonal spectral
// weights w_j = A_jj(omega) / sum_i A_ii(omega).
Eigen::VectorXd mode_weights_diagonal(const SystemSpec& spec,
                                      const SidebandAssignment& assignment,
                                      const OverlapMatrix& overlaps, double omega);

// Real-space intensity |sum_j v_j w0 LG_{j0}(r)|^2 on r_grid, peak-normalized.
std::vector<double> intensity_profile(const Eigen::VectorXcd& mode_vector,
                                      const std::vector<double>& r_grid);

enum class SweepAxisKind { LambdaRatioSq, ModulationDepth, Epsilon };

struct SweepAxis {
    SweepAxisKind kind = SweepAxisKind::LambdaRatioSq;
    double lo = 0.0;
    double hi = 1.0;
    int points = 1;
};

struct OmegaGrid {
    double lo = 0.0;
    double hi = 1.0;
    int points = 1;
};

// Spectral values on an omega x parameter grid. Columns correspond to the
// swept parameter. For the LambdaRatioSq axis the reference critical
// coupling is resolved once from the template system; for the
// ModulationDepth and Epsilon axes it is re-solved per column so that
// lambda^2 = ratio * lambda_c^2 tracks the modified system.
struct SpectralGrid {
    std::vector<double> omega;
    std::vector<double> axis;
    SweepAxisKind axis_kind = SweepAxisKind::LambdaRatioSq;
    std::vector<std::pair<int, int>> entries;
    std::vector<Eigen::MatrixXcd> values;  // one (omega x axis) matrix per entry
    std::vector<double> lambda_abs;        // per column
    std::vector<double> lambda_c_ref;      // per column
    std::vector<std::uint8_t> stable;      // per column: no pole in the upper half plane
    std::vector<std::string> point_errors; // "row,col: message"; non-fatal
};

// lambda_c_resolver(spec) must return the critical coupling of the given
// system (analysis::critical_coupling provides it); injected as a callback
// to keep this module independent of the analysis layer.
SpectralGrid spectral_grid(const SystemSpec& spec_template, const OmegaGrid& omega_grid,
                           const SweepAxis& axis, double lambda_ratio_sq,
                           const std::vector<std::pair<int, int>>& entries,
                           const std::function<double(const SystemSpec&)>& lambda_c_resolver,
                           int threads = 1);

} // namespace fpol

#endif

#ifndef FPOL_MEDIUM_HPP
#define FPOL_MEDIUM_HPP

#include "fpol/geometry.hpp"

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace fpol {

// Phase-modulation drive. The sideband coefficients of a harmonic
// modulation of depth b_m are c_alpha = J_alpha(b_m); alpha_max truncates
// the Fourier series. All c_alpha are real; multi-tone drives with complex
// coefficients are out of scope.
struct DriveSpec {
    double b_m = 0.0;
    double epsilon = 0.0;   // PM frequency offset, Omega = omega_t + epsilon
    int alpha_max = 40;
    bool renormalize = false;

    void validate() const;
    // True when |J_{alpha_max}(b_m)| < 1e-8, i.e. the truncation is safe.
    // Treated as a warning condition, not an error.
    bool cutoff_valid() const;
};

// Complete system description. All frequencies are in units of the recoil
// energy E_r = 1. The one-sideband-per-mode reduction assumes omega_t >> 1;
// this is a documented validity condition, not an enforced bound.
struct SystemSpec {
    DriveSpec drive;
    TrapGeometry geom;
    double delta0 = 0.8;     // bare detuning of the fundamental mode
    double omega_t = 100.0;  // transverse mode spacing
    double kappa = 0.02;     // uniform cavity loss
    double lambda = 0.0;     // effective light-matter coupling
    double eta_atom = 1e-6;  // numerical broadening replacing i0+
    double omega_trap = 0.0; // transverse trap quantum for higher atomic states

    void validate() const;

    // Energies of the retained excited atomic channels, E_m = 1 + m*omega_trap.
    // The lowest excited motional state carries the recoil energy; higher
    // transverse radial states add trap quanta (all collapse to E_r when
    // omega_trap = 0, which reproduces the narrow-cloud treatment).
    std::vector<double> atom_energies() const;

    SystemSpec with_lambda(double value) const {
        SystemSpec copy = *this;
        copy.lambda = value;
        return copy;
    }
    SystemSpec with_eta(double value) const {
        SystemSpec copy = *this;
        copy.eta_atom = value;
        return copy;
    }
};

// c_alpha for alpha in [-alpha_max, alpha_max]; index alpha + alpha_max.
std::vector<double> sideband_coefficients(const DriveSpec& drive);

// Pairing of each retained cavity mode with its nearest drive sideband.
struct SidebandAssignment {
    std::vector<int> sideband;       // alpha_j
    std::vector<double> detuning;    // effective detuning after absorbing alpha_j * Omega
    std::vector<double> coefficient; // c_{alpha_j}

    int n_modes() const { return static_cast<int>(sideband.size()); }
};

// alpha_j = argmin_alpha |Delta_j - alpha*Omega - Delta_0| over
// [-alpha_max, alpha_max], with Delta_j = delta0 + j*omega_t. For linearly
// spaced modes this yields alpha_j = j and detuning delta0 - j*epsilon.
// Throws std::invalid_argument if n_modes > alpha_max + 1 or if two
// sidebands tie within 1e-9 (the halfway case epsilon = +-Omega/2).
SidebandAssignment assign_sidebands(const SystemSpec& spec, int n_modes);

// Effective coupling after accounting for the power lost to negative
// sidebands: lambda_eff^2 = lambda^2 / sum_{0 <= alpha < alpha_max} c_alpha^2.
// Returns lambda_eff (not squared).
double renormalized_coupling(const SystemSpec& spec);

// Retarded density response of the condensate,
//   Pi_{ij}(omega) = sum_m  -2 E_m / ((omega + i eta)^2 - E_m^2) M[i][m] M[j][m],
// summed over the retained excited channels. Accepts complex omega for
// analytic continuation; eta_atom is always added on top.
Eigen::MatrixXcd density_response(const SystemSpec& spec, const OverlapMatrix& overlaps,
                                  std::complex<double> omega);

// Mode-space polarizability chi_{ij} = lambda_eff^2 c_{alpha_i} c_{alpha_j} Pi_{ij},
// the Floquet structure collapsed to one sideband per mode.
Eigen::MatrixXcd polarizability(const SystemSpec& spec, const SidebandAssignment& assignment,
                                const OverlapMatrix& overlaps, std::complex<double> omega);

// Full four-index polarizability chi_{i,j;alpha,beta} = lambda_eff^2 c_alpha c_beta Pi_{ij}.
// Diagnostic only; the response path never inverts this object.
std::complex<double> polarizability_floquet(const SystemSpec& spec, const OverlapMatrix& overlaps,
                                            int i, int j, int alpha, int beta,
                                            std::complex<double> omega);

} // namespace fpol

#endif

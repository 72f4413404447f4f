#include "fpol/medium.hpp"

#include "fpol/specfun.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fpol {

void DriveSpec::validate() const {
    if (alpha_max < 0)
        throw std::invalid_argument("DriveSpec: alpha_max must be >= 0");
    if (!(std::abs(b_m) <= 50.0))
        throw std::invalid_argument("DriveSpec: |b_m| must be <= 50");
    if (!std::isfinite(epsilon))
        throw std::invalid_argument("DriveSpec: epsilon must be finite");
}

bool DriveSpec::cutoff_valid() const {
    return std::abs(specfun::bessel_j(alpha_max, b_m)) < 1e-8;
}

void SystemSpec::validate() const {
    drive.validate();
    geom.validate();
    if (!(kappa >= 0.0))
        throw std::invalid_argument("SystemSpec: kappa must be >= 0");
    if (!(lambda >= 0.0))
        throw std::invalid_argument("SystemSpec: lambda must be >= 0");
    if (!(eta_atom >= 0.0))
        throw std::invalid_argument("SystemSpec: eta_atom must be >= 0");
    if (!(omega_trap >= 0.0))
        throw std::invalid_argument("SystemSpec: omega_trap must be >= 0");
    if (!(omega_t > 0.0))
        throw std::invalid_argument("SystemSpec: omega_t must be positive");
    if (!std::isfinite(delta0))
        throw std::invalid_argument("SystemSpec: delta0 must be finite");
}

std::vector<double> SystemSpec::atom_energies() const {
    std::vector<double> energies(static_cast<std::size_t>(geom.n_atom_modes));
    for (int m = 0; m < geom.n_atom_modes; ++m)
        energies[static_cast<std::size_t>(m)] = 1.0 + m * omega_trap;
    return energies;
}

std::vector<double> sideband_coefficients(const DriveSpec& drive) {
    drive.validate();
    std::vector<double> c(2 * static_cast<std::size_t>(drive.alpha_max) + 1);
    for (int alpha = -drive.alpha_max; alpha <= drive.alpha_max; ++alpha)
        c[static_cast<std::size_t>(alpha + drive.alpha_max)] =
            specfun::bessel_j(alpha, drive.b_m);
    return c;
}

SidebandAssignment assign_sidebands(const SystemSpec& spec, int n_modes) {
    spec.validate();
    if (n_modes < 1)
        throw std::invalid_argument("assign_sidebands: n_modes must be >= 1");
    if (n_modes > spec.drive.alpha_max + 1)
        throw std::invalid_argument("assign_sidebands: n_modes must be <= alpha_max + 1");

    SidebandAssignment assignment;
    assignment.sideband.resize(static_cast<std::size_t>(n_modes));
    assignment.detuning.resize(static_cast<std::size_t>(n_modes));
    assignment.coefficient.resize(static_cast<std::size_t>(n_modes));

    for (int j = 0; j < n_modes; ++j) {
        // Delta_j - alpha*Omega - Delta_0 = (j - alpha)*omega_t - alpha*epsilon,
        // grouped so that the exact alpha = j case carries no rounding.
        const auto residual = [&](int alpha) {
            return (j - alpha) * spec.omega_t - alpha * spec.drive.epsilon;
        };
        int best = 0;
        double best_mismatch = std::numeric_limits<double>::infinity();
        double runner_up = std::numeric_limits<double>::infinity();
        for (int alpha = -spec.drive.alpha_max; alpha <= spec.drive.alpha_max; ++alpha) {
            const double mismatch = std::abs(residual(alpha));
            if (mismatch < best_mismatch) {
                runner_up = best_mismatch;
                best_mismatch = mismatch;
                best = alpha;
            } else if (mismatch < runner_up) {
                runner_up = mismatch;
            }
        }
        if (runner_up - best_mismatch < 1e-9)
            throw std::invalid_argument(
                "assign_sidebands: ambiguous sideband for mode " + std::to_string(j)
                + " (two sidebands tie; epsilon = +-Omega/2 is rejected)");
        assignment.sideband[static_cast<std::size_t>(j)] = best;
        assignment.detuning[static_cast<std::size_t>(j)] = spec.delta0 + residual(best);
        assignment.coefficient[static_cast<std::size_t>(j)] =
            specfun::bessel_j(best, spec.drive.b_m);
    }
    return assignment;
}

double renormalized_coupling(const SystemSpec& spec) {
    spec.drive.validate();
    double divisor = 0.0;
    for (int alpha = 0; alpha < spec.drive.alpha_max; ++alpha) {
        const double c = specfun::bessel_j(alpha, spec.drive.b_m);
        divisor += c * c;
    }
    if (!(divisor > 0.0))
        throw std::domain_error(
            "renormalized_coupling: no retained non-negative sidebands (alpha_max = 0)");
    return spec.lambda / std::sqrt(divisor);
}

Eigen::MatrixXcd density_response(const SystemSpec& spec, const OverlapMatrix& overlaps,
                                  std::complex<double> omega) {
    const int n = overlaps.cavity_modes();
    const std::complex<double> w = omega + std::complex<double>(0.0, spec.eta_atom);
    const auto energies = spec.atom_energies();
    Eigen::MatrixXcd pi = Eigen::MatrixXcd::Zero(n, n);
    for (int m = 0; m < overlaps.atom_modes(); ++m) {
        const double e = energies[static_cast<std::size_t>(m)];
        const std::complex<double> weight = -2.0 * e / (w * w - e * e);
        const Eigen::VectorXd column = overlaps.entries().col(m);
        pi.noalias() += weight * (column * column.transpose()).cast<std::complex<double>>();
    }
    return pi;
}

Eigen::MatrixXcd polarizability(const SystemSpec& spec, const SidebandAssignment& assignment,
                                const OverlapMatrix& overlaps, std::complex<double> omega) {
    const int n = assignment.n_modes();
    if (n != overlaps.cavity_modes())
        throw std::invalid_argument("polarizability: assignment and overlaps disagree on mode count");
    const double lambda_eff =
        spec.drive.renormalize ? renormalized_coupling(spec) : spec.lambda;
    Eigen::VectorXd c(n);
    for (int j = 0; j < n; ++j)
        c(j) = assignment.coefficient[static_cast<std::size_t>(j)];
    Eigen::MatrixXcd chi = density_response(spec, overlaps, omega);
    chi = (lambda_eff * lambda_eff)
          * (c.asDiagonal() * chi * c.asDiagonal()).eval();
    return chi;
}

std::complex<double> polarizability_floquet(const SystemSpec& spec, const OverlapMatrix& overlaps,
                                            int i, int j, int alpha, int beta,
                                            std::complex<double> omega) {
    const double lambda_eff =
        spec.drive.renormalize ? renormalized_coupling(spec) : spec.lambda;
    const Eigen::MatrixXcd pi = density_response(spec, overlaps, omega);
    return lambda_eff * lambda_eff * specfun::bessel_j(alpha, spec.drive.b_m)
           * specfun::bessel_j(beta, spec.drive.b_m) * pi(i, j);
}

} // namespace fpol

#ifndef FPOL_GEOMETRY_HPP
#define FPOL_GEOMETRY_HPP

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace fpol {

// Transverse geometry of the cavity-trap system. All lengths are expressed
// through the waist ratio delta = w0 / L_H; w0_over_q only enters real-space
// rendering.
struct TrapGeometry {
    double delta = 1000.0;
    double w0_over_q = 200.0;
    int n_cavity_modes = 1;
    int n_atom_modes = 1;

    void validate() const;
};

// Laguerre-Gauss mode LG_{jp}(r, theta) with w0 = 1 (r in units of the waist).
// For p = 0 the center value is 1, matching eta_j = w0 * LG_{j0}.
std::complex<double> lg_mode(int j, int p, double r, double theta);

// Radial overlap <psi_0 | eta_{j0} | psi_{n0}> in closed form.
//
// The printed closed form misses a factor delta^2: at j = n = 0 it evaluates
// to 1/(delta^2 + 1/2), which contradicts the narrow-cloud limit where the
// overlap must approach 1. Direct evaluation of the defining Gaussian
// integral produces the extra delta^2, so this routine computes
// delta^2 * Gamma(j+n+1)/(2^n n! j!) * (d2-1/2)^j/(d2+1/2)^{j+n+1}
//        * 2F1(-n, -j; -n-j; -(d2+1/2)/(d2-1/2)),  d2 = delta^2,
// validated against overlap_quadrature_oracle. Near the removable point
// |delta^2 - 1/2| <= 1e-6 the quadrature route is used instead.
double overlap_closed_form(int j, int n, double delta);

// Direct Gauss-Laguerre evaluation of the radial overlap integral
// (2/L_H^2) int_0^inf r exp(-r^2 (1/L_H^2 + 1/(2 w0^2)))
//                     L_j(r^2/w0^2) L_n(r^2/L_H^2) dr,
// exact for polynomial integrands up to the node count; absolute error
// below 1e-10. Serves as ground truth for the closed form. Requires
// j, n <= 32; throws NumericalError if the two node counts disagree.
double overlap_quadrature_oracle(int j, int n, double delta);

// Overlap matrix M[j][m] over retained cavity radial indices j and atomic
// transverse radial indices m of the recoiled manifold (column m = 0 shares
// the condensate profile). Only p = 0 modes are representable: radially
// symmetric clouds couple cavity modes of equal angular momentum only, so
// the angular index is fixed by construction.
class OverlapMatrix {
public:
    OverlapMatrix() = default;
    explicit OverlapMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {}

    const Eigen::MatrixXd& entries() const { return entries_; }
    double operator()(int j, int m) const { return entries_(j, m); }
    int cavity_modes() const { return static_cast<int>(entries_.rows()); }
    int atom_modes() const { return static_cast<int>(entries_.cols()); }

private:
    Eigen::MatrixXd entries_;
};

OverlapMatrix build_overlap_matrix(const TrapGeometry& geom);

// Uniform radial rendering grid, r in [0, 4 w0], 512 samples.
std::vector<double> radial_render_grid();

} // namespace fpol

#endif

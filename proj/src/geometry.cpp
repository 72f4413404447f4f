#include "fpol/geometry.hpp"

#include "fpol/errors.hpp"
#include "fpol/specfun.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace fpol {

namespace {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Plain Laguerre value without the public-surface order cap.
double laguerre_raw(int n, double x) {
    if (n == 0)
        return 1.0;
    double lm1 = 1.0;
    double l = 1.0 - x;
    for (int i = 1; i < n; ++i) {
        const double lp1 = ((2.0 * i + 1.0 - x) * l - i * lm1) / (i + 1.0);
        lm1 = l;
        l = lp1;
    }
    return l;
}

// Gauss-Laguerre rule for weight e^{-t} on [0, inf). Nodes come from the
// Jacobi-matrix eigenvalues polished by Newton steps on L_n; weights use the
// analytic form w = t / ((n+1) L_{n+1}(t))^2, which keeps tiny tail weights
// relatively accurate (the eigenvector-squared route has an absolute noise
// floor that a t^degree integrand amplifies).
QuadratureRule gauss_laguerre(int n) {
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        jac(k, k) = 2.0 * k + 1.0;
        if (k + 1 < n) {
            jac(k, k + 1) = k + 1.0;
            jac(k + 1, k) = k + 1.0;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jac, Eigen::EigenvaluesOnly);
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int k = 0; k < n; ++k) {
        double t = solver.eigenvalues()(k);
        for (int it = 0; it < 3; ++it) {
            const double ln = laguerre_raw(n, t);
            const double lnm1 = laguerre_raw(n - 1, t);
            const double deriv = n * (ln - lnm1) / t; // L_n'(t)
            if (deriv == 0.0)
                break;
            t -= ln / deriv;
        }
        const double lnp1 = (n + 1.0) * laguerre_raw(n + 1, t);
        rule.nodes[k] = t;
        rule.weights[k] = t / (lnp1 * lnp1);
    }
    return rule;
}

const QuadratureRule& rule80() {
    static const QuadratureRule rule = gauss_laguerre(80);
    return rule;
}

const QuadratureRule& rule96() {
    static const QuadratureRule rule = gauss_laguerre(96);
    return rule;
}

// In the variable u = r^2/L_H^2 the overlap reads
//   int_0^inf e^{-a u} L_j(u / delta^2) L_n(u) du,  a = 1 + 1/(2 delta^2),
// and t = a u turns it into a pure Gauss-Laguerre integrand.
double overlap_by_rule(int j, int n, double delta, const QuadratureRule& rule) {
    const double a = 1.0 + 0.5 / (delta * delta);
    long double sum = 0.0L;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double t = rule.nodes[k];
        sum += static_cast<long double>(rule.weights[k])
               * specfun::assoc_laguerre(j, 0, t / (a * delta * delta))
               * specfun::assoc_laguerre(n, 0, t / a);
    }
    return static_cast<double>(sum / a);
}

} // namespace

void TrapGeometry::validate() const {
    if (!(delta > 0.0))
        throw std::invalid_argument("TrapGeometry: delta must be positive");
    if (n_cavity_modes < 1)
        throw std::invalid_argument("TrapGeometry: n_cavity_modes must be >= 1");
    if (n_atom_modes < 1)
        throw std::invalid_argument("TrapGeometry: n_atom_modes must be >= 1");
    if (!(w0_over_q > 0.0))
        throw std::invalid_argument("TrapGeometry: w0_over_q must be positive");
}

std::complex<double> lg_mode(int j, int p, double r, double theta) {
    if (j < 0)
        throw std::domain_error("lg_mode: j must be non-negative");
    const int ap = std::abs(p);
    const double lognorm =
        0.5 * (specfun::ln_factorial(j) - specfun::ln_factorial(j + ap));
    const double radial = std::exp(-0.5 * r * r + lognorm)
                          * std::pow(r, ap)
                          * specfun::assoc_laguerre(j, ap, r * r);
    return std::polar(1.0, p * theta) * radial;
}

double overlap_closed_form(int j, int n, double delta) {
    if (j < 0 || n < 0)
        throw std::domain_error("overlap_closed_form: indices must be non-negative");
    if (!(delta > 0.0))
        throw std::domain_error("overlap_closed_form: delta must be positive");
    const double d2 = delta * delta;
    if (std::abs(d2 - 0.5) <= 1e-6)
        return overlap_quadrature_oracle(j, n, delta);

    const double lnmag = 2.0 * std::log(delta)
                         + std::lgamma(static_cast<double>(j + n) + 1.0)
                         - n * std::log(2.0)
                         - specfun::ln_factorial(n)
                         - specfun::ln_factorial(j)
                         + j * std::log(std::abs(d2 - 0.5))
                         - (j + n + 1.0) * std::log(d2 + 0.5);
    const double sign = (d2 < 0.5 && (j & 1)) ? -1.0 : 1.0;
    const double z = -(d2 + 0.5) / (d2 - 0.5);
    return sign * std::exp(lnmag) * specfun::hyp2f1_terminating(n, j, z);
}

double overlap_quadrature_oracle(int j, int n, double delta) {
    if (j < 0 || n < 0 || j > 32 || n > 32)
        throw std::domain_error("overlap_quadrature_oracle: indices must be in [0, 32]");
    if (!(delta > 0.0))
        throw std::domain_error("overlap_quadrature_oracle: delta must be positive");
    const double coarse = overlap_by_rule(j, n, delta, rule80());
    const double fine = overlap_by_rule(j, n, delta, rule96());
    if (std::abs(coarse - fine) > 1e-11 * std::max(1.0, std::abs(fine)))
        throw NumericalError("overlap_quadrature_oracle",
                             "quadrature did not converge");
    return fine;
}

OverlapMatrix build_overlap_matrix(const TrapGeometry& geom) {
    geom.validate();
    Eigen::MatrixXd entries(geom.n_cavity_modes, geom.n_atom_modes);
    for (int j = 0; j < geom.n_cavity_modes; ++j)
        for (int m = 0; m < geom.n_atom_modes; ++m)
            entries(j, m) = overlap_closed_form(j, m, geom.delta);
    return OverlapMatrix(std::move(entries));
}

std::vector<double> radial_render_grid() {
    std::vector<double> grid(512);
    for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = 4.0 * static_cast<double>(i) / (grid.size() - 1.0);
    return grid;
}

} // namespace fpol

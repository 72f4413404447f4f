#include "fpol/response.hpp"

#include "fpol/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace fpol {

namespace {

constexpr double kDenominatorVicinity = 1e-7; // residue test distance to +-E_m
constexpr double kResidueSigmaRatio = 1e-6;   // genuine poles sit far below this

double effective_lambda(const SystemSpec& spec) {
    return spec.drive.renormalize ? renormalized_coupling(spec) : spec.lambda;
}

// Coupling column per atomic channel, b_m[j] = lambda_eff c_{alpha_j} M[j][m].
Eigen::MatrixXd coupling_columns(const SystemSpec& spec, const SidebandAssignment& assignment,
                                 const OverlapMatrix& overlaps) {
    const int n = assignment.n_modes();
    const double lambda_eff = effective_lambda(spec);
    Eigen::MatrixXd b(n, overlaps.atom_modes());
    for (int m = 0; m < overlaps.atom_modes(); ++m)
        for (int j = 0; j < n; ++j)
            b(j, m) = lambda_eff * assignment.coefficient[static_cast<std::size_t>(j)]
                      * overlaps(j, m);
    return b;
}

struct PoleProblem {
    Eigen::VectorXd detuning;  // per mode
    double kappa = 0.0;
    Eigen::MatrixXd coupling;  // N x K', zero channels removed
    std::vector<double> energies;
};

PoleProblem make_pole_problem(const SystemSpec& spec, const SidebandAssignment& assignment,
                              const OverlapMatrix& overlaps) {
    PoleProblem prob;
    const int n = assignment.n_modes();
    prob.detuning.resize(n);
    for (int j = 0; j < n; ++j)
        prob.detuning(j) = assignment.detuning[static_cast<std::size_t>(j)];
    prob.kappa = spec.kappa;

    const Eigen::MatrixXd b = coupling_columns(spec, assignment, overlaps);
    const auto energies = spec.atom_energies();
    std::vector<int> kept;
    for (int m = 0; m < b.cols(); ++m)
        if (b.col(m).squaredNorm() > 0.0)
            kept.push_back(m);
    prob.coupling.resize(n, static_cast<int>(kept.size()));
    prob.energies.reserve(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        prob.coupling.col(static_cast<int>(i)) = b.col(kept[i]);
        prob.energies.push_back(energies[static_cast<std::size_t>(kept[i])]);
    }
    return prob;
}

// Nambu matrix assembled directly from a PoleProblem at eta = 0.
Eigen::MatrixXcd assemble_nambu(const PoleProblem& prob, std::complex<double> omega) {
    const int n = static_cast<int>(prob.detuning.size());
    const int k = static_cast<int>(prob.energies.size());
    Eigen::MatrixXcd chi = Eigen::MatrixXcd::Zero(n, n);
    for (int m = 0; m < k; ++m) {
        const double e = prob.energies[static_cast<std::size_t>(m)];
        const std::complex<double> weight = -2.0 * e / (omega * omega - e * e);
        const Eigen::VectorXd col = prob.coupling.col(m);
        chi.noalias() += weight * (col * col.transpose()).cast<std::complex<double>>();
    }
    Eigen::MatrixXcd mat(2 * n, 2 * n);
    mat.topLeftCorner(n, n) = chi;
    mat.topRightCorner(n, n) = chi;
    mat.bottomLeftCorner(n, n) = chi;
    mat.bottomRightCorner(n, n) = chi;
    const std::complex<double> ik(0.0, prob.kappa);
    for (int j = 0; j < n; ++j) {
        mat(j, j) += omega - prob.detuning(j) + ik;
        mat(n + j, n + j) += -omega - prob.detuning(j) - ik;
    }
    return mat;
}

// Structured companion linearization L(omega) = omega*Sigma + T with
// det L equal to det(Nambu) times prod_m (omega^2 - E_m^2). The pole set is
// the spectrum of -Sigma*T.
Eigen::MatrixXcd linearization_matrix(const PoleProblem& prob) {
    const int n = static_cast<int>(prob.detuning.size());
    const int k = static_cast<int>(prob.energies.size());
    const int dim = 2 * n + 2 * k;
    Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(dim, dim);
    const std::complex<double> ik(0.0, prob.kappa);
    for (int j = 0; j < n; ++j) {
        t(j, j) = -prob.detuning(j) + ik;
        t(n + j, n + j) = -prob.detuning(j) - ik;
    }
    for (int m = 0; m < k; ++m) {
        for (int j = 0; j < n; ++j) {
            const double b = prob.coupling(j, m);
            t(j, 2 * n + m) = b;
            t(n + j, 2 * n + m) = b;
            t(j, 2 * n + k + m) = b;
            t(n + j, 2 * n + k + m) = b;
            t(2 * n + m, j) = -b;
            t(2 * n + m, n + j) = -b;
            t(2 * n + k + m, j) = b;
            t(2 * n + k + m, n + j) = b;
        }
        t(2 * n + m, 2 * n + m) = prob.energies[static_cast<std::size_t>(m)];
        t(2 * n + k + m, 2 * n + k + m) = -prob.energies[static_cast<std::size_t>(m)];
    }
    // -Sigma * T with Sigma = diag(I_N, -I_N, I_K, I_K)
    Eigen::MatrixXcd a = -t;
    a.middleRows(n, n) = t.middleRows(n, n);
    return a;
}

std::vector<std::complex<double>> bare_poles(const PoleProblem& prob) {
    std::vector<std::complex<double>> poles;
    const int n = static_cast<int>(prob.detuning.size());
    poles.reserve(2 * static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        poles.emplace_back(prob.detuning(j), -prob.kappa);
        poles.emplace_back(-prob.detuning(j), -prob.kappa);
    }
    return poles;
}

bool near_cleared_denominator(const PoleProblem& prob, std::complex<double> omega) {
    for (double e : prob.energies)
        if (std::abs(omega - e) < kDenominatorVicinity
            || std::abs(omega + e) < kDenominatorVicinity)
            return true;
    return false;
}

// Residue test: a root coinciding with a cleared denominator is kept only
// when the Nambu matrix is actually singular there.
bool is_genuine_pole(const PoleProblem& prob, std::complex<double> omega) {
    if (!near_cleared_denominator(prob, omega))
        return true;
    const Eigen::MatrixXcd mat = assemble_nambu(prob, omega);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(mat);
    const auto& sv = svd.singularValues();
    return sv(sv.size() - 1) <= kResidueSigmaRatio * sv(0);
}

int dominant_mode_of(const PoleProblem& prob, std::complex<double> omega) {
    const int n = static_cast<int>(prob.detuning.size());
    const Eigen::MatrixXcd mat = assemble_nambu(prob, omega);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(mat, Eigen::ComputeThinV);
    const Eigen::VectorXcd v = svd.matrixV().col(2 * n - 1);
    int best = 0;
    double best_weight = -1.0;
    for (int j = 0; j < n; ++j) {
        const double w = std::norm(v(j)) + std::norm(v(n + j));
        if (w > best_weight) {
            best_weight = w;
            best = j;
        }
    }
    return best;
}

PoleSet finalize_poles(const PoleProblem& prob, std::vector<std::complex<double>> roots,
                       const SystemSpec& spec) {
    PoleSet set;
    set.lambda = spec.lambda;
    set.drive = spec.drive;
    set.poles.reserve(roots.size());
    for (const auto& w : roots) {
        if (!is_genuine_pole(prob, w))
            continue;
        Pole pole;
        pole.omega = w;
        pole.dominant_mode = dominant_mode_of(prob, w);
        set.poles.push_back(pole);
    }
    std::sort(set.poles.begin(), set.poles.end(), [](const Pole& a, const Pole& b) {
        if (a.omega.real() != b.omega.real())
            return a.omega.real() < b.omega.real();
        return a.omega.imag() < b.omega.imag();
    });
    return set;
}

std::vector<std::complex<double>> companion_roots(const std::vector<std::complex<double>>& coeffs) {
    const int deg = static_cast<int>(coeffs.size()) - 1;
    if (deg < 1)
        return {};
    const std::complex<double> lead = coeffs.back();
    if (std::abs(lead) == 0.0)
        throw NumericalError("find_poles", "vanishing leading polynomial coefficient");
    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(deg, deg);
    for (int i = 1; i < deg; ++i)
        companion(i, i - 1) = 1.0;
    for (int i = 0; i < deg; ++i)
        companion(i, deg - 1) = -coeffs[static_cast<std::size_t>(i)] / lead;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
    if (solver.info() != Eigen::Success)
        throw NumericalError("find_poles", "companion eigenvalue iteration failed");
    std::vector<std::complex<double>> roots(static_cast<std::size_t>(deg));
    for (int i = 0; i < deg; ++i)
        roots[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
    return roots;
}

std::vector<std::complex<double>> poly_mul(const std::vector<std::complex<double>>& a,
                                           const std::vector<std::complex<double>>& b) {
    std::vector<std::complex<double>> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            out[i + j] += a[i] * b[j];
    return out;
}

void poly_add(std::vector<std::complex<double>>& a, const std::vector<std::complex<double>>& b,
              std::complex<double> scale) {
    if (a.size() < b.size())
        a.resize(b.size(), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i)
        a[i] += scale * b[i];
}

} // namespace

Eigen::MatrixXcd inverse_greens(const SystemSpec& spec, const SidebandAssignment& assignment,
                                const OverlapMatrix& overlaps, std::complex<double> omega) {
    const int n = assignment.n_modes();
    const Eigen::MatrixXcd chi = polarizability(spec, assignment, overlaps, omega);
    Eigen::MatrixXcd mat(2 * n, 2 * n);
    mat.topLeftCorner(n, n) = chi;
    mat.topRightCorner(n, n) = chi;
    mat.bottomLeftCorner(n, n) = chi;
    mat.bottomRightCorner(n, n) = chi;
    const std::complex<double> ik(0.0, spec.kappa);
    for (int j = 0; j < n; ++j) {
        const double dt = assignment.detuning[static_cast<std::size_t>(j)];
        mat(j, j) += omega - dt + ik;
        mat(n + j, n + j) += -omega - dt - ik;
    }
    return mat;
}

Eigen::MatrixXcd greens(const SystemSpec& spec, const SidebandAssignment& assignment,
                        const OverlapMatrix& overlaps, double omega) {
    const Eigen::MatrixXcd mat = inverse_greens(spec, assignment, overlaps, omega);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(mat);
    const Eigen::MatrixXcd inv = lu.inverse();
    const double cond = mat.cwiseAbs().colwise().sum().maxCoeff()
                        * inv.cwiseAbs().colwise().sum().maxCoeff();
    if (!(cond < 1e12))
        throw NumericalError("greens", "inverse Green's function is singular at omega="
                                           + std::to_string(omega)
                                           + " (pole on the real axis)");
    return inv;
}

Eigen::MatrixXcd spectral_function(const SystemSpec& spec, const SidebandAssignment& assignment,
                                   const OverlapMatrix& overlaps, double omega) {
    const int n = assignment.n_modes();
    const Eigen::MatrixXcd d = greens(spec, assignment, overlaps, omega);
    const Eigen::MatrixXcd a =
        std::complex<double>(0.0, 1.0) * (d - d.adjoint().eval());
    return a.topLeftCorner(n, n);
}

double PoleSet::max_imag() const {
    double value = -std::numeric_limits<double>::infinity();
    for (const auto& p : poles)
        value = std::max(value, p.omega.imag());
    return value;
}

PoleSet find_poles(const SystemSpec& spec, const SidebandAssignment& assignment,
                   const OverlapMatrix& overlaps) {
    const SystemSpec spec0 = spec.with_eta(0.0);
    const PoleProblem prob = make_pole_problem(spec0, assignment, overlaps);
    if (prob.energies.empty())
        return finalize_poles(prob, bare_poles(prob), spec0);
    const Eigen::MatrixXcd a = linearization_matrix(prob);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(a, false);
    if (solver.info() != Eigen::Success)
        throw NumericalError("find_poles", "linearization eigenvalue iteration failed");
    std::vector<std::complex<double>> roots(static_cast<std::size_t>(a.rows()));
    for (int i = 0; i < a.rows(); ++i)
        roots[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
    return finalize_poles(prob, std::move(roots), spec0);
}

PoleSet find_poles_scalar(const SystemSpec& spec, const SidebandAssignment& assignment,
                          const OverlapMatrix& overlaps) {
    if (overlaps.atom_modes() != 1)
        throw std::invalid_argument("find_poles_scalar: requires a single atomic channel");
    const SystemSpec spec0 = spec.with_eta(0.0);
    const PoleProblem prob = make_pole_problem(spec0, assignment, overlaps);
    if (prob.energies.empty())
        return finalize_poles(prob, bare_poles(prob), spec0);

    // Deflate modes sharing one effective detuning into a single channel of
    // combined weight; their orthogonal combinations stay exact bare poles.
    struct Group {
        double detuning;
        double weight = 0.0;
        int count = 0;
    };
    std::vector<Group> groups;
    const int n = static_cast<int>(prob.detuning.size());
    for (int j = 0; j < n; ++j) {
        const double b2 = prob.coupling(j, 0) * prob.coupling(j, 0);
        bool merged = false;
        for (auto& g : groups) {
            if (std::abs(g.detuning - prob.detuning(j))
                <= 1e-9 * std::max(1.0, std::abs(g.detuning))) {
                g.weight += b2;
                ++g.count;
                merged = true;
                break;
            }
        }
        if (!merged)
            groups.push_back({prob.detuning(j), b2, 1});
    }

    const double e = prob.energies.front();
    using Poly = std::vector<std::complex<double>>;
    const std::complex<double> ik(0.0, prob.kappa);
    std::vector<Poly> d1(groups.size()), d2(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        d1[g] = {std::complex<double>(-groups[g].detuning, 0.0) + ik, 1.0};
        d2[g] = {std::complex<double>(-groups[g].detuning, 0.0) - ik, -1.0};
    }
    Poly prod = {1.0};
    for (std::size_t g = 0; g < groups.size(); ++g)
        prod = poly_mul(prod, poly_mul(d1[g], d2[g]));
    Poly q = poly_mul(Poly{-e * e, 0.0, 1.0}, prod);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        Poly rest = {1.0};
        for (std::size_t h = 0; h < groups.size(); ++h)
            if (h != g)
                rest = poly_mul(rest, poly_mul(d1[h], d2[h]));
        Poly d_sum = d1[g];
        poly_add(d_sum, d2[g], 1.0);
        poly_add(q, poly_mul(d_sum, rest), -2.0 * e * groups[g].weight);
    }

    std::vector<std::complex<double>> roots = companion_roots(q);
    for (const auto& g : groups) {
        for (int r = 1; r < g.count; ++r) {
            roots.emplace_back(g.detuning, -prob.kappa);
            roots.emplace_back(-g.detuning, -prob.kappa);
        }
    }
    return finalize_poles(prob, std::move(roots), spec0);
}

double max_pole_imag(const SystemSpec& spec, const SidebandAssignment& assignment,
                     const OverlapMatrix& overlaps) {
    const SystemSpec spec0 = spec.with_eta(0.0);
    const PoleProblem prob = make_pole_problem(spec0, assignment, overlaps);
    if (prob.energies.empty())
        return -prob.kappa;
    const Eigen::MatrixXcd a = linearization_matrix(prob);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(a, false);
    if (solver.info() != Eigen::Success)
        throw NumericalError("find_poles", "linearization eigenvalue iteration failed");
    double value = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < a.rows(); ++i)
        value = std::max(value, solver.eigenvalues()(i).imag());
    return value;
}

ModeWeights mode_weights(const SystemSpec& spec, const SidebandAssignment& assignment,
                         const OverlapMatrix& overlaps, double omega) {
    const int n = assignment.n_modes();
    const Eigen::MatrixXcd mat = inverse_greens(spec, assignment, overlaps, omega);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(mat, true);
    if (solver.info() != Eigen::Success)
        throw NumericalError("mode_weights", "eigenvalue iteration failed");
    int min_index = 0;
    double min_abs = std::numeric_limits<double>::infinity();
    double second_abs = std::numeric_limits<double>::infinity();
    for (int i = 0; i < mat.rows(); ++i) {
        const double a = std::abs(solver.eigenvalues()(i));
        if (a < min_abs) {
            second_abs = min_abs;
            min_abs = a;
            min_index = i;
        } else if (a < second_abs) {
            second_abs = a;
        }
    }
    if (second_abs - min_abs < 1e-10)
        throw NumericalError("mode_weights",
                             "degenerate minimal eigenvalue; mode decomposition ambiguous");
    ModeWeights result;
    result.eigenvector = solver.eigenvectors().col(min_index);
    result.min_abs_eigenvalue = min_abs;
    result.weights.resize(n);
    for (int j = 0; j < n; ++j)
        result.weights(j) =
            std::norm(result.eigenvector(j)) + std::norm(result.eigenvector(n + j));
    result.weights /= result.weights.sum();
    return result;
}

Eigen::VectorXd mode_weights_diagonal(const SystemSpec& spec,
                                      const SidebandAssignment& assignment,
                                      const OverlapMatrix& overlaps, double omega) {
    const Eigen::MatrixXcd a = spectral_function(spec, assignment, overlaps, omega);
    Eigen::VectorXd weights = a.diagonal().real();
    const double total = weights.sum();
    if (total > 0.0)
        weights /= total;
    return weights;
}

std::vector<double> intensity_profile(const Eigen::VectorXcd& mode_vector,
                                      const std::vector<double>& r_grid) {
    std::vector<double> intensity(r_grid.size(), 0.0);
    double peak = 0.0;
    for (std::size_t i = 0; i < r_grid.size(); ++i) {
        std::complex<double> field = 0.0;
        for (int j = 0; j < mode_vector.size(); ++j)
            field += mode_vector(j) * lg_mode(j, 0, r_grid[i], 0.0);
        intensity[i] = std::norm(field);
        peak = std::max(peak, intensity[i]);
    }
    if (peak > 0.0)
        for (auto& v : intensity)
            v /= peak;
    return intensity;
}

SpectralGrid spectral_grid(const SystemSpec& spec_template, const OmegaGrid& omega_grid,
                           const SweepAxis& axis, double lambda_ratio_sq,
                           const std::vector<std::pair<int, int>>& entries,
                           const std::function<double(const SystemSpec&)>& lambda_c_resolver,
                           int threads) {
    spec_template.validate();
    if (omega_grid.points < 1 || axis.points < 1)
        throw std::invalid_argument("spectral_grid: grids need at least one point");

    for (const auto& entry : entries)
        if (entry.first < 0 || entry.second < 0
            || entry.first >= spec_template.geom.n_cavity_modes
            || entry.second >= spec_template.geom.n_cavity_modes)
            throw std::invalid_argument("spectral_grid: entry index out of range");

    SpectralGrid grid;
    grid.axis_kind = axis.kind;
    grid.entries = entries;
    grid.omega.resize(static_cast<std::size_t>(omega_grid.points));
    for (int i = 0; i < omega_grid.points; ++i)
        grid.omega[static_cast<std::size_t>(i)] =
            omega_grid.points == 1
                ? omega_grid.lo
                : omega_grid.lo + (omega_grid.hi - omega_grid.lo) * i / (omega_grid.points - 1.0);
    grid.axis.resize(static_cast<std::size_t>(axis.points));
    for (int i = 0; i < axis.points; ++i)
        grid.axis[static_cast<std::size_t>(i)] =
            axis.points == 1 ? axis.lo : axis.lo + (axis.hi - axis.lo) * i / (axis.points - 1.0);

    grid.values.assign(entries.size(),
                       Eigen::MatrixXcd::Zero(omega_grid.points, axis.points));
    grid.lambda_abs.assign(static_cast<std::size_t>(axis.points), 0.0);
    grid.lambda_c_ref.assign(static_cast<std::size_t>(axis.points), 0.0);
    grid.stable.assign(static_cast<std::size_t>(axis.points), 1);

    double template_lambda_c = 0.0;
    if (axis.kind == SweepAxisKind::LambdaRatioSq)
        template_lambda_c = lambda_c_resolver(spec_template);

    std::vector<std::vector<std::string>> errors_per_col(static_cast<std::size_t>(axis.points));
    std::atomic<int> next_col{0};
    auto worker = [&]() {
        for (;;) {
            const int col = next_col.fetch_add(1);
            if (col >= axis.points)
                return;
            const double x = grid.axis[static_cast<std::size_t>(col)];
            SystemSpec spec = spec_template;
            double ratio = lambda_ratio_sq;
            double lambda_c = template_lambda_c;
            try {
                switch (axis.kind) {
                case SweepAxisKind::LambdaRatioSq:
                    ratio = x;
                    break;
                case SweepAxisKind::ModulationDepth:
                    spec.drive.b_m = x;
                    lambda_c = lambda_c_resolver(spec);
                    break;
                case SweepAxisKind::Epsilon:
                    spec.drive.epsilon = x;
                    lambda_c = lambda_c_resolver(spec);
                    break;
                }
                spec.lambda = std::sqrt(std::max(0.0, ratio)) * lambda_c;
                grid.lambda_abs[static_cast<std::size_t>(col)] = spec.lambda;
                grid.lambda_c_ref[static_cast<std::size_t>(col)] = lambda_c;
                const auto assignment = assign_sidebands(spec, spec.geom.n_cavity_modes);
                const auto overlaps = build_overlap_matrix(spec.geom);
                grid.stable[static_cast<std::size_t>(col)] =
                    max_pole_imag(spec, assignment, overlaps) <= 1e-10 ? 1 : 0;
                for (int row = 0; row < omega_grid.points; ++row) {
                    try {
                        const Eigen::MatrixXcd a = spectral_function(
                            spec, assignment, overlaps, grid.omega[static_cast<std::size_t>(row)]);
                        for (std::size_t e = 0; e < entries.size(); ++e)
                            grid.values[e](row, col) = a(entries[e].first, entries[e].second);
                    } catch (const std::exception& ex) {
                        for (std::size_t e = 0; e < entries.size(); ++e)
                            grid.values[e](row, col) =
                                std::numeric_limits<double>::quiet_NaN();
                        errors_per_col[static_cast<std::size_t>(col)].push_back(
                            std::to_string(row) + "," + std::to_string(col) + ": " + ex.what());
                    }
                }
            } catch (const std::exception& ex) {
                for (std::size_t e = 0; e < entries.size(); ++e)
                    grid.values[e].col(col).setConstant(
                        std::numeric_limits<double>::quiet_NaN());
                errors_per_col[static_cast<std::size_t>(col)].push_back(
                    "column " + std::to_string(col) + ": " + ex.what());
            }
        }
    };

    const int nthreads = std::max(1, std::min(threads, axis.points));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(nthreads));
        for (int i = 0; i < nthreads; ++i)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    for (auto& col_errors : errors_per_col)
        grid.point_errors.insert(grid.point_errors.end(), col_errors.begin(), col_errors.end());
    return grid;
}

} // namespace fpol

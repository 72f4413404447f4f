#include "fpol/response.hpp"

#include "fpol/errors.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

using namespace fpol;

namespace {

struct Prepared {
    SystemSpec spec;
    SidebandAssignment assignment;
    OverlapMatrix overlaps;
};

Prepared make_system(int n_modes, double b_m, double epsilon, double lambda,
                     double delta0 = 0.8, double kappa = 0.02, double waist = 1e6,
                     int n_atom = 1, double omega_trap = 0.0) {
    SystemSpec spec;
    spec.delta0 = delta0;
    spec.kappa = kappa;
    spec.lambda = lambda;
    spec.eta_atom = 0.0;
    spec.omega_trap = omega_trap;
    spec.drive.b_m = b_m;
    spec.drive.epsilon = epsilon;
    spec.geom.n_cavity_modes = n_modes;
    spec.geom.n_atom_modes = n_atom;
    spec.geom.delta = waist;
    return {spec, assign_sidebands(spec, n_modes), build_overlap_matrix(spec.geom)};
}

// Analytic single-mode critical coupling, the sign-convention anchor.
double lambda_c_single(double delta0, double kappa) {
    return std::sqrt((kappa * kappa + delta0 * delta0) / (4.0 * delta0));
}

bool sets_match(const PoleSet& a, const PoleSet& b, double tol) {
    if (a.poles.size() != b.poles.size())
        return false;
    std::vector<bool> used(b.poles.size(), false);
    for (const auto& pa : a.poles) {
        double best = 1e300;
        std::size_t best_idx = 0;
        for (std::size_t i = 0; i < b.poles.size(); ++i) {
            if (used[i])
                continue;
            const double d = std::abs(pa.omega - b.poles[i].omega);
            if (d < best) {
                best = d;
                best_idx = i;
            }
        }
        if (best > tol)
            return false;
        used[best_idx] = true;
    }
    return true;
}

} // namespace

TEST_CASE("inverse_greens bare structure at lambda = 0") {
    auto sys = make_system(3, 0.9, 0.19, 0.0);
    const std::complex<double> omega(0.33, 0.0);
    const Eigen::MatrixXcd m = inverse_greens(sys.spec, sys.assignment, sys.overlaps, omega);
    for (int j = 0; j < 3; ++j) {
        const double dt = sys.assignment.detuning[static_cast<std::size_t>(j)];
        CHECK(std::abs(m(j, j) - std::complex<double>(0.33 - dt, 0.02)) < 1e-14);
        CHECK(std::abs(m(3 + j, 3 + j) - std::complex<double>(-0.33 - dt, -0.02)) < 1e-14);
    }
    CHECK(m.cwiseAbs().sum()
          == doctest::Approx(m.diagonal().cwiseAbs().sum()).epsilon(1e-14));
}

TEST_CASE("single-mode determinant vanishes exactly at the analytic threshold") {
    // The sign-convention anchor: at omega = 0 the assembled Nambu system is
    // singular exactly at the analytic critical coupling.
    const double lc = lambda_c_single(0.8, 0.02);
    auto at = [&](double lambda) {
        auto sys = make_system(1, 0.0, 0.0, lambda);
        return inverse_greens(sys.spec, sys.assignment, sys.overlaps, 0.0).determinant();
    };
    CHECK(std::abs(at(lc)) < 1e-10);
    CHECK(at(0.9 * lc).real() * at(1.1 * lc).real() < 0.0);
}

TEST_CASE("inverse_greens block symmetry") {
    auto sys = make_system(4, 0.9, 0.19, 0.3);
    const Eigen::MatrixXcd m =
        inverse_greens(sys.spec, sys.assignment, sys.overlaps, std::complex<double>(0.4, 0.1));
    CHECK((m.topRightCorner(4, 4) - m.bottomLeftCorner(4, 4)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("greens inverts the inverse") {
    auto sys = make_system(3, 0.9, 0.19, 0.25);
    sys.spec.eta_atom = 1e-6;
    const double omega = 0.47;
    const Eigen::MatrixXcd d = greens(sys.spec, sys.assignment, sys.overlaps, omega);
    const Eigen::MatrixXcd m = inverse_greens(sys.spec, sys.assignment, sys.overlaps, omega);
    CHECK((d * m - Eigen::MatrixXcd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-10);

    auto bare = make_system(2, 0.0, 0.0, 0.0);
    const Eigen::MatrixXcd d0 = greens(bare.spec, bare.assignment, bare.overlaps, omega);
    const std::complex<double> expected = 1.0 / std::complex<double>(omega - 0.8, 0.02);
    CHECK(std::abs(d0(0, 0) - expected) < 1e-12);

    const double far = 1e6;
    const Eigen::MatrixXcd dfar = greens(bare.spec, bare.assignment, bare.overlaps, far);
    CHECK(std::abs(dfar(0, 0) * far - 1.0) < 2e-6); // 1/omega up to O(delta0/omega)
}

TEST_CASE("greens throws at a real-axis pole") {
    // The overlap at finite waist ratio shifts the singular point slightly
    // off the analytic value; place lambda exactly on it.
    auto sys = make_system(1, 0.0, 0.0, 0.0);
    const double lc = lambda_c_single(0.8, 0.02) / sys.overlaps(0, 0);
    sys.spec.lambda = lc;
    CHECK_THROWS_AS(greens(sys.spec, sys.assignment, sys.overlaps, 0.0), NumericalError);
}

TEST_CASE("spectral function is the exact lorentzian at lambda = 0") {
    auto sys = make_system(2, 0.0, 0.0, 0.0);
    for (double omega = 0.0; omega <= 1.2; omega += 0.0173) {
        const Eigen::MatrixXcd a =
            spectral_function(sys.spec, sys.assignment, sys.overlaps, omega);
        const double d = omega - 0.8;
        const double expected = 2.0 * 0.02 / (d * d + 0.02 * 0.02);
        CHECK(std::abs(a(0, 0).real() - expected) < 1e-12);
        CHECK(std::abs(a(0, 0).imag()) < 1e-14);
    }
}

TEST_CASE("spectral function normalization of the decoupled mode") {
    auto sys = make_system(1, 0.0, 0.0, 0.0);
    const double integral = oracles::adaptive_simpson(
        [&](double omega) {
            return spectral_function(sys.spec, sys.assignment, sys.overlaps, omega)(0, 0).real();
        },
        0.8 - 50.0 * 0.02, 0.8 + 50.0 * 0.02, 1e-10);
    CHECK(integral / (2.0 * std::numbers::pi) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("spectral function hermiticity on random draws") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        auto sys = make_system(3, 0.5 + 2.0 * uni(rng), 0.05 + 0.2 * uni(rng),
                               0.3 * uni(rng), 0.6 + 0.4 * uni(rng), 0.01 + 0.05 * uni(rng),
                               1.0 + 10.0 * uni(rng), 2, 0.3);
        sys.spec.eta_atom = 1e-6;
        const double omega = 1.4 * uni(rng);
        const Eigen::MatrixXcd a =
            spectral_function(sys.spec, sys.assignment, sys.overlaps, omega);
        CHECK((a - a.adjoint().eval()).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("find_poles at lambda = 0 is exact") {
    auto sys = make_system(3, 0.9, 0.19, 0.0);
    const PoleSet set = find_poles(sys.spec, sys.assignment, sys.overlaps);
    REQUIRE(set.poles.size() == 6);
    for (int j = 0; j < 3; ++j) {
        const double dt = sys.assignment.detuning[static_cast<std::size_t>(j)];
        bool found_plus = false;
        bool found_minus = false;
        for (const auto& p : set.poles) {
            if (std::abs(p.omega - std::complex<double>(dt, -0.02)) == 0.0)
                found_plus = true;
            if (std::abs(p.omega - std::complex<double>(-dt, -0.02)) == 0.0)
                found_minus = true;
        }
        CHECK(found_plus);
        CHECK(found_minus);
    }
}

TEST_CASE("find_poles reproduces the analytic threshold root at omega = 0") {
    const double lc = lambda_c_single(0.8, 0.02);
    auto sys = make_system(1, 0.0, 0.0, lc);
    const PoleSet set = find_poles(sys.spec, sys.assignment, sys.overlaps);
    double best = 1e300;
    for (const auto& p : set.poles)
        best = std::min(best, std::abs(p.omega));
    CHECK(best < 1e-8);
}

TEST_CASE("pole set closes under omega -> -conj(omega)") {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        auto sys = make_system(3, 2.5 * uni(rng), 0.3 * uni(rng) - 0.1, 0.4 * uni(rng),
                               0.4 + uni(rng), 0.01 + 0.06 * uni(rng), 2.0 + 5.0 * uni(rng),
                               2, 0.35);
        const PoleSet set = find_poles(sys.spec, sys.assignment, sys.overlaps);
        for (const auto& p : set.poles) {
            const std::complex<double> partner = -std::conj(p.omega);
            double best = 1e300;
            for (const auto& q : set.poles)
                best = std::min(best, std::abs(q.omega - partner));
            CHECK(best < 1e-8);
        }
    }
}

TEST_CASE("poles are singular points of the inverse Green's function") {
    auto sys = make_system(3, 0.9, 0.19, 0.31, 0.8, 0.02, 2.5, 3, 0.4);
    const PoleSet set = find_poles(sys.spec, sys.assignment, sys.overlaps);
    CHECK(set.poles.size() == 2 * 3 + 2 * 3);
    for (const auto& p : set.poles) {
        const Eigen::MatrixXcd m =
            inverse_greens(sys.spec.with_eta(0.0), sys.assignment, sys.overlaps, p.omega);
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
        const auto& sv = svd.singularValues();
        CHECK(sv(sv.size() - 1) < 1e-8 * sv(0));
    }
}

TEST_CASE("cleared determinant factors over the computed pole set") {
    // det(inverse_greens(omega)) * prod_m (omega^2 - E_m^2) is a polynomial
    // of degree 2N + 2K with leading coefficient (-1)^N whose roots are the
    // poles; check the factorization at arbitrary complex points.
    auto verify = [](int n_modes, double b_m, double eps, double lambda, int n_atom,
                     double omega_trap, double waist) {
        auto sys = make_system(n_modes, b_m, eps, lambda, 0.8, 0.02, waist, n_atom, omega_trap);
        const PoleSet set = find_poles(sys.spec, sys.assignment, sys.overlaps);
        REQUIRE(static_cast<int>(set.poles.size()) == 2 * n_modes + 2 * n_atom);
        const auto energies = sys.spec.atom_energies();
        std::mt19937 rng(5150);
        std::uniform_real_distribution<double> uni(-1.5, 1.5);
        for (int trial = 0; trial < 6; ++trial) {
            const std::complex<double> omega(uni(rng), uni(rng));
            std::complex<double> lhs =
                inverse_greens(sys.spec, sys.assignment, sys.overlaps, omega).determinant();
            for (double e : energies)
                lhs *= omega * omega - e * e;
            std::complex<double> rhs = (n_modes & 1) ? -1.0 : 1.0;
            for (const auto& p : set.poles)
                rhs *= omega - p.omega;
            CHECK(std::abs(lhs - rhs) < 1e-8 * std::max(1.0, std::abs(lhs)));
        }
    };
    verify(3, 0.9, 0.19, 0.31, 1, 0.0, 1e6);   // narrow cloud
    verify(2, 1.7, -0.08, 0.22, 3, 0.4, 2.0);  // wide cloud, three channels
}

TEST_CASE("stability below the single-mode threshold") {
    const double lc = lambda_c_single(0.8, 0.02);
    for (double frac : {0.1, 0.5, 0.9, 0.99}) {
        auto sys = make_system(1, 0.0, 0.0, frac * lc);
        CHECK(find_poles(sys.spec, sys.assignment, sys.overlaps).max_imag() < 0.0);
    }
    auto above = make_system(1, 0.0, 0.0, 1.01 * lc);
    CHECK(find_poles(above.spec, above.assignment, above.overlaps).max_imag() > 0.0);
}

TEST_CASE("scalar fast path agrees with the linearization") {
    // Distinct detunings.
    auto sys = make_system(4, 0.9, 0.19, 0.29);
    const PoleSet a = find_poles(sys.spec, sys.assignment, sys.overlaps);
    const PoleSet b = find_poles_scalar(sys.spec, sys.assignment, sys.overlaps);
    CHECK(sets_match(a, b, 1e-9));

    // Degenerate detunings (epsilon = 0) exercise the deflation.
    auto flat = make_system(5, 2.0, 0.0, 0.2, 0.6, 0.05);
    const PoleSet c = find_poles(flat.spec, flat.assignment, flat.overlaps);
    const PoleSet d = find_poles_scalar(flat.spec, flat.assignment, flat.overlaps);
    CHECK(sets_match(c, d, 1e-9));

    auto multi = make_system(2, 0.9, 0.19, 0.2, 0.8, 0.02, 2.0, 2, 0.3);
    CHECK_THROWS_AS(find_poles_scalar(multi.spec, multi.assignment, multi.overlaps),
                    std::invalid_argument);
}

TEST_CASE("degenerate detunings keep exact bare poles") {
    // With epsilon = 0 every mode shares the effective detuning; the
    // combinations orthogonal to the drive stay at the bare pole.
    auto sys = make_system(5, 2.0, 0.0, 0.2, 0.6, 0.05);
    const PoleSet set = find_poles(sys.spec, sys.assignment, sys.overlaps);
    int exact_bare = 0;
    for (const auto& p : set.poles)
        if (std::abs(p.omega - std::complex<double>(0.6, -0.05)) < 1e-10)
            ++exact_bare;
    CHECK(exact_bare >= 4);
    CHECK(set.max_imag() < 0.0);
}

TEST_CASE("mode_weights decoupled limit and errors") {
    auto sys = make_system(3, 0.9, 0.19, 1e-4);
    sys.spec.eta_atom = 0.0;
    const ModeWeights mw = mode_weights(sys.spec, sys.assignment, sys.overlaps, 0.8);
    CHECK(mw.weights(0) > 0.99);
    CHECK(mw.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));

    // At omega = 0 the retarded and advanced components of the decoupled
    // fundamental have equal eigenvalue magnitude: ambiguous decomposition.
    auto bare = make_system(2, 0.0, 0.0, 0.0);
    CHECK_THROWS_AS(mode_weights(bare.spec, bare.assignment, bare.overlaps, 0.0),
                    NumericalError);
}

TEST_CASE("mode_weights_diagonal estimator") {
    auto sys = make_system(4, 0.9, 0.19, 0.29);
    sys.spec.eta_atom = 1e-6;
    const Eigen::VectorXd w = mode_weights_diagonal(sys.spec, sys.assignment, sys.overlaps, 0.62);
    CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w.minCoeff() >= 0.0);
    CHECK(w(3) < 0.05);
}

TEST_CASE("single-mode branches repel and the lower one reaches zero") {
    // With no modulation the spectrum shows the two-branch polariton
    // structure: level repulsion grows with the coupling and the lower
    // branch approaches zero at the threshold.
    const double lc = lambda_c_single(0.8, 0.02);
    double previous_gap = 0.0;
    double previous_lower = 0.8;
    for (double frac : {0.2, 0.5, 0.8, 0.99}) {
        auto sys = make_system(1, 0.0, 0.0, frac * lc);
        const PoleSet set = find_poles(sys.spec, sys.assignment, sys.overlaps);
        std::vector<double> positive;
        for (const auto& p : set.poles)
            if (p.omega.real() > 0.0)
                positive.push_back(p.omega.real());
        REQUIRE(positive.size() == 2);
        std::sort(positive.begin(), positive.end());
        CHECK(positive[1] - positive[0] > previous_gap);
        CHECK(positive[0] < previous_lower);
        previous_gap = positive[1] - positive[0];
        previous_lower = positive[0];
    }
    // At the threshold itself a pole sits at the origin.
    auto critical = make_system(1, 0.0, 0.0, 0.99999 * lc);
    const PoleSet set = find_poles(critical.spec, critical.assignment, critical.overlaps);
    double origin_distance = 1e300;
    for (const auto& p : set.poles)
        origin_distance = std::min(origin_distance, std::abs(p.omega));
    CHECK(origin_distance < 0.05);
}

TEST_CASE("intensity_profile") {
    Eigen::VectorXcd fundamental(3);
    fundamental << 1.0, 0.0, 0.0;
    const auto grid = radial_render_grid();
    const auto profile = intensity_profile(fundamental, grid);
    CHECK(profile[0] == doctest::Approx(1.0));
    for (std::size_t i = 0; i < grid.size(); i += 37)
        CHECK(profile[i] == doctest::Approx(std::exp(-grid[i] * grid[i])).epsilon(1e-10));

    Eigen::VectorXcd mixed(2);
    mixed << std::complex<double>(0.8, 0.1), std::complex<double>(-0.3, 0.2);
    const auto mixed_profile = intensity_profile(mixed, grid);
    const double max = *std::max_element(mixed_profile.begin(), mixed_profile.end());
    CHECK(max == doctest::Approx(1.0));
}

TEST_CASE("spectral_grid single point reduces to spectral_function") {
    auto sys = make_system(2, 0.9, 0.19, 0.2);
    sys.spec.eta_atom = 1e-6;
    const OmegaGrid omega{0.45, 0.45, 1};
    const SweepAxis axis{SweepAxisKind::LambdaRatioSq, 1.0, 1.0, 1};
    const SpectralGrid grid = spectral_grid(
        sys.spec, omega, axis, 1.0, {{0, 0}},
        [&](const SystemSpec&) { return sys.spec.lambda; }, 1);
    const Eigen::MatrixXcd a = spectral_function(sys.spec, sys.assignment, sys.overlaps, 0.45);
    CHECK(std::abs(grid.values[0](0, 0) - a(0, 0)) < 1e-13);
    CHECK(grid.stable[0] == 1);
}

TEST_CASE("spectral_grid is deterministic across thread counts") {
    SystemSpec spec;
    spec.delta0 = 0.8;
    spec.kappa = 0.02;
    spec.eta_atom = 1e-6;
    spec.drive.b_m = 0.9;
    spec.drive.epsilon = 0.19;
    spec.geom.n_cavity_modes = 3;
    spec.geom.delta = 1000.0;
    const OmegaGrid omega{0.0, 1.0, 41};
    const SweepAxis axis{SweepAxisKind::LambdaRatioSq, 0.0, 0.9, 13};
    const auto resolver = [](const SystemSpec& s) {
        return lambda_c_single(s.delta0, s.kappa);
    };
    const SpectralGrid g1 = spectral_grid(spec, omega, axis, 0.0, {{0, 0}, {1, 1}}, resolver, 1);
    const SpectralGrid g4 = spectral_grid(spec, omega, axis, 0.0, {{0, 0}, {1, 1}}, resolver, 4);
    for (std::size_t e = 0; e < 2; ++e)
        CHECK((g1.values[e] - g4.values[e]).cwiseAbs().maxCoeff() == 0.0);
}

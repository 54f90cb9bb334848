#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rotorb/dual_solver.hpp"
#include "rotorb/verifier.hpp"
#include "support/oracles.hpp"

using namespace rotorb;

namespace {

HamiltonianField round_field() {
    return {[](const Vec& z) { return 0.5 * z.squaredNorm(); }, [](const Vec& z) { return z; }};
}

Vec axes4(double a, double b) {
    Vec ax(4);
    ax << a, b, a, b;
    return ax;
}

}  // namespace

TEST_CASE("integration of the linear flow matches exp(tJ)") {
    const HamiltonianField H = round_field();
    Rng rng(1);
    const Vec z0 = rng.unit_vector(4);
    const Mat J = standard_symplectic(2);

    const Trajectory traj = integrate(H, z0, two_pi, 16);
    for (int m = 0; m <= 16; ++m) {
        const Mat expJ = oracles::expm(traj.times[m] * J);
        CHECK((traj.z.row(m).transpose() - expJ * z0).norm() < 1e-10);
    }
    CHECK(traj.energy_drift < 1e-10);

    // reversibility
    const Vec zT = flow(H, z0, two_pi);
    const Vec back = flow(H, zT, -two_pi);
    CHECK((back - z0).norm() < 1e-8);
}

TEST_CASE("energy drift on the ellipsoid stays below 1e-9 over a period") {
    const RawHamiltonian raw = make_ellipsoid(axes4(1.0, 1.15), 0.5);
    const HamiltonianField H = field_of(raw);
    Rng rng(2);
    Vec z0 = rng.unit_vector(4);
    z0 *= radial_root(raw, z0);
    const Trajectory traj = integrate(H, z0, two_pi, 8);
    CHECK(traj.energy_drift < 1e-9);
}

TEST_CASE("shooting residual: circle orbit, wrong period, periodic case") {
    const HamiltonianField H = round_field();
    Vec z0 = Vec::Zero(4);
    z0[0] = 1.0;
    const Mat I4 = Mat::Identity(4, 4);

    // H = |z|^2/2 flows with frequency 1: T = 2 pi closes the orbit
    CHECK(shooting_residual(H, I4, z0, two_pi) < 1e-9);
    CHECK(shooting_residual(H, I4, z0, 1.1 * two_pi) > 0.1);

    // rotating closure: Q = exp(theta J) at T = theta
    const double theta = 1.0;
    const Mat Q = oracles::expm(theta * standard_symplectic(2));
    CHECK(shooting_residual(H, Q, z0, theta) < 1e-9);
}

TEST_CASE("polish: fixed point, basin convergence, capture radius") {
    const HamiltonianField H = round_field();
    const SymplecticRotation sr = normal_form(Mat::Identity(4, 4));
    const int N = 64;

    OrbitSolution exact;
    exact.T = two_pi;
    exact.energy = 0.5;
    exact.z = Mat(N, 4);
    for (int m = 0; m < N; ++m) {
        const double t = two_pi * m / N;
        exact.z.row(m) << std::cos(t), 0.0, std::sin(t), 0.0;
    }
    const OrbitSolution polished = polish(H, sr, exact);
    CHECK_FALSE(polished.polish_failed);
    CHECK(polished.shooting <= 1e-10);
    CHECK(std::abs(polished.T - two_pi) < 1e-8);

    // perturbed start inside the capture radius converges on the ellipsoid
    const RawHamiltonian raw = make_ellipsoid(axes4(1.0, 1.1), 0.5);
    GaugeProblem gp(raw, 4.0 / 3.0);
    const HamiltonianField G = gauge_field(gp);
    OrbitSolution rough;
    rough.T = two_pi;  // gauge plane-0 circle at |z| = 1 has frequency 1
    rough.energy = gp.value(Vec(Vec::Unit(4, 0)));
    rough.z = Mat(N, 4);
    for (int m = 0; m < N; ++m) {
        const double t = two_pi * m / N;
        rough.z.row(m) << std::cos(t), 0.0, std::sin(t), 0.0;
    }
    rough.z.row(0) << 1.0 + 2e-4, 1e-4, 0.0, 0.0;  // ~1e-4 off the orbit
    const OrbitSolution fixed = polish(G, sr, rough);
    CHECK_FALSE(fixed.polish_failed);
    CHECK(fixed.shooting <= 1e-10);
    CHECK(fixed.energy_drift <= 1e-9);

    // far start is rejected unchanged
    OrbitSolution far = rough;
    far.z.row(0) << 2.0, 0.5, 0.0, 0.0;
    const OrbitSolution failed = polish(G, sr, far);
    CHECK(failed.polish_failed);
    CHECK((failed.z - far.z).norm() == 0.0);
}

TEST_CASE("energy normalization: identity case, scaling, flow consistency") {
    GaugeProblem gp(make_ellipsoid(Vec::Ones(4), 0.5), 4.0 / 3.0);
    const SymplecticRotation sr = normal_form(Mat::Identity(4, 4));
    const double q = gp.q();
    const int N = 64;

    // orbit already on the level 1/q: w = z
    OrbitSolution on_level;
    on_level.T = two_pi;
    on_level.z = Mat(N, 4);
    for (int m = 0; m < N; ++m) {
        const double t = two_pi * m / N;
        on_level.z.row(m) << std::cos(t), 0.0, std::sin(t), 0.0;
    }
    on_level.energy = gp.value(on_level.z.row(0).transpose());
    REQUIRE(on_level.energy == doctest::Approx(1.0 / q));
    const OrbitSolution same = normalize_energy(gp, sr, on_level, 16);
    CHECK(same.T == doctest::Approx(two_pi).epsilon(1e-12));
    CHECK((same.z - on_level.z).norm() < 1e-9);

    // scaled orbit: a radius-2 circle flows at frequency 2^{q-2}; its
    // normalization is the unit circle with period 2 pi
    const double rho = 2.0;
    const double freq = std::pow(rho, q - 2.0);
    OrbitSolution big;
    big.T = two_pi / freq;
    big.z = Mat(N, 4);
    for (int m = 0; m < N; ++m) {
        const double t = big.T * m / N;
        big.z.row(m) << rho * std::cos(freq * t), 0.0, rho * std::sin(freq * t), 0.0;
    }
    big.energy = gp.value(big.z.row(0).transpose());
    const OrbitSolution w = normalize_energy(gp, sr, big, 16);
    CHECK(w.energy == doctest::Approx(1.0 / q).epsilon(1e-10));
    const double amp = std::pow(q * big.energy, -1.0 / q);
    CHECK(w.z.row(0).norm() == doctest::Approx(rho * amp).epsilon(1e-8));
    CHECK(w.T == doctest::Approx(two_pi).epsilon(1e-10));

    // normalized orbit satisfies the gauge flow: shooting residual small
    const HamiltonianField G = gauge_field(gp);
    CHECK(shooting_residual(G, Mat::Identity(4, 4), w.z.row(0).transpose(), w.T) < 1e-7);
}

TEST_CASE("fingerprints are exactly shift invariant") {
    const SymplecticRotation sr = normal_form(Mat::Identity(4, 4));
    const FrequencyGrid grid = build_grid(sr, two_pi, 6);
    Rng rng(3);
    const RotatingLoop y = oracles::random_loop(grid, rng);
    const int N = 64;

    const auto fp1 = orbit_fingerprint(sr, synthesize(y, N), two_pi, 6);
    const auto fp2 = orbit_fingerprint(sr, synthesize(shift(y, 1.234), N), two_pi, 6);
    REQUIRE(fp1.size() == fp2.size());
    for (size_t i = 0; i < fp1.size(); ++i) {
        CHECK(fp1[i].plane == fp2[i].plane);
        CHECK(fp1[i].k == fp2[i].k);
        CHECK(fp1[i].magnitude == doctest::Approx(fp2[i].magnitude).epsilon(1e-12));
    }
}

TEST_CASE("distinctness: shifted copies same, plane circles distinct, monotone count") {
    const SymplecticRotation sr = normal_form(Mat::Identity(4, 4));
    const FrequencyGrid grid = build_grid(sr, two_pi, 6);
    const int N = 64;

    auto make_orbit = [&](const RotatingLoop& y, double d) {
        OrbitSolution o;
        o.z = synthesize(y, N);
        o.T = two_pi;
        o.energy = d;
        o.fingerprint = orbit_fingerprint(sr, o.z, two_pi, 6);
        return o;
    };

    RotatingLoop a(grid);
    a.coeffs[grid.index_of(0, 1)] = 0.8;
    RotatingLoop b(grid);
    b.coeffs[grid.index_of(1, 1)] = 0.6;

    const OrbitSolution oa = make_orbit(a, 0.75);
    const OrbitSolution oa_shift = make_orbit(shift(a, 0.9), 0.75);
    const OrbitSolution ob = make_orbit(b, 0.75);

    const Certificate c1 = distinctness_certificate(sr, {oa, oa_shift}, 6);
    CHECK(c1.count == 1);
    CHECK(c1.decisions[0][1] == "same");

    const Certificate c2 = distinctness_certificate(sr, {oa, ob}, 6);
    CHECK(c2.count == 2);
    CHECK(c2.decisions[0][1] == "distinct-fingerprint");

    const Certificate c3 = distinctness_certificate(sr, {oa, oa_shift, ob}, 6);
    CHECK(c3.count >= c2.count);
    CHECK(c3.count == 2);
}

// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure.  Run times are measured where the criterion carries a budget.
#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "rotorb/pipeline.hpp"
#include "support/oracles.hpp"

using namespace rotorb;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::ostringstream detail;

#define REQUIRE_THAT(cond, msg)                                     \
    do {                                                            \
        if (!(cond)) {                                              \
            detail << " | failed: " << msg;                         \
            return false;                                           \
        }                                                           \
    } while (0)

json make_spec(const std::string& q_preset, int n, const std::vector<double>& plane_axes,
               int K_max = 32, int N = 0) {
    json j;
    j["schema_version"] = 1;
    j["n"] = n;
    j["Q"] = q_preset;
    j["hamiltonian"] = {{"preset", "ellipsoid"}, {"axes", plane_axes}, {"beta", 0.5}};
    j["T"] = two_pi;
    j["discretization"] = {{"K_max", K_max}, {"N", N}};
    j["solver"] = {{"gtol", 1e-9}, {"max_iter", 5000}};
    return j;
}

std::vector<json> stash_round;      // C5 reports, reused by C7
std::vector<json> stash_ellipsoid;  // C6 reports, reused by C7 and C9

// ---------------------------------------------------------------------------
bool c1_normal_form_reconstruction() {
    Timer timer;
    Rng rng(101);
    for (int i = 0; i < 100; ++i) {
        const int n = 1 + i % 6;
        const Mat Q = oracles::random_symplectic_orthogonal(n, rng);
        const SymplecticRotation sr = normal_form(Q);
        const double defect = (rotation_path(sr, tilde_angles(sr), 1.0, 1.0) - Q).norm();
        REQUIRE_THAT(defect <= 1e-10, "reconstruction defect " << defect << " at i=" << i);
    }
    const double secs = timer.seconds();
    detail << "100 matrices, n in 1..6, " << secs << " s";
    REQUIRE_THAT(secs < 5.0, "runtime " << secs << " s over budget");
    return true;
}

// ---------------------------------------------------------------------------
bool c2_operator_K_equivalence() {
    const std::vector<std::pair<std::string, int>> qs = {
        {"identity", 2}, {"rotation:[1.3,0.0]", 2}, {"rotation:[0.9,2.2,4.0]", 3}, {"neg-identity", 2}};
    Rng rng(202);
    double worst = 0.0;
    int done = 0;
    for (int i = 0; i < 20; ++i) {
        const auto& [preset, n] = qs[static_cast<size_t>(i % 4)];
        const SymplecticRotation sr = normal_form(matrix_from_preset(preset, n));
        const FrequencyGrid grid = build_grid(sr, two_pi, 16);
        const RotatingLoop y = oracles::random_loop(grid, rng, 0.8);
        const int N = 256;
        const Mat oracle = oracles::time_domain_K(y, N, 64);
        const Mat spectral = synthesize(apply_K(y), N);
        const double rel = (oracle - spectral).norm() / spectral.norm();
        worst = std::max(worst, rel);
        ++done;
    }
    detail << done << " loops, worst relative L2 error " << worst;
    REQUIRE_THAT(worst <= 1e-8, "relative error " << worst);
    return true;
}

// ---------------------------------------------------------------------------
bool c3_circle_pairings() {
    const std::vector<std::pair<std::string, int>> qs = {
        {"identity", 3}, {"rotation:[0.7,2.9,0.0]", 3}, {"neg-identity", 2}};
    double worst = 0.0;
    for (const auto& [preset, n] : qs) {
        const SymplecticRotation sr = normal_form(matrix_from_preset(preset, n));
        const FrequencyGrid grid = build_grid(sr, two_pi, 8);
        double maxval = -1e300;
        for (int j = 0; j < n; ++j) {
            RotatingLoop z(grid);
            const int kb = sr.theta[static_cast<size_t>(j)] == 0.0 ? 1 : 0;
            z.coeffs[grid.index_of(j, kb)] = 1.0 / std::sqrt(2.0);
            const double got = quadratic_form(z);
            const double expect = two_pi * two_pi / sr.tilde_angle(j);
            worst = std::max(worst, std::abs(got - expect) / expect);
            maxval = std::max(maxval, got);
        }
        const double b = two_pi * two_pi / tilde_angles(sr).min();
        worst = std::max(worst, std::abs(maxval - b) / b);
    }
    detail << "worst relative error " << worst;
    REQUIRE_THAT(worst <= 1e-8, "pairing error " << worst);
    return true;
}

// ---------------------------------------------------------------------------
bool c4_legendre_correctness() {
    Rng rng(404);
    Vec ax(4);
    ax << 1.0, 1.12, 1.0, 1.12;

    // generic (iterative) and closed-form gauges
    RawHamiltonian bare;
    {
        RawHamiltonian full = make_ellipsoid(ax, 0.5);
        bare.value = full.value;
        bare.grad = full.grad;
        bare.beta = 0.5;
        bare.dim = 4;
    }
    GaugeProblem generic(bare, 4.0 / 3.0);
    GaugeProblem fast(make_ellipsoid(ax, 0.5), 4.0 / 3.0);

    double worst_rt = 0.0;
    for (int i = 0; i < 30; ++i) {
        const Vec z = rng.uniform(0.3, 2.0) * rng.unit_vector(4);
        for (const GaugeProblem* gp : {&generic, &fast}) {
            const Vec y = gp->eval(z).second;
            const Vec back = gp->legendre(y).second;
            worst_rt = std::max(worst_rt, (back - z).norm() / z.norm());
        }
    }
    REQUIRE_THAT(worst_rt <= 1e-6, "round trip error " << worst_rt);

    fast.set_pinch(pinch_estimate(fast.raw(), 512));
    const BoundsCheck bc = legendre_bounds_check(fast, 1000);
    REQUIRE_THAT(bc.worst_margin >= -1e-9, "bounds margin " << bc.worst_margin);

    // gradient of the dual action against central finite differences
    const SymplecticRotation sr = normal_form(matrix_from_preset("rotation:[1.0,2.2]", 2));
    const FrequencyGrid grid = build_grid(sr, two_pi, 8);
    const int N = 64;
    double worst_fd = 0.0;
    for (int rep = 0; rep < 2; ++rep) {
        RotatingLoop y = oracles::random_loop(grid, rng);
        y.coeffs *= 0.5;
        const RotatingLoop g = gradient(fast, y, N);
        for (int dir = 0; dir < 10; ++dir) {
            RotatingLoop h = oracles::random_loop(grid, rng);
            h.coeffs /= loop_norm(h);
            const double eps = 1e-5;
            RotatingLoop yp = y, ym = y;
            yp.coeffs += eps * h.coeffs;
            ym.coeffs -= eps * h.coeffs;
            const double fd = (energy(fast, yp, N) - energy(fast, ym, N)) / (2 * eps);
            const double an = pairing(g, h);
            worst_fd = std::max(worst_fd, std::abs(an - fd) / std::max(1.0, std::abs(fd)));
        }
    }
    detail << "round trip " << worst_rt << ", bounds margin " << bc.worst_margin << ", FD "
           << worst_fd;
    REQUIRE_THAT(worst_fd <= 1e-5, "finite difference mismatch " << worst_fd);
    return true;
}

// ---------------------------------------------------------------------------
bool c5_round_instances() {
    Timer timer;
    stash_round.clear();
    for (const std::string preset : {std::string("identity"), std::string("rotation:[1.0]")}) {
        for (int n = 1; n <= 3; ++n) {
            const json spec_json = make_spec(preset, n, std::vector<double>(static_cast<size_t>(n), 1.0), 16, 128);
            const ProblemSpec spec = parse_problem(spec_json);
            const SolveOutcome out = run_solve(spec, "");
            REQUIRE_THAT(out.exit_code == 0, preset << " n=" << n << " exit " << out.exit_code
                                                    << ": " << out.report.dump());
            const json& res = out.report.at("result");
            const double p = res.at("gauge").at("p").get<double>();
            const double tilde1 = res.at("normal_form").at("tilde")[0].get<double>();
            const double closed = oracles::round_single_mode_minimum(two_pi, tilde1, p);
            for (const auto& oj : res.at("orbits")) {
                const double shoot = oj.at("polished").at("shooting_residual").get<double>();
                const double drift = oj.at("polished").at("energy_drift").get<double>();
                const double E = oj.at("achieved_energy").get<double>();
                REQUIRE_THAT(shoot <= 1e-10,
                             preset << " n=" << n << " polished residual " << shoot);
                REQUIRE_THAT(drift <= 1e-9, preset << " n=" << n << " drift " << drift);
                REQUIRE_THAT(std::abs(E - closed) <= 1e-6 * (1.0 + std::abs(closed)),
                             preset << " n=" << n << " energy " << E << " vs closed " << closed);
            }
            stash_round.push_back(res);
        }
    }
    const double secs = timer.seconds();
    detail << "6 instances, " << secs << " s";
    REQUIRE_THAT(secs < 30.0, "runtime " << secs << " s over budget");
    return true;
}

// ---------------------------------------------------------------------------
bool c6_multiplicity_desk_scale() {
    stash_ellipsoid.clear();
    const std::vector<std::string> presets = {"identity", "neg-identity", "rotation:[2.0943951023931953]",
                                              "rotation:[1.0]"};
    for (const auto& preset : presets) {
        for (int n = 2; n <= 3; ++n) {
            Timer timer;
            std::vector<double> axes;
            for (int j = 0; j < n; ++j) axes.push_back(1.0 + 0.18 * j / std::max(1, n - 1));
            const ProblemSpec spec = parse_problem(make_spec(preset, n, axes));
            const SolveOutcome out = run_solve(spec, "");
            REQUIRE_THAT(out.exit_code == 0, preset << " n=" << n << " exit " << out.exit_code);
            const json& res = out.report.at("result");
            const int count = res.at("certificate").at("count").get<int>();
            const double secs = timer.seconds();
            REQUIRE_THAT(count >= n, preset << " n=" << n << " certificate count " << count);
            REQUIRE_THAT(secs < 300.0, preset << " n=" << n << " runtime " << secs << " s");
            stash_ellipsoid.push_back(res);
        }
    }
    detail << stash_ellipsoid.size() << " instances certified";
    return true;
}

// ---------------------------------------------------------------------------
bool c7_inequality_ledger() {
    int checked = 0, subperiod_checked = 0;
    for (const auto* stash : {&stash_round, &stash_ellipsoid}) {
        for (const json& res : *stash) {
            const json& led = res.at("ledger");
            REQUIRE_THAT(led.at("m_hat").get<double>() < 0.0, "m_hat not negative");
            for (const auto& e : led.at("entries")) {
                const std::string status = e.at("status").get<std::string>();
                REQUIRE_THAT(status != "fail",
                             "ledger entry failed: " << e.at("name").get<std::string>()
                                                     << " in report " << checked);
                if (e.at("name").get<std::string>().rfind("sub-period", 0) == 0 &&
                    status == "pass")
                    ++subperiod_checked;
            }
            ++checked;
        }
    }
    REQUIRE_THAT(checked > 0, "no reports collected (criteria 5/6 must run first)");
    REQUIRE_THAT(subperiod_checked > 0, "no sub-period inequality was ever verified");
    detail << checked << " ledgers, " << subperiod_checked << " with the sub-period bound";
    return true;
}

// ---------------------------------------------------------------------------
bool c8_equivariance_suite() {
    Rng rng(808);
    const SymplecticRotation sr = normal_form(matrix_from_preset("rotation:[1.1,0.0]", 2));
    const FrequencyGrid grid = build_grid(sr, two_pi, 12);
    Vec ax(4);
    ax << 1.0, 1.1, 1.0, 1.1;
    GaugeProblem gp(make_ellipsoid(ax, 0.5), 4.0 / 3.0);
    const int N = 128;

    RotatingLoop y = oracles::random_loop(grid, rng);
    y.coeffs *= 0.4;
    const double E = energy(gp, y, N);
    double worst_e = 0.0;
    for (double s : {0.37, -1.9, 4.4, 11.0})
        worst_e = std::max(worst_e, std::abs(energy(gp, shift(y, s), N) - E));
    REQUIRE_THAT(worst_e <= 1e-10, "energy shift invariance " << worst_e);

    // fingerprints shift-invariant
    const auto fp1 = orbit_fingerprint(sr, synthesize(y, N), two_pi, 12);
    const auto fp2 = orbit_fingerprint(sr, synthesize(shift(y, 2.13), N), two_pi, 12);
    REQUIRE_THAT(fp1.size() == fp2.size(), "fingerprint size changed under shift");
    double worst_fp = 0.0;
    for (size_t i = 0; i < fp1.size(); ++i)
        worst_fp = std::max(worst_fp, std::abs(fp1[i].magnitude - fp2[i].magnitude));
    REQUIRE_THAT(worst_fp <= 1e-12, "fingerprint invariance " << worst_fp);

    // shift group law
    const RotatingLoop lhs = shift(shift(y, 0.7), -2.9);
    const RotatingLoop rhs = shift(y, 0.7 - 2.9);
    REQUIRE_THAT((lhs.coeffs - rhs.coeffs).norm() <= 1e-12, "group law");

    // rotating boundary condition
    double worst_bc = 0.0;
    for (int m = 0; m < 64; ++m) {
        const double t = two_pi * m / 64;
        worst_bc = std::max(worst_bc,
                            (loop_eval(y, t + two_pi) - sr.Q * loop_eval(y, t)).norm());
    }
    REQUIRE_THAT(worst_bc <= 1e-10, "boundary condition " << worst_bc);
    detail << "shift invariance " << worst_e << ", BC residual " << worst_bc;
    return true;
}

// ---------------------------------------------------------------------------
bool c9_reparametrization() {
    REQUIRE_THAT(!stash_ellipsoid.empty(), "criterion 6 must run first");
    double worst = 0.0;
    int checked = 0;
    for (const json& res : stash_ellipsoid) {
        for (const auto& oj : res.at("orbits")) {
            if (!oj.contains("raw") || oj.at("raw").is_null()) continue;
            const double shoot = oj.at("raw").at("shooting_residual").get<double>();
            worst = std::max(worst, shoot);
            ++checked;
        }
    }
    REQUIRE_THAT(checked > 0, "no reparametrized orbits found");
    detail << checked << " raw orbits, worst shooting residual " << worst;
    REQUIRE_THAT(worst <= 1e-6, "raw-flow residual " << worst);
    return true;
}

struct Criterion {
    std::string name;
    std::function<bool()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"C1 normal-form reconstruction", c1_normal_form_reconstruction},
        {"C2 operator-K equivalence", c2_operator_K_equivalence},
        {"C3 circle pairings T^2/tilde", c3_circle_pairings},
        {"C4 Legendre correctness", c4_legendre_correctness},
        {"C5 round instances end-to-end", c5_round_instances},
        {"C6 multiplicity at desk scale", c6_multiplicity_desk_scale},
        {"C7 inequality ledger", c7_inequality_ledger},
        {"C8 equivariance suite", c8_equivariance_suite},
        {"C9 reparametrization", c9_reparametrization},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        detail.str("");
        bool ok = false;
        std::string error;
        try {
            ok = c.run();
        } catch (const std::exception& e) {
            error = e.what();
        }
        if (ok) {
            std::printf("[PASS] %s (%s)\n", c.name.c_str(), detail.str().c_str());
        } else {
            ++failures;
            std::printf("[FAIL] %s (%s%s)\n", c.name.c_str(), detail.str().c_str(), error.c_str());
        }
        std::fflush(stdout);
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}

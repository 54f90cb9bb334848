#include "rotorb/verifier.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

namespace rotorb {

HamiltonianField field_of(const RawHamiltonian& raw) { return {raw.value, raw.grad}; }

HamiltonianField gauge_field(const GaugeProblem& gp) {
    return {[&gp](const Vec& z) { return gp.value(z); },
            [&gp](const Vec& z) { return gp.eval(z).second; }};
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double A21 = 1.0 / 5.0;
constexpr double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0;
constexpr double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0;
constexpr double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0, A53 = 64448.0 / 6561.0,
                 A54 = -212.0 / 729.0;
constexpr double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0,
                 A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0;
constexpr double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0,
                 B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0;
constexpr double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0,
                 E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0;

struct Stepper {
    const HamiltonianField& H;
    Mat J;

    Vec rhs(const Vec& z) const { return J * H.grad(z); }

    // One attempted step; returns the error estimate norm and the candidate.
    std::pair<Vec, double> attempt(const Vec& z, const Vec& k1, double h, Vec& k7_out) const {
        const Vec k2 = rhs(z + h * (A21 * k1));
        const Vec k3 = rhs(z + h * (A31 * k1 + A32 * k2));
        const Vec k4 = rhs(z + h * (A41 * k1 + A42 * k2 + A43 * k3));
        const Vec k5 = rhs(z + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
        const Vec k6 = rhs(z + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
        const Vec z_new = z + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        const Vec k7 = rhs(z_new);
        const Vec err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        k7_out = k7;
        return {z_new, err.norm()};
    }
};

}  // namespace

Trajectory integrate(const HamiltonianField& H, const Vec& z0, double T, int n_out,
                     const IntegratorOptions& opts) {
    const int dim = static_cast<int>(z0.size());
    if (dim % 2 != 0) throw InputError("state dimension must be even");
    Stepper stepper{H, standard_symplectic(dim / 2)};

    Trajectory out;
    out.times = Vec::LinSpaced(n_out + 1, 0.0, T);
    out.z = Mat(n_out + 1, dim);
    out.z.row(0) = z0.transpose();

    const double sign = T >= 0 ? 1.0 : -1.0;
    const double e0 = H.value(z0);
    double e_min = e0, e_max = e0;

    Vec z = z0;
    double t = 0.0;
    double h = sign * std::min(opts.initial_step, std::abs(T));
    Vec k1 = stepper.rhs(z);
    int next_out = 1;

    while (sign * (T - t) > 0 && next_out <= n_out) {
        if (out.steps++ > opts.max_steps) throw NumericalError("integrator exceeded step budget");
        double t_target = out.times[next_out];
        if (sign * (t + h - t_target) > 0) h = t_target - t;
        if (std::abs(h) < 1e-15 * std::max(1.0, std::abs(T)))
            throw NumericalError("integrator step size underflow");

        Vec k7;
        auto [z_new, err] = stepper.attempt(z, k1, h, k7);
        if (!z_new.allFinite()) throw NumericalError("non-finite state during integration");
        const double tol = opts.abs_tol + opts.rel_tol * std::max(z.norm(), z_new.norm());
        if (err <= tol * std::sqrt(static_cast<double>(dim))) {
            t += h;
            z = z_new;
            k1 = k7;  // FSAL
            const double e = H.value(z);
            e_min = std::min(e_min, e);
            e_max = std::max(e_max, e);
            if (std::abs(t - t_target) < 1e-14 * std::max(1.0, std::abs(T))) {
                out.z.row(next_out) = z.transpose();
                ++next_out;
            }
        }
        const double scale = err > 0 ? 0.9 * std::pow(tol * std::sqrt(static_cast<double>(dim)) / err, 0.2) : 5.0;
        h *= std::clamp(scale, 0.2, 5.0);
    }
    while (next_out <= n_out) {
        out.z.row(next_out) = z.transpose();
        ++next_out;
    }
    out.energy_drift = e_max - e_min;
    return out;
}

Vec flow(const HamiltonianField& H, const Vec& z0, double T, const IntegratorOptions& opts) {
    return integrate(H, z0, T, 1, opts).z.row(1).transpose();
}

double shooting_residual(const HamiltonianField& H, const Mat& Q, const Vec& z0, double T,
                         const IntegratorOptions& opts) {
    return (flow(H, z0, T, opts) - Q * z0).norm();
}

std::vector<FingerprintEntry> orbit_fingerprint(const SymplecticRotation& sr, const Mat& z,
                                                double T, int K_max, double threshold_frac) {
    const int N = static_cast<int>(z.rows());
    const int K = std::min(K_max, (N - 2) / 2);
    const Vec mean = z.colwise().mean();
    Mat osc = z;
    osc.rowwise() -= fixed_projection(sr, mean).projection.transpose();
    const FrequencyGrid grid = build_grid(sr, T, K);
    const RotatingLoop loop = analyze(osc, grid);

    double max_mag = 0.0;
    for (int i = 0; i < grid.size(); ++i) max_mag = std::max(max_mag, std::abs(loop.coeffs[i]));
    std::vector<FingerprintEntry> fp;
    for (int i = 0; i < grid.size(); ++i) {
        const double m = std::abs(loop.coeffs[i]);
        if (m > threshold_frac * max_mag) {
            fp.push_back({grid.entries[static_cast<size_t>(i)].plane, grid.entries[static_cast<size_t>(i)].k, m});
        }
    }
    std::sort(fp.begin(), fp.end(), [](const FingerprintEntry& a, const FingerprintEntry& b) {
        return std::tie(a.plane, a.k) < std::tie(b.plane, b.k);
    });
    return fp;
}

OrbitSolution polish(const HamiltonianField& H, const SymplecticRotation& sr,
                     const OrbitSolution& orbit, const PolishOptions& opts) {
    const int dim = sr.dim();
    Vec z0 = orbit.z.row(0).transpose();
    double T = orbit.T;
    const double d = orbit.energy;
    const Vec anchor = z0;
    const Vec anchor_dir = standard_symplectic(sr.n) * H.grad(anchor);

    auto residual_vec = [&](const Vec& z, double period) {
        Vec F(dim + 2);
        F.head(dim) = flow(H, z, period, opts.integ) - sr.Q * z;
        F[dim] = (z - anchor).dot(anchor_dir);
        F[dim + 1] = H.value(z) - d;
        return F;
    };

    Vec F = residual_vec(z0, T);
    if (F.head(dim).norm() > opts.capture_radius) {
        OrbitSolution out = orbit;
        out.polish_failed = true;
        return out;
    }

    bool ok = false;
    for (int it = 0; it < opts.max_newton; ++it) {
        if (F.head(dim).norm() <= opts.target_residual) {
            ok = true;
            break;
        }
        // Finite-difference Jacobian in (z0, T).
        Mat Jac(dim + 2, dim + 1);
        for (int c = 0; c < dim; ++c) {
            Vec zp = z0, zm = z0;
            const double eps = opts.fd_step * std::max(1.0, std::abs(z0[c]));
            zp[c] += eps;
            zm[c] -= eps;
            Jac.col(c) = (residual_vec(zp, T) - residual_vec(zm, T)) / (2 * eps);
        }
        const double epsT = opts.fd_step * std::max(1.0, std::abs(T));
        Jac.col(dim) = (residual_vec(z0, T + epsT) - residual_vec(z0, T - epsT)) / (2 * epsT);

        const Vec step = Jac.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV)
                             .setThreshold(1e-12)
                             .solve(F);
        if (!step.allFinite()) break;
        z0 -= step.head(dim);
        T -= step[dim];
        if (T <= 0 || (z0 - anchor).norm() > 10 * opts.capture_radius * (1.0 + anchor.norm())) break;
        F = residual_vec(z0, T);
    }
    if (!ok && F.head(dim).norm() > opts.target_residual) {
        OrbitSolution out = orbit;
        out.polish_failed = true;
        return out;
    }

    OrbitSolution out;
    const int N = static_cast<int>(orbit.z.rows());
    Trajectory traj = integrate(H, z0, T, N, opts.integ);
    out.z = traj.z.topRows(N);
    out.T = T;
    out.energy = H.value(z0);
    out.shooting = F.head(dim).norm();
    out.energy_drift = traj.energy_drift;
    out.fingerprint = orbit_fingerprint(sr, out.z, T, std::max(8, (N - 2) / 2));
    out.source = "polished";
    return out;
}

OrbitSolution normalize_energy(const GaugeProblem& gp, const SymplecticRotation& sr,
                               const OrbitSolution& orbit, int K_max) {
    const double d = orbit.energy;
    if (d <= 0) throw InputError("energy level must be positive for normalization");
    const double q = gp.q();
    const double amp = std::pow(q * d, -1.0 / q);
    const double time_scale = std::pow(q * d, (2.0 - q) / q);  // w(t) = amp * z(time_scale * t)
    const double T_new = std::pow(q * d, (q - 2.0) / q) * orbit.T;

    // Resample through the twisted trigonometric representation so the new
    // samples are uniform over the new period.
    const int N = static_cast<int>(orbit.z.rows());
    const Vec mean = orbit.z.colwise().mean();
    const Vec z0 = fixed_projection(sr, mean).projection;
    Mat osc = orbit.z;
    osc.rowwise() -= z0.transpose();
    const FrequencyGrid grid = build_grid(sr, orbit.T, std::min(K_max, (N - 2) / 2));
    const RotatingLoop loop = analyze(osc, grid);

    OrbitSolution out;
    out.T = T_new;
    out.z = Mat(N, orbit.z.cols());
    for (int m = 0; m < N; ++m) {
        const double t_old = time_scale * (T_new * m / N);
        out.z.row(m) = amp * (loop_eval(loop, t_old) + z0).transpose();
    }
    out.energy = gp.value(out.z.row(0).transpose());
    out.shooting = orbit.shooting * amp;
    out.energy_drift = orbit.energy_drift;
    out.fingerprint = orbit_fingerprint(sr, out.z, T_new, grid.K_max);
    out.source = orbit.source;
    out.polish_failed = orbit.polish_failed;
    return out;
}

namespace {

double fingerprint_l2_gap(const std::vector<FingerprintEntry>& a,
                          const std::vector<FingerprintEntry>& b) {
    double acc = 0.0;
    size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (i < a.size() && j < b.size() && a[i].plane == b[j].plane && a[i].k == b[j].k) {
            acc += (a[i].magnitude - b[j].magnitude) * (a[i].magnitude - b[j].magnitude);
            ++i;
            ++j;
        } else if (j >= b.size() ||
                   (i < a.size() && std::tie(a[i].plane, a[i].k) < std::tie(b[j].plane, b[j].k))) {
            acc += a[i].magnitude * a[i].magnitude;
            ++i;
        } else {
            acc += b[j].magnitude * b[j].magnitude;
            ++j;
        }
    }
    return std::sqrt(acc);
}

double fingerprint_scale(const std::vector<FingerprintEntry>& fp) {
    double m = 0.0;
    for (const auto& e : fp) m = std::max(m, e.magnitude);
    return m;
}

}  // namespace

Certificate distinctness_certificate(const SymplecticRotation& sr,
                                     const std::vector<OrbitSolution>& orbits, int K_max,
                                     double tol_fp_frac, double tol_dist_frac) {
    const int m = static_cast<int>(orbits.size());
    Certificate cert;
    cert.decisions.assign(static_cast<size_t>(m), std::vector<std::string>(static_cast<size_t>(m), "same"));
    if (m == 0) return cert;

    for (const auto& o : orbits) {
        if (std::abs(o.energy - orbits.front().energy) > 1e-6 * (1.0 + std::abs(o.energy)))
            throw InputError("orbits are not normalized to a common energy level");
    }

    // Common-period loops for the distance stage.  Orbits are compared in
    // their own period convention; pairs with mismatched periods cannot be
    // the same orbit and are separated by the period gap.
    std::vector<RotatingLoop> loops;
    loops.reserve(static_cast<size_t>(m));
    for (const auto& o : orbits) {
        const int N = static_cast<int>(o.z.rows());
        const Vec mean = o.z.colwise().mean();
        Mat osc = o.z;
        osc.rowwise() -= fixed_projection(sr, mean).projection.transpose();
        loops.push_back(analyze(osc, build_grid(sr, o.T, std::min(K_max, (N - 2) / 2))));
    }

    double scale = 0.0;
    for (const auto& o : orbits) scale = std::max(scale, fingerprint_scale(o.fingerprint));
    cert.tol_fp = tol_fp_frac * scale;

    std::vector<int> parent(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) parent[static_cast<size_t>(i)] = i;
    std::function<int(int)> find = [&](int x) {
        while (parent[static_cast<size_t>(x)] != x) x = parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
        return x;
    };

    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            std::string decision;
            if (std::abs(orbits[static_cast<size_t>(i)].T - orbits[static_cast<size_t>(j)].T) >
                1e-8 * (1.0 + std::abs(orbits[static_cast<size_t>(i)].T))) {
                decision = "distinct-period";
            } else if (fingerprint_l2_gap(orbits[static_cast<size_t>(i)].fingerprint,
                                          orbits[static_cast<size_t>(j)].fingerprint) > cert.tol_fp) {
                decision = "distinct-fingerprint";
            } else {
                const double nrm = std::max(loop_norm(loops[static_cast<size_t>(i)]), 1e-300);
                const double tol_dist = tol_dist_frac * nrm;
                cert.tol_dist = tol_dist;
                const double dist = loops[static_cast<size_t>(i)].grid.same_layout(loops[static_cast<size_t>(j)].grid)
                                        ? orbit_distance(loops[static_cast<size_t>(i)], loops[static_cast<size_t>(j)])
                                        : std::numeric_limits<double>::infinity();
                decision = dist > tol_dist ? "distinct-distance" : "same";
            }
            cert.decisions[static_cast<size_t>(i)][static_cast<size_t>(j)] = decision;
            cert.decisions[static_cast<size_t>(j)][static_cast<size_t>(i)] = decision;
            if (decision == "same") parent[static_cast<size_t>(find(i))] = find(j);
        }
    }
    int classes = 0;
    for (int i = 0; i < m; ++i)
        if (find(i) == i) ++classes;
    cert.count = classes;
    return cert;
}

}  // namespace rotorb

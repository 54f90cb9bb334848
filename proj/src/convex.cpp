#include "rotorb/convex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rotorb/loop_space.hpp"

namespace rotorb {

RawHamiltonian make_ellipsoid(const Vec& axes, double beta) {
    if (beta <= 0) throw InputError("beta must be positive");
    if ((axes.array() <= 0).any()) throw InputError("ellipsoid axes must be positive");
    RawHamiltonian h;
    const Vec a2 = axes.array().square();
    h.value = [a2](const Vec& z) { return 0.5 * (z.array().square() / a2.array()).sum(); };
    h.grad = [a2](const Vec& z) { return (z.array() / a2.array()).matrix().eval(); };
    h.beta = beta;
    h.name = "ellipsoid";
    // Support data of C = {H <= beta}: h_C(y) = sqrt(2 beta) |D y| with
    // D = diag(axes); maximizer sqrt(2 beta) D^2 y / |D y|.
    const Vec ax = axes;
    h.support = [ax, beta](const Vec& y) {
        return std::sqrt(2.0 * beta) * (ax.array() * y.array()).matrix().norm();
    };
    h.support_point = [ax, beta](const Vec& y) {
        const Vec Dy = (ax.array() * y.array()).matrix();
        const double nDy = Dy.norm();
        if (nDy == 0.0) return Vec(Vec::Zero(y.size()));
        return Vec(std::sqrt(2.0 * beta) * (ax.array().square() * y.array()).matrix() / nDy);
    };
    h.radial_exact = [a2, beta](const Vec& zeta) {
        return std::sqrt(2.0 * beta / (zeta.array().square() / a2.array()).sum());
    };
    h.dim = static_cast<int>(axes.size());
    return h;
}

RawHamiltonian make_plane_quartic(const Vec& omega, double eps, double beta) {
    if (beta <= 0) throw InputError("beta must be positive");
    if ((omega.array() <= 0).any() || eps < 0) throw InputError("quartic needs positive plane frequencies and eps >= 0");
    const int n = static_cast<int>(omega.size());
    RawHamiltonian h;
    h.value = [omega, eps, n](const Vec& z) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
            const double r2 = z[j] * z[j] + z[n + j] * z[n + j];
            acc += 0.5 * omega[j] * r2 + eps * r2 * r2;
        }
        return acc;
    };
    h.grad = [omega, eps, n](const Vec& z) {
        Vec g(2 * n);
        for (int j = 0; j < n; ++j) {
            const double r2 = z[j] * z[j] + z[n + j] * z[n + j];
            const double f = omega[j] + 4.0 * eps * r2;
            g[j] = f * z[j];
            g[n + j] = f * z[n + j];
        }
        return g;
    };
    h.beta = beta;
    h.dim = 2 * n;
    h.name = "plane-quartic";
    return h;
}

double sampled_symmetry_defect(const RawHamiltonian& raw, const Mat& Q, int samples, uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        const Vec zeta = rng.unit_vector(Q.rows());
        const Vec z = radial_root(raw, zeta) * zeta;
        const double hz = raw.value(z);
        worst = std::max(worst, std::abs(raw.value(Q * z) - hz) / (1.0 + std::abs(hz)));
    }
    return worst;
}

double surface_gradient_floor(const RawHamiltonian& raw, int samples, uint64_t seed) {
    if (raw.dim <= 0) throw InputError("raw Hamiltonian dimension not set");
    Rng rng(seed);
    double floor = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        const Vec zeta = rng.unit_vector(raw.dim);
        floor = std::min(floor, raw.grad(radial_root(raw, zeta) * zeta).norm());
    }
    return floor;
}

double radial_root(const RawHamiltonian& raw, const Vec& zeta, double tol_root) {
    if (raw.radial_exact) return raw.radial_exact(zeta);
    const double beta = raw.beta;
    if (raw.value(Vec::Zero(zeta.size())) >= beta) throw InputError("H(0) must lie below the level beta");

    double lo = 0.0, hi = 1.0;
    int doublings = 0;
    while (raw.value(hi * zeta) < beta) {
        lo = hi;
        hi *= 2.0;
        if (++doublings > 200) throw NumericalError("no surface crossing found along the ray");
    }
    // Safeguarded Newton inside [lo, hi].
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double f = raw.value(x * zeta) - beta;
        if (f > 0)
            hi = x;
        else
            lo = x;
        const double df = raw.grad(x * zeta).dot(zeta);
        double step = df != 0.0 ? f / df : 0.0;
        double next = x - step;
        if (!(next > lo && next < hi) || step == 0.0) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= tol_root * std::max(1.0, x)) return next;
        x = next;
    }
    if (hi - lo > 1e-8) throw NumericalError("radial root-finder did not converge");
    return x;
}

namespace {

// Sphere-gradient walk to a local extremum of r(zeta).  sign = +1 maximizes,
// -1 minimizes.
double refine_radius(const RawHamiltonian& raw, Vec zeta, int sign, int iters) {
    double r = radial_root(raw, zeta);
    for (int it = 0; it < iters; ++it) {
        const Vec g = raw.grad(r * zeta);
        const double gn = g.dot(zeta);
        // d r(zeta)[w] = -r <grad H, w> / <grad H, zeta> for w tangent.
        Vec grad_sphere = -(r / gn) * (g - gn * zeta);
        grad_sphere -= grad_sphere.dot(zeta) * zeta;
        if (grad_sphere.norm() < 1e-13) break;
        double step = 0.5;
        bool moved = false;
        for (int ls = 0; ls < 40; ++ls) {
            Vec cand = (zeta + sign * step * grad_sphere).normalized();
            const double rc = radial_root(raw, cand);
            if (sign * (rc - r) > 0) {
                zeta = cand;
                r = rc;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    return r;
}

}  // namespace

PinchEstimate pinch_estimate(const RawHamiltonian& raw, int samples, uint64_t seed) {
    if (raw.dim <= 0) throw InputError("raw Hamiltonian dimension not set");
    Rng rng(seed);
    PinchEstimate pe;
    Vec zeta_min, zeta_max;
    for (int i = 0; i < samples; ++i) {
        const Vec zeta = rng.unit_vector(raw.dim);
        const double r = radial_root(raw, zeta);
        if (i == 0 || r < pe.r_in) {
            pe.r_in = r;
            zeta_min = zeta;
        }
        if (i == 0 || r > pe.R_out) {
            pe.R_out = r;
            zeta_max = zeta;
        }
    }
    pe.r_in = std::min(pe.r_in, refine_radius(raw, zeta_min, -1, 100));
    pe.R_out = std::max(pe.R_out, refine_radius(raw, zeta_max, +1, 100));
    pe.pinched = pe.R_out < std::sqrt(2.0) * pe.r_in;
    return pe;
}

std::pair<double, double> choose_exponent(const TildeAngles& tilde, double r_in, double R_out,
                                          double p_min) {
    if (!(R_out < std::sqrt(2.0) * r_in)) throw InputError("surface is not pinched: R >= sqrt(2) r");
    const double ratio = tilde.max() / tilde.min();  // >= 1
    double p = p_min;
    if (ratio > 1.0) {
        const double p_req = std::log(ratio) / std::log(std::sqrt(2.0) * r_in / R_out);
        p = std::max(p_min, std::ceil(1.1 * p_req));
    }
    return {p, p / (p - 1.0)};
}

GaugeProblem::GaugeProblem(RawHamiltonian raw, double q, double tol_root)
    : raw_(std::move(raw)), q_(q), p_(q / (q - 1.0)), tol_root_(tol_root) {
    if (!(q > 1.0 && q < 2.0)) throw InputError("gauge exponent q must lie in (1, 2)");
}

double GaugeProblem::radial(const Vec& zeta) const { return radial_root(raw_, zeta, tol_root_); }

double GaugeProblem::value(const Vec& z) const {
    const double nz = z.norm();
    if (nz == 0.0) return 0.0;
    const double r = radial(z / nz);
    return std::pow(nz / r, q_) / q_;
}

std::pair<double, Vec> GaugeProblem::eval(const Vec& z) const {
    const double nz = z.norm();
    if (nz == 0.0) throw InputError("gauge gradient undefined at the origin");
    const double r = radial(z / nz);
    const double G = nz / r;
    const Vec zS = z / G;
    const Vec gH = raw_.grad(zS);
    const double denom = zS.dot(gH);
    if (denom <= 0) throw ValidationError("convexity violation: <z_S, grad H(z_S)> <= 0");
    const Vec gradG = gH / denom;
    return {std::pow(G, q_) / q_, std::pow(G, q_ - 1.0) * gradG};
}

std::pair<double, Vec> GaugeProblem::support(const Vec& y) const {
    const double ny = y.norm();
    if (ny == 0.0) return {0.0, Vec::Zero(y.size())};
    if (raw_.support && raw_.support_point) return {raw_.support(y), raw_.support_point(y)};

    // Projected gradient ascent of <z, y> over S, warm-started at the radial
    // point in the direction of y.
    Vec zeta = y / ny;
    double r = radial(zeta);
    Vec z = r * zeta;
    double f = z.dot(y);
    for (int it = 0; it < 300; ++it) {
        const Vec g = raw_.grad(z);
        const Vec nrm = g / g.norm();
        Vec tang = y - y.dot(nrm) * nrm;
        if (tang.norm() <= 1e-10 * (1.0 + ny)) break;
        double step = z.norm() / ny;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            Vec cand_dir = (z + step * tang).normalized();
            const double rc = radial(cand_dir);
            const Vec zc = rc * cand_dir;
            const double fc = zc.dot(y);
            if (fc > f + 1e-4 * step * tang.squaredNorm()) {
                z = zc;
                f = fc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
    }
    return {f, z};
}

std::pair<double, Vec> GaugeProblem::legendre(const Vec& y) const {
    if (y.norm() == 0.0) return {0.0, Vec::Zero(y.size())};
    const auto [h, zmax] = support(y);
    return {std::pow(h, p_) / p_, std::pow(h, p_ - 1.0) * zmax};
}

double GaugeProblem::kappa(const Vec& z, double tol) const {
    const auto [hval, gG] = eval(z);
    const Vec gH = raw_.grad(z);
    const double k = gH.dot(gG) / gG.squaredNorm();
    if (k <= 0) throw ValidationError("kappa must be positive");
    const double resid = (gH - k * gG).norm() / gH.norm();
    if (resid > tol) {
        throw ValidationError("gradients not proportional on the surface, residual " +
                              std::to_string(resid));
    }
    return k;
}

BoundsCheck legendre_bounds_check(const GaugeProblem& gp, int trials, uint64_t seed) {
    if (!gp.pinch()) throw InputError("run pinch_estimate before the bounds check");
    const double r = gp.pinch()->r_in, R = gp.pinch()->R_out;
    const double p = gp.p();
    Rng rng(seed);
    BoundsCheck out;
    out.worst_margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < trials; ++i) {
        const Vec y = rng.uniform(0.1, 3.0) * rng.unit_vector(gp.raw().dim);
        const double hs = gp.legendre(y).first;
        const double yp = std::pow(y.norm(), p) / p;
        const double lower_margin = hs - std::pow(r, p) * yp;
        const double upper_margin = std::pow(R, p) * yp - hs;
        const double margin = std::min(lower_margin, upper_margin);
        if (margin < out.worst_margin) {
            out.worst_margin = margin;
            out.worst_y = y;
        }
    }
    out.pass = out.worst_margin >= -1e-9;
    return out;
}

OrbitSamples reparametrize(const GaugeProblem& gp, const SymplecticRotation& sr,
                           const OrbitSamples& gauge_orbit, int K_max) {
    const int N = static_cast<int>(gauge_orbit.z.rows());
    const double Tt = gauge_orbit.T;

    // Twisted trigonometric representation of the input orbit: fixed-plane
    // mean z0 plus a loop on the (Q, T_tilde) lattice.
    Vec mean = gauge_orbit.z.colwise().mean();
    const Vec z0 = fixed_projection(sr, mean).projection;
    Mat osc = gauge_orbit.z;
    osc.rowwise() -= z0.transpose();
    const FrequencyGrid grid = build_grid(sr, Tt, std::min(K_max, (N - 2) / 2));
    const RotatingLoop zl = analyze(osc, grid);
    auto orbit_at = [&](double s) { return Vec(loop_eval(zl, s) + z0); };

    // h(s) = int_0^s dtau / kappa; the integrand is T_tilde-periodic.
    const int M = std::max(4096, 32 * N);
    Vec inv_kappa(M + 1);
    for (int i = 0; i <= M; ++i) inv_kappa[i] = 1.0 / gp.kappa(orbit_at(Tt * i / M));
    Vec h(M + 1);
    h[0] = 0.0;
    const double hs = Tt / M;
    for (int i = 0; i < M; ++i) h[i + 1] = h[i] + 0.5 * hs * (inv_kappa[i] + inv_kappa[i + 1]);
    const double T = h[M];

    OrbitSamples out;
    out.T = T;
    out.z = Mat(N, gauge_orbit.z.cols());
    int lo = 0;
    for (int m = 0; m < N; ++m) {
        const double target = T * m / N;
        while (lo + 1 < M && h[lo + 1] < target) ++lo;
        // linear interpolation of the monotone table, then one Newton step
        const double frac = (target - h[lo]) / (h[lo + 1] - h[lo]);
        double s = hs * (lo + frac);
        for (int nwt = 0; nwt < 3; ++nwt) {
            const double hl = h[lo] + 0.5 * (s - hs * lo) *
                                          (inv_kappa[lo] + 1.0 / gp.kappa(orbit_at(s)));
            s -= (hl - target) * gp.kappa(orbit_at(s));
            s = std::clamp(s, hs * lo, hs * (lo + 1));
        }
        out.z.row(m) = orbit_at(s).transpose();
    }
    return out;
}

}  // namespace rotorb

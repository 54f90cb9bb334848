#pragma once

#include <functional>
#include <tuple>
#include <vector>

#include "rotorb/convex.hpp"
#include "rotorb/loop_space.hpp"

namespace rotorb {

/// Hamiltonian vector field data for ODE-level verification.
struct HamiltonianField {
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> grad;
};

HamiltonianField field_of(const RawHamiltonian& raw);
HamiltonianField gauge_field(const GaugeProblem& gp);

struct IntegratorOptions {
    double abs_tol = 1e-11;
    double rel_tol = 1e-11;
    double initial_step = 1e-3;
    long max_steps = 2000000;
};

struct Trajectory {
    Mat z;        // rows are states at times
    Vec times;
    double energy_drift = 0.0;
    long steps = 0;
};

/// Adaptive Dormand-Prince 5(4) integration of z' = J grad H(z) with dense
/// output at n_out + 1 equally spaced times including both endpoints.
Trajectory integrate(const HamiltonianField& H, const Vec& z0, double T, int n_out,
                     const IntegratorOptions& opts = {});

/// Endpoint z(T; z0) only.
Vec flow(const HamiltonianField& H, const Vec& z0, double T, const IntegratorOptions& opts = {});

/// |z(T; z0) - Q z0|.
double shooting_residual(const HamiltonianField& H, const Mat& Q, const Vec& z0, double T,
                         const IntegratorOptions& opts = {});

struct FingerprintEntry {
    int plane = 0;
    int k = 0;
    double magnitude = 0.0;
};

struct OrbitSolution {
    Mat z;           // N x 2n samples over one rotating period
    double T = 0.0;
    double energy = 0.0;              // value of the governing Hamiltonian on the orbit
    double shooting = 0.0;            // |z(T) - Q z(0)| under that Hamiltonian
    double energy_drift = 0.0;
    std::vector<FingerprintEntry> fingerprint;
    std::string source = "variational";
    bool polish_failed = false;
};

/// Shift-invariant magnitude spectrum of the orbit (fixed-subspace mean
/// removed before analysis).  Entries below threshold_frac * max magnitude
/// are dropped.
std::vector<FingerprintEntry> orbit_fingerprint(const SymplecticRotation& sr, const Mat& z,
                                                double T, int K_max,
                                                double threshold_frac = 1e-6);

struct PolishOptions {
    double capture_radius = 1e-2;
    double target_residual = 1e-10;
    int max_newton = 30;
    double fd_step = 1e-7;
    // the Newton residual floor sits at the flow-map error, so polish
    // integrates tighter than the general-purpose default
    IntegratorOptions integ{1e-13, 1e-13, 1e-3, 2000000};
};

/// Newton refinement of the rotating boundary condition F(z0, T) =
/// z(T; z0) - Q z0 = 0, augmented with a phase anchor and an energy pin
/// H(z0) = energy; least-squares solve of the overdetermined system.
/// Returns the input flagged polish_failed when Newton leaves the capture
/// radius or diverges.
OrbitSolution polish(const HamiltonianField& H, const SymplecticRotation& sr,
                     const OrbitSolution& orbit, const PolishOptions& opts = {});

/// Rescale a gauge orbit to the level H = 1/q using q-homogeneity:
/// w(t) = (q d)^{-1/q} z((q d)^{(2-q)/q} t), period (q d)^{(q-2)/q} T.
OrbitSolution normalize_energy(const GaugeProblem& gp, const SymplecticRotation& sr,
                               const OrbitSolution& orbit, int K_max);

struct Certificate {
    int count = 0;
    std::vector<std::vector<std::string>> decisions;  // pairwise decision matrix
    double tol_fp = 0.0;
    double tol_dist = 0.0;
};

/// Two-stage distinctness decision: orbits whose magnitude spectra differ by
/// more than tol_fp in l2 are distinct; ambiguous pairs are separated by
/// orbit_distance above tol_dist, otherwise declared the same orbit.  The
/// count is the number of equivalence classes.
Certificate distinctness_certificate(const SymplecticRotation& sr,
                                     const std::vector<OrbitSolution>& orbits, int K_max,
                                     double tol_fp_frac = 1e-6, double tol_dist_frac = 1e-4);

}  // namespace rotorb

#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "rotorb/convex.hpp"
#include "rotorb/loop_space.hpp"

namespace rotorb {

/// Value and gradient of a convex conjugate at a point.
using ConjugateFn = std::function<std::pair<double, Vec>(const Vec&)>;

/// Dual action E(y) = int_0^T H*(y(t)) dt - (1/2) int_0^T <y, Ky> dt on the
/// mean-zero rotating loop space.  The first integral uses the trapezoid rule
/// on N uniform samples (the integrand is T-periodic, so this is spectrally
/// accurate); the quadratic part is exact on the truncated lattice.
double energy_with(const ConjugateFn& conj, const RotatingLoop& y, int N);
double energy(const GaugeProblem& gp, const RotatingLoop& y, int N);

/// Gradient with respect to the L^2 pairing: analyze(grad H*(y(.))) - K y,
/// projected onto the admissible lattice.  This is the exact gradient of the
/// discretized energy.
RotatingLoop gradient_with(const ConjugateFn& conj, const RotatingLoop& y, int N);
RotatingLoop gradient(const GaugeProblem& gp, const RotatingLoop& y, int N);

struct SolverOptions {
    double gtol = 1e-9;
    int max_iter = 5000;
    double armijo_c1 = 1e-4;
    double backtrack = 0.5;
    double step0 = 1.0;
    bool bb_step = false;   // Barzilai-Borwein initial step (off: plain step0)
    int N = 0;              // quadrature samples; 0 selects 8 * K_max
    double norm_floor = 1e-10;
};

struct DualState {
    RotatingLoop y;
    double energy = 0.0;
    RotatingLoop grad;
    double grad_norm = 0.0;
    int iterations = 0;
    double last_step = 0.0;
    bool converged = false;
    bool stalled = false;
    bool norm_floor_hit = false;
};

/// Unit mean-square circle seed z(t) = Q(t) xi in plane j, rescaled by the
/// radial critical factor lambda = (int<z,Kz> / (p int H*(z)))^{1/(p-2)}.
RotatingLoop seed_loop(const GaugeProblem& gp, const FrequencyGrid& grid, int plane,
                       int k_extra = 0);

/// Steepest descent with Armijo backtracking until ||grad E|| <= gtol or
/// max_iter.  E never increases across accepted steps.
DualState descend(const GaugeProblem& gp, const RotatingLoop& y0, const SolverOptions& opts);

struct RecoveredOrbit {
    Mat z;               // N x 2n samples over [0, T)
    Vec z0;              // constant part in ker(I - Q)
    double residual = 0.0;  // sup_t |z - Ky - z0|
    double T = 0.0;
    double energy_level = 0.0;  // gauge value along the orbit
    bool critical = true;       // residual within rtol
};

RecoveredOrbit recover(const GaugeProblem& gp, const DualState& state, int N, double rtol = 1e-4);

struct LedgerEntry {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
    std::string status;  // "pass" | "fail" | "skip"
    std::string note;
};

struct InequalityLedger {
    double m_hat = 0.0;
    std::optional<double> m_star;
    double b = 0.0;
    double c0 = 0.0;
    double slack = 0.0;
    std::vector<LedgerEntry> entries;
    bool all_pass() const;
};

/// Spectral sub-period test: all coefficient mass on a sub-lattice compatible
/// with rotating period T / ell for some integer ell >= 2.
std::optional<int> detect_subperiod(const RotatingLoop& y, double mass_tol = 1e-8);

/// Assemble the inequality ledger from achieved critical values.
InequalityLedger value_checks(const GaugeProblem& gp, const std::vector<DualState>& solutions,
                              const std::vector<double>& seed_energies, const TildeAngles& tilde,
                              double r_in, double R_out, double T);

}  // namespace rotorb

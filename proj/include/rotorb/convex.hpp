#pragma once

#include <functional>
#include <optional>
#include <string>

#include "rotorb/common.hpp"
#include "rotorb/symplectic.hpp"

namespace rotorb {

/// Black-box convex Hamiltonian with level beta.  The optional closed-form
/// hooks (support function, support maximizer, radial function) are fast
/// paths used when the evaluator is a known preset; the generic code paths
/// never require them.
struct RawHamiltonian {
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> grad;
    double beta = 0.5;
    int dim = 0;  // phase-space dimension 2n
    std::string name = "custom";

    std::function<double(const Vec&)> support;        // h_C(y)
    std::function<Vec(const Vec&)> support_point;     // argmax_{z in S} <z, y>
    std::function<double(const Vec&)> radial_exact;   // r(zeta) on the unit sphere
};

/// H(z) = 0.5 sum z_i^2 / a_i^2 on R^{2n}; S is the ellipsoid with semi-axes
/// a_i sqrt(2 beta).
RawHamiltonian make_ellipsoid(const Vec& axes, double beta);

/// Plane-radius quartic: H = 0.5 sum_j w_j rho_j^2 + eps sum_j rho_j^4 where
/// rho_j^2 = x_j^2 + y_j^2 is the radius in symplectic plane j.  Invariant
/// under every plane-aligned rotation.
RawHamiltonian make_plane_quartic(const Vec& omega, double eps, double beta);

/// Frobenius-relative defect max |H(Qz) - H(z)| / (1 + |H(z)|) over random
/// sphere-scaled samples.
double sampled_symmetry_defect(const RawHamiltonian& raw, const Mat& Q, int samples, uint64_t seed);

/// Smallest |grad H| over random surface points (the surface must carry a
/// nonvanishing gradient).
double surface_gradient_floor(const RawHamiltonian& raw, int samples, uint64_t seed);

/// Radius r(zeta) with H(r zeta) = beta: bracketing by doubling followed by
/// safeguarded Newton/bisection.
double radial_root(const RawHamiltonian& raw, const Vec& zeta, double tol_root = 1e-12);

struct PinchEstimate {
    double r_in = 0.0;
    double R_out = 0.0;
    bool pinched = false;  // R_out < sqrt(2) r_in
};

/// Min/max of r over quasi-random directions with local sphere-gradient
/// refinement of both extrema.
PinchEstimate pinch_estimate(const RawHamiltonian& raw, int samples, uint64_t seed = 20240901);

/// Smallest p >= p_min with ceil-to-integer 10% margin making
/// (tilde_1 / tilde_n)^{-1/p} R < sqrt(2) r; returns (p, q = p/(p-1)).
std::pair<double, double> choose_exponent(const TildeAngles& tilde, double r_in, double R_out,
                                          double p_min = 4.0);

struct BoundsCheck {
    bool pass = true;
    double worst_margin = 0.0;
    Vec worst_y;
};

/// Time-sampled orbit over one rotating period: row m is z(m T / N).
struct OrbitSamples {
    Mat z;
    double T = 0.0;
};

/// q-homogeneous gauge Hamiltonian built from a strictly convex surface,
/// together with its Legendre-Fenchel transform and the kappa factor tying
/// the gauge flow back to the raw flow on S.
class GaugeProblem {
  public:
    GaugeProblem(RawHamiltonian raw, double q, double tol_root = 1e-12);

    double q() const { return q_; }
    double p() const { return p_; }
    const RawHamiltonian& raw() const { return raw_; }
    double beta() const { return raw_.beta; }

    double radial(const Vec& zeta) const;

    /// Gauge value; zero at the origin.
    double value(const Vec& z) const;
    /// Gauge value and gradient (z must be nonzero for the gradient).
    std::pair<double, Vec> eval(const Vec& z) const;

    /// Support function of C and its maximizer on S.
    std::pair<double, Vec> support(const Vec& y) const;

    /// Legendre transform value and gradient: H*(y) = h_C(y)^p / p,
    /// grad H*(y) = h_C(y)^{p-1} z_max.
    std::pair<double, Vec> legendre(const Vec& y) const;

    /// Proportionality factor between the raw and gauge gradients on S.
    /// Throws ValidationError when the gradients fail to be parallel.
    double kappa(const Vec& z, double tol = 1e-6) const;

    /// Record the pinch radii (used by the Legendre bound check).
    void set_pinch(const PinchEstimate& pe) { pinch_ = pe; }
    const std::optional<PinchEstimate>& pinch() const { return pinch_; }

  private:
    RawHamiltonian raw_;
    double q_;
    double p_;
    double tol_root_;
    std::optional<PinchEstimate> pinch_;
};

/// Verify (1/p) r^p |y|^p <= H*(y) <= (1/p) R^p |y|^p on random y.
BoundsCheck legendre_bounds_check(const GaugeProblem& gp, int trials, uint64_t seed = 77);

/// Map a gauge-flow orbit on S to the raw-flow orbit through the time
/// change s' = kappa(z(s)).  Returns the reparametrized samples and the raw
/// rotating period T = int_0^{T_tilde} dt / kappa.
OrbitSamples reparametrize(const GaugeProblem& gp, const SymplecticRotation& sr,
                           const OrbitSamples& gauge_orbit, int K_max);

}  // namespace rotorb

#pragma once

#include <utility>
#include <vector>

#include "rotorb/common.hpp"

namespace rotorb {

/// The canonical symplectic matrix J = [[0, I_n], [-I_n, 0]] of size 2n x 2n.
Mat standard_symplectic(int n);

struct ValidationReport {
    double orth_defect = 0.0;    // ||Q^T Q - I||_F
    double sympl_defect = 0.0;   // ||Q^T J Q - J||_F
    double tol = 0.0;
    bool orth_pass = false;
    bool sympl_pass = false;
    bool pass() const { return orth_pass && sympl_pass; }
};

/// Check membership in Sp(2n) ∩ O(2n) up to tolerance. Throws InputError for
/// odd dimensions; never throws on tolerance failure (the report carries it).
ValidationReport validate_symplectic_orthogonal(const Mat& Q, double tol = 1e-9);

/// Normal form of Q in Sp(2n) ∩ O(2n).
///
/// Q is conjugated by an orthogonal P into 2x2 rotation blocks M_j with
/// angles theta_j, and P simultaneously brings J into the block form
/// diag(J_2, ..., J_2).  The complex frames v_j satisfy J v_j = i v_j and
/// Q v_j = e^{i theta_j} v_j and are orthonormal in C^{2n}.
///
/// Plane ordering is canonical: angles sorted ascending in [0, 2pi), each
/// frame scaled so its first component of modulus > 1e-10 is real positive.
/// For repeated angles any orthonormal basis of the cluster is acceptable;
/// the one produced by the Schur factorization is kept.
struct SymplecticRotation {
    int n = 0;
    Mat Q;               // 2n x 2n input matrix
    Mat P;               // orthogonal conjugator of the normal form
    std::vector<double> theta;  // angles in [0, 2pi), ascending
    CMat frames;         // 2n x n, column j = v_j
    Mat fixed_basis;     // orthonormal basis of ker(I - Q); 2n x (2 * #zero planes)
    int fixed_planes = 0;

    int dim() const { return 2 * n; }
    /// Angle with the 0 -> 2pi replacement applied, for plane j.
    double tilde_angle(int j) const { return theta[static_cast<size_t>(j)] == 0.0 ? two_pi : theta[static_cast<size_t>(j)]; }
};

SymplecticRotation normal_form(const Mat& Q, double tol = 1e-9);

/// Sorted list of tilde angles (0 replaced by 2pi, then ascending).
struct TildeAngles {
    std::vector<double> values;
    double min() const { return values.front(); }
    double max() const { return values.back(); }
};

TildeAngles tilde_angles(const SymplecticRotation& sr);

/// The rotation path Q(t) = P diag(M_1(t), ..., M_n(t)) P^T where plane j
/// turns by tilde-angle * t / T.  Q(0) = I and Q(T) = Q.
Mat rotation_path(const SymplecticRotation& sr, const TildeAngles& tilde, double t, double T);

/// Orthogonal projection onto ker(I - Q) together with the solution of
/// (I - Q) w = v - Pv with w orthogonal to ker(I - Q).
struct FixedSplit {
    Vec projection;   // Pv
    Vec complement;   // w = L_P^{-1} (v - Pv)
};

FixedSplit fixed_projection(const SymplecticRotation& sr, const Vec& v);

}  // namespace rotorb

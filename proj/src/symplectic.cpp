#include "rotorb/symplectic.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace rotorb {

Mat standard_symplectic(int n) {
    Mat J = Mat::Zero(2 * n, 2 * n);
    J.topRightCorner(n, n) = Mat::Identity(n, n);
    J.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
    return J;
}

ValidationReport validate_symplectic_orthogonal(const Mat& Q, double tol) {
    if (Q.rows() != Q.cols()) throw InputError("matrix must be square");
    if (Q.rows() % 2 != 0) throw InputError("matrix dimension must be even");
    const int n = static_cast<int>(Q.rows()) / 2;
    const Mat J = standard_symplectic(n);

    ValidationReport rep;
    rep.tol = tol;
    rep.orth_defect = (Q.transpose() * Q - Mat::Identity(2 * n, 2 * n)).norm();
    rep.sympl_defect = (Q.transpose() * J * Q - J).norm();
    rep.orth_pass = rep.orth_defect <= tol;
    rep.sympl_pass = rep.sympl_defect <= tol;
    return rep;
}

namespace {

// Angle of a unit-modulus complex number mapped into [0, 2pi), with values
// within 1e-12 of 2pi snapped to 0 so the tilde-angle replacement is stable.
double canonical_angle(Complex lambda) {
    double a = std::arg(lambda);
    if (a < 0) a += two_pi;
    if (a < 1e-12 || two_pi - a < 1e-12) a = 0.0;
    return a;
}

}  // namespace

SymplecticRotation normal_form(const Mat& Q, double tol) {
    ValidationReport rep = validate_symplectic_orthogonal(Q, tol);
    if (!rep.pass()) {
        throw ValidationError("matrix is not symplectic-orthogonal: orth defect " +
                              std::to_string(rep.orth_defect) + ", symplectic defect " +
                              std::to_string(rep.sympl_defect));
    }
    const int n = static_cast<int>(Q.rows()) / 2;
    const Mat J = standard_symplectic(n);
    const double comm_defect = (Q * J - J * Q).norm();
    if (comm_defect > 10 * tol) {
        throw ValidationError("matrix does not commute with J, defect " +
                              std::to_string(comm_defect));
    }

    // Q = [[A, B], [-B, A]] in the J-adapted splitting; U = A + iB is the
    // unitary image of Q under Sp(2n) ∩ O(2n) ≅ U(n).  Averaging the blocks
    // removes the roundoff asymmetry.
    Mat A = 0.5 * (Q.topLeftCorner(n, n) + Q.bottomRightCorner(n, n));
    Mat B = 0.5 * (Q.topRightCorner(n, n) - Q.bottomLeftCorner(n, n));
    CMat U = A.cast<Complex>() + Complex(0, 1) * B.cast<Complex>();

    Eigen::ComplexSchur<CMat> schur(U, /*computeU=*/true);
    if (schur.info() != Eigen::Success) {
        throw NumericalError("Schur factorization of the unitary image failed");
    }
    CMat Z = schur.matrixU();

    std::vector<double> angles(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) angles[static_cast<size_t>(j)] = canonical_angle(schur.matrixT()(j, j));

    // U is normal, so the Schur vectors are eigenvectors up to the tiny
    // off-diagonal of T; verify that before trusting them.
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return angles[static_cast<size_t>(a)] < angles[static_cast<size_t>(b)]; });

    SymplecticRotation sr;
    sr.n = n;
    sr.Q = Q;
    sr.theta.resize(static_cast<size_t>(n));
    sr.frames = CMat(2 * n, n);
    sr.P = Mat(2 * n, 2 * n);

    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    double max_residual = 0.0;
    for (int j = 0; j < n; ++j) {
        int src = order[static_cast<size_t>(j)];
        double th = angles[static_cast<size_t>(src)];
        CVec a = Z.col(src);

        // Phase convention: first component of modulus > 1e-10 real positive.
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            if (std::abs(a[i]) > 1e-10) {
                a *= std::conj(a[i]) / std::abs(a[i]);
                break;
            }
        }
        max_residual = std::max(max_residual,
                                (U * a - std::polar(1.0, th) * a).norm());

        CVec v(2 * n);
        v.head(n) = a * inv_sqrt2;
        v.tail(n) = Complex(0, 1) * a * inv_sqrt2;

        sr.theta[static_cast<size_t>(j)] = th;
        sr.frames.col(j) = v;
        sr.P.col(2 * j) = std::sqrt(2.0) * v.real();
        sr.P.col(2 * j + 1) = std::sqrt(2.0) * v.imag();
    }
    if (max_residual > 1e4 * tol) {
        throw NumericalError("eigen-decomposition residual " + std::to_string(max_residual) +
                             " above tolerance");
    }

    sr.fixed_planes = 0;
    for (int j = 0; j < n; ++j)
        if (sr.theta[static_cast<size_t>(j)] == 0.0) ++sr.fixed_planes;
    sr.fixed_basis = Mat(2 * n, 2 * sr.fixed_planes);
    int col = 0;
    for (int j = 0; j < n; ++j) {
        if (sr.theta[static_cast<size_t>(j)] == 0.0) {
            sr.fixed_basis.col(col++) = sr.P.col(2 * j);
            sr.fixed_basis.col(col++) = sr.P.col(2 * j + 1);
        }
    }
    return sr;
}

TildeAngles tilde_angles(const SymplecticRotation& sr) {
    TildeAngles t;
    t.values.reserve(sr.theta.size());
    for (int j = 0; j < sr.n; ++j) t.values.push_back(sr.tilde_angle(j));
    std::sort(t.values.begin(), t.values.end());
    return t;
}

Mat rotation_path(const SymplecticRotation& sr, const TildeAngles&, double t, double T) {
    if (T <= 0) throw InputError("rotating period must be positive");
    const int n = sr.n;
    Mat D = Mat::Zero(2 * n, 2 * n);
    for (int j = 0; j < n; ++j) {
        const double a = sr.tilde_angle(j) * t / T;
        const double c = std::cos(a), s = std::sin(a);
        D(2 * j, 2 * j) = c;
        D(2 * j, 2 * j + 1) = s;
        D(2 * j + 1, 2 * j) = -s;
        D(2 * j + 1, 2 * j + 1) = c;
    }
    return sr.P * D * sr.P.transpose();
}

FixedSplit fixed_projection(const SymplecticRotation& sr, const Vec& v) {
    if (v.size() != sr.dim()) throw InputError("vector dimension mismatch");
    FixedSplit out;
    if (sr.fixed_planes > 0) {
        out.projection = sr.fixed_basis * (sr.fixed_basis.transpose() * v);
    } else {
        out.projection = Vec::Zero(sr.dim());
    }
    // Minimal-norm solution of (I - Q) w = v - Pv; it is orthogonal to
    // ker(I - Q) exactly as required of L_P^{-1}.
    const Mat IQ = Mat::Identity(sr.dim(), sr.dim()) - sr.Q;
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(IQ);
    cod.setThreshold(1e-10);
    out.complement = cod.solve(v - out.projection);
    return out;
}

}  // namespace rotorb

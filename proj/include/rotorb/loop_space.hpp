#pragma once

#include <string>
#include <vector>

#include "rotorb/common.hpp"
#include "rotorb/symplectic.hpp"

namespace rotorb {

/// One admissible frequency: plane j, integer offset k, omega = (2 pi k + theta_j) / T.
struct GridEntry {
    int plane = 0;
    int k = 0;
    double omega = 0.0;
};

/// Frequency lattice of the mean-zero rotating loop space for a fixed
/// (Q, T) pair, truncated at |k| <= K_max.  Entries with omega == 0 (only
/// possible for theta_j == 0, k == 0) are excluded.
struct FrequencyGrid {
    SymplecticRotation sr;
    double T = 0.0;
    int K_max = 0;
    std::vector<GridEntry> entries;

    int size() const { return static_cast<int>(entries.size()); }
    /// Index of (plane, k) in entries, or -1.
    int index_of(int plane, int k) const;
    bool same_layout(const FrequencyGrid& other) const;
};

FrequencyGrid build_grid(const SymplecticRotation& sr, double T, int K_max);

/// A real Q-rotating signal y(t) = sum 2 Re( c_{j,k} e^{i omega t} v_j ),
/// stored by its complex coefficients on a FrequencyGrid.  The rotating
/// boundary condition y(t + T) = Q y(t) holds by construction, and
/// (1/T) int |y|^2 dt = 2 sum |c|^2.
struct RotatingLoop {
    FrequencyGrid grid;
    CVec coeffs;

    RotatingLoop() = default;
    explicit RotatingLoop(FrequencyGrid g) : grid(std::move(g)) {
        coeffs = CVec::Zero(grid.size());
    }
};

/// y(t) at an arbitrary time, by direct summation over modes.
Vec loop_eval(const RotatingLoop& y, double t);

/// Samples y(t_m), t_m = m T / N, m = 0..N-1.  Requires N >= 2 K_max + 2.
Mat synthesize(const RotatingLoop& y, int N);

/// Exact inverse of synthesize on the truncated space: per plane, detwist by
/// e^{-i theta_j t / T} and take the discrete Fourier transform.
RotatingLoop analyze(const Mat& samples, const FrequencyGrid& grid);

/// Max-row distance between the samples and the re-synthesized loop; nonzero
/// when the input is not a truncated rotating signal on this grid.
double analysis_residual(const Mat& samples, const RotatingLoop& y);

/// Diagonal action of the operator K: c_{j,k} -> c_{j,k} / omega_{j,k}.
RotatingLoop apply_K(const RotatingLoop& y);

/// int_0^T <y1, y2> dt = 2 T Re sum conj(c1) c2.
double pairing(const RotatingLoop& y1, const RotatingLoop& y2);

/// int_0^T <y, K y> dt = 2 T sum |c|^2 / omega.
double quadratic_form(const RotatingLoop& y);

/// sqrt(int_0^T |y|^2 dt).
double loop_norm(const RotatingLoop& y);

/// Time translation y(.) -> y(. + s): phase map c -> e^{i omega s} c.
RotatingLoop shift(const RotatingLoop& y, double s);

/// Upper bound for min_s || shift(y1, s) - y2 ||_{L^2([0,T])} by coarse scan
/// plus golden-section refinement.  span <= 0 and pts <= 0 select defaults
/// (span: a few beats of the slowest active mode capped at 64 T; pts: enough
/// to resolve the fastest active mode, at least 512).
double orbit_distance(const RotatingLoop& y1, const RotatingLoop& y2,
                      double span = -1.0, int pts = -1);

/// CSV export/import: header line carrying T, n and the theta list, then
/// rows (j, k, Re c, Im c).  Import is resolved against the caller's grid
/// (the frames are reproducible from Q via the canonical normal form).
std::string loop_to_csv(const RotatingLoop& y);
RotatingLoop loop_from_csv(const std::string& text, const FrequencyGrid& grid);

}  // namespace rotorb

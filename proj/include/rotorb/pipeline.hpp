#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "rotorb/convex.hpp"
#include "rotorb/dual_solver.hpp"
#include "rotorb/verifier.hpp"

namespace rotorb {

using json = nlohmann::ordered_json;

/// Matrix presets: "identity", "neg-identity", "rotation:[a1,...,an]"
/// (rotation by angle a_j in symplectic plane j).
Mat matrix_from_preset(const std::string& preset, int n);

/// Dense row-major text: whitespace/comma separated numbers, one row per line.
Mat parse_matrix_text(const std::string& text);

struct Discretization {
    int K_max = 32;
    int N = 0;  // 0 -> 8 * K_max
};

struct ToleranceSet {
    double tol_orth = 1e-9;
    double tol_sym = 1e-8;        // sampled Q-invariance of the raw Hamiltonian
    double recover_rtol = 1e-4;   // critical-point identity
    double polish_residual = 1e-10;
    double drift_tol = 1e-9;
    double fingerprint_frac = 1e-6;
    double distance_frac = 1e-4;
};

struct ProblemSpec {
    int schema_version = 1;
    int n = 1;
    Mat Q;
    std::string q_description = "identity";
    std::string ham_preset = "ellipsoid";  // "ellipsoid" | "plane-quartic"
    Vec ham_axes;                          // ellipsoid semi-axis factors (size 2n)
    Vec ham_omega;                         // plane-quartic frequencies (size n)
    double ham_eps = 0.0;
    double beta = 0.5;
    double T = two_pi;
    Discretization disc;
    SolverOptions solver;
    std::vector<int> seed_planes;   // empty -> all planes
    bool subperiod_probe = true;    // extra descent from a frequency-shifted seed
    double p_override = 0.0;        // 0 -> choose_exponent
    int pinch_samples = 512;
    uint64_t sample_seed = 20240901;
    ToleranceSet tol;
    std::string output_dir;
};

json serialize_problem(const ProblemSpec& spec);
ProblemSpec parse_problem(const json& j);
ProblemSpec load_problem(const std::string& path);

RawHamiltonian build_hamiltonian(const ProblemSpec& spec);

/// Orbit sample CSV: "t,z1,...,z2n" with a comment header carrying T and the
/// energy level.
std::string orbit_to_csv(const Mat& z, double T, double energy);
std::pair<Mat, std::pair<double, double>> orbit_from_csv(const std::string& text);

struct SolveOutcome {
    json report;
    int exit_code = 0;  // 0 ok, 2 input error, 3 numerical failure
};

/// Full pipeline: normal form -> gauge -> seeds -> descent -> recover ->
/// normalize -> reparametrize -> polish -> certify -> ledger.  Writes orbit
/// and loop CSV files plus report.json under out_dir (empty: no files).
SolveOutcome run_solve(const ProblemSpec& spec, const std::string& out_dir);

/// Re-check a solve directory: shooting residuals, energy drift, certificate.
json run_verify(const std::string& dir, const ProblemSpec& spec);

json run_normal_form(const Mat& Q, double tol = 1e-9);

}  // namespace rotorb

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rotorb/pipeline.hpp"

namespace py = pybind11;
using namespace rotorb;

namespace {

RawHamiltonian make_custom(std::function<double(const Vec&)> value,
                           std::function<Vec(const Vec&)> grad, double beta, int dim) {
    RawHamiltonian h;
    h.value = std::move(value);
    h.grad = std::move(grad);
    h.beta = beta;
    h.dim = dim;
    h.name = "custom";
    return h;
}

}  // namespace

PYBIND11_MODULE(_rotorb, m) {
    m.doc() = "Q-rotating periodic orbits of convex Hamiltonian systems via the dual action";

    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

    // ---- symplectic core ----------------------------------------------
    py::class_<ValidationReport>(m, "ValidationReport")
        .def_readonly("orth_defect", &ValidationReport::orth_defect)
        .def_readonly("sympl_defect", &ValidationReport::sympl_defect)
        .def_readonly("tol", &ValidationReport::tol)
        .def("passed", &ValidationReport::pass);

    py::class_<SymplecticRotation>(m, "SymplecticRotation")
        .def_readonly("n", &SymplecticRotation::n)
        .def_readonly("Q", &SymplecticRotation::Q)
        .def_readonly("P", &SymplecticRotation::P)
        .def_readonly("theta", &SymplecticRotation::theta)
        .def_readonly("frames", &SymplecticRotation::frames)
        .def_readonly("fixed_basis", &SymplecticRotation::fixed_basis)
        .def("tilde_angle", &SymplecticRotation::tilde_angle);

    py::class_<TildeAngles>(m, "TildeAngles").def_readonly("values", &TildeAngles::values);

    m.def("standard_symplectic", &standard_symplectic, py::arg("n"));
    m.def("validate_symplectic_orthogonal", &validate_symplectic_orthogonal, py::arg("Q"),
          py::arg("tol") = 1e-9);
    m.def("normal_form", &normal_form, py::arg("Q"), py::arg("tol") = 1e-9);
    m.def("tilde_angles", &tilde_angles);
    m.def("rotation_path", &rotation_path, py::arg("sr"), py::arg("tilde"), py::arg("t"),
          py::arg("T"));
    m.def(
        "fixed_projection",
        [](const SymplecticRotation& sr, const Vec& v) {
            const FixedSplit fsplit = fixed_projection(sr, v);
            return py::make_tuple(fsplit.projection, fsplit.complement);
        },
        py::arg("sr"), py::arg("v"));

    // ---- twisted loop space -------------------------------------------
    py::class_<GridEntry>(m, "GridEntry")
        .def_readonly("plane", &GridEntry::plane)
        .def_readonly("k", &GridEntry::k)
        .def_readonly("omega", &GridEntry::omega);

    py::class_<FrequencyGrid>(m, "FrequencyGrid")
        .def_readonly("T", &FrequencyGrid::T)
        .def_readonly("K_max", &FrequencyGrid::K_max)
        .def_readonly("entries", &FrequencyGrid::entries)
        .def("size", &FrequencyGrid::size)
        .def("index_of", &FrequencyGrid::index_of);

    py::class_<RotatingLoop>(m, "RotatingLoop")
        .def(py::init<FrequencyGrid>())
        .def_readonly("grid", &RotatingLoop::grid)
        .def_property(
            "coeffs", [](const RotatingLoop& y) { return y.coeffs; },
            [](RotatingLoop& y, const CVec& c) {
                if (c.size() != y.grid.size()) throw InputError("coefficient size mismatch");
                y.coeffs = c;
            });

    m.def("build_grid", &build_grid, py::arg("sr"), py::arg("T"), py::arg("K_max"));
    m.def("loop_eval", &loop_eval, py::arg("loop"), py::arg("t"));
    m.def("synthesize", &synthesize, py::arg("loop"), py::arg("N"));
    m.def("analyze", &analyze, py::arg("samples"), py::arg("grid"));
    m.def("apply_K", &apply_K);
    m.def("pairing", &pairing);
    m.def("quadratic_form", &quadratic_form);
    m.def("loop_norm", &loop_norm);
    m.def("shift", &shift, py::arg("loop"), py::arg("s"));
    m.def("orbit_distance", &orbit_distance, py::arg("y1"), py::arg("y2"), py::arg("span") = -1.0,
          py::arg("pts") = -1);
    m.def("loop_to_csv", &loop_to_csv);
    m.def("loop_from_csv", &loop_from_csv);

    // ---- convex Hamiltonian -------------------------------------------
    py::class_<RawHamiltonian>(m, "RawHamiltonian")
        .def_readonly("beta", &RawHamiltonian::beta)
        .def_readonly("dim", &RawHamiltonian::dim)
        .def_readonly("name", &RawHamiltonian::name)
        .def("value", [](const RawHamiltonian& h, const Vec& z) { return h.value(z); })
        .def("grad", [](const RawHamiltonian& h, const Vec& z) { return h.grad(z); });

    py::class_<PinchEstimate>(m, "PinchEstimate")
        .def_readonly("r_in", &PinchEstimate::r_in)
        .def_readonly("R_out", &PinchEstimate::R_out)
        .def_readonly("pinched", &PinchEstimate::pinched);

    py::class_<GaugeProblem>(m, "GaugeProblem")
        .def(py::init<RawHamiltonian, double, double>(), py::arg("raw"), py::arg("q"),
             py::arg("tol_root") = 1e-12)
        .def_property_readonly("q", &GaugeProblem::q)
        .def_property_readonly("p", &GaugeProblem::p)
        .def("radial", &GaugeProblem::radial)
        .def("value", &GaugeProblem::value)
        .def("eval", &GaugeProblem::eval)
        .def("support", &GaugeProblem::support)
        .def("legendre", &GaugeProblem::legendre)
        .def("kappa", &GaugeProblem::kappa, py::arg("z"), py::arg("tol") = 1e-6)
        .def("set_pinch", &GaugeProblem::set_pinch);

    m.def("make_ellipsoid", &make_ellipsoid, py::arg("axes"), py::arg("beta"));
    m.def("make_plane_quartic", &make_plane_quartic, py::arg("omega"), py::arg("eps"),
          py::arg("beta"));
    m.def("make_custom", &make_custom, py::arg("value"), py::arg("grad"), py::arg("beta"),
          py::arg("dim"));
    m.def("sampled_symmetry_defect", &sampled_symmetry_defect, py::arg("raw"), py::arg("Q"),
          py::arg("samples"), py::arg("seed"));
    m.def("radial_root", &radial_root, py::arg("raw"), py::arg("zeta"),
          py::arg("tol_root") = 1e-12);
    m.def("pinch_estimate", &pinch_estimate, py::arg("raw"), py::arg("samples"),
          py::arg("seed") = 20240901);
    m.def("choose_exponent", &choose_exponent, py::arg("tilde"), py::arg("r_in"),
          py::arg("R_out"), py::arg("p_min") = 4.0);
    m.def(
        "reparametrize",
        [](const GaugeProblem& gp, const SymplecticRotation& sr, const Mat& z, double T,
           int K_max) {
            const OrbitSamples out = reparametrize(gp, sr, {z, T}, K_max);
            return py::make_tuple(out.z, out.T);
        },
        py::arg("gp"), py::arg("sr"), py::arg("z"), py::arg("T"), py::arg("K_max"));

    // ---- dual action solver -------------------------------------------
    py::class_<SolverOptions>(m, "SolverOptions")
        .def(py::init<>())
        .def_readwrite("gtol", &SolverOptions::gtol)
        .def_readwrite("max_iter", &SolverOptions::max_iter)
        .def_readwrite("armijo_c1", &SolverOptions::armijo_c1)
        .def_readwrite("backtrack", &SolverOptions::backtrack)
        .def_readwrite("step0", &SolverOptions::step0)
        .def_readwrite("bb_step", &SolverOptions::bb_step)
        .def_readwrite("N", &SolverOptions::N);

    py::class_<DualState>(m, "DualState")
        .def_readonly("y", &DualState::y)
        .def_readonly("energy", &DualState::energy)
        .def_readonly("grad_norm", &DualState::grad_norm)
        .def_readonly("iterations", &DualState::iterations)
        .def_readonly("converged", &DualState::converged)
        .def_readonly("stalled", &DualState::stalled);

    py::class_<RecoveredOrbit>(m, "RecoveredOrbit")
        .def_readonly("z", &RecoveredOrbit::z)
        .def_readonly("z0", &RecoveredOrbit::z0)
        .def_readonly("residual", &RecoveredOrbit::residual)
        .def_readonly("T", &RecoveredOrbit::T)
        .def_readonly("energy_level", &RecoveredOrbit::energy_level)
        .def_readonly("critical", &RecoveredOrbit::critical);

    m.def("energy", &energy, py::arg("gp"), py::arg("y"), py::arg("N") = 0);
    m.def("gradient", &gradient, py::arg("gp"), py::arg("y"), py::arg("N") = 0);
    m.def("seed_loop", &seed_loop, py::arg("gp"), py::arg("grid"), py::arg("plane"),
          py::arg("k_extra") = 0);
    m.def("descend", &descend, py::arg("gp"), py::arg("y0"), py::arg("opts") = SolverOptions{});
    m.def("recover", &recover, py::arg("gp"), py::arg("state"), py::arg("N") = 0,
          py::arg("rtol") = 1e-4);
    m.def("detect_subperiod", [](const RotatingLoop& y) -> py::object {
        const auto ell = detect_subperiod(y);
        if (ell) return py::int_(*ell);
        return py::none();
    });

    // ---- verifier -------------------------------------------------------
    py::class_<HamiltonianField>(m, "HamiltonianField")
        .def("value", [](const HamiltonianField& h, const Vec& z) { return h.value(z); })
        .def("grad", [](const HamiltonianField& h, const Vec& z) { return h.grad(z); });
    m.def("field_of", &field_of);
    m.def("gauge_field", &gauge_field);

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("z", &Trajectory::z)
        .def_readonly("times", &Trajectory::times)
        .def_readonly("energy_drift", &Trajectory::energy_drift)
        .def_readonly("steps", &Trajectory::steps);

    py::class_<OrbitSolution>(m, "OrbitSolution")
        .def(py::init<>())
        .def_readwrite("z", &OrbitSolution::z)
        .def_readwrite("T", &OrbitSolution::T)
        .def_readwrite("energy", &OrbitSolution::energy)
        .def_readonly("shooting", &OrbitSolution::shooting)
        .def_readonly("energy_drift", &OrbitSolution::energy_drift)
        .def_readonly("source", &OrbitSolution::source)
        .def_readonly("polish_failed", &OrbitSolution::polish_failed);

    py::class_<Certificate>(m, "Certificate")
        .def_readonly("count", &Certificate::count)
        .def_readonly("decisions", &Certificate::decisions)
        .def_readonly("tol_fp", &Certificate::tol_fp)
        .def_readonly("tol_dist", &Certificate::tol_dist);

    m.def(
        "integrate",
        [](const HamiltonianField& H, const Vec& z0, double T, int n_out) {
            return integrate(H, z0, T, n_out);
        },
        py::arg("H"), py::arg("z0"), py::arg("T"), py::arg("n_out"));
    m.def(
        "flow", [](const HamiltonianField& H, const Vec& z0, double T) { return flow(H, z0, T); },
        py::arg("H"), py::arg("z0"), py::arg("T"));
    m.def(
        "shooting_residual",
        [](const HamiltonianField& H, const Mat& Q, const Vec& z0, double T) {
            return shooting_residual(H, Q, z0, T);
        },
        py::arg("H"), py::arg("Q"), py::arg("z0"), py::arg("T"));
    m.def(
        "polish",
        [](const HamiltonianField& H, const SymplecticRotation& sr, const OrbitSolution& orbit) {
            return polish(H, sr, orbit);
        },
        py::arg("H"), py::arg("sr"), py::arg("orbit"));
    m.def("normalize_energy", &normalize_energy, py::arg("gp"), py::arg("sr"), py::arg("orbit"),
          py::arg("K_max"));
    m.def("distinctness_certificate", &distinctness_certificate, py::arg("sr"), py::arg("orbits"),
          py::arg("K_max"), py::arg("tol_fp_frac") = 1e-6, py::arg("tol_dist_frac") = 1e-4);

    // ---- pipeline -------------------------------------------------------
    py::class_<ProblemSpec>(m, "ProblemSpec")
        .def_readonly("n", &ProblemSpec::n)
        .def_readonly("Q", &ProblemSpec::Q)
        .def_readonly("T", &ProblemSpec::T);

    m.def("matrix_from_preset", &matrix_from_preset, py::arg("preset"), py::arg("n"));
    m.def("load_problem", &load_problem, py::arg("path"));
    m.def("parse_problem_json",
          [](const std::string& text) { return parse_problem(json::parse(text)); });
    m.def(
        "run_solve",
        [](const ProblemSpec& spec, const std::string& out_dir) {
            const SolveOutcome out = run_solve(spec, out_dir);
            return py::make_tuple(out.report.dump(), out.exit_code);
        },
        py::arg("spec"), py::arg("out_dir") = std::string());
    m.def(
        "run_verify",
        [](const std::string& dir, const ProblemSpec& spec) {
            return run_verify(dir, spec).dump();
        },
        py::arg("dir"), py::arg("spec"));
    m.def("run_normal_form",
          [](const Mat& Q) { return run_normal_form(Q).dump(); });
}

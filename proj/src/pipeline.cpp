#include "rotorb/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace rotorb {

namespace fs = std::filesystem;

Mat matrix_from_preset(const std::string& preset, int n) {
    if (preset == "identity") return Mat::Identity(2 * n, 2 * n);
    if (preset == "neg-identity") return -Mat::Identity(2 * n, 2 * n);
    if (preset.rfind("rotation:", 0) == 0) {
        std::string body = preset.substr(9);
        if (body.size() < 2 || body.front() != '[' || body.back() != ']')
            throw InputError("rotation preset expects rotation:[a1,...,an]");
        body = body.substr(1, body.size() - 2);
        std::vector<double> angles;
        std::istringstream is(body);
        std::string tok;
        while (std::getline(is, tok, ',')) angles.push_back(std::stod(tok));
        if (static_cast<int>(angles.size()) == 1 && n > 1) angles.assign(static_cast<size_t>(n), angles[0]);
        if (static_cast<int>(angles.size()) != n)
            throw InputError("rotation preset needs 1 or n angles");
        Mat Q = Mat::Zero(2 * n, 2 * n);
        for (int j = 0; j < n; ++j) {
            const double c = std::cos(angles[static_cast<size_t>(j)]), s = std::sin(angles[static_cast<size_t>(j)]);
            Q(j, j) = c;
            Q(j, n + j) = s;
            Q(n + j, j) = -s;
            Q(n + j, n + j) = c;
        }
        return Q;
    }
    throw InputError("unknown matrix preset: " + preset);
}

Mat parse_matrix_text(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        for (char& c : line)
            if (c == ',') c = ' ';
        std::istringstream ls(line);
        std::vector<double> row;
        double v;
        while (ls >> v) row.push_back(v);
        if (!row.empty()) rows.push_back(row);
    }
    if (rows.empty()) throw InputError("empty matrix text");
    const size_t cols = rows[0].size();
    Mat M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols) throw InputError("ragged matrix rows");
        for (size_t j = 0; j < cols; ++j) M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return M;
}

json serialize_problem(const ProblemSpec& spec) {
    json j;
    j["schema_version"] = spec.schema_version;
    j["n"] = spec.n;
    if (!spec.q_description.empty() && spec.q_description != "matrix") {
        j["Q"] = spec.q_description;
    } else {
        json rows = json::array();
        for (int r = 0; r < spec.Q.rows(); ++r) {
            json row = json::array();
            for (int c = 0; c < spec.Q.cols(); ++c) row.push_back(spec.Q(r, c));
            rows.push_back(row);
        }
        j["Q"] = json{{"matrix", rows}};
    }
    json ham;
    ham["preset"] = spec.ham_preset;
    if (spec.ham_preset == "ellipsoid") {
        ham["axes"] = std::vector<double>(spec.ham_axes.data(), spec.ham_axes.data() + spec.ham_axes.size());
    } else {
        ham["omega"] = std::vector<double>(spec.ham_omega.data(), spec.ham_omega.data() + spec.ham_omega.size());
        ham["eps"] = spec.ham_eps;
    }
    ham["beta"] = spec.beta;
    j["hamiltonian"] = ham;
    j["T"] = spec.T;
    j["discretization"] = {{"K_max", spec.disc.K_max}, {"N", spec.disc.N}};
    j["solver"] = {{"gtol", spec.solver.gtol},
                   {"max_iter", spec.solver.max_iter},
                   {"bb_step", spec.solver.bb_step},
                   {"step0", spec.solver.step0}};
    j["seeds"] = spec.seed_planes;
    j["subperiod_probe"] = spec.subperiod_probe;
    j["p"] = spec.p_override;
    j["pinch_samples"] = spec.pinch_samples;
    j["sample_seed"] = spec.sample_seed;
    j["tolerances"] = {{"tol_orth", spec.tol.tol_orth},
                       {"tol_sym", spec.tol.tol_sym},
                       {"recover_rtol", spec.tol.recover_rtol},
                       {"polish_residual", spec.tol.polish_residual},
                       {"drift_tol", spec.tol.drift_tol},
                       {"fingerprint_frac", spec.tol.fingerprint_frac},
                       {"distance_frac", spec.tol.distance_frac}};
    if (!spec.output_dir.empty()) j["output_dir"] = spec.output_dir;
    return j;
}

ProblemSpec parse_problem(const json& j) {
    try {
        ProblemSpec spec;
        spec.schema_version = j.at("schema_version").get<int>();
        if (spec.schema_version != 1) throw InputError("unsupported schema version");
        spec.n = j.at("n").get<int>();
        if (spec.n < 1) throw InputError("n must be positive");

        const auto& qj = j.at("Q");
        if (qj.is_string()) {
            spec.q_description = qj.get<std::string>();
            spec.Q = matrix_from_preset(spec.q_description, spec.n);
        } else {
            spec.q_description = "matrix";
            const auto rows = qj.at("matrix");
            const int d = static_cast<int>(rows.size());
            if (d != 2 * spec.n) throw InputError("Q matrix dimension does not match n");
            spec.Q = Mat(d, d);
            for (int r = 0; r < d; ++r) {
                if (static_cast<int>(rows[static_cast<size_t>(r)].size()) != d) throw InputError("Q matrix must be square");
                for (int c = 0; c < d; ++c) spec.Q(r, c) = rows[static_cast<size_t>(r)][static_cast<size_t>(c)].get<double>();
            }
        }

        const auto& ham = j.at("hamiltonian");
        spec.ham_preset = ham.at("preset").get<std::string>();
        spec.beta = ham.value("beta", 0.5);
        if (spec.ham_preset == "ellipsoid") {
            const auto ax = ham.at("axes").get<std::vector<double>>();
            if (static_cast<int>(ax.size()) == spec.n) {
                spec.ham_axes = Vec(2 * spec.n);
                for (int i = 0; i < spec.n; ++i) {
                    spec.ham_axes[i] = ax[static_cast<size_t>(i)];
                    spec.ham_axes[spec.n + i] = ax[static_cast<size_t>(i)];
                }
            } else if (static_cast<int>(ax.size()) == 2 * spec.n) {
                spec.ham_axes = Eigen::Map<const Vec>(ax.data(), 2 * spec.n);
            } else {
                throw InputError("ellipsoid axes must have n or 2n entries");
            }
        } else if (spec.ham_preset == "plane-quartic") {
            const auto om = ham.at("omega").get<std::vector<double>>();
            if (static_cast<int>(om.size()) != spec.n) throw InputError("plane-quartic omega must have n entries");
            spec.ham_omega = Eigen::Map<const Vec>(om.data(), spec.n);
            spec.ham_eps = ham.value("eps", 0.0);
        } else {
            throw InputError("unknown hamiltonian preset: " + spec.ham_preset);
        }

        spec.T = j.value("T", two_pi);
        if (spec.T <= 0) throw InputError("T must be positive");
        if (j.contains("discretization")) {
            spec.disc.K_max = j["discretization"].value("K_max", 32);
            spec.disc.N = j["discretization"].value("N", 0);
        }
        if (spec.disc.K_max < 1) throw InputError("K_max must be at least 1");
        if (j.contains("solver")) {
            spec.solver.gtol = j["solver"].value("gtol", 1e-9);
            spec.solver.max_iter = j["solver"].value("max_iter", 5000);
            spec.solver.bb_step = j["solver"].value("bb_step", false);
            spec.solver.step0 = j["solver"].value("step0", 1.0);
        }
        spec.solver.N = spec.disc.N;
        if (j.contains("seeds")) spec.seed_planes = j["seeds"].get<std::vector<int>>();
        spec.subperiod_probe = j.value("subperiod_probe", true);
        spec.p_override = j.value("p", 0.0);
        spec.pinch_samples = j.value("pinch_samples", 512);
        spec.sample_seed = j.value("sample_seed", static_cast<uint64_t>(20240901));
        if (j.contains("tolerances")) {
            const auto& t = j["tolerances"];
            spec.tol.tol_orth = t.value("tol_orth", spec.tol.tol_orth);
            spec.tol.tol_sym = t.value("tol_sym", spec.tol.tol_sym);
            spec.tol.recover_rtol = t.value("recover_rtol", spec.tol.recover_rtol);
            spec.tol.polish_residual = t.value("polish_residual", spec.tol.polish_residual);
            spec.tol.drift_tol = t.value("drift_tol", spec.tol.drift_tol);
            spec.tol.fingerprint_frac = t.value("fingerprint_frac", spec.tol.fingerprint_frac);
            spec.tol.distance_frac = t.value("distance_frac", spec.tol.distance_frac);
        }
        spec.output_dir = j.value("output_dir", std::string());
        return spec;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed problem description: ") + e.what());
    }
}

ProblemSpec load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open problem file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InputError(std::string("invalid JSON: ") + e.what());
    }
    return parse_problem(j);
}

RawHamiltonian build_hamiltonian(const ProblemSpec& spec) {
    if (spec.ham_preset == "ellipsoid") return make_ellipsoid(spec.ham_axes, spec.beta);
    return make_plane_quartic(spec.ham_omega, spec.ham_eps, spec.beta);
}

std::string orbit_to_csv(const Mat& z, double T, double energy) {
    std::ostringstream os;
    os.precision(17);
    os << "# rotating-orbit T=" << T << " energy=" << energy << "\n";
    os << "t";
    for (int c = 0; c < z.cols(); ++c) os << ",z" << (c + 1);
    os << "\n";
    const int N = static_cast<int>(z.rows());
    for (int m = 0; m < N; ++m) {
        os << (T * m / N);
        for (int c = 0; c < z.cols(); ++c) os << "," << z(m, c);
        os << "\n";
    }
    return os.str();
}

std::pair<Mat, std::pair<double, double>> orbit_from_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    double T = 0.0, energy = 0.0;
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto tpos = line.find("T=");
            const auto epos = line.find("energy=");
            if (tpos != std::string::npos) T = std::stod(line.substr(tpos + 2));
            if (epos != std::string::npos) energy = std::stod(line.substr(epos + 7));
            continue;
        }
        if (line[0] == 't') continue;  // column header
        std::istringstream ls(line);
        std::string tok;
        std::vector<double> row;
        bool first = true;
        while (std::getline(ls, tok, ',')) {
            if (first) {
                first = false;
                continue;  // time column is implicit
            }
            row.push_back(std::stod(tok));
        }
        rows.push_back(row);
    }
    if (rows.empty()) throw InputError("orbit file has no samples");
    Mat z(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) throw InputError("ragged orbit file");
        for (size_t c = 0; c < rows[i].size(); ++c) z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    }
    return {z, {T, energy}};
}

json run_normal_form(const Mat& Q, double tol) {
    const ValidationReport v = validate_symplectic_orthogonal(Q, tol);
    json j;
    j["defects"] = {{"orthogonality", v.orth_defect}, {"symplectic", v.sympl_defect}};
    j["pass"] = v.pass();
    if (!v.pass()) return j;
    const SymplecticRotation sr = normal_form(Q, tol);
    j["theta"] = sr.theta;
    j["tilde"] = tilde_angles(sr).values;
    json rows = json::array();
    for (int r = 0; r < sr.P.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < sr.P.cols(); ++c) row.push_back(sr.P(r, c));
        rows.push_back(row);
    }
    j["P"] = rows;
    j["reconstruction_defect"] = (rotation_path(sr, tilde_angles(sr), 1.0, 1.0) - sr.Q).norm();
    return j;
}

namespace {

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    if (!out) throw InputError("cannot write file: " + p.string());
    out << content;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw InputError("cannot read file: " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

SolveOutcome run_solve(const ProblemSpec& spec, const std::string& out_dir) {
    SolveOutcome out;
    json& rep = out.report;
    rep["schema_version"] = 1;
    {
        const auto now = std::chrono::system_clock::now().time_since_epoch();
        rep["meta"] = {{"timestamp_ms", std::chrono::duration_cast<std::chrono::milliseconds>(now).count()}};
    }
    json& res = rep["result"];
    res["problem"] = serialize_problem(spec);
    json warnings = json::array();

    try {
        if (!out_dir.empty()) fs::create_directories(out_dir);
        // 1. normal form
        const ValidationReport v = validate_symplectic_orthogonal(spec.Q, spec.tol.tol_orth);
        if (!v.pass()) {
            throw ValidationError("Q is not symplectic-orthogonal: orth defect " +
                                  std::to_string(v.orth_defect) + ", symplectic defect " +
                                  std::to_string(v.sympl_defect));
        }
        const SymplecticRotation sr = normal_form(spec.Q, spec.tol.tol_orth);
        const TildeAngles tilde = tilde_angles(sr);
        res["normal_form"] = {{"theta", sr.theta},
                              {"tilde", tilde.values},
                              {"orth_defect", v.orth_defect},
                              {"sympl_defect", v.sympl_defect}};

        // 2. raw Hamiltonian + invariance + pinch
        const RawHamiltonian raw = build_hamiltonian(spec);
        const double sym_defect = sampled_symmetry_defect(raw, spec.Q, 1000, spec.sample_seed);
        if (sym_defect > spec.tol.tol_sym)
            throw ValidationError("Hamiltonian is not Q-invariant, sampled defect " +
                                  std::to_string(sym_defect));
        const double grad_floor = surface_gradient_floor(raw, 200, spec.sample_seed);
        if (grad_floor < 1e-10)
            throw ValidationError("gradient of H vanishes on the surface (sampled)");
        const PinchEstimate pinch = pinch_estimate(raw, spec.pinch_samples, spec.sample_seed);
        if (!pinch.pinched) warnings.push_back("surface is not pinched: R >= sqrt(2) r");

        // 3. exponents and gauge
        double p, q;
        if (spec.p_override > 2.0) {
            p = spec.p_override;
            q = p / (p - 1.0);
        } else if (pinch.pinched) {
            std::tie(p, q) = choose_exponent(tilde, pinch.r_in, pinch.R_out);
        } else {
            p = 4.0;
            q = p / (p - 1.0);
            warnings.push_back("exponent fallback p=4 (pinch condition unavailable)");
        }
        GaugeProblem gp(raw, q);
        gp.set_pinch(pinch);
        const BoundsCheck bounds = legendre_bounds_check(gp, 1000, spec.sample_seed);
        if (!bounds.pass) warnings.push_back("Legendre two-sided bound check failed");
        res["gauge"] = {{"q", q},
                        {"p", p},
                        {"r_in", pinch.r_in},
                        {"R_out", pinch.R_out},
                        {"pinched", pinch.pinched},
                        {"symmetry_defect", sym_defect},
                        {"legendre_bounds_margin", bounds.worst_margin}};

        // 4. seeds and descents
        const FrequencyGrid grid = build_grid(sr, spec.T, spec.disc.K_max);
        std::vector<int> seeds = spec.seed_planes;
        if (seeds.empty())
            for (int jp = 0; jp < sr.n; ++jp) seeds.push_back(jp);

        const int N = spec.disc.N > 0 ? spec.disc.N : 8 * spec.disc.K_max;
        SolverOptions sopts = spec.solver;
        sopts.N = N;

        std::vector<DualState> states;
        std::vector<double> seed_energies;
        std::vector<OrbitSolution> normalized;
        json orbits_json = json::array();
        const HamiltonianField gfield = gauge_field(gp);
        const HamiltonianField rfield = field_of(raw);

        for (int plane : seeds) {
            if (plane < 0 || plane >= sr.n) throw InputError("seed plane out of range");
            json oj;
            oj["seed_plane"] = plane;

            const RotatingLoop y0 = seed_loop(gp, grid, plane);
            seed_energies.push_back(energy(gp, y0, N));
            DualState st = descend(gp, y0, sopts);
            if (st.stalled) warnings.push_back("descent stalled before reaching gtol");
            if (st.norm_floor_hit) warnings.push_back("descent approached the trivial loop");
            oj["achieved_energy"] = st.energy;
            oj["grad_norm"] = st.grad_norm;
            oj["iterations"] = st.iterations;
            oj["seed_energy"] = seed_energies.back();

            const RecoveredOrbit rec = recover(gp, st, N, spec.tol.recover_rtol);
            oj["recover_residual"] = rec.residual;
            oj["energy_level"] = rec.energy_level;
            if (!rec.critical) warnings.push_back("recovered orbit exceeds the critical-point residual tolerance");

            OrbitSolution gauge_orbit;
            gauge_orbit.z = rec.z;
            gauge_orbit.T = rec.T;
            gauge_orbit.energy = rec.energy_level;
            gauge_orbit.shooting = shooting_residual(gfield, spec.Q, rec.z.row(0).transpose(), rec.T);
            gauge_orbit.fingerprint = orbit_fingerprint(sr, rec.z, rec.T, grid.K_max);
            oj["variational_shooting"] = gauge_orbit.shooting;

            PolishOptions popts;
            popts.target_residual = spec.tol.polish_residual;
            OrbitSolution polished = polish(gfield, sr, gauge_orbit, popts);
            if (polished.polish_failed) warnings.push_back("polish failed; keeping variational orbit");
            double polish_l2 = 0.0;
            if (!polished.polish_failed) {
                for (int mrow = 0; mrow < rec.z.rows(); ++mrow)
                    polish_l2 += (polished.z.row(mrow) - rec.z.row(mrow)).squaredNorm();
                polish_l2 = std::sqrt(polish_l2 * rec.T / rec.z.rows());
            }
            oj["polished"] = {{"shooting_residual", polished.shooting},
                              {"energy_drift", polished.energy_drift},
                              {"T", polished.T},
                              {"l2_distance_to_variational", polish_l2},
                              {"failed", polished.polish_failed}};

            OrbitSolution norm_orbit = normalize_energy(gp, sr, polished, grid.K_max);
            oj["normalized"] = {{"T", norm_orbit.T}, {"level", norm_orbit.energy}};
            normalized.push_back(norm_orbit);

            // time reparametrization from the gauge flow on S to the raw flow
            const OrbitSamples reparam =
                reparametrize(gp, sr, {norm_orbit.z, norm_orbit.T}, grid.K_max);
            const double raw_shoot =
                shooting_residual(rfield, spec.Q, reparam.z.row(0).transpose(), reparam.T);
            json raw_json = {{"T", reparam.T}, {"shooting_residual", raw_shoot}};
            if (!out_dir.empty()) {
                const std::string fname = "orbit_" + std::to_string(plane) + "_raw.csv";
                write_file(fs::path(out_dir) / fname,
                           orbit_to_csv(reparam.z, reparam.T, raw.value(reparam.z.row(0).transpose())));
                raw_json["file"] = fname;
            }
            oj["raw"] = raw_json;

            if (!out_dir.empty()) {
                const std::string oname = "orbit_" + std::to_string(plane) + "_normalized.csv";
                write_file(fs::path(out_dir) / oname,
                           orbit_to_csv(norm_orbit.z, norm_orbit.T, norm_orbit.energy));
                oj["files"] = {{"normalized_csv", oname}};
                const std::string lname = "loop_" + std::to_string(plane) + ".csv";
                write_file(fs::path(out_dir) / lname, loop_to_csv(st.y));
                oj["files"]["loop_csv"] = lname;
            }

            states.push_back(std::move(st));
            orbits_json.push_back(oj);
        }

        // optional extra descent populating the sub-period branch of the ledger
        if (spec.subperiod_probe) {
            try {
                const RotatingLoop yp = seed_loop(gp, grid, seeds.front(), /*k_extra=*/1);
                DualState stp = descend(gp, yp, sopts);
                res["subperiod_probe"] = {{"achieved_energy", stp.energy},
                                          {"grad_norm", stp.grad_norm},
                                          {"detected_ell", nullptr}};
                if (auto ell = detect_subperiod(stp.y)) res["subperiod_probe"]["detected_ell"] = *ell;
                states.push_back(std::move(stp));
            } catch (const InputError&) {
                // probe mode outside the grid (tiny K_max); skip silently
            }
        }

        res["orbits"] = orbits_json;

        // 5. certificate + ledger
        const Certificate cert =
            distinctness_certificate(sr, normalized, grid.K_max, spec.tol.fingerprint_frac,
                                     spec.tol.distance_frac);
        res["certificate"] = {{"count", cert.count},
                              {"decisions", cert.decisions},
                              {"tol_fp", cert.tol_fp},
                              {"tol_dist", cert.tol_dist}};

        const InequalityLedger led =
            value_checks(gp, states, seed_energies, tilde, pinch.r_in, pinch.R_out, spec.T);
        json ledger = json::array();
        for (const auto& e : led.entries) {
            ledger.push_back({{"name", e.name},
                              {"lhs", e.lhs},
                              {"rhs", e.rhs},
                              {"margin", e.margin},
                              {"status", e.status},
                              {"note", e.note}});
        }
        res["ledger"] = {{"m_hat", led.m_hat},
                         {"m_star", led.m_star ? json(*led.m_star) : json(nullptr)},
                         {"b", led.b},
                         {"c0", led.c0},
                         {"slack", led.slack},
                         {"entries", ledger},
                         {"all_pass", led.all_pass()}};
        res["warnings"] = warnings;
        out.exit_code = 0;
    } catch (const InputError& e) {
        res["error"] = e.what();
        out.exit_code = 2;
    } catch (const ValidationError& e) {
        res["error"] = e.what();
        out.exit_code = 2;
    } catch (const NumericalError& e) {
        res["error"] = e.what();
        out.exit_code = 3;
    } catch (const std::exception& e) {
        res["error"] = e.what();
        out.exit_code = 3;
    }

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_file(fs::path(out_dir) / "report.json", rep.dump(2) + "\n");
    }
    return out;
}

json run_verify(const std::string& dir, const ProblemSpec& spec) {
    const fs::path base(dir);
    if (!fs::exists(base / "report.json")) throw InputError("missing report.json in " + dir);
    json report = json::parse(read_file(base / "report.json"));
    const json& res = report.at("result");

    const SymplecticRotation sr = normal_form(spec.Q, spec.tol.tol_orth);
    const RawHamiltonian raw = build_hamiltonian(spec);
    const double q = res.at("gauge").at("q").get<double>();
    GaugeProblem gp(raw, q);
    const HamiltonianField gfield = gauge_field(gp);

    json checks = json::array();
    bool all_pass = true;
    auto add_check = [&](const std::string& name, double value, double tol, bool pass) {
        checks.push_back({{"name", name}, {"value", value}, {"tol", tol}, {"pass", pass}});
        all_pass = all_pass && pass;
    };

    std::vector<OrbitSolution> orbits;
    for (const auto& oj : res.at("orbits")) {
        if (!oj.contains("files")) throw InputError("report carries no orbit files to verify");
        const std::string fname = oj.at("files").at("normalized_csv").get<std::string>();
        if (!fs::exists(base / fname)) throw InputError("missing orbit file: " + fname);
        auto [z, meta] = orbit_from_csv(read_file(base / fname));
        const double T = meta.first;

        OrbitSolution o;
        o.z = z;
        o.T = T;
        o.energy = gp.value(z.row(0).transpose());
        o.fingerprint = orbit_fingerprint(sr, z, T, spec.disc.K_max);
        orbits.push_back(o);

        const std::string tag = fname;
        add_check(tag + ": level matches 1/q", std::abs(o.energy - 1.0 / q), 1e-8,
                  std::abs(o.energy - 1.0 / q) <= 1e-8);

        const double shoot = shooting_residual(gfield, spec.Q, z.row(0).transpose(), T);
        add_check(tag + ": shooting residual", shoot, 1e-6, shoot <= 1e-6);

        const int N = static_cast<int>(z.rows());
        const Trajectory traj = integrate(gfield, z.row(0).transpose(), T, N);
        double track = 0.0;
        for (int m = 0; m < N; ++m) track = std::max(track, (traj.z.row(m) - z.row(m)).norm());
        add_check(tag + ": trajectory agreement", track, 1e-6, track <= 1e-6);
        add_check(tag + ": energy drift", traj.energy_drift, 10 * spec.tol.drift_tol,
                  traj.energy_drift <= 10 * spec.tol.drift_tol);
    }

    const Certificate cert = distinctness_certificate(sr, orbits, spec.disc.K_max,
                                                      spec.tol.fingerprint_frac,
                                                      spec.tol.distance_frac);
    const int reported = res.at("certificate").at("count").get<int>();
    add_check("certificate count matches report", cert.count, reported, cert.count == reported);

    json outj;
    outj["checks"] = checks;
    outj["pass"] = all_pass;
    outj["certificate_count"] = cert.count;
    return outj;
}

}  // namespace rotorb

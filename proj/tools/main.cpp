#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "rotorb/pipeline.hpp"

namespace {

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const rotorb::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const rotorb::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const rotorb::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

std::string default_output_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("ROTORB_OUTPUT_DIR")) return env;
    return "rotorb-out";
}

rotorb::Mat matrix_argument(const std::string& arg, int n) {
    if (arg == "identity" || arg == "neg-identity" || arg.rfind("rotation:", 0) == 0) {
        if (n <= 0) throw rotorb::InputError("presets need --n to fix the dimension");
        return rotorb::matrix_from_preset(arg, n);
    }
    std::ifstream in(arg);
    if (!in) throw rotorb::InputError("cannot open matrix file: " + arg);
    std::ostringstream ss;
    ss << in.rdbuf();
    return rotorb::parse_matrix_text(ss.str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Q-rotating periodic orbits of convex Hamiltonian systems"};
    app.require_subcommand(1);

    std::string spec_path, out_dir, matrix_arg, verify_dir;
    int n_planes = 0;

    auto* solve = app.add_subcommand("solve", "run the full pipeline on a problem file");
    solve->add_option("spec", spec_path, "problem description JSON")->required();
    solve->add_option("-o,--output", out_dir, "output directory (default $ROTORB_OUTPUT_DIR or rotorb-out)");

    auto* verify = app.add_subcommand("verify", "re-check a solve directory");
    verify->add_option("dir", verify_dir, "directory produced by solve")->required();
    verify->add_option("--spec", spec_path, "problem description JSON (defaults to <dir>/problem.json echo in report)");

    auto* nform = app.add_subcommand("normal-form", "normal form of a symplectic-orthogonal matrix");
    nform->add_option("matrix", matrix_arg, "matrix file or preset (identity, neg-identity, rotation:[...])")
        ->required();
    nform->add_option("-n,--n", n_planes, "number of symplectic planes for presets");

    auto* pinch = app.add_subcommand("pinch", "pinch estimate of the problem surface");
    pinch->add_option("spec", spec_path, "problem description JSON")->required();

    CLI11_PARSE(app, argc, argv);

    if (solve->parsed()) {
        return guarded([&] {
            const rotorb::ProblemSpec spec = rotorb::load_problem(spec_path);
            const std::string dir = default_output_dir(!out_dir.empty() ? out_dir : spec.output_dir);
            const rotorb::SolveOutcome outcome = rotorb::run_solve(spec, dir);
            std::cout << outcome.report.dump(2) << "\n";
            return outcome.exit_code;
        });
    }
    if (verify->parsed()) {
        return guarded([&] {
            if (spec_path.empty()) {
                // fall back to the problem echo stored in the report
                const auto report_path = std::filesystem::path(verify_dir) / "report.json";
                if (!std::filesystem::exists(report_path))
                    throw rotorb::InputError("missing report.json in " + verify_dir);
                rotorb::json rep = rotorb::json::parse(std::ifstream(report_path));
                const rotorb::ProblemSpec spec = rotorb::parse_problem(rep.at("result").at("problem"));
                const rotorb::json res = rotorb::run_verify(verify_dir, spec);
                std::cout << res.dump(2) << "\n";
                return res.at("pass").get<bool>() ? 0 : 3;
            }
            const rotorb::ProblemSpec spec = rotorb::load_problem(spec_path);
            const rotorb::json res = rotorb::run_verify(verify_dir, spec);
            std::cout << res.dump(2) << "\n";
            return res.at("pass").get<bool>() ? 0 : 3;
        });
    }
    if (nform->parsed()) {
        return guarded([&] {
            const rotorb::Mat Q = matrix_argument(matrix_arg, n_planes);
            const rotorb::json res = rotorb::run_normal_form(Q);
            std::cout << res.dump(2) << "\n";
            return res.at("pass").get<bool>() ? 0 : 2;
        });
    }
    if (pinch->parsed()) {
        return guarded([&] {
            const rotorb::ProblemSpec spec = rotorb::load_problem(spec_path);
            const rotorb::RawHamiltonian raw = rotorb::build_hamiltonian(spec);
            const rotorb::PinchEstimate pe = rotorb::pinch_estimate(raw, spec.pinch_samples, spec.sample_seed);
            rotorb::json res = {{"r_in", pe.r_in}, {"R_out", pe.R_out}, {"pinched", pe.pinched}};
            std::cout << res.dump(2) << "\n";
            return 0;
        });
    }
    return 1;
}

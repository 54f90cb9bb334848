#include "rotorb/loop_space.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rotorb {

int FrequencyGrid::index_of(int plane, int k) const {
    for (int i = 0; i < size(); ++i) {
        if (entries[static_cast<size_t>(i)].plane == plane && entries[static_cast<size_t>(i)].k == k) return i;
    }
    return -1;
}

bool FrequencyGrid::same_layout(const FrequencyGrid& other) const {
    if (T != other.T || K_max != other.K_max || entries.size() != other.entries.size()) return false;
    for (size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].plane != other.entries[i].plane || entries[i].k != other.entries[i].k) return false;
    }
    return true;
}

FrequencyGrid build_grid(const SymplecticRotation& sr, double T, int K_max) {
    if (T <= 0) throw InputError("rotating period must be positive");
    if (K_max < 1) throw InputError("K_max must be at least 1");
    FrequencyGrid g;
    g.sr = sr;
    g.T = T;
    g.K_max = K_max;
    for (int j = 0; j < sr.n; ++j) {
        const double th = sr.theta[static_cast<size_t>(j)];
        for (int k = -K_max; k <= K_max; ++k) {
            if (th == 0.0 && k == 0) continue;  // mean-zero condition
            g.entries.push_back({j, k, (two_pi * k + th) / T});
        }
    }
    return g;
}

Vec loop_eval(const RotatingLoop& y, double t) {
    const auto& g = y.grid;
    CVec acc = CVec::Zero(g.sr.dim());
    for (int i = 0; i < g.size(); ++i) {
        const auto& e = g.entries[static_cast<size_t>(i)];
        acc += y.coeffs[i] * std::polar(1.0, e.omega * t) * g.sr.frames.col(e.plane);
    }
    return 2.0 * acc.real();
}

Mat synthesize(const RotatingLoop& y, int N) {
    const auto& g = y.grid;
    if (N < 2 * g.K_max + 2) throw InputError("sample count too small for alias-free synthesis");
    const int dim = g.sr.dim();
    Mat out = Mat::Zero(N, dim);

    // Per mode, advance the phase by the per-step factor instead of calling
    // polar at every sample.
    CMat plane_acc = CMat::Zero(N, g.sr.n);
    for (int i = 0; i < g.size(); ++i) {
        const auto& e = g.entries[static_cast<size_t>(i)];
        const Complex step = std::polar(1.0, e.omega * g.T / N);
        Complex ph = y.coeffs[i];
        for (int m = 0; m < N; ++m) {
            plane_acc(m, e.plane) += ph;
            ph *= step;
        }
    }
    for (int j = 0; j < g.sr.n; ++j) {
        for (int m = 0; m < N; ++m) {
            out.row(m) += 2.0 * (plane_acc(m, j) * g.sr.frames.col(j)).real().transpose();
        }
    }
    return out;
}

RotatingLoop analyze(const Mat& samples, const FrequencyGrid& grid) {
    const int N = static_cast<int>(samples.rows());
    if (samples.cols() != grid.sr.dim()) throw InputError("sample dimension does not match grid");
    if (N < 2 * grid.K_max + 2) throw InputError("sample count too small for alias-free analysis");

    RotatingLoop y(grid);
    // d_m = <v_j, y_m> e^{-i theta_j t_m / T}, then c_{j,k} = DFT_k(d) / N.
    for (int j = 0; j < grid.sr.n; ++j) {
        const double th = grid.sr.theta[static_cast<size_t>(j)];
        CVec d(N);
        for (int m = 0; m < N; ++m) {
            const double t = grid.T * m / N;
            d[m] = grid.sr.frames.col(j).dot(samples.row(m).transpose().cast<Complex>()) *
                   std::polar(1.0, -th * t / grid.T);
        }
        for (int i = 0; i < grid.size(); ++i) {
            const auto& e = grid.entries[static_cast<size_t>(i)];
            if (e.plane != j) continue;
            Complex acc = 0.0;
            const Complex step = std::polar(1.0, -two_pi * e.k / N);
            Complex ph = 1.0;
            for (int m = 0; m < N; ++m) {
                acc += d[m] * ph;
                ph *= step;
            }
            y.coeffs[i] = acc / static_cast<double>(N);
        }
    }
    return y;
}

double analysis_residual(const Mat& samples, const RotatingLoop& y) {
    const Mat round_trip = synthesize(y, static_cast<int>(samples.rows()));
    double worst = 0.0;
    for (int m = 0; m < samples.rows(); ++m)
        worst = std::max(worst, (samples.row(m) - round_trip.row(m)).norm());
    return worst;
}

RotatingLoop apply_K(const RotatingLoop& y) {
    RotatingLoop out = y;
    for (int i = 0; i < y.grid.size(); ++i) out.coeffs[i] /= y.grid.entries[static_cast<size_t>(i)].omega;
    return out;
}

double pairing(const RotatingLoop& y1, const RotatingLoop& y2) {
    if (!y1.grid.same_layout(y2.grid)) throw InputError("loops live on different grids");
    return 2.0 * y1.grid.T * y1.coeffs.dot(y2.coeffs).real();
}

double quadratic_form(const RotatingLoop& y) {
    double s = 0.0;
    for (int i = 0; i < y.grid.size(); ++i)
        s += std::norm(y.coeffs[i]) / y.grid.entries[static_cast<size_t>(i)].omega;
    return 2.0 * y.grid.T * s;
}

double loop_norm(const RotatingLoop& y) {
    return std::sqrt(2.0 * y.grid.T * y.coeffs.squaredNorm());
}

RotatingLoop shift(const RotatingLoop& y, double s) {
    RotatingLoop out = y;
    for (int i = 0; i < y.grid.size(); ++i)
        out.coeffs[i] *= std::polar(1.0, y.grid.entries[static_cast<size_t>(i)].omega * s);
    return out;
}

namespace {

// Squared distance || shift(y1, s) - y2 ||^2 as a function of s, evaluated
// from the coefficients.
double dist2_at(const RotatingLoop& y1, const RotatingLoop& y2, double s) {
    double acc = 0.0;
    for (int i = 0; i < y1.grid.size(); ++i) {
        acc += std::norm(y1.coeffs[i] * std::polar(1.0, y1.grid.entries[static_cast<size_t>(i)].omega * s) -
                         y2.coeffs[i]);
    }
    return 2.0 * y1.grid.T * acc;
}

}  // namespace

double orbit_distance(const RotatingLoop& y1, const RotatingLoop& y2, double span, int pts) {
    if (!y1.grid.same_layout(y2.grid)) throw InputError("loops live on different grids");
    const double T = y1.grid.T;

    double omega_min = 0.0, omega_max = 0.0;
    for (int i = 0; i < y1.grid.size(); ++i) {
        if (std::abs(y1.coeffs[i]) < 1e-12 && std::abs(y2.coeffs[i]) < 1e-12) continue;
        const double w = std::abs(y1.grid.entries[static_cast<size_t>(i)].omega);
        if (omega_min == 0.0 || w < omega_min) omega_min = w;
        omega_max = std::max(omega_max, w);
    }
    if (omega_max == 0.0) return 0.0;  // both loops vanish

    if (span <= 0) span = std::min(64.0 * T, 4.0 * two_pi / omega_min);
    if (pts <= 0) pts = std::max(512, static_cast<int>(std::ceil(8.0 * span * omega_max / two_pi)));

    // Scan both shift directions; the infimum runs over all real s.
    std::vector<std::pair<double, double>> scan;  // (value, s)
    scan.reserve(static_cast<size_t>(2 * pts + 1));
    for (int i = -pts; i <= pts; ++i) {
        const double s = span * i / pts;
        scan.emplace_back(dist2_at(y1, y2, s), s);
    }
    std::partial_sort(scan.begin(), scan.begin() + std::min<size_t>(8, scan.size()), scan.end());

    // Golden-section refinement of the leading candidates.
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double best = scan.front().first;
    for (size_t cand = 0; cand < std::min<size_t>(8, scan.size()); ++cand) {
        double a = scan[cand].second - 2.0 * span / pts, b = scan[cand].second + 2.0 * span / pts;
        double c = b - gr * (b - a), d = a + gr * (b - a);
        double fc = dist2_at(y1, y2, c), fd = dist2_at(y1, y2, d);
        for (int it = 0; it < 80; ++it) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - gr * (b - a);
                fc = dist2_at(y1, y2, c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + gr * (b - a);
                fd = dist2_at(y1, y2, d);
            }
        }
        best = std::min(best, std::min(fc, fd));
    }
    return std::sqrt(std::max(0.0, best));
}

std::string loop_to_csv(const RotatingLoop& y) {
    std::ostringstream os;
    os.precision(17);
    os << "# rotating-loop T=" << y.grid.T << " n=" << y.grid.sr.n << " theta=";
    for (int j = 0; j < y.grid.sr.n; ++j) {
        if (j) os << ";";
        os << y.grid.sr.theta[static_cast<size_t>(j)];
    }
    os << "\n";
    os << "j,k,re,im\n";
    for (int i = 0; i < y.grid.size(); ++i) {
        const auto& e = y.grid.entries[static_cast<size_t>(i)];
        os << e.plane << "," << e.k << "," << y.coeffs[i].real() << "," << y.coeffs[i].imag() << "\n";
    }
    return os.str();
}

RotatingLoop loop_from_csv(const std::string& text, const FrequencyGrid& grid) {
    RotatingLoop y(grid);
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line[0] == '#') {
            const auto tpos = line.find("T=");
            const auto npos = line.find(" n=");
            if (tpos != std::string::npos &&
                std::abs(std::stod(line.substr(tpos + 2)) - grid.T) > 1e-9 * (1.0 + grid.T))
                throw InputError("loop file period does not match the grid");
            if (npos != std::string::npos && std::stoi(line.substr(npos + 3)) != grid.sr.n)
                throw InputError("loop file plane count does not match the grid");
            continue;
        }
        if (line.empty() || line[0] == 'j') continue;
        std::istringstream ls(line);
        std::string tok;
        int j = 0, k = 0;
        double re = 0.0, im = 0.0;
        std::getline(ls, tok, ',');
        j = std::stoi(tok);
        std::getline(ls, tok, ',');
        k = std::stoi(tok);
        std::getline(ls, tok, ',');
        re = std::stod(tok);
        std::getline(ls, tok, ',');
        im = std::stod(tok);
        const int idx = grid.index_of(j, k);
        if (idx < 0) throw InputError("loop file entry outside the grid: plane " + std::to_string(j) +
                                      ", k " + std::to_string(k));
        y.coeffs[idx] = Complex(re, im);
    }
    return y;
}

}  // namespace rotorb

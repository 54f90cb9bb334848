#pragma once

#include <Eigen/Dense>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace rotorb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Complex = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Input that violates a structural precondition (wrong dimension, bad spec file).
class InputError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A matrix or evaluator failed a tolerance-based validation check.
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// An iterative computation failed to converge or produced non-finite values.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Deterministic random source. Every stochastic sampling routine in the
/// library takes an explicit seed so that reports are reproducible.
class Rng {
  public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(gen_);
    }
    double gaussian() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }

    Vec gaussian_vector(Eigen::Index dim) {
        Vec v(dim);
        for (Eigen::Index i = 0; i < dim; ++i) v[i] = gaussian();
        return v;
    }
    /// Uniform direction on the unit sphere in R^dim.
    Vec unit_vector(Eigen::Index dim) {
        Vec v = gaussian_vector(dim);
        double n = v.norm();
        while (n < 1e-12) {
            v = gaussian_vector(dim);
            n = v.norm();
        }
        return v / n;
    }
    std::mt19937_64& engine() { return gen_; }

  private:
    std::mt19937_64 gen_;
};

}  // namespace rotorb

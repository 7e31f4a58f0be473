#pragma once

#include "vortwave/vorticity.hpp"

#include <numbers>
#include <stdexcept>
#include <string>

namespace vortwave {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reference vorticity zeta_Q on the flat domain (0,P) x (0,Q).
struct ZetaSpec {
    enum class Kind { None, Constant, Indicator, Csv };
    Kind kind = Kind::None;
    double value = 0; ///< constant value, or amplitude of the indicator
    double x1_min = 0, x1_max = 0, x2_min = 0, x2_max = 0;
    std::string csv_path;
};

enum class ConstraintMode {
    Explicit,  ///< mu, nu given directly
    Perturbed, ///< mu, nu taken from (perturbed domain, xi = eps, eps zeta) with reference vorticity eps zeta_Q
};

struct WaveConfig {
    // physical
    double P = 2 * std::numbers::pi;
    double Q = 1;
    double g = 1;
    double T = 1;
    double beta = 1;
    double E = 1;
    // constraints
    ConstraintMode mode = ConstraintMode::Explicit;
    double mu = 0;
    double nu = 0;
    double epsilon = 0.3;
    double perturbation_amplitude = 0.1;
    // vorticity
    ZetaSpec zeta;
    // numerics
    int m = 64;
    int k = 16;
    double initial_amplitude = 0.1;
    double tol_r = 1e-5;
    double tol_b = 1e-5;
    double tol_c = 1e-7;
    int max_iterations = 500;
    // output
    std::string output_directory = ".";

    /// Throws ConfigError when a parameter is outside its admissible range.
    void validate() const;

    /// zeta_Q as a decreasing step function on (0, PQ), before any epsilon scaling.
    VorticityProfiled reference_profile() const;
};

/// Reads an INI file with sections [physical], [constraints], [vorticity], [numerics], [output].
WaveConfig load_config(const std::string& path);

std::string to_string(ConstraintMode mode);
std::string to_string(ZetaSpec::Kind kind);

} // namespace vortwave

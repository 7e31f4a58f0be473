#include "vortwave/config.hpp"
#include "vortwave/io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <filesystem>

namespace vortwave {

namespace pt = boost::property_tree;

namespace {

template <typename T>
T read(const pt::ptree& tree, const std::string& key, T fallback)
{
    try {
        return tree.get<T>(key, fallback);
    } catch (const pt::ptree_bad_data&) {
        throw ConfigError("invalid value for '" + key + "'");
    }
}

bool positive(double x) { return std::isfinite(x) && x > 0; }

} // namespace

void WaveConfig::validate() const
{
    if (!positive(P)) throw ConfigError("physical.P must be positive");
    if (!positive(Q)) throw ConfigError("physical.Q must be positive");
    if (!positive(g)) throw ConfigError("physical.g must be positive");
    if (!positive(T)) throw ConfigError("physical.T must be positive");
    if (!positive(E)) throw ConfigError("physical.E must be positive");
    if (!std::isfinite(beta) || beta < 1) throw ConfigError("physical.beta must be at least 1");
    if (!std::isfinite(mu) || !std::isfinite(nu)) throw ConfigError("constraints.mu and constraints.nu must be finite");
    if (mode == ConstraintMode::Perturbed) {
        if (!positive(epsilon)) throw ConfigError("constraints.epsilon must be positive");
        if (!positive(perturbation_amplitude) || perturbation_amplitude >= Q)
            throw ConfigError("constraints.amplitude must lie in (0, Q)");
    }
    if (zeta.kind == ZetaSpec::Kind::None) throw ConfigError("vorticity.kind is missing");
    if (!std::isfinite(zeta.value)) throw ConfigError("vorticity.value must be finite");
    if (zeta.kind == ZetaSpec::Kind::Indicator) {
        if (!(0 <= zeta.x1_min && zeta.x1_min < zeta.x1_max && zeta.x1_max <= P && 0 <= zeta.x2_min &&
              zeta.x2_min < zeta.x2_max && zeta.x2_max <= Q))
            throw ConfigError("vorticity indicator rectangle must lie inside (0,P) x (0,Q)");
    }
    if (zeta.kind == ZetaSpec::Kind::Csv && zeta.csv_path.empty()) throw ConfigError("vorticity.file is missing");
    if (m < 16 || k < 2) throw ConfigError("numerics.m must be at least 16 and numerics.k at least 2");
    if (!std::isfinite(initial_amplitude) || std::abs(initial_amplitude) >= Q)
        throw ConfigError("numerics.initial_amplitude must satisfy |a| < Q");
    if (!positive(tol_r) || !positive(tol_b) || !positive(tol_c)) throw ConfigError("tolerances must be positive");
    if (max_iterations < 0) throw ConfigError("numerics.max_iterations must be non-negative");
}

VorticityProfiled WaveConfig::reference_profile() const
{
    const double area = P * Q;
    switch (zeta.kind) {
    case ZetaSpec::Kind::Constant: return VorticityProfiled::constant(zeta.value, area);
    case ZetaSpec::Kind::Indicator: {
        const double inside = (zeta.x1_max - zeta.x1_min) * (zeta.x2_max - zeta.x2_min);
        if (zeta.value >= 0) return VorticityProfiled::from_steps({zeta.value, 0.0}, {inside, area - inside});
        return VorticityProfiled::from_steps({0.0, zeta.value}, {area - inside, inside});
    }
    case ZetaSpec::Kind::Csv: {
        auto profile = read_profile_csv(zeta.csv_path);
        if (std::abs(profile.total_area() - area) > 1e-8 * area)
            throw ConfigError("vorticity profile must cover the area P Q");
        return profile;
    }
    default: throw ConfigError("vorticity.kind is missing");
    }
}

WaveConfig load_config(const std::string& path)
{
    pt::ptree tree;
    try {
        pt::read_ini(path, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("cannot read config: " + std::string(e.what()));
    }
    WaveConfig c;
    c.P = read(tree, "physical.P", c.P);
    c.Q = read(tree, "physical.Q", c.Q);
    c.g = read(tree, "physical.g", c.g);
    c.T = read(tree, "physical.T", c.T);
    c.beta = read(tree, "physical.beta", c.beta);
    c.E = read(tree, "physical.E", c.E);

    const auto mode = read<std::string>(tree, "constraints.mode", "explicit");
    if (mode == "explicit") c.mode = ConstraintMode::Explicit;
    else if (mode == "perturbed") c.mode = ConstraintMode::Perturbed;
    else throw ConfigError("constraints.mode must be 'explicit' or 'perturbed'");
    c.mu = read(tree, "constraints.mu", c.mu);
    c.nu = read(tree, "constraints.nu", c.nu);
    c.epsilon = read(tree, "constraints.epsilon", c.epsilon);
    c.perturbation_amplitude = read(tree, "constraints.amplitude", c.perturbation_amplitude);

    const auto kind = read<std::string>(tree, "vorticity.kind", "");
    if (kind == "constant") c.zeta.kind = ZetaSpec::Kind::Constant;
    else if (kind == "indicator") c.zeta.kind = ZetaSpec::Kind::Indicator;
    else if (kind == "csv") c.zeta.kind = ZetaSpec::Kind::Csv;
    else if (kind.empty()) c.zeta.kind = ZetaSpec::Kind::None;
    else throw ConfigError("vorticity.kind must be constant, indicator or csv");
    c.zeta.value = read(tree, "vorticity.value", 0.0);
    c.zeta.x1_min = read(tree, "vorticity.x1_min", 0.0);
    c.zeta.x1_max = read(tree, "vorticity.x1_max", c.P);
    c.zeta.x2_min = read(tree, "vorticity.x2_min", 0.0);
    c.zeta.x2_max = read(tree, "vorticity.x2_max", c.Q);
    c.zeta.csv_path = read<std::string>(tree, "vorticity.file", "");
    if (!c.zeta.csv_path.empty() && std::filesystem::path(c.zeta.csv_path).is_relative())
        c.zeta.csv_path = (std::filesystem::path(path).parent_path() / c.zeta.csv_path).string();

    c.m = read(tree, "numerics.m", c.m);
    c.k = read(tree, "numerics.k", c.k);
    c.initial_amplitude = read(tree, "numerics.initial_amplitude", c.initial_amplitude);
    c.tol_r = read(tree, "numerics.tol_r", c.tol_r);
    c.tol_b = read(tree, "numerics.tol_b", c.tol_b);
    c.tol_c = read(tree, "numerics.tol_c", c.tol_c);
    c.max_iterations = read(tree, "numerics.max_iterations", c.max_iterations);
    c.output_directory = read<std::string>(tree, "output.directory", c.output_directory);
    c.validate();
    return c;
}

std::string to_string(ConstraintMode mode) { return mode == ConstraintMode::Explicit ? "explicit" : "perturbed"; }

std::string to_string(ZetaSpec::Kind kind)
{
    switch (kind) {
    case ZetaSpec::Kind::Constant: return "constant";
    case ZetaSpec::Kind::Indicator: return "indicator";
    case ZetaSpec::Kind::Csv: return "csv";
    default: return "none";
    }
}

} // namespace vortwave

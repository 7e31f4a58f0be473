#pragma once

#include "vortwave/config.hpp"
#include "vortwave/elliptic.hpp"

#include <json.hpp>

#include <functional>

namespace vortwave {

class NonSolenoidal : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EnergyReport {
    double kinetic = 0;   ///< 1/2 int |grad psi|^2
    double potential = 0; ///< g int x2
    double tension = 0;   ///< T (l - P)^beta
    double bending = 0;   ///< E int sigma^2 ds
    double total = 0;
    double length = 0;
    bool has_bernoulli = false;
    double bernoulli_max = 0; ///< max |deviation from the mean| over surface nodes
    double bernoulli_l2 = 0;  ///< (int deviation^2 ds / l)^{1/2}
};

/// Tension and bending of the surface curve (the latter in the curve's own parametrisation).
struct SurfaceEnergy {
    double length = 0;
    double tension = 0;
    double bending = 0;
};

SurfaceEnergy surface_energy(const WaveConfig& config, const PeriodicCurved& surface);

/// g int_Omega x2, exact for the mesh's piecewise-bilinear geometry.
double potential_energy(const Mesh& mesh, double g);

/// Energy of the configuration with stream function psi on `mesh`.
EnergyReport total_energy(const WaveConfig& config, const Mesh& mesh, const Eigen::VectorXd& psi);
/// Same, using the stored kinetic energy of a multiplier solve and attaching the Bernoulli statistics.
EnergyReport total_energy(const WaveConfig& config, const Mesh& mesh, const StreamState& state);

/// 1/2 |grad psi0|^2 + g x2 - beta T (l - P)^{beta-1} sigma + E (sigma^3 + 2 sigma_ss) at the surface nodes.
struct BernoulliResidual {
    Eigen::VectorXd s;          ///< arclength position of each surface node
    Eigen::VectorXd ds;         ///< arclength quadrature weight of each node
    Eigen::VectorXd values;
    Eigen::VectorXd deviations; ///< values minus their arclength-weighted mean
    double mean = 0;
    double max_deviation = 0;
    double l2 = 0;
};

BernoulliResidual bernoulli_residual(const WaveConfig& config, const Mesh& mesh, const StreamState& state);

/// Gradient of a nodal field at the surface nodes (central in x1, second-order one-sided in depth).
Eigen::MatrixX2d surface_gradient(const Mesh& mesh, const Eigen::VectorXd& field);

/// Smooth P-periodic vector field with its Jacobian (rows: components, columns: d/dx1, d/dx2).
struct VectorField {
    std::function<Eigen::Vector2d(const Eigen::Vector2d&)> value;
    std::function<Eigen::Matrix2d(const Eigen::Vector2d&)> jacobian;
};

VectorField zero_field();
VectorField translation_field(double c);

/// Curl (d2 phi, -d1 phi) of phi = x2^2 sum_n (a_n cos(n w x1) + b_n sin(n w x1)) (1 + c_n x2), w = 2 pi / P.
/// Divergence free, and tangent to the bottom.
VectorField curl_field(double period, const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& c);
/// Random instance of curl_field with `modes` Fourier modes and coefficients of size `amplitude`.
VectorField random_solenoidal_field(double period, unsigned seed, int modes = 3, double amplitude = 0.1);

/// Weak first variation of the energy along the flow of omega:
/// int grad psi0 . D omega grad psi0 + g int div(x2 omega) + beta T (l-P)^{beta-1} dl + E d(int sigma^2 ds).
/// Throws NonSolenoidal unless div omega = 0 and omega_2 = 0 on the bottom.
double shape_derivative(const WaveConfig& config, const Mesh& mesh, const StreamState& state, const VectorField& omega);

/// Normal velocity of the surface nodes opposing the Bernoulli deviations, with zero arclength mean.
Eigen::VectorXd shape_gradient(const WaveConfig& config, const Mesh& mesh, const StreamState& state);

nlohmann::json energy_to_json(const EnergyReport& report);

} // namespace vortwave

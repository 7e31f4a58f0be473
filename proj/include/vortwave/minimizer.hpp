#pragma once

#include "vortwave/config.hpp"
#include "vortwave/elliptic.hpp"
#include "vortwave/energy.hpp"
#include "vortwave/vorticity.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace vortwave {

enum class SignCondition { Satisfied, Violated, Inapplicable };
std::string to_string(SignCondition s);

/// (nu - Q mu) zeta_Q <= 0 for one-signed zeta_Q, or nu - Q mu != 0 when zeta_Q vanishes.
SignCondition check_parallel_flow_sign(const VorticityProfiled& reference, double mu, double nu, double Q);
SignCondition check_parallel_flow_sign(const WaveConfig& config);

struct M2Report {
    double L0 = 0;
    double excess = 0;       ///< L0 - g P Q^2 / 2
    double length_bound = 0; ///< (excess / T)^{1/beta}
    double depth_lhs = 0;    ///< (P / 2 pi) a((2 pi / P) length_bound + 2 pi)
    double depth_rhs = 0;    ///< Q
    double bending_lhs = 0;  ///< excess * length_bound
    double bending_rhs = 0;  ///< E pi^2
    bool depth_pass = false;
    bool bending_pass = false;
    bool pass() const { return depth_pass && bending_pass; }
};

/// Throws std::domain_error when L0 <= g P Q^2 / 2.
M2Report check_M2(const WaveConfig& config, double L0);

/// R = Q + (P + ((L0 - g P Q^2/2) / T)^{1/beta}) / 2.
double domain_height_cap(const WaveConfig& config, double L0);

/// Constraint values and reference vorticity actually used by a run.
struct Problem {
    VorticityProfiled profile; ///< reference vorticity (scaled by epsilon in the perturbed mode)
    double mu = 0;
    double nu = 0;
    GraphSurfaced initial_surface;
    /// Energy of the perturbed admissible state used to build (mu, nu); absent in the explicit mode.
    std::optional<double> admissible_energy;
};

Problem prepare_problem(const WaveConfig& config);

/// phi = psi - lambda1 x2 averaged over each cell with the load quadrature.
Eigen::VectorXd cell_phi(const Mesh& mesh, const StreamState& state);

/// sum a_c zeta_c phi_c - min over the rearrangement class of the profile.
double rearrangement_gap(const VorticityFieldd& zeta, const VorticityProfiled& profile, const Eigen::VectorXd& phi);

/// Realisation of `profile` on `mesh` with the largest values at the lowest cell centres.
VorticityFieldd initial_vorticity(const Mesh& mesh, const VorticityProfiled& profile);

enum class Termination { Converged, CriticalPointSuspected, IterationLimit, DegenerateDomain };
std::string to_string(Termination t);

struct IterationRecord {
    int iteration = 0;
    double energy = 0;
    double gap = 0;
    double residual = 0;
    double C = 0;
    double I = 0;
    double lambda1 = 0;
    double lambda2 = 0;
    double surface_step = 0;
    double kinetic_before_rearrangement = 0;
    double kinetic_after_rearrangement = 0;
};

struct MinimizeResult {
    GraphSurfaced surface;
    VorticityFieldd zeta;
    std::optional<Mesh> mesh;
    StreamState state;
    EnergyReport energy;
    std::vector<IterationRecord> trace;
    Termination reason = Termination::IterationLimit;
    std::string message;
    double gap = 0;
    double constraint_defect = 0;
    double fit_residual = 0;
    double class_defect = 0; ///< L1 distance between the distribution of zeta and the reference profile
    bool in_weak_closure = false;
};

struct MinimizeOptions {
    double line_search_tolerance = 1e-12;
    double min_step = 1e-10;
    /// Cells on each side of a profile breakpoint (in phi order) freed by the vorticity refinement; 0 means 2 m.
    int band_width = 0;
    /// Called after every outer iteration (for logging); may be empty.
    std::function<void(const IterationRecord&)> on_iteration;
};

MinimizeResult minimize(const WaveConfig& config, const Problem& problem, const GraphSurfaced& surface, const VorticityFieldd& zeta,
                        const MinimizeOptions& options = {});
/// Runs from the configured initialisation.
MinimizeResult minimize(const WaveConfig& config, const MinimizeOptions& options = {});

/// Kinetic-energy minimiser over fields in the weak closure of `profile` that coincide with the greedy
/// fill along `order_phi` outside a band of cells around each breakpoint; solved exactly on the band by
/// an active-set method. Returns the greedy fill itself when the bands cannot be formed.
VorticityFieldd refine_vorticity(const Mesh& mesh, const VorticityProfiled& profile, const Eigen::VectorXd& order_phi, double mu,
                                 double nu, int band_width = 0);

/// Sobolev-preconditioned height update for a normal surface velocity.
Eigen::VectorXd height_direction(const WaveConfig& config, const Mesh& mesh, const Eigen::VectorXd& normal_velocity);

nlohmann::json result_summary(const MinimizeResult& result);

} // namespace vortwave

#pragma once

#include "vortwave/elliptic.hpp"
#include "vortwave/energy.hpp"
#include "vortwave/minimizer.hpp"

#include <memory>
#include <optional>

namespace vortwave {

class MetricError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Point location on a mesh built by the vertical map (columns are vertical lines).
class MeshLocator {
public:
    explicit MeshLocator(const Mesh& mesh);

    struct Hit {
        int i, j;
        double xi, eta;
    };
    /// Cell and reference coordinates of x (x1 taken modulo the period); empty outside the domain.
    std::optional<Hit> locate(const Eigen::Vector2d& x) const;
    /// Height of the surface polyline at x1.
    double surface_height(double x1) const;
    /// Column index and fraction of x1 (modulo the period).
    std::pair<int, double> column(double x1) const;

private:
    const Mesh* mesh_;
    double h_;
};

/// A configuration (Omega, xi, zeta) with the stream function solving -Laplace psi = zeta, psi = xi on the surface.
struct FlowState {
    GraphSurfaced surface;
    std::shared_ptr<const Mesh> mesh;
    Eigen::VectorXd xi; ///< surface nodal values
    VorticityFieldd zeta;
    Eigen::VectorXd psi;
    double mu = 0; ///< C(Omega, xi, zeta)
    double nu = 0; ///< I(Omega, xi, zeta)
};

FlowState make_flow_state(const GraphSurfaced& surface, int k, const Eigen::VectorXd& zeta, const Eigen::VectorXd& xi);
FlowState make_flow_state(const MinimizeResult& result);

/// Solution with affine surface data lambda1 x2 + lambda2 and the same C and I; throws MetricError on the flat domain.
StreamState affine_solution(const FlowState& state);

struct MetricOptions {
    double cap = 0;   ///< R; 0 picks twice the highest surface point
    int nx = 128;     ///< strip cells across one period
    int ny = 64;      ///< strip cells over (0, R)
    int shifts = 0;   ///< shift grid for the curve term; 0 uses the number of surface samples
};

/// Terms of dist1: curve H^2 distance (inf over shifts), (H^1)' distance of vorticities, gradient distance.
struct MetricReport {
    double curve = 0;
    double dual = 0;
    double gradient = 0;
    double total = 0;
    bool short_form = false; ///< dist0 only: same domain and same affine-data solution
};

MetricReport dist1_report(const FlowState& s1, const FlowState& s2, const MetricOptions& options = {});
double dist1(const FlowState& s1, const FlowState& s2, const MetricOptions& options = {});

/// Five-term distance built on the affine-data solutions (extended above the surface by lambda1 x2 + lambda2);
/// short two-term form when the domains and the affine-data solutions agree within 1e-10.
MetricReport dist0_report(const FlowState& s1, const FlowState& s2, const MetricOptions& options = {});
double dist0(const FlowState& s1, const FlowState& s2, const MetricOptions& options = {});

/// dist1(s1, s2) <= dist0(s1, s2) + ||grad psibar_2||_{L2(Omega1 \ Omega2)} + ||grad psi_2||_{L2(Omega2 \ Omega1)}.
struct ComparisonChain {
    double dist0 = 0;
    double dist1 = 0;
    double affine_extension = 0;
    double flow_extension = 0;
    bool holds() const { return dist1 <= dist0 + affine_extension + flow_extension + 1e-12; }
};

ComparisonChain comparison_chain(const FlowState& s1, const FlowState& s2, const MetricOptions& options = {});

/// inf_s || p1(s + .) - p2 ||_{H^2_per} over constant-speed parametrisations with p1(0) on x1 = 0.
double curve_distance(const GraphSurfaced& a, const GraphSurfaced& b, int shifts = 0);

enum class Metric { Dist0, Dist1 };

double distance_to_set(const FlowState& state, const std::vector<FlowState>& set, Metric metric, const MetricOptions& options = {});

/// Uniform cell-centred grid on (0, P) x (0, R).
struct StripGrid {
    double period = 1;
    double cap = 1;
    int nx = 1;
    int ny = 1;
    double dx() const { return period / nx; }
    double dy() const { return cap / ny; }
    Eigen::Vector2d center(int i, int j) const { return {(i + 0.5) * dx(), (j + 0.5) * dy()}; }
};

/// (H^1)' norm on the strip of a cellwise field f: sqrt(int f w) with (-Laplace + 1) w = f, periodic in x1,
/// natural conditions on x2 = 0 and x2 = R.
double dual_norm(const StripGrid& grid, const Eigen::MatrixXd& f);

/// Stream function extended to the periodic strip and its velocity u = (d2 psi, -d1 psi).
/// Inside the fluid it is the finite-element stream function (minus frame_speed x2); above the surface a first-order
/// Taylor extension blended to a constant before the cap; odd reflection below the bottom.
class VelocityField {
public:
    VelocityField(const FlowState& state, double cap, int nx, int ny, double frame_speed = 0);
    /// Stream function given in closed form on [0, P] x [0, R] (odd reflection below, constant above R).
    VelocityField(const std::function<double(const Eigen::Vector2d&)>& psi, double period, double cap, int nx, int ny);

    Eigen::Vector2d operator()(const Eigen::Vector2d& x) const;
    /// d1 u1 + d2 u2 from the interpolant's derivatives.
    double divergence(const Eigen::Vector2d& x) const;
    double stream(const Eigen::Vector2d& x) const;
    double period() const { return period_; }
    double cap() const { return cap_; }

private:
    void build(const std::function<double(const Eigen::Vector2d&)>& psi);
    /// psi and its first and mixed derivatives at x, for 0 <= x2 <= cap.
    Eigen::Vector4d bicubic(const Eigen::Vector2d& x) const;

    double period_, cap_;
    int nx_, ny_;
    Eigen::MatrixXd nodes_; ///< psi at (i dx, j dy), rows i in [0, nx), columns j in [-1, ny + 2)
};

enum class Interpolation { Bilinear, Cubic };

/// Cellwise field on a strip grid, sampled with periodic wrap in x1, even reflection below x2 = 0 and zero above R.
struct StripField {
    StripGrid grid;
    Eigen::MatrixXd values; ///< nx x ny

    double sample(const Eigen::Vector2d& x, Interpolation interp) const;
    double l2_norm() const;
    VorticityFieldd as_vorticity() const;
};

/// Cell values of the state's vorticity at the strip cell centres (zero outside the fluid).
StripField sample_vorticity(const FlowState& state, const StripGrid& grid);
StripField sample_function(const StripGrid& grid, const std::function<double(const Eigen::Vector2d&)>& f);

/// Largest |u1| dt / dx + |u2| dt / dy over the grid centres.
double cfl_number(const StripGrid& grid, const VelocityField& u, double dt);

/// One semi-Lagrangian step: RK2 backward characteristics, then interpolation. Throws TransportError if CFL > 0.9.
StripField transport_step(const StripField& chi, const VelocityField& u, double dt, Interpolation interp = Interpolation::Bilinear);

struct FollowerTrace {
    std::vector<double> t;
    std::vector<double> l2_norm;
    std::vector<double> distribution_drift; ///< L1 distance between the decreasing rearrangements of chi(t) and chi(0)
    std::vector<double> support_area;
    std::vector<double> difference; ///< ||chi(t) - tracked(t)||_{L2}, empty unless a second field is tracked
    StripField final_field;
};

FollowerTrace follower_run(const VelocityField& u, const StripField& chi0, double horizon, double dt,
                           Interpolation interp = Interpolation::Bilinear, const std::optional<StripField>& tracked = std::nullopt);

} // namespace vortwave

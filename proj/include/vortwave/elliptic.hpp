#pragma once

#include "vortwave/geometry.hpp"
#include "vortwave/vorticity.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <array>
#include <cstdio>
#include <string>
#include <functional>
#include <memory>
#include <stdexcept>

namespace vortwave {

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The determinant P^2 - P Q C(Omega,1,0) vanishes: the flat domain excluded by the multiplier system.
class DegenerateDomain : public std::runtime_error {
public:
    explicit DegenerateDomain(double det) : std::runtime_error(message(det)), determinant(det) {}
    double determinant;

private:
    static std::string message(double det)
    {
        char buf[96];
        std::snprintf(buf, sizeof buf, "degenerate domain: multiplier determinant %.3e", det);
        return buf;
    }
};

using SparseMatrixd = Eigen::SparseMatrix<double>;

/// Structured m x k quadrilateral grid of one period of the fluid domain, periodic in x1.
/// Node (i, j), 0 <= i < m, 0 <= j <= k, sits on the bottom for j = 0 and on the surface for j = k.
/// Cell (i, j) has corners (i, j), (i+1, j), (i+1, j+1), (i, j+1); column m wraps to column 0 shifted by P.
class Mesh {
public:
    Mesh(Eigen::MatrixXd x1, Eigen::MatrixXd x2, double period);

    int m() const { return m_; }
    int k() const { return k_; }
    double period() const { return period_; }
    int node_count() const { return m_ * (k_ + 1); }
    int cell_count() const { return m_ * k_; }
    int node(int i, int j) const { return wrap(i) * (k_ + 1) + j; }
    int cell(int i, int j) const { return wrap(i) * k_ + j; }

    /// Node coordinates, with the periodic shift applied for columns outside [0, m).
    double x1(int i, int j) const { return x1_(wrap(i), j) + period_ * shift_count(i); }
    double x2(int i, int j) const { return x2_(wrap(i), j); }
    const Eigen::MatrixXd& x1_nodes() const { return x1_; }
    const Eigen::MatrixXd& x2_nodes() const { return x2_; }

    /// Corner node indices and coordinates of a cell, counter-clockwise from (i, j).
    std::array<int, 4> cell_nodes(int i, int j) const;
    Eigen::Matrix<double, 4, 2> cell_corners(int i, int j) const;

    const Eigen::VectorXd& cell_areas() const { return areas_; }
    double total_area() const { return areas_.sum(); }
    double max_cell_diameter() const;

    /// Nodal x2 (the coordinate function is exactly representable by the isoparametric elements).
    Eigen::VectorXd height_field() const;
    /// Nodal j / k: zero on the bottom, one on the surface, bilinear in between.
    Eigen::VectorXd reference_field() const;

    /// Surface nodes as a periodic curve sampled uniformly in the column index.
    PeriodicCurved top_curve() const;

    /// Stiffness matrix int grad N_a . grad N_b.
    const SparseMatrixd& stiffness() const { return stiffness_; }
    /// Load matrix B(a, c) = int_{cell c} N_a.
    const SparseMatrixd& cell_load() const { return load_; }
    /// g_a = int d_2 N_a, so that int d_2 psi = g . psi.
    const Eigen::VectorXd& impulse_vector() const { return impulse_; }

    /// Solves -Laplace psi = zeta (cellwise constant) with psi = 0 on the bottom and psi = top on the surface.
    Eigen::VectorXd solve_dirichlet(const Eigen::VectorXd& zeta, const Eigen::VectorXd& top) const;

    /// Values at the 2 x 2 Gauss points of each cell: quadrature weight (times det J) and physical gradients.
    struct QuadraturePoint {
        double weight;
        double xi, eta;
        Eigen::Matrix<double, 4, 2> grad; // rows: corner shape functions
        Eigen::Vector4d shape;
        Eigen::Vector2d x;
    };
    const std::array<QuadraturePoint, 4>& quadrature(int i, int j) const { return quad_[static_cast<std::size_t>(cell(i, j))]; }

    /// Maps reference coordinates (xi, eta) in [0,1]^2 of cell (i, j) to physical coordinates.
    Eigen::Vector2d map(int i, int j, double xi, double eta) const;
    /// Gradient of the nodal field at reference point (xi, eta) of cell (i, j).
    Eigen::Vector2d gradient(const Eigen::VectorXd& field, int i, int j, double xi, double eta) const;

private:
    int wrap(int i) const { return ((i % m_) + m_) % m_; }
    int shift_count(int i) const { return i >= 0 ? i / m_ : -((-i + m_ - 1) / m_); }
    void assemble();

    int m_ = 0;
    int k_ = 0;
    double period_ = 1;
    Eigen::MatrixXd x1_, x2_;
    Eigen::VectorXd areas_;
    std::vector<std::array<QuadraturePoint, 4>> quad_;
    SparseMatrixd stiffness_, load_;
    Eigen::VectorXd impulse_;
    std::vector<int> interior_;
    std::shared_ptr<const Eigen::SimplicialLDLT<SparseMatrixd>> factor_;
    SparseMatrixd k_interior_top_;
};

/// Mesh of the domain under a graph surface through the vertical map x2 = (j / k) H(x1).
Mesh build_mesh(const GraphSurfaced& surface, int k);

struct HarmonicUnit {
    Eigen::VectorXd psi;
    double C = 0; ///< C(Omega, 1, 0) = int |grad psi~|^2
};

struct ParticularSolution {
    Eigen::VectorXd psi;
    double C = 0; ///< C(Omega, 0, zeta)
};

HarmonicUnit harmonic_unit(const Mesh& mesh);
ParticularSolution particular_solution(const Mesh& mesh, const Eigen::VectorXd& zeta);

/// Weak circulation int grad psi . grad psi_hat - int zeta psi_hat (psi_hat defaults to the harmonic unit).
double circulation(const Mesh& mesh, const Eigen::VectorXd& psi, const Eigen::VectorXd& zeta);
double circulation(const Mesh& mesh, const Eigen::VectorXd& psi, const Eigen::VectorXd& zeta, const Eigen::VectorXd& psi_hat);
/// int d_2 psi
double impulse(const Mesh& mesh, const Eigen::VectorXd& psi);
/// 1/2 int |grad psi|^2
double kinetic_energy(const Mesh& mesh, const Eigen::VectorXd& psi);

/// Stream function with surface data lambda1 x2 + lambda2 meeting C = mu and I = nu.
struct StreamState {
    Eigen::VectorXd psi;
    Eigen::VectorXd psi_unit;   ///< harmonic, 0 on the bottom, 1 on the surface
    Eigen::VectorXd psi_height; ///< harmonic, 0 on the bottom, x2 on the surface
    Eigen::VectorXd psi_part;   ///< -Laplace = zeta, 0 on both boundaries
    double lambda1 = 0;
    double lambda2 = 0;
    double C = 0;
    double I = 0;
    double kinetic_energy = 0;
    double C_unit = 0; ///< C(Omega, 1, 0)
    double C_part = 0; ///< C(Omega, 0, zeta)
    double determinant = 0;

    /// psi - lambda1 x2 at the nodes.
    Eigen::VectorXd psi0(const Mesh& mesh) const { return psi - lambda1 * mesh.height_field(); }
};

constexpr double kDegeneracyThreshold = 1e-10;

StreamState solve_multipliers(const Mesh& mesh, const Eigen::VectorXd& zeta, double mu, double nu);

/// Nodes moved along dx/dt = v(x) for time t (classical RK4 with `steps` substeps).
Mesh transported_mesh(const Mesh& mesh, const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& velocity, double t,
                      int steps = 8);

} // namespace vortwave

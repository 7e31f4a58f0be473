#include "vortwave/elliptic.hpp"

#include <cmath>

namespace vortwave {

namespace {

constexpr double kGauss = 0.21132486540518711775; // (1 - 1/sqrt 3) / 2 on [0, 1]

struct ShapeDerivatives {
    Eigen::Vector4d n;
    Eigen::Matrix<double, 4, 2> d; // columns: d/dxi, d/deta
};

ShapeDerivatives shape(double xi, double eta)
{
    ShapeDerivatives s;
    s.n << (1 - xi) * (1 - eta), xi * (1 - eta), xi * eta, (1 - xi) * eta;
    s.d << -(1 - eta), -(1 - xi), (1 - eta), -xi, eta, xi, -eta, (1 - xi);
    return s;
}

} // namespace

Mesh::Mesh(Eigen::MatrixXd x1, Eigen::MatrixXd x2, double period)
    : m_(static_cast<int>(x1.rows())), k_(static_cast<int>(x1.cols()) - 1), period_(period), x1_(std::move(x1)),
      x2_(std::move(x2))
{
    if (m_ < 3 || k_ < 1) throw GeometryError("mesh needs at least 3 columns and 1 row of cells");
    if (x2_.rows() != x1_.rows() || x2_.cols() != x1_.cols()) throw GeometryError("mesh coordinate arrays differ in shape");
    if (!(period_ > 0)) throw GeometryError("mesh period must be positive");
    if (!x1_.allFinite() || !x2_.allFinite()) throw GeometryError("mesh coordinates must be finite");
    assemble();
}

std::array<int, 4> Mesh::cell_nodes(int i, int j) const
{
    return {node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)};
}

Eigen::Matrix<double, 4, 2> Mesh::cell_corners(int i, int j) const
{
    Eigen::Matrix<double, 4, 2> c;
    c << x1(i, j), x2(i, j), x1(i + 1, j), x2(i + 1, j), x1(i + 1, j + 1), x2(i + 1, j + 1), x1(i, j + 1), x2(i, j + 1);
    return c;
}

double Mesh::max_cell_diameter() const
{
    double d = 0;
    for (int i = 0; i < m_; ++i) {
        for (int j = 0; j < k_; ++j) {
            const auto c = cell_corners(i, j);
            d = std::max({d, (c.row(0) - c.row(2)).norm(), (c.row(1) - c.row(3)).norm()});
        }
    }
    return d;
}

Eigen::VectorXd Mesh::height_field() const
{
    Eigen::VectorXd h(node_count());
    for (int i = 0; i < m_; ++i)
        for (int j = 0; j <= k_; ++j) h(node(i, j)) = x2_(i, j);
    return h;
}

Eigen::VectorXd Mesh::reference_field() const
{
    Eigen::VectorXd h(node_count());
    for (int i = 0; i < m_; ++i)
        for (int j = 0; j <= k_; ++j) h(node(i, j)) = double(j) / double(k_);
    return h;
}

PeriodicCurved Mesh::top_curve() const
{
    MatrixX2<double> pts(m_, 2);
    for (int i = 0; i < m_; ++i) pts.row(i) << x1_(i, k_), x2_(i, k_);
    return PeriodicCurved(std::move(pts), period_, CurveClosure::Periodic);
}

Eigen::Vector2d Mesh::map(int i, int j, double xi, double eta) const
{
    return shape(xi, eta).n.transpose() * cell_corners(i, j);
}

Eigen::Vector2d Mesh::gradient(const Eigen::VectorXd& field, int i, int j, double xi, double eta) const
{
    const auto s = shape(xi, eta);
    const Eigen::Matrix2d J = cell_corners(i, j).transpose() * s.d;
    const auto nodes = cell_nodes(i, j);
    Eigen::Vector2d ref = Eigen::Vector2d::Zero();
    for (int a = 0; a < 4; ++a) ref += field(nodes[static_cast<std::size_t>(a)]) * s.d.row(a).transpose();
    return J.transpose().inverse() * ref;
}

void Mesh::assemble()
{
    const int n = node_count();
    areas_.resize(cell_count());
    quad_.resize(static_cast<std::size_t>(cell_count()));
    impulse_ = Eigen::VectorXd::Zero(n);
    std::vector<Eigen::Triplet<double>> kt, lt;
    kt.reserve(static_cast<std::size_t>(16 * cell_count()));
    lt.reserve(static_cast<std::size_t>(4 * cell_count()));

    const double pts[2] = {kGauss, 1 - kGauss};
    for (int i = 0; i < m_; ++i) {
        for (int j = 0; j < k_; ++j) {
            const auto corners = cell_corners(i, j);
            const auto nodes = cell_nodes(i, j);
            Eigen::Matrix4d ke = Eigen::Matrix4d::Zero();
            Eigen::Vector4d le = Eigen::Vector4d::Zero();
            double area = 0;
            int q = 0;
            for (double eta : pts) {
                for (double xi : pts) {
                    const auto s = shape(xi, eta);
                    const Eigen::Matrix2d J = corners.transpose() * s.d;
                    const double det = J.determinant();
                    if (!(det > 0)) throw GeometryError("mesh cell is inverted or degenerate");
                    QuadraturePoint& qp = quad_[static_cast<std::size_t>(cell(i, j))][static_cast<std::size_t>(q++)];
                    qp.weight = 0.25 * det;
                    qp.xi = xi;
                    qp.eta = eta;
                    qp.grad = s.d * J.inverse();
                    qp.shape = s.n;
                    qp.x = corners.transpose() * s.n;
                    ke += qp.weight * qp.grad * qp.grad.transpose();
                    le += qp.weight * s.n;
                    area += qp.weight;
                    for (int a = 0; a < 4; ++a) impulse_(nodes[static_cast<std::size_t>(a)]) += qp.weight * qp.grad(a, 1);
                }
            }
            areas_(cell(i, j)) = area;
            for (int a = 0; a < 4; ++a) {
                lt.emplace_back(nodes[static_cast<std::size_t>(a)], cell(i, j), le(a));
                for (int b = 0; b < 4; ++b) kt.emplace_back(nodes[static_cast<std::size_t>(a)], nodes[static_cast<std::size_t>(b)], ke(a, b));
            }
        }
    }
    stiffness_.resize(n, n);
    stiffness_.setFromTriplets(kt.begin(), kt.end());
    load_.resize(n, cell_count());
    load_.setFromTriplets(lt.begin(), lt.end());

    // interior block (rows 1..k-1) and its coupling to the surface nodes
    std::vector<int> index(static_cast<std::size_t>(n), -1);
    std::vector<int> top(static_cast<std::size_t>(n), -1);
    for (int i = 0; i < m_; ++i) {
        for (int j = 1; j < k_; ++j) {
            index[static_cast<std::size_t>(node(i, j))] = static_cast<int>(interior_.size());
            interior_.push_back(node(i, j));
        }
        top[static_cast<std::size_t>(node(i, k_))] = i;
    }
    if (interior_.empty()) return;
    const int ni = static_cast<int>(interior_.size());
    std::vector<Eigen::Triplet<double>> it, tt;
    for (int col = 0; col < stiffness_.outerSize(); ++col) {
        for (SparseMatrixd::InnerIterator e(stiffness_, col); e; ++e) {
            const int r = index[static_cast<std::size_t>(e.row())];
            if (r < 0) continue;
            const int c = index[static_cast<std::size_t>(e.col())];
            if (c >= 0) it.emplace_back(r, c, e.value());
            const int t = top[static_cast<std::size_t>(e.col())];
            if (t >= 0) tt.emplace_back(r, t, e.value());
        }
    }
    SparseMatrixd kii(ni, ni);
    kii.setFromTriplets(it.begin(), it.end());
    k_interior_top_.resize(ni, m_);
    k_interior_top_.setFromTriplets(tt.begin(), tt.end());
    auto factor = std::make_shared<Eigen::SimplicialLDLT<SparseMatrixd>>(kii);
    if (factor->info() != Eigen::Success) throw SolverError("stiffness factorisation failed");
    factor_ = std::move(factor);
}

Eigen::VectorXd Mesh::solve_dirichlet(const Eigen::VectorXd& zeta, const Eigen::VectorXd& top) const
{
    if (zeta.size() != cell_count()) throw SolverError("vorticity has the wrong number of cells");
    if (top.size() != m_) throw SolverError("surface data has the wrong number of nodes");
    if (!zeta.allFinite() || !top.allFinite()) throw SolverError("non-finite data in Dirichlet solve");
    Eigen::VectorXd psi = Eigen::VectorXd::Zero(node_count());
    for (int i = 0; i < m_; ++i) psi(node(i, k_)) = top(i);
    if (interior_.empty()) return psi;
    const Eigen::VectorXd load = load_ * zeta;
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(interior_.size()));
    for (std::size_t r = 0; r < interior_.size(); ++r) rhs(static_cast<Eigen::Index>(r)) = load(interior_[r]);
    rhs -= k_interior_top_ * top;
    const Eigen::VectorXd u = factor_->solve(rhs);
    if (factor_->info() != Eigen::Success || !u.allFinite()) throw SolverError("Dirichlet solve failed");
    for (std::size_t r = 0; r < interior_.size(); ++r) psi(interior_[r]) = u(static_cast<Eigen::Index>(r));
    return psi;
}

Mesh build_mesh(const GraphSurfaced& surface, int k)
{
    if (k < 1) throw GeometryError("vertical resolution must be at least 1");
    const int m = surface.size();
    Eigen::MatrixXd x1(m, k + 1), x2(m, k + 1);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j <= k; ++j) {
            x1(i, j) = surface.abscissa(i);
            x2(i, j) = surface.heights()(i) * double(j) / double(k);
        }
    }
    return Mesh(std::move(x1), std::move(x2), surface.period());
}

HarmonicUnit harmonic_unit(const Mesh& mesh)
{
    HarmonicUnit h;
    h.psi = mesh.solve_dirichlet(Eigen::VectorXd::Zero(mesh.cell_count()), Eigen::VectorXd::Ones(mesh.m()));
    h.C = h.psi.dot(mesh.stiffness() * h.psi);
    return h;
}

ParticularSolution particular_solution(const Mesh& mesh, const Eigen::VectorXd& zeta)
{
    ParticularSolution p;
    p.psi = mesh.solve_dirichlet(zeta, Eigen::VectorXd::Zero(mesh.m()));
    p.C = circulation(mesh, p.psi, zeta);
    return p;
}

double circulation(const Mesh& mesh, const Eigen::VectorXd& psi, const Eigen::VectorXd& zeta, const Eigen::VectorXd& psi_hat)
{
    return psi.dot(mesh.stiffness() * psi_hat) - (mesh.cell_load() * zeta).dot(psi_hat);
}

double circulation(const Mesh& mesh, const Eigen::VectorXd& psi, const Eigen::VectorXd& zeta)
{
    return circulation(mesh, psi, zeta, harmonic_unit(mesh).psi);
}

double impulse(const Mesh& mesh, const Eigen::VectorXd& psi) { return mesh.impulse_vector().dot(psi); }

double kinetic_energy(const Mesh& mesh, const Eigen::VectorXd& psi) { return 0.5 * psi.dot(mesh.stiffness() * psi); }

StreamState solve_multipliers(const Mesh& mesh, const Eigen::VectorXd& zeta, double mu, double nu)
{
    StreamState s;
    const double P = mesh.period();
    const double area = mesh.total_area();
    const Eigen::VectorXd zero_top = Eigen::VectorXd::Zero(mesh.m());
    Eigen::VectorXd top_height(mesh.m());
    for (int i = 0; i < mesh.m(); ++i) top_height(i) = mesh.x2(i, mesh.k());

    s.psi_unit = mesh.solve_dirichlet(Eigen::VectorXd::Zero(mesh.cell_count()), Eigen::VectorXd::Ones(mesh.m()));
    s.psi_height = mesh.solve_dirichlet(Eigen::VectorXd::Zero(mesh.cell_count()), top_height);
    s.psi_part = mesh.solve_dirichlet(zeta, zero_top);
    s.C_unit = s.psi_unit.dot(mesh.stiffness() * s.psi_unit);
    s.C_part = circulation(mesh, s.psi_part, zeta, s.psi_unit);

    // lambda2 C1 + lambda1 P = mu - C(0, zeta);  lambda2 P + lambda1 P Q = nu
    s.determinant = P * P - area * s.C_unit;
    if (std::abs(s.determinant) < kDegeneracyThreshold * P * P) throw DegenerateDomain(s.determinant);
    const double rhs = mu - s.C_part;
    s.lambda1 = (P * rhs - s.C_unit * nu) / s.determinant;
    s.lambda2 = (P * nu - area * rhs) / s.determinant;

    s.psi = s.psi_part + s.lambda1 * s.psi_height + s.lambda2 * s.psi_unit;
    s.C = circulation(mesh, s.psi, zeta, s.psi_unit);
    s.I = impulse(mesh, s.psi);
    s.kinetic_energy = kinetic_energy(mesh, s.psi);
    return s;
}

Mesh transported_mesh(const Mesh& mesh, const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& velocity, double t, int steps)
{
    Eigen::MatrixXd x1 = mesh.x1_nodes();
    Eigen::MatrixXd x2 = mesh.x2_nodes();
    const double h = t / steps;
    for (int i = 0; i < mesh.m(); ++i) {
        for (int j = 0; j <= mesh.k(); ++j) {
            Eigen::Vector2d x(x1(i, j), x2(i, j));
            for (int s = 0; s < steps; ++s) {
                const Eigen::Vector2d k1 = velocity(x);
                const Eigen::Vector2d k2 = velocity(x + 0.5 * h * k1);
                const Eigen::Vector2d k3 = velocity(x + 0.5 * h * k2);
                const Eigen::Vector2d k4 = velocity(x + h * k3);
                x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
            }
            x1(i, j) = x(0);
            x2(i, j) = j == 0 ? 0.0 : x(1);
        }
    }
    return Mesh(std::move(x1), std::move(x2), mesh.period());
}

} // namespace vortwave

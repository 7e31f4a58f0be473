#include "vortwave/stability.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace vortwave {

namespace {

constexpr double kGauss = 0.21132486540518711775; // (1 - 1/sqrt 3) / 2

double wrap_period(double x, double period)
{
    double r = std::fmod(x, period);
    if (r < 0) r += period;
    return r;
}

double value_at(const Mesh& mesh, const Eigen::VectorXd& field, const MeshLocator::Hit& h)
{
    const auto n = mesh.cell_nodes(h.i, h.j);
    return (1 - h.xi) * (1 - h.eta) * field(n[0]) + h.xi * (1 - h.eta) * field(n[1]) + h.xi * h.eta * field(n[2]) +
           (1 - h.xi) * h.eta * field(n[3]);
}

/// Per-state samples at the 2 x 2 Gauss points of every strip cell.
struct StripSamples {
    std::vector<char> inside;
    std::vector<Eigen::Vector2d> grad;        ///< grad psi, zero outside
    std::vector<Eigen::Vector2d> affine_grad; ///< grad psibar, (0, lambda1) above the surface
    std::vector<double> zeta;                 ///< zero outside
};

struct StripQuadrature {
    StripGrid grid;
    std::vector<Eigen::Vector2d> points;
    double weight = 0;
};

StripQuadrature strip_quadrature(const StripGrid& grid)
{
    StripQuadrature q;
    q.grid = grid;
    q.weight = grid.dx() * grid.dy() / 4;
    q.points.reserve(static_cast<std::size_t>(4 * grid.nx * grid.ny));
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.ny; ++j)
            for (double a : {kGauss, 1 - kGauss})
                for (double b : {kGauss, 1 - kGauss}) q.points.emplace_back((i + a) * grid.dx(), (j + b) * grid.dy());
    return q;
}

StripSamples sample_state(const FlowState& s, const StripQuadrature& q, const StreamState* affine)
{
    const MeshLocator loc(*s.mesh);
    StripSamples out;
    const std::size_t n = q.points.size();
    out.inside.assign(n, 0);
    out.grad.assign(n, Eigen::Vector2d::Zero());
    out.affine_grad.assign(n, Eigen::Vector2d::Zero());
    out.zeta.assign(n, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
        const auto hit = loc.locate(q.points[p]);
        if (!hit) {
            if (affine) out.affine_grad[p] = Eigen::Vector2d(0, affine->lambda1);
            continue;
        }
        out.inside[p] = 1;
        out.grad[p] = s.mesh->gradient(s.psi, hit->i, hit->j, hit->xi, hit->eta);
        if (affine) out.affine_grad[p] = s.mesh->gradient(affine->psi, hit->i, hit->j, hit->xi, hit->eta);
        out.zeta[p] = s.zeta.values(s.mesh->cell(hit->i, hit->j));
    }
    return out;
}

double dual_distance(const StripQuadrature& q, const StripSamples& a, const StripSamples& b)
{
    const StripGrid& g = q.grid;
    Eigen::MatrixXd f(g.nx, g.ny);
    std::size_t p = 0;
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            double acc = 0;
            for (int r = 0; r < 4; ++r, ++p) acc += a.zeta[p] - b.zeta[p];
            f(i, j) = acc / 4;
        }
    }
    return dual_norm(g, f);
}

template <typename F>
double strip_l2(const StripQuadrature& q, F&& integrand)
{
    double acc = 0;
    for (std::size_t p = 0; p < q.points.size(); ++p) acc += integrand(p);
    return std::sqrt(acc * q.weight);
}

StripGrid metric_grid(const FlowState& s1, const FlowState& s2, const MetricOptions& o)
{
    if (std::abs(s1.surface.period() - s2.surface.period()) > 1e-12 * s1.surface.period())
        throw MetricError("states have different periods");
    const double top = std::max(s1.surface.heights().maxCoeff(), s2.surface.heights().maxCoeff());
    const double cap = o.cap > 0 ? o.cap : 2 * top;
    if (cap < top) throw MetricError("cap R lies below a surface");
    return StripGrid{s1.surface.period(), cap, o.nx, o.ny};
}

double smoothstep(double t)
{
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3 - 2 * t);
}

/// Catmull-Rom weights and derivative weights for parameter t in [0, 1).
void catmull_rom(double t, double w[4], double dw[4])
{
    const double t2 = t * t, t3 = t2 * t;
    w[0] = 0.5 * (-t + 2 * t2 - t3);
    w[1] = 0.5 * (2 - 5 * t2 + 3 * t3);
    w[2] = 0.5 * (t + 4 * t2 - 3 * t3);
    w[3] = 0.5 * (-t2 + t3);
    dw[0] = 0.5 * (-1 + 4 * t - 3 * t2);
    dw[1] = 0.5 * (-10 * t + 9 * t2);
    dw[2] = 0.5 * (1 + 8 * t - 9 * t2);
    dw[3] = 0.5 * (-2 * t + 3 * t2);
}

} // namespace

MeshLocator::MeshLocator(const Mesh& mesh) : mesh_(&mesh), h_(mesh.period() / mesh.m())
{
    for (int i = 0; i < mesh.m(); ++i) {
        for (int j = 0; j <= mesh.k(); ++j) {
            if (std::abs(mesh.x1(i, j) - i * h_) > 1e-9 * mesh.period())
                throw MetricError("point location needs a mesh with uniform vertical columns");
        }
    }
}

std::pair<int, double> MeshLocator::column(double x1) const
{
    const double xw = wrap_period(x1, mesh_->period());
    const int i = std::min(static_cast<int>(xw / h_), mesh_->m() - 1);
    return {i, std::clamp(xw / h_ - i, 0.0, 1.0)};
}

double MeshLocator::surface_height(double x1) const
{
    const auto [i, f] = column(x1);
    const int k = mesh_->k();
    return (1 - f) * mesh_->x2(i, k) + f * mesh_->x2(i + 1, k);
}

std::optional<MeshLocator::Hit> MeshLocator::locate(const Eigen::Vector2d& x) const
{
    const auto [i, f] = column(x(0));
    const int k = mesh_->k();
    const double top = (1 - f) * mesh_->x2(i, k) + f * mesh_->x2(i + 1, k);
    if (x(1) < 0 || x(1) > top) return std::nullopt;
    const double level = x(1) / top * k;
    const int j = std::min(static_cast<int>(level), k - 1);
    return Hit{i, j, f, level - j};
}

FlowState make_flow_state(const GraphSurfaced& surface, int k, const Eigen::VectorXd& zeta, const Eigen::VectorXd& xi)
{
    FlowState s;
    s.surface = surface;
    s.mesh = std::make_shared<const Mesh>(build_mesh(surface, k));
    if (zeta.size() != s.mesh->cell_count()) throw MetricError("vorticity does not match the mesh");
    if (xi.size() != s.mesh->m()) throw MetricError("surface data does not match the mesh");
    s.xi = xi;
    s.zeta = VorticityFieldd(zeta, s.mesh->cell_areas());
    s.psi = s.mesh->solve_dirichlet(zeta, xi);
    s.mu = circulation(*s.mesh, s.psi, zeta);
    s.nu = impulse(*s.mesh, s.psi);
    return s;
}

FlowState make_flow_state(const MinimizeResult& result)
{
    if (!result.mesh) throw MetricError("minimisation result has no mesh");
    const Mesh& mesh = *result.mesh;
    Eigen::VectorXd xi(mesh.m());
    for (int i = 0; i < mesh.m(); ++i) xi(i) = result.state.psi(mesh.node(i, mesh.k()));
    return make_flow_state(result.surface, mesh.k(), result.zeta.values, xi);
}

StreamState affine_solution(const FlowState& state)
{
    try {
        return solve_multipliers(*state.mesh, state.zeta.values, state.mu, state.nu);
    } catch (const DegenerateDomain& e) {
        throw MetricError(std::string("flat domain: ") + e.what());
    }
}

double curve_distance(const GraphSurfaced& a, const GraphSurfaced& b, int shifts)
{
    const double P = a.period();
    if (std::abs(P - b.period()) > 1e-12 * P) throw MetricError("curves have different periods");
    const auto pa = resample_constant_speed(a.to_curve());
    const auto pb = resample_constant_speed(b.to_curve());
    const int n = std::max(pa.size(), pb.size());
    const spectral::TrigInterpolant<double> ax(pa.periodic_part(0), P), ay(pa.periodic_part(1), P);
    const spectral::TrigInterpolant<double> bx(pb.periodic_part(0), P), by(pb.periodic_part(1), P);
    Eigen::VectorXd bxs(n), bys(n);
    for (int i = 0; i < n; ++i) {
        bxs(i) = bx(i * P / n);
        bys(i) = by(i * P / n);
    }
    auto norm = [&](double s) {
        Eigen::VectorXd fx(n), fy(n);
        for (int i = 0; i < n; ++i) {
            const double x = i * P / n + s;
            fx(i) = s + ax(x) - bxs(i);
            fy(i) = ay(x) - bys(i);
        }
        return std::sqrt(spectral::sobolev_norm_squared<double>(fx, P, 2) + spectral::sobolev_norm_squared<double>(fy, P, 2));
    };
    const int grid = shifts > 0 ? shifts : n;
    const double h = P / grid;
    int best = 0;
    double best_value = std::numeric_limits<double>::infinity();
    for (int q = -grid / 2; q < grid - grid / 2; ++q) {
        const double v = norm(q * h);
        if (v < best_value) {
            best_value = v;
            best = q;
        }
    }
    // golden-section refinement around the best grid shift
    const double phi = 0.5 * (std::sqrt(5.0) - 1);
    double lo = (best - 1) * h, hi = (best + 1) * h;
    double c = hi - phi * (hi - lo), d = lo + phi * (hi - lo);
    double fc = norm(c), fd = norm(d);
    for (int it = 0; it < 80 && hi - lo > 1e-13 * P; ++it) {
        if (fc < fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = norm(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = norm(d);
        }
    }
    return std::min({best_value, fc, fd});
}

double dual_norm(const StripGrid& grid, const Eigen::MatrixXd& f)
{
    if (f.rows() != grid.nx || f.cols() != grid.ny) throw MetricError("dual_norm: field does not match the grid");
    const int nx = grid.nx, ny = grid.ny;
    const double a = grid.dx(), b = grid.dy();
    auto node = [&](int i, int j) { return ((i % nx + nx) % nx) * (ny + 1) + j; };
    // element matrix of -Laplace + 1 on an a x b rectangle, corners (0,0), (1,0), (1,1), (0,1)
    Eigen::Matrix4d E = Eigen::Matrix4d::Zero();
    const double cx[4] = {0, 1, 1, 0}, cy[4] = {0, 0, 1, 1};
    for (double s : {kGauss, 1 - kGauss}) {
        for (double t : {kGauss, 1 - kGauss}) {
            double N[4], Nx[4], Ny[4];
            for (int c = 0; c < 4; ++c) {
                const double fx = cx[c] ? s : 1 - s, fy = cy[c] ? t : 1 - t;
                N[c] = fx * fy;
                Nx[c] = (cx[c] ? 1.0 : -1.0) / a * fy;
                Ny[c] = fx * (cy[c] ? 1.0 : -1.0) / b;
            }
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c) E(r, c) += a * b / 4 * (Nx[r] * Nx[c] + Ny[r] * Ny[c] + N[r] * N[c]);
        }
    }
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(16 * nx * ny));
    Eigen::VectorXd load = Eigen::VectorXd::Zero(nx * (ny + 1));
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            const int idx[4] = {node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)};
            for (int r = 0; r < 4; ++r) {
                load(idx[r]) += f(i, j) * a * b / 4;
                for (int c = 0; c < 4; ++c) trip.emplace_back(idx[r], idx[c], E(r, c));
            }
        }
    }
    SparseMatrixd A(nx * (ny + 1), nx * (ny + 1));
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<SparseMatrixd> solver(A);
    if (solver.info() != Eigen::Success) throw SolverError("dual_norm: factorisation failed");
    const Eigen::VectorXd w = solver.solve(load);
    return std::sqrt(std::max(0.0, load.dot(w)));
}

MetricReport dist1_report(const FlowState& s1, const FlowState& s2, const MetricOptions& options)
{
    const StripGrid grid = metric_grid(s1, s2, options);
    const auto q = strip_quadrature(grid);
    const auto a = sample_state(s1, q, nullptr);
    const auto b = sample_state(s2, q, nullptr);
    MetricReport r;
    r.curve = curve_distance(s1.surface, s2.surface, options.shifts);
    r.dual = dual_distance(q, a, b);
    r.gradient = strip_l2(q, [&](std::size_t p) { return (a.grad[p] - b.grad[p]).squaredNorm(); });
    r.total = r.curve + r.dual + r.gradient;
    return r;
}

double dist1(const FlowState& s1, const FlowState& s2, const MetricOptions& options) { return dist1_report(s1, s2, options).total; }

namespace {

bool same_surface(const FlowState& s1, const FlowState& s2)
{
    return s1.surface.size() == s2.surface.size() && s1.mesh->k() == s2.mesh->k() &&
           (s1.surface.heights() - s2.surface.heights()).cwiseAbs().maxCoeff() <= 1e-10;
}

struct Dist0Parts {
    MetricReport report;
    StripQuadrature q;
    StripSamples a, b;
};

Dist0Parts dist0_parts(const FlowState& s1, const FlowState& s2, const MetricOptions& options)
{
    const StripGrid grid = metric_grid(s1, s2, options);
    Dist0Parts d{{}, strip_quadrature(grid), {}, {}};
    const StreamState bar1 = affine_solution(s1);
    const StreamState bar2 = affine_solution(s2);
    d.a = sample_state(s1, d.q, &bar1);
    d.b = sample_state(s2, d.q, &bar2);
    const auto& q = d.q;
    const auto& a = d.a;
    const auto& b = d.b;
    MetricReport& r = d.report;
    r.dual = dual_distance(q, a, b);
    const double affine_gap = strip_l2(q, [&](std::size_t p) { return (a.affine_grad[p] - b.affine_grad[p]).squaredNorm(); });
    if (same_surface(s1, s2) && affine_gap <= 1e-10) {
        r.short_form = true;
        r.gradient = strip_l2(q, [&](std::size_t p) { return a.inside[p] ? (a.grad[p] - b.grad[p]).squaredNorm() : 0.0; });
    } else {
        r.curve = curve_distance(s1.surface, s2.surface, options.shifts);
        const double t1 = strip_l2(q, [&](std::size_t p) { return a.inside[p] ? (a.grad[p] - a.affine_grad[p]).squaredNorm() : 0.0; });
        const double t2 = strip_l2(q, [&](std::size_t p) { return b.inside[p] ? (b.grad[p] - b.affine_grad[p]).squaredNorm() : 0.0; });
        r.gradient = t1 + t2 + affine_gap;
    }
    r.total = r.curve + r.dual + r.gradient;
    return d;
}

} // namespace

MetricReport dist0_report(const FlowState& s1, const FlowState& s2, const MetricOptions& options)
{
    return dist0_parts(s1, s2, options).report;
}

double dist0(const FlowState& s1, const FlowState& s2, const MetricOptions& options) { return dist0_report(s1, s2, options).total; }

ComparisonChain comparison_chain(const FlowState& s1, const FlowState& s2, const MetricOptions& options)
{
    const auto d = dist0_parts(s1, s2, options);
    ComparisonChain c;
    c.dist0 = d.report.total;
    c.dist1 = dist1(s1, s2, options);
    c.affine_extension = strip_l2(d.q, [&](std::size_t p) { return d.a.inside[p] && !d.b.inside[p] ? d.b.affine_grad[p].squaredNorm() : 0.0; });
    c.flow_extension = strip_l2(d.q, [&](std::size_t p) { return d.b.inside[p] && !d.a.inside[p] ? d.b.grad[p].squaredNorm() : 0.0; });
    return c;
}

double distance_to_set(const FlowState& state, const std::vector<FlowState>& set, Metric metric, const MetricOptions& options)
{
    if (set.empty()) throw MetricError("distance to an empty set");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : set) best = std::min(best, metric == Metric::Dist0 ? dist0(state, s, options) : dist1(state, s, options));
    return best;
}

VelocityField::VelocityField(const FlowState& state, double cap, int nx, int ny, double frame_speed)
    : period_(state.surface.period()), cap_(cap), nx_(nx), ny_(ny)
{
    const Mesh& mesh = *state.mesh;
    const double top = state.surface.heights().maxCoeff();
    if (!(cap > top)) throw TransportError("cap R must lie above the surface");
    const MeshLocator loc(mesh);
    const int m = mesh.m(), k = mesh.k();
    const Eigen::MatrixX2d grad = surface_gradient(mesh, state.psi);
    Eigen::VectorXd surf(m), slope(m);
    for (int i = 0; i < m; ++i) {
        surf(i) = state.psi(mesh.node(i, k)) - frame_speed * mesh.x2(i, k);
        slope(i) = grad(i, 1) - frame_speed;
    }
    const double mean = surf.mean();
    const double layer = 0.5 * (cap - top);
    build([&](const Eigen::Vector2d& x) {
        if (const auto hit = loc.locate(x)) return value_at(mesh, state.psi, *hit) - frame_speed * x(1);
        const auto [i, f] = loc.column(x(0));
        const double h = loc.surface_height(x(0));
        const double s = (1 - f) * surf(i) + f * surf((i + 1) % m);
        const double g = (1 - f) * slope(i) + f * slope((i + 1) % m);
        const double d = x(1) - h;
        const double w = smoothstep(d / layer);
        return (1 - w) * (s + d * g) + w * mean;
    });
}

VelocityField::VelocityField(const std::function<double(const Eigen::Vector2d&)>& psi, double period, double cap, int nx, int ny)
    : period_(period), cap_(cap), nx_(nx), ny_(ny)
{
    build(psi);
}

void VelocityField::build(const std::function<double(const Eigen::Vector2d&)>& psi)
{
    if (nx_ < 4 || ny_ < 4) throw TransportError("velocity grid needs at least 4 cells per direction");
    const double dx = period_ / nx_, dy = cap_ / ny_;
    nodes_.resize(nx_, ny_ + 3);
    for (int i = 0; i < nx_; ++i) {
        for (int j = 0; j <= ny_; ++j) nodes_(i, j + 1) = psi(Eigen::Vector2d(i * dx, j * dy));
        nodes_(i, 0) = -nodes_(i, 2);
        nodes_(i, ny_ + 2) = nodes_(i, ny_ + 1);
    }
}

Eigen::Vector4d VelocityField::bicubic(const Eigen::Vector2d& x) const
{
    const double dx = period_ / nx_, dy = cap_ / ny_;
    const double u = wrap_period(x(0), period_) / dx;
    const int i0 = std::min(static_cast<int>(u), nx_ - 1);
    const double v = std::clamp(x(1), 0.0, cap_) / dy;
    const int j0 = std::min(static_cast<int>(v), ny_ - 1);
    double wx[4], dwx[4], wy[4], dwy[4];
    catmull_rom(u - i0, wx, dwx);
    catmull_rom(v - j0, wy, dwy);
    Eigen::Vector4d out = Eigen::Vector4d::Zero();
    for (int a = 0; a < 4; ++a) {
        const int i = ((i0 - 1 + a) % nx_ + nx_) % nx_;
        for (int b = 0; b < 4; ++b) {
            const double p = nodes_(i, j0 + b); // column j0 - 1 + b of the grid, offset by one
            out(0) += wx[a] * wy[b] * p;
            out(1) += dwx[a] * wy[b] * p / dx;
            out(2) += wx[a] * dwy[b] * p / dy;
            out(3) += dwx[a] * dwy[b] * p / (dx * dy);
        }
    }
    return out;
}

double VelocityField::stream(const Eigen::Vector2d& x) const
{
    if (x(1) < 0) return -stream(Eigen::Vector2d(x(0), -x(1)));
    return bicubic(Eigen::Vector2d(x(0), std::min(x(1), cap_)))(0);
}

Eigen::Vector2d VelocityField::operator()(const Eigen::Vector2d& x) const
{
    if (std::abs(x(1)) >= cap_) return Eigen::Vector2d::Zero();
    if (x(1) < 0) {
        const auto d = bicubic(Eigen::Vector2d(x(0), -x(1)));
        return Eigen::Vector2d(d(2), d(1));
    }
    const auto d = bicubic(x);
    return Eigen::Vector2d(d(2), -d(1));
}

double VelocityField::divergence(const Eigen::Vector2d& x) const
{
    if (std::abs(x(1)) >= cap_) return 0;
    // d1 (d2 psi) - d2 (d1 psi): the mixed derivative taken in both orders
    const double dx = period_ / nx_, dy = cap_ / ny_;
    const double y = std::abs(x(1));
    const double u = wrap_period(x(0), period_) / dx;
    const int i0 = std::min(static_cast<int>(u), nx_ - 1);
    const double v = y / dy;
    const int j0 = std::min(static_cast<int>(v), ny_ - 1);
    double wx[4], dwx[4], wy[4], dwy[4];
    catmull_rom(u - i0, wx, dwx);
    catmull_rom(v - j0, wy, dwy);
    double d12 = 0, d21 = 0;
    for (int a = 0; a < 4; ++a) {
        const int i = ((i0 - 1 + a) % nx_ + nx_) % nx_;
        double col = 0;
        for (int b = 0; b < 4; ++b) col += dwy[b] * nodes_(i, j0 + b) / dy;
        d12 += dwx[a] * col / dx;
    }
    for (int b = 0; b < 4; ++b) {
        double row = 0;
        for (int a = 0; a < 4; ++a) row += dwx[a] * nodes_(((i0 - 1 + a) % nx_ + nx_) % nx_, j0 + b) / dx;
        d21 += dwy[b] * row / dy;
    }
    return d12 - d21;
}

double StripField::sample(const Eigen::Vector2d& x, Interpolation interp) const
{
    const double dx = grid.dx(), dy = grid.dy();
    if (x(1) >= grid.cap + 2 * dy) return 0;
    auto at = [&](int i, int j) {
        if (j < 0) j = -j - 1;
        if (j >= grid.ny) return 0.0;
        return values((i % grid.nx + grid.nx) % grid.nx, j);
    };
    const double u = wrap_period(x(0), grid.period) / dx - 0.5;
    const double v = std::abs(x(1)) / dy - 0.5;
    const int i0 = static_cast<int>(std::floor(u)), j0 = static_cast<int>(std::floor(v));
    const double s = u - i0, t = v - j0;
    if (interp == Interpolation::Bilinear) {
        return (1 - s) * (1 - t) * at(i0, j0) + s * (1 - t) * at(i0 + 1, j0) + s * t * at(i0 + 1, j0 + 1) + (1 - s) * t * at(i0, j0 + 1);
    }
    double wx[4], dwx[4], wy[4], dwy[4];
    catmull_rom(s, wx, dwx);
    catmull_rom(t, wy, dwy);
    double acc = 0;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) acc += wx[a] * wy[b] * at(i0 - 1 + a, j0 - 1 + b);
    return acc;
}

double StripField::l2_norm() const { return std::sqrt(values.squaredNorm() * grid.dx() * grid.dy()); }

VorticityFieldd StripField::as_vorticity() const
{
    const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(values.data(), values.size());
    return VorticityFieldd(v, Eigen::VectorXd::Constant(values.size(), grid.dx() * grid.dy()));
}

StripField sample_function(const StripGrid& grid, const std::function<double(const Eigen::Vector2d&)>& f)
{
    StripField out{grid, Eigen::MatrixXd(grid.nx, grid.ny)};
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.ny; ++j) out.values(i, j) = f(grid.center(i, j));
    return out;
}

StripField sample_vorticity(const FlowState& state, const StripGrid& grid)
{
    const MeshLocator loc(*state.mesh);
    return sample_function(grid, [&](const Eigen::Vector2d& x) {
        const auto hit = loc.locate(x);
        return hit ? state.zeta.values(state.mesh->cell(hit->i, hit->j)) : 0.0;
    });
}

double cfl_number(const StripGrid& grid, const VelocityField& u, double dt)
{
    double c = 0;
    for (int i = 0; i < grid.nx; ++i) {
        for (int j = 0; j < grid.ny; ++j) {
            const Eigen::Vector2d v = u(grid.center(i, j));
            c = std::max(c, std::abs(v(0)) * dt / grid.dx() + std::abs(v(1)) * dt / grid.dy());
        }
    }
    return c;
}

StripField transport_step(const StripField& chi, const VelocityField& u, double dt, Interpolation interp)
{
    const double cfl = cfl_number(chi.grid, u, dt);
    if (cfl > 0.9) throw TransportError("CFL number " + std::to_string(cfl) + " exceeds 0.9");
    StripField out = chi;
    for (int i = 0; i < chi.grid.nx; ++i) {
        for (int j = 0; j < chi.grid.ny; ++j) {
            const Eigen::Vector2d x = chi.grid.center(i, j);
            const Eigen::Vector2d mid = x - 0.5 * dt * u(x);
            const Eigen::Vector2d departure = x - dt * u(mid);
            out.values(i, j) = chi.sample(departure, interp);
        }
    }
    return out;
}

FollowerTrace follower_run(const VelocityField& u, const StripField& chi0, double horizon, double dt, Interpolation interp,
                           const std::optional<StripField>& tracked)
{
    if (!(dt > 0) || !(horizon >= 0)) throw TransportError("follower needs dt > 0 and a non-negative horizon");
    if (tracked && (tracked->values.rows() != chi0.values.rows() || tracked->values.cols() != chi0.values.cols()))
        throw TransportError("tracked field does not match the follower grid");
    const auto reference = decreasing_rearrangement(chi0.as_vorticity());
    const double area = chi0.grid.dx() * chi0.grid.dy();
    FollowerTrace trace;
    StripField chi = chi0;
    std::optional<StripField> other = tracked;
    auto record = [&](double t) {
        trace.t.push_back(t);
        trace.l2_norm.push_back(chi.l2_norm());
        trace.distribution_drift.push_back(profile_distance(decreasing_rearrangement(chi.as_vorticity()), reference));
        const double scale = std::max(1e-300, chi.values.cwiseAbs().maxCoeff());
        trace.support_area.push_back(area * double((chi.values.array().abs() > 1e-12 * scale).count()));
        if (other) trace.difference.push_back(std::sqrt((chi.values - other->values).squaredNorm() * area));
    };
    record(0);
    const int steps = static_cast<int>(std::ceil(horizon / dt - 1e-9));
    for (int n = 0; n < steps; ++n) {
        const double t = n + 1 == steps ? horizon : (n + 1) * dt;
        const double h = t - n * dt;
        chi = transport_step(chi, u, h, interp);
        if (other) other = transport_step(*other, u, h, interp);
        record(t);
    }
    trace.final_field = std::move(chi);
    return trace;
}

} // namespace vortwave

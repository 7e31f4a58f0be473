#include "vortwave/energy.hpp"

#include <cmath>
#include <random>

namespace vortwave {

namespace {

double tension_slope(const WaveConfig& config, double length)
{
    return config.beta * config.T * std::pow(std::max(length - config.P, 0.0), config.beta - 1);
}

} // namespace

SurfaceEnergy surface_energy(const WaveConfig& config, const PeriodicCurved& surface)
{
    SurfaceEnergy e;
    e.length = arclength(surface);
    e.tension = config.T * std::pow(std::max(e.length - surface.period(), 0.0), config.beta);
    e.bending = config.E * curvature_energy(surface);
    return e;
}

double potential_energy(const Mesh& mesh, double g)
{
    double acc = 0;
    for (int i = 0; i < mesh.m(); ++i)
        for (int j = 0; j < mesh.k(); ++j)
            for (const auto& q : mesh.quadrature(i, j)) acc += q.weight * q.x(1);
    return g * acc;
}

EnergyReport total_energy(const WaveConfig& config, const Mesh& mesh, const Eigen::VectorXd& psi)
{
    EnergyReport r;
    r.kinetic = kinetic_energy(mesh, psi);
    r.potential = potential_energy(mesh, config.g);
    const auto surface = surface_energy(config, mesh.top_curve());
    r.length = surface.length;
    r.tension = surface.tension;
    r.bending = surface.bending;
    r.total = r.kinetic + r.potential + r.tension + r.bending;
    return r;
}

EnergyReport total_energy(const WaveConfig& config, const Mesh& mesh, const StreamState& state)
{
    EnergyReport r = total_energy(config, mesh, state.psi);
    const auto b = bernoulli_residual(config, mesh, state);
    r.has_bernoulli = true;
    r.bernoulli_max = b.max_deviation;
    r.bernoulli_l2 = b.l2;
    return r;
}

Eigen::MatrixX2d surface_gradient(const Mesh& mesh, const Eigen::VectorXd& field)
{
    const int m = mesh.m(), k = mesh.k();
    if (k < 2) throw SolverError("surface gradient needs at least two cell rows");
    Eigen::MatrixX2d grad(m, 2);
    auto d_eta = [&](auto&& f, int i) { return 0.5 * (3 * f(i, k) - 4 * f(i, k - 1) + f(i, k - 2)); };
    auto d_xi = [&](auto&& f, int i) { return 0.5 * (f(i + 1, k) - f(i - 1, k)); };
    auto x1 = [&](int i, int j) { return mesh.x1(i, j); };
    auto x2 = [&](int i, int j) { return mesh.x2(i, j); };
    auto v = [&](int i, int j) { return field(mesh.node(i, j)); };
    for (int i = 0; i < m; ++i) {
        Eigen::Matrix2d J;
        J << d_xi(x1, i), d_eta(x1, i), d_xi(x2, i), d_eta(x2, i);
        const Eigen::Vector2d ref(d_xi(v, i), d_eta(v, i));
        grad.row(i) = (J.transpose().inverse() * ref).transpose();
    }
    return grad;
}

BernoulliResidual bernoulli_residual(const WaveConfig& config, const Mesh& mesh, const StreamState& state)
{
    const int m = mesh.m();
    if (m < 16) throw SolverError("Bernoulli residual needs at least 16 surface nodes");
    const auto curve = mesh.top_curve();
    const double P = curve.period();
    const Eigen::VectorXd speed_ = speed(curve);
    const Eigen::VectorXd sigma = curvature(curve);
    const Eigen::VectorXd sigma_s = (spectral::derivative<double>(sigma, P, 1).array() / speed_.array()).matrix();
    const Eigen::VectorXd sigma_ss = (spectral::derivative<double>(sigma_s, P, 1).array() / speed_.array()).matrix();
    const double length = speed_.sum() * P / m;
    const Eigen::MatrixX2d grad = surface_gradient(mesh, state.psi0(mesh));

    BernoulliResidual r;
    r.ds = speed_ * (P / m);
    r.values.resize(m);
    r.s.resize(m);
    double s = 0;
    for (int i = 0; i < m; ++i) {
        r.s(i) = s;
        s += r.ds(i);
        r.values(i) = 0.5 * grad.row(i).squaredNorm() + config.g * curve.points()(i, 1) - tension_slope(config, length) * sigma(i) +
                      config.E * (sigma(i) * sigma(i) * sigma(i) + 2 * sigma_ss(i));
    }
    r.mean = r.values.dot(r.ds) / r.ds.sum();
    r.deviations = r.values.array() - r.mean;
    r.max_deviation = r.deviations.cwiseAbs().maxCoeff();
    r.l2 = std::sqrt(r.deviations.array().square().matrix().dot(r.ds) / r.ds.sum());
    return r;
}

VectorField zero_field()
{
    return {[](const Eigen::Vector2d&) { return Eigen::Vector2d::Zero().eval(); },
            [](const Eigen::Vector2d&) { return Eigen::Matrix2d::Zero().eval(); }};
}

VectorField translation_field(double c)
{
    return {[c](const Eigen::Vector2d&) { return Eigen::Vector2d(c, 0); },
            [](const Eigen::Vector2d&) { return Eigen::Matrix2d::Zero().eval(); }};
}

VectorField curl_field(double period, const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& c)
{
    if (a.size() != b.size() || a.size() != c.size()) throw std::invalid_argument("curl_field: coefficient lists differ in length");
    const double w = 2 * std::numbers::pi / period;
    // phi = sum_n f_n(x1) h_n(x2); returns f, f', f'' and h, h', h'' for each mode
    auto terms = [=](const Eigen::Vector2d& x) {
        Eigen::Matrix<double, 6, 1> sum = Eigen::Matrix<double, 6, 1>::Zero(); // phi1, phi2, phi11, phi12, phi22, unused
        for (std::size_t n = 0; n < a.size(); ++n) {
            const double k = w * double(n);
            const double cs = std::cos(k * x(0)), sn = std::sin(k * x(0));
            const double f = a[n] * cs + b[n] * sn;
            const double f1 = k * (-a[n] * sn + b[n] * cs);
            const double f2 = -k * k * f;
            const double y = x(1);
            const double h = y * y * (1 + c[n] * y);
            const double h1 = 2 * y + 3 * c[n] * y * y;
            const double h2 = 2 + 6 * c[n] * y;
            sum(0) += f1 * h;
            sum(1) += f * h1;
            sum(2) += f2 * h;
            sum(3) += f1 * h1;
            sum(4) += f * h2;
        }
        return sum;
    };
    return {[terms](const Eigen::Vector2d& x) {
                const auto t = terms(x);
                return Eigen::Vector2d(t(1), -t(0));
            },
            [terms](const Eigen::Vector2d& x) {
                const auto t = terms(x);
                Eigen::Matrix2d D;
                D << t(3), t(4), -t(2), -t(3);
                return D;
            }};
}

VectorField random_solenoidal_field(double period, unsigned seed, int modes, double amplitude)
{
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> a, b, c;
    for (int n = 0; n <= modes; ++n) {
        a.push_back(amplitude * u(rng));
        b.push_back(n == 0 ? 0.0 : amplitude * u(rng));
        c.push_back(0.5 * u(rng));
    }
    return curl_field(period, a, b, c);
}

double shape_derivative(const WaveConfig& config, const Mesh& mesh, const StreamState& state, const VectorField& omega)
{
    const Eigen::VectorXd psi0 = state.psi0(mesh);
    double kinetic = 0, potential = 0;
    for (int i = 0; i < mesh.m(); ++i) {
        for (int j = 0; j < mesh.k(); ++j) {
            const auto nodes = mesh.cell_nodes(i, j);
            Eigen::Vector4d local;
            for (int a = 0; a < 4; ++a) local(a) = psi0(nodes[static_cast<std::size_t>(a)]);
            for (const auto& q : mesh.quadrature(i, j)) {
                const Eigen::Matrix2d D = omega.jacobian(q.x);
                if (std::abs(D.trace()) > 1e-8 * std::max(1.0, D.norm()))
                    throw NonSolenoidal("vector field is not divergence free");
                const Eigen::Vector2d grad = q.grad.transpose() * local;
                kinetic += q.weight * grad.dot(D * grad);
                potential += q.weight * (omega.value(q.x)(1) + q.x(1) * D.trace());
            }
        }
    }
    for (int i = 0; i < mesh.m(); ++i) {
        const Eigen::Vector2d w = omega.value(Eigen::Vector2d(mesh.x1(i, 0), mesh.x2(i, 0)));
        if (std::abs(w(1)) > 1e-8 * std::max(1.0, w.norm())) throw NonSolenoidal("vector field is not tangent to the bottom");
    }

    // surface terms on the constant-speed parametrisation
    const auto unit = resample_constant_speed(mesh.top_curve());
    const int n = unit.size();
    const double P = unit.period();
    const double length = arclength(unit);
    const double c = length / P;
    MatrixX2<double> wv(n, 2);
    for (int i = 0; i < n; ++i) wv.row(i) = omega.value(unit.point(i)).transpose();
    MatrixX2<double> w1(n, 2), w2(n, 2);
    for (int axis = 0; axis < 2; ++axis) {
        w1.col(axis) = spectral::derivative<double>(wv.col(axis), P, 1);
        w2.col(axis) = spectral::derivative<double>(wv.col(axis), P, 2);
    }
    const MatrixX2<double> p1 = unit.derivative(1);
    const MatrixX2<double> p2 = unit.derivative(2);
    double dlength = 0, dbend = 0;
    for (int i = 0; i < n; ++i) {
        const double tw = p1.row(i).dot(w1.row(i));
        dlength += tw / c;
        dbend += 2 * p2.row(i).dot(w2.row(i)) / (c * c * c) - 3 * p2.row(i).squaredNorm() * tw / std::pow(c, 5);
    }
    dlength *= P / n;
    dbend *= P / n;
    return kinetic + config.g * potential + tension_slope(config, length) * dlength + config.E * dbend;
}

Eigen::VectorXd shape_gradient(const WaveConfig& config, const Mesh& mesh, const StreamState& state)
{
    const auto b = bernoulli_residual(config, mesh, state);
    return -b.deviations;
}

nlohmann::json energy_to_json(const EnergyReport& r)
{
    nlohmann::json j = {{"kinetic", r.kinetic}, {"potential", r.potential}, {"tension", r.tension},
                        {"bending", r.bending}, {"total", r.total},         {"length", r.length}};
    if (r.has_bernoulli) j["bernoulli"] = {{"max_deviation", r.bernoulli_max}, {"l2", r.bernoulli_l2}};
    return j;
}

} // namespace vortwave

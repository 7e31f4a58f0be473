#include "vortwave/minimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace vortwave {

std::string to_string(SignCondition s)
{
    switch (s) {
    case SignCondition::Satisfied: return "Satisfied";
    case SignCondition::Violated: return "Violated";
    default: return "Inapplicable";
    }
}

std::string to_string(Termination t)
{
    switch (t) {
    case Termination::Converged: return "Converged";
    case Termination::CriticalPointSuspected: return "CriticalPointSuspected";
    case Termination::DegenerateDomain: return "DegenerateDomain";
    default: return "IterationLimit";
    }
}

SignCondition check_parallel_flow_sign(const VorticityProfiled& reference, double mu, double nu, double Q)
{
    const double d = nu - Q * mu;
    if (reference.vanishes()) return d != 0 ? SignCondition::Satisfied : SignCondition::Violated;
    if (reference.one_signed_nonnegative()) return d <= 0 ? SignCondition::Satisfied : SignCondition::Violated;
    if (reference.one_signed_nonpositive()) return d >= 0 ? SignCondition::Satisfied : SignCondition::Violated;
    return SignCondition::Inapplicable;
}

SignCondition check_parallel_flow_sign(const WaveConfig& config)
{
    const Problem p = prepare_problem(config);
    return check_parallel_flow_sign(p.profile, p.mu, p.nu, config.Q);
}

M2Report check_M2(const WaveConfig& config, double L0)
{
    const double floor = 0.5 * config.g * config.P * config.Q * config.Q;
    if (!(L0 > floor)) throw std::domain_error("check_M2: L0 must exceed g P Q^2 / 2");
    const double two_pi = 2 * std::numbers::pi;
    M2Report r;
    r.L0 = L0;
    r.excess = L0 - floor;
    r.length_bound = std::pow(r.excess / config.T, 1 / config.beta);
    r.depth_lhs = config.P / two_pi * chord_arc_area(two_pi / config.P * r.length_bound + two_pi);
    r.depth_rhs = config.Q;
    r.bending_lhs = r.excess * r.length_bound;
    r.bending_rhs = config.E * std::numbers::pi * std::numbers::pi;
    r.depth_pass = r.depth_lhs < r.depth_rhs;
    r.bending_pass = r.bending_lhs < r.bending_rhs;
    return r;
}

double domain_height_cap(const WaveConfig& config, double L0)
{
    const double floor = 0.5 * config.g * config.P * config.Q * config.Q;
    if (!(L0 > floor)) throw std::domain_error("domain_height_cap: L0 must exceed g P Q^2 / 2");
    return config.Q + 0.5 * (config.P + std::pow((L0 - floor) / config.T, 1 / config.beta));
}

Eigen::VectorXd cell_phi(const Mesh& mesh, const StreamState& state)
{
    const Eigen::VectorXd psi0 = state.psi0(mesh);
    return ((mesh.cell_load().transpose() * psi0).array() / mesh.cell_areas().array()).matrix();
}

double rearrangement_gap(const VorticityFieldd& zeta, const VorticityProfiled& profile, const Eigen::VectorXd& phi)
{
    const auto best = optimal_rearrangement_step(profile, phi, zeta.areas);
    return zeta.pair(phi) - best.pair(phi);
}

VorticityFieldd initial_vorticity(const Mesh& mesh, const VorticityProfiled& profile)
{
    const Eigen::VectorXd height =
        ((mesh.cell_load().transpose() * mesh.height_field()).array() / mesh.cell_areas().array()).matrix();
    return optimal_rearrangement_step(profile, height, mesh.cell_areas());
}

Problem prepare_problem(const WaveConfig& config)
{
    config.validate();
    Problem p;
    p.initial_surface = GraphSurfaced::cosine(config.m, config.P, config.Q, config.initial_amplitude);
    const auto reference = config.reference_profile();
    if (config.mode == ConstraintMode::Explicit) {
        p.profile = reference;
        p.mu = config.mu;
        p.nu = config.nu;
        return p;
    }
    const double eps = config.epsilon;
    p.profile = reference.scaled(eps);
    const auto mesh = build_mesh(GraphSurfaced::cosine(config.m, config.P, config.Q, config.perturbation_amplitude), config.k);
    const Eigen::VectorXd zeta = eps * initial_vorticity(mesh, reference).values;
    const Eigen::VectorXd psi = mesh.solve_dirichlet(zeta, Eigen::VectorXd::Constant(mesh.m(), eps));
    p.mu = circulation(mesh, psi, zeta);
    p.nu = impulse(mesh, psi);
    p.admissible_energy = total_energy(config, mesh, psi).total;
    return p;
}

Eigen::VectorXd height_direction(const WaveConfig& config, const Mesh& mesh, const Eigen::VectorXd& normal_velocity)
{
    const auto curve = mesh.top_curve();
    const double P = curve.period();
    const int m = mesh.m();
    const Eigen::VectorXd dh = (normal_velocity.array() * speed(curve).array()).matrix();
    const double length = arclength(curve);
    const double tension = config.beta * config.T * std::pow(std::max(length - P, 0.0), config.beta - 1);
    auto coeffs = spectral::forward<double>(dh);
    coeffs[0] = 0;
    for (int q = 1; q < m; ++q) {
        const double kappa = 2 * std::numbers::pi * spectral::wavenumber(q, m) / P;
        const double k2 = kappa * kappa;
        coeffs[static_cast<std::size_t>(q)] /= config.g + tension * k2 + 2 * config.E * k2 * k2;
    }
    return spectral::inverse(coeffs);
}

namespace {

/// Response of phi to a unit of vorticity in cell c, with the constraint values held at zero.
class UnitResponse {
public:
    explicit UnitResponse(const Mesh& mesh) : mesh_(mesh)
    {
        const StreamState s = solve_multipliers(mesh, Eigen::VectorXd::Zero(mesh.cell_count()), 0, 0);
        unit_ = s.psi_unit;
        shape_ = s.psi_height - mesh.height_field();
        s_unit_ = mesh.stiffness() * unit_;
        determinant_ = s.determinant;
        area_ = mesh.total_area();
    }

    Eigen::VectorXd operator()(int c) const
    {
        Eigen::VectorXd zeta = Eigen::VectorXd::Zero(mesh_.cell_count());
        zeta(c) = 1;
        const Eigen::VectorXd psi = mesh_.solve_dirichlet(zeta, Eigen::VectorXd::Zero(mesh_.m()));
        const double rhs = -(psi.dot(s_unit_) - (mesh_.cell_load() * zeta).dot(unit_));
        const double l1 = mesh_.period() * rhs / determinant_;
        const double l2 = -area_ * rhs / determinant_;
        const Eigen::VectorXd psi0 = psi + l1 * shape_ + l2 * unit_;
        return ((mesh_.cell_load().transpose() * psi0).array() / mesh_.cell_areas().array()).matrix();
    }

private:
    const Mesh& mesh_;
    Eigen::VectorXd unit_, shape_, s_unit_;
    double determinant_ = 0, area_ = 0;
};

} // namespace

VorticityFieldd refine_vorticity(const Mesh& mesh, const VorticityProfiled& profile, const Eigen::VectorXd& order_phi, double mu,
                                 double nu, int band_width)
{
    const Eigen::VectorXd& areas = mesh.cell_areas();
    const int cells = mesh.cell_count();
    std::vector<int> order(static_cast<std::size_t>(cells));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return order_phi(a) < order_phi(b); });
    VorticityFieldd start(fill_in_order(profile, order, areas), areas);
    if (profile.steps() < 2) return start;
    const int w = band_width > 0 ? band_width : 2 * mesh.m();

    // bands of cells around each breakpoint, taking values between the two adjacent profile levels
    const double stretch = profile.total_area() / areas.sum();
    std::vector<double> cumulative(static_cast<std::size_t>(cells) + 1, 0.0);
    for (int n = 0; n < cells; ++n) cumulative[n + 1] = cumulative[n] + areas(order[n]) * stretch;
    const double vtol = 1e-12 * std::max(std::abs(profile.values.front()), std::abs(profile.values.back()));
    std::vector<int> vars, group;
    std::vector<double> lower, upper;
    int previous_end = 0;
    for (int b = 0; b + 1 < profile.steps(); ++b) {
        const double hi = profile.values[b], lo = profile.values[b + 1];
        const double e = profile.ends[b];
        int p = static_cast<int>(std::upper_bound(cumulative.begin(), cumulative.end(), e) - cumulative.begin()) - 1;
        p = std::clamp(p, 0, cells - 1);
        auto inside = [&](int q) { return start.values(order[q]) <= hi + vtol && start.values(order[q]) >= lo - vtol; };
        if (p < previous_end || !inside(p)) return start;
        int first = p, last = p;
        while (first > previous_end && p - first < w && inside(first - 1)) --first;
        while (last + 1 < cells && last - p < w && inside(last + 1)) ++last;
        for (int q = first; q <= last; ++q) {
            vars.push_back(order[q]);
            group.push_back(b);
            lower.push_back(lo);
            upper.push_back(hi);
        }
        previous_end = last + 1;
    }

    const int n = static_cast<int>(vars.size());
    const int groups = profile.steps() - 1;
    const StreamState base = solve_multipliers(mesh, start.values, mu, nu);
    const Eigen::VectorXd phi0 = cell_phi(mesh, base);
    const UnitResponse response(mesh);
    Eigen::MatrixXd H(n, n);
    std::vector<char> computed(static_cast<std::size_t>(n), 0);
    auto ensure_column = [&](int j) {
        if (computed[j]) return;
        const Eigen::VectorXd col = response(vars[j]);
        for (int i = 0; i < n; ++i) H(i, j) = areas(vars[i]) * col(vars[i]);
        computed[j] = 1;
    };
    Eigen::VectorXd a(n), r(n), x0(n);
    for (int j = 0; j < n; ++j) {
        a(j) = areas(vars[j]);
        r(j) = a(j) * phi0(vars[j]);
        x0(j) = start.values(vars[j]);
    }

    // primal active-set method on the box with one mass constraint per band
    enum : int { Free = 0, AtLower = -1, AtUpper = 1 };
    std::vector<int> status(static_cast<std::size_t>(n), Free);
    std::vector<int> free_count(static_cast<std::size_t>(groups), 0);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < n; ++j) {
        if (x0(j) <= lower[j] + vtol) status[j] = AtLower;
        else if (x0(j) >= upper[j] - vtol) status[j] = AtUpper;
        else ++free_count[group[j]];
    }
    for (int g = 0; g < groups; ++g) {
        if (free_count[g] > 0) continue;
        for (int j = 0; j < n; ++j) {
            if (group[j] == g) {
                status[j] = Free;
                ++free_count[g];
                break;
            }
        }
    }
    const double phi_scale = std::max(1.0, phi0.cwiseAbs().maxCoeff());
    const double ftol = 1e-13 * phi_scale;
    const double range = std::max(vtol, profile.values.front() - profile.values.back());
    bool stationary = false;
    for (int iter = 0; iter < 20 * n + 20; ++iter) {
        std::vector<int> F;
        for (int j = 0; j < n; ++j)
            if (status[j] == Free) F.push_back(j);
        std::vector<int> gid(static_cast<std::size_t>(groups), -1);
        int ng = 0;
        for (int j : F)
            if (gid[group[j]] < 0) gid[group[j]] = ng++;
        const int nf = static_cast<int>(F.size());
        for (int j : F) ensure_column(j);
        Eigen::VectorXd grad = r;
        for (int j = 0; j < n; ++j)
            if (computed[j] && x(j) != 0) grad += H.col(j) * x(j);
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nf + ng, nf + ng);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf + ng);
        for (int i = 0; i < nf; ++i) {
            for (int j = 0; j < nf; ++j) K(i, j) = H(F[i], F[j]);
            K(i, nf + gid[group[F[i]]]) = a(F[i]);
            K(nf + gid[group[F[i]]], i) = a(F[i]);
            rhs(i) = -grad(F[i]);
        }
        const Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
        Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < nf; ++i) p(F[i]) = sol(i);

        if (stationary || p.cwiseAbs().maxCoeff() <= 1e-12 * range) {
            stationary = false;
            // release the active bound whose multiplier has the wrong sign
            int worst = -1;
            double violation = ftol;
            for (int j = 0; j < n; ++j) {
                if (status[j] == Free || gid[group[j]] < 0) continue;
                const double d = (grad(j) + a(j) * sol(nf + gid[group[j]])) / a(j);
                const double v = status[j] == AtLower ? -d : d;
                if (v > violation) {
                    violation = v;
                    worst = j;
                }
            }
            if (worst < 0) break;
            status[worst] = Free;
            continue;
        }
        double alpha = 1;
        int blocking = -1;
        for (int j : F) {
            if (std::abs(p(j)) <= 1e-12 * range) continue;
            const double lo = lower[j] - x0(j), hi = upper[j] - x0(j);
            if (p(j) < 0 && (lo - x(j)) / p(j) < alpha) {
                alpha = std::max(0.0, (lo - x(j)) / p(j));
                blocking = j;
            } else if (p(j) > 0 && (hi - x(j)) / p(j) < alpha) {
                alpha = std::max(0.0, (hi - x(j)) / p(j));
                blocking = j;
            }
        }
        x += alpha * p;
        if (blocking >= 0) status[blocking] = p(blocking) < 0 ? AtLower : AtUpper;
        else stationary = true;
    }

    VorticityFieldd out = start;
    for (int j = 0; j < n; ++j) {
        double v = x0(j) + x(j);
        if (status[j] == AtLower) v = lower[j];
        if (status[j] == AtUpper) v = upper[j];
        out.values(vars[j]) = std::clamp(v, lower[j], upper[j]);
    }
    return out;
}

namespace {

double constraint_defect(const StreamState& s, double mu, double nu)
{
    return (std::abs(s.C - mu) + std::abs(s.I - nu)) / (1 + std::abs(mu) + std::abs(nu));
}

/// Profile laid out again on new cell areas, keeping the ordering of the current field
/// (largest value first, ties by cell index).
VorticityFieldd rerealize(const VorticityFieldd& zeta, const VorticityProfiled& profile, const Eigen::VectorXd& areas)
{
    std::vector<int> order(static_cast<std::size_t>(zeta.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return zeta.values(a) > zeta.values(b); });
    return VorticityFieldd(fill_in_order(profile, order, areas), areas);
}

struct Trial {
    std::optional<Mesh> mesh;
    GraphSurfaced surface;
    VorticityFieldd zeta;
    StreamState state;
    double energy = std::numeric_limits<double>::infinity();
};

} // namespace

MinimizeResult minimize(const WaveConfig& config, const Problem& problem, const GraphSurfaced& initial_surface,
                        const VorticityFieldd& initial_zeta, const MinimizeOptions& options)
{
    const double mu = problem.mu, nu = problem.nu;
    const auto& profile = problem.profile;
    MinimizeResult result;

    GraphSurfaced surface = initial_surface.rescaled_to_mean(config.Q);
    std::optional<Mesh> mesh(build_mesh(surface, config.k));
    VorticityFieldd zeta = initial_zeta;
    if (zeta.size() != mesh->cell_count()) throw SolverError("initial vorticity does not match the mesh");
    if (std::abs(zeta.total_area() - mesh->total_area()) > 1e-8 * mesh->total_area())
        zeta = rerealize(zeta, profile, mesh->cell_areas());

    auto energy_of = [&](const Mesh& msh, const StreamState& s) { return total_energy(config, msh, s.psi).total; };

    StreamState state;
    try {
        state = solve_multipliers(*mesh, zeta.values, mu, nu);
    } catch (const DegenerateDomain& e) {
        result.reason = Termination::DegenerateDomain;
        result.message = std::string(e.what()) + "; the flat domain is excluded, (M1) cannot be assessed";
        result.surface = surface;
        result.zeta = zeta;
        result.mesh = mesh;
        return result;
    }
    double energy = energy_of(*mesh, state);
    double alpha = 1.0;

    for (int iter = 0;; ++iter) {
        const Eigen::VectorXd phi = cell_phi(*mesh, state);
        const auto best = optimal_rearrangement_step(profile, phi, mesh->cell_areas());
        const double gap = zeta.pair(phi) - best.pair(phi);
        const auto bern = bernoulli_residual(config, *mesh, state);
        const double defect = constraint_defect(state, mu, nu);

        IterationRecord rec;
        rec.iteration = iter;
        rec.energy = energy;
        rec.gap = gap;
        rec.residual = bern.l2;
        rec.C = state.C;
        rec.I = state.I;
        rec.lambda1 = state.lambda1;
        rec.lambda2 = state.lambda2;

        if (gap < config.tol_r && bern.l2 < config.tol_b && defect < config.tol_c) {
            result.reason = Termination::Converged;
            result.message = "all tolerances met";
            result.trace.push_back(rec);
            if (options.on_iteration) options.on_iteration(rec);
            break;
        }
        if (iter >= config.max_iterations) {
            result.reason = Termination::IterationLimit;
            result.message = "iteration limit reached";
            result.trace.push_back(rec);
            if (options.on_iteration) options.on_iteration(rec);
            break;
        }

        // vorticity: exact minimiser near the breakpoints of the greedy step, else a damped greedy step
        const double energy_before = energy;
        rec.kinetic_before_rearrangement = state.kinetic_energy;
        if (gap > 0) {
            const double K0 = state.kinetic_energy;
            VorticityFieldd refined = refine_vorticity(*mesh, profile, phi, mu, nu, options.band_width);
            StreamState refined_state = solve_multipliers(*mesh, refined.values, mu, nu);
            StreamState full = solve_multipliers(*mesh, best.values, mu, nu);
            if (refined_state.kinetic_energy <= std::min(K0, full.kinetic_energy)) {
                zeta = std::move(refined);
                state = std::move(refined_state);
            } else if (full.kinetic_energy <= K0) {
                zeta = best;
                state = std::move(full);
            } else {
                // kinetic energy is quadratic along the segment: fit it from t = 1/2 and t = 1
                const Eigen::VectorXd d = best.values - zeta.values;
                const double Kh = solve_multipliers(*mesh, zeta.values + 0.5 * d, mu, nu).kinetic_energy;
                const double c = 2 * (full.kinetic_energy - 2 * Kh + K0);
                const double b = full.kinetic_energy - K0 - c;
                const double t = c > 0 ? std::clamp(-b / (2 * c), 0.0, 1.0) : 0.0;
                if (t > 0) {
                    StreamState partial = solve_multipliers(*mesh, zeta.values + t * d, mu, nu);
                    if (partial.kinetic_energy <= K0) {
                        zeta = VorticityFieldd(zeta.values + t * d, zeta.areas);
                        state = std::move(partial);
                    }
                }
            }
            energy = energy_of(*mesh, state);
        }
        rec.kinetic_after_rearrangement = state.kinetic_energy;

        // surface: preconditioned descent along the Bernoulli deviations, backtracking on the energy
        const Eigen::VectorXd order_phi = cell_phi(*mesh, state);
        const Eigen::VectorXd direction = height_direction(config, *mesh, shape_gradient(config, *mesh, state));
        const double scale = direction.cwiseAbs().maxCoeff();
        bool moved = false;
        if (scale > 0) {
            alpha = std::min(1.0, 2 * alpha);
            // never move a node by more than a tenth of the smallest height in one step
            alpha = std::min(alpha, 0.1 * surface.heights().minCoeff() / scale);
            for (; alpha >= options.min_step; alpha *= 0.5) {
                Trial trial;
                const Eigen::VectorXd h = surface.heights() + alpha * direction;
                if (h.minCoeff() <= 0) continue;
                try {
                    trial.surface = GraphSurfaced(h, config.P).rescaled_to_mean(config.Q);
                    trial.mesh.emplace(build_mesh(trial.surface, config.k));
                    trial.zeta = refine_vorticity(*trial.mesh, profile, order_phi, mu, nu, options.band_width);
                    trial.state = solve_multipliers(*trial.mesh, trial.zeta.values, mu, nu);
                    trial.energy = energy_of(*trial.mesh, trial.state);
                } catch (const DegenerateDomain&) {
                    continue;
                } catch (const GeometryError&) {
                    continue;
                }
                if (trial.energy < energy) {
                    surface = std::move(trial.surface);
                    mesh = std::move(trial.mesh);
                    zeta = std::move(trial.zeta);
                    state = std::move(trial.state);
                    energy = trial.energy;
                    moved = true;
                    break;
                }
            }
        }
        rec.surface_step = moved ? alpha : 0.0;
        rec.energy = energy;
        result.trace.push_back(rec);
        if (options.on_iteration) options.on_iteration(rec);

        if (!moved && energy >= energy_before - options.line_search_tolerance * std::abs(energy_before)) {
            result.reason = Termination::CriticalPointSuspected;
            result.message = "line search found no energy decrease";
            break;
        }
        if (!moved) alpha = 1.0;
    }

    const Eigen::VectorXd phi = cell_phi(*mesh, state);
    result.gap = rearrangement_gap(zeta, profile, phi);
    result.fit_residual = vorticity_function_fit(zeta, phi).residual;
    result.constraint_defect = constraint_defect(state, mu, nu);
    result.class_defect = profile_distance(decreasing_rearrangement(zeta), profile);
    result.in_weak_closure = in_weak_closure(zeta, profile, 1e-9);
    result.energy = total_energy(config, *mesh, state);
    result.surface = surface;
    result.zeta = zeta;
    result.state = state;
    result.mesh = std::move(mesh);
    return result;
}

MinimizeResult minimize(const WaveConfig& config, const MinimizeOptions& options)
{
    const Problem problem = prepare_problem(config);
    const auto mesh = build_mesh(problem.initial_surface, config.k);
    return minimize(config, problem, problem.initial_surface, initial_vorticity(mesh, problem.profile), options);
}

nlohmann::json result_summary(const MinimizeResult& r)
{
    return {{"termination", to_string(r.reason)},
            {"message", r.message},
            {"iterations", r.trace.empty() ? 0 : r.trace.back().iteration},
            {"energy", energy_to_json(r.energy)},
            {"state", {{"lambda1", r.state.lambda1}, {"lambda2", r.state.lambda2}, {"C", r.state.C}, {"I", r.state.I},
                       {"kinetic_energy", r.state.kinetic_energy}}},
            {"rearrangement_gap", r.gap},
            {"constraint_defect", r.constraint_defect},
            {"vorticity_fit_residual", r.fit_residual},
            {"class_defect", r.class_defect},
            {"in_weak_closure", r.in_weak_closure}};
}

} // namespace vortwave

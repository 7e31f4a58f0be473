#include "vortwave/config.hpp"
#include "vortwave/io.hpp"
#include "vortwave/minimizer.hpp"
#include "vortwave/stability.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <limits>
#include <random>

using namespace vortwave;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kSchema = "vortwave.manifest/1";
constexpr const char* kVersion = "0.1.0";

enum Exit { Ok = 0, Failure = 1, BadInput = 2 };

std::string utc_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

json config_to_json(const WaveConfig& c)
{
    return {{"physical", {{"P", c.P}, {"Q", c.Q}, {"g", c.g}, {"T", c.T}, {"beta", c.beta}, {"E", c.E}}},
            {"constraints",
             {{"mode", to_string(c.mode)}, {"mu", c.mu}, {"nu", c.nu}, {"epsilon", c.epsilon}, {"amplitude", c.perturbation_amplitude}}},
            {"vorticity",
             {{"kind", to_string(c.zeta.kind)},
              {"value", c.zeta.value},
              {"x1_min", c.zeta.x1_min},
              {"x1_max", c.zeta.x1_max},
              {"x2_min", c.zeta.x2_min},
              {"x2_max", c.zeta.x2_max},
              {"file", c.zeta.csv_path}}},
            {"numerics",
             {{"m", c.m},
              {"k", c.k},
              {"initial_amplitude", c.initial_amplitude},
              {"tol_r", c.tol_r},
              {"tol_b", c.tol_b},
              {"tol_c", c.tol_c},
              {"max_iterations", c.max_iterations}}},
            {"output", {{"directory", c.output_directory}}}};
}

class Manifest {
public:
    Manifest(std::string command, fs::path directory) : dir_(std::move(directory))
    {
        fs::create_directories(dir_);
        j_ = {{"schema", kSchema}, {"version", kVersion}, {"command", std::move(command)}, {"started", utc_now()},
              {"inputs", json::object()}, {"outputs", json::array()}, {"summary", json::object()}};
    }

    std::string output(const std::string& name)
    {
        const auto p = (dir_ / name).string();
        j_["outputs"].push_back(p);
        return p;
    }
    json& operator[](const char* key) { return j_[key]; }
    json& summary() { return j_["summary"]; }

    std::string write()
    {
        j_["finished"] = utc_now();
        const auto p = (dir_ / "manifest.json").string();
        write_json(p, j_);
        return p;
    }

private:
    fs::path dir_;
    json j_;
};

fs::path output_dir(const WaveConfig& c, const std::string& override_dir)
{
    return override_dir.empty() ? fs::path(c.output_directory) : fs::path(override_dir);
}

Eigen::VectorXd to_vector(const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size())); }

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

json flow_state_json(const MinimizeResult& r, const WaveConfig& c)
{
    const Mesh& mesh = *r.mesh;
    Eigen::VectorXd xi(mesh.m());
    for (int i = 0; i < mesh.m(); ++i) xi(i) = r.state.psi(mesh.node(i, mesh.k()));
    return {{"period", c.P},
            {"k", mesh.k()},
            {"heights", to_std(r.surface.heights())},
            {"zeta", to_std(r.zeta.values)},
            {"xi", to_std(xi)},
            {"lambda1", r.state.lambda1},
            {"lambda2", r.state.lambda2}};
}

struct LoadedState {
    FlowState state;
    double lambda1 = 0;
};

LoadedState load_flow_state(const fs::path& path)
{
    const fs::path file = fs::is_directory(path) ? path / "flow_state.json" : path;
    if (!fs::exists(file)) throw IoError("no solved state at " + file.string());
    const json j = read_json(file.string());
    const GraphSurfaced surface(to_vector(j.at("heights").get<std::vector<double>>()), j.at("period").get<double>());
    LoadedState s;
    s.state = make_flow_state(surface, j.at("k").get<int>(), to_vector(j.at("zeta").get<std::vector<double>>()),
                              to_vector(j.at("xi").get<std::vector<double>>()));
    s.lambda1 = j.value("lambda1", 0.0);
    return s;
}

void write_trace_csv(const std::string& path, const std::vector<IterationRecord>& trace)
{
    const auto n = Eigen::Index(trace.size());
    std::vector<Eigen::VectorXd> cols(8, Eigen::VectorXd(n));
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& t = trace[std::size_t(r)];
        const double row[8] = {double(t.iteration), t.energy, t.gap, t.residual, t.C, t.I, t.lambda1, t.lambda2};
        for (int c = 0; c < 8; ++c) cols[std::size_t(c)](r) = row[c];
    }
    write_csv(path, {"iter", "energy", "gap", "residual", "C", "I", "lambda1", "lambda2"}, cols);
}

/// Runs minimize and writes its artefacts into the manifest's directory; returns the result.
MinimizeResult solve_into(const WaveConfig& config, Manifest& manifest, bool verbose)
{
    MinimizeOptions options;
    if (verbose)
        options.on_iteration = [](const IterationRecord& r) {
            std::fprintf(stderr, "iter %4d  energy %.12f  gap %.3e  bernoulli %.3e\n", r.iteration, r.energy, r.gap, r.residual);
        };
    const auto problem = prepare_problem(config);
    const auto r = minimize(config, options);
    write_trace_csv(manifest.output("trace.csv"), r.trace);
    if (r.mesh) {
        const Mesh& mesh = *r.mesh;
        write_curve_csv(manifest.output("surface.csv"), r.surface.to_curve());
        write_field_csv(manifest.output("psi.csv"), mesh, r.state.psi);
        const auto b = bernoulli_residual(config, mesh, r.state);
        write_csv(manifest.output("bernoulli.csv"), {"s", "value", "deviation"}, {b.s, b.values, b.deviations});
        write_json(manifest.output("flow_state.json"), flow_state_json(r, config));
    }
    json summary = result_summary(r);
    summary["mu"] = problem.mu;
    summary["nu"] = problem.nu;
    if (problem.admissible_energy) summary["admissible_energy"] = *problem.admissible_energy;
    summary["sign_condition"] = to_string(check_parallel_flow_sign(problem.profile, problem.mu, problem.nu, config.Q));
    manifest.summary() = summary;
    return r;
}

int cmd_solve(const std::string& config_path, const std::string& out, bool verbose)
{
    const auto config = load_config(config_path);
    Manifest manifest("solve", output_dir(config, out));
    manifest["inputs"] = {{"config", config_path}};
    manifest["config"] = config_to_json(config);
    const auto r = solve_into(config, manifest, verbose);
    const auto path = manifest.write();
    std::printf("%s: %s (energy %.12g, bernoulli %.3e, gap %.3e)\nmanifest: %s\n", to_string(r.reason).c_str(), r.message.c_str(),
                r.energy.total, r.energy.bernoulli_l2, r.gap, path.c_str());
    return r.reason == Termination::DegenerateDomain ? Failure : Ok;
}

struct Check {
    std::string name;
    double value;
    double bound;
    bool pass;
};

std::vector<Check> identity_suite(const WaveConfig& config, double tol)
{
    const double P = config.P, Q = config.Q;
    const auto surface = GraphSurfaced::cosine(config.m, P, Q, config.initial_amplitude);
    const auto mesh = build_mesh(surface, config.k);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(mesh.cell_count());
    const Eigen::VectorXd x2 = mesh.height_field();
    const auto unit = harmonic_unit(mesh);
    const auto zeta = initial_vorticity(mesh, config.reference_profile());
    const auto part = particular_solution(mesh, zeta.values);
    std::vector<Check> checks;
    auto rel = [&](const std::string& name, double value, double target) {
        const double err = std::abs(value - target) / std::max(1.0, std::abs(target));
        checks.push_back({name, err, tol, err <= tol});
    };
    rel("circulation_of_height", circulation(mesh, x2, zero), P);
    rel("impulse_of_height", impulse(mesh, x2), P * Q);
    rel("impulse_of_unit", impulse(mesh, unit.psi), P);
    rel("impulse_of_particular", impulse(mesh, part.psi), 0.0);
    const double margin = unit.C - P / Q;
    const bool flat = config.initial_amplitude == 0;
    checks.push_back({flat ? "nondegeneracy_equality" : "nondegeneracy_margin", margin, flat ? tol : 0.0,
                      flat ? std::abs(margin) <= tol * P / Q : margin > 0});
    const Eigen::VectorXd psi = mesh.solve_dirichlet(zeta.values, Eigen::VectorXd::Zero(mesh.m()));
    const double floor = 0.5 * config.g * P * Q * Q;
    const double energy = total_energy(config, mesh, psi).total;
    checks.push_back({"energy_floor", energy - floor, -tol * floor, energy - floor >= -tol * floor});

    // optimal rearrangement against exhaustive search on six equal cells
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(-1, 1);
    double worst = 0;
    for (int draw = 0; draw < 20; ++draw) {
        std::vector<double> values(6);
        Eigen::VectorXd phi(6);
        for (auto& v : values) v = u(rng);
        for (auto& p : phi) p = u(rng);
        std::sort(values.begin(), values.end(), std::greater<>());
        const auto profile = VorticityProfiled::from_steps(values, std::vector<double>(6, 1.0));
        const double fast = optimal_rearrangement_step(profile, phi, Eigen::VectorXd::Ones(6).eval()).pair(phi);
        std::sort(values.begin(), values.end());
        double best = std::numeric_limits<double>::infinity();
        do {
            double s = 0;
            for (int c = 0; c < 6; ++c) s += values[std::size_t(c)] * phi(c);
            best = std::min(best, s);
        } while (std::next_permutation(values.begin(), values.end()));
        worst = std::max(worst, std::abs(fast - best));
    }
    checks.push_back({"rearrangement_oracle", worst, tol, worst <= tol});
    return checks;
}

int cmd_verify(const std::string& config_path, const std::string& out, double tol)
{
    const auto config = load_config(config_path);
    Manifest manifest("verify", output_dir(config, out));
    manifest["inputs"] = {{"config", config_path}};
    manifest["config"] = config_to_json(config);
    manifest["tolerance"] = tol;
    const auto checks = identity_suite(config, tol);
    bool all = true;
    json report = json::array();
    for (const auto& c : checks) {
        std::printf("%-26s %s  value %.3e  bound %.3e\n", c.name.c_str(), c.pass ? "PASS" : "FAIL", c.value, c.bound);
        report.push_back({{"check", c.name}, {"value", c.value}, {"bound", c.bound}, {"pass", c.pass}});
        all = all && c.pass;
    }
    manifest.summary() = {{"checks", report}, {"pass", all}};
    manifest.write();
    return all ? Ok : Failure;
}

int cmd_hypotheses(const std::string& config_path, const std::string& out, double L0)
{
    const auto config = load_config(config_path);
    const auto problem = prepare_problem(config);
    M2Report m2;
    try {
        m2 = check_M2(config, L0);
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return BadInput;
    }
    const auto sign = check_parallel_flow_sign(problem.profile, problem.mu, problem.nu, config.Q);
    const double cap = domain_height_cap(config, L0);
    std::printf("M2 depth:    %.12g < %.12g  %s\n", m2.depth_lhs, m2.depth_rhs, m2.depth_pass ? "pass" : "fail");
    std::printf("M2 bending:  %.12g < %.12g  %s\n", m2.bending_lhs, m2.bending_rhs, m2.bending_pass ? "pass" : "fail");
    std::printf("height cap R = %.12g\n", cap);
    std::printf("parallel-flow sign condition (mu %.12g, nu %.12g): %s\n", problem.mu, problem.nu, to_string(sign).c_str());

    Manifest manifest("hypotheses", output_dir(config, out));
    manifest["inputs"] = {{"config", config_path}, {"L0", L0}};
    manifest["config"] = config_to_json(config);
    manifest.summary() = {{"L0", L0},
                          {"excess", m2.excess},
                          {"length_bound", m2.length_bound},
                          {"depth", {{"lhs", m2.depth_lhs}, {"rhs", m2.depth_rhs}, {"pass", m2.depth_pass}}},
                          {"bending", {{"lhs", m2.bending_lhs}, {"rhs", m2.bending_rhs}, {"pass", m2.bending_pass}}},
                          {"height_cap", cap},
                          {"sign_condition", to_string(sign)},
                          {"mu", problem.mu},
                          {"nu", problem.nu}};
    manifest.write();
    return m2.pass() ? Ok : Failure;
}

struct FollowerArgs {
    std::string state;
    double horizon = 1;
    double dt = 0.01;
    std::string interp = "bilinear";
    bool zero = false;
    double cap = 0;
    int nx = 128, ny = 64;
};

int cmd_follower(const std::string& config_path, const std::string& out, const FollowerArgs& a)
{
    const auto config = load_config(config_path);
    LoadedState loaded;
    try {
        loaded = load_flow_state(a.state);
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return BadInput;
    }
    const FlowState& s = loaded.state;
    const double cap = a.cap > 0 ? a.cap : 2 * s.surface.heights().maxCoeff();
    const StripGrid grid{s.surface.period(), cap, a.nx, a.ny};
    const VelocityField u(s, cap, 2 * a.nx, 2 * a.ny, loaded.lambda1);
    const StripField chi0 = a.zero ? StripField{grid, Eigen::MatrixXd::Zero(a.nx, a.ny)} : sample_vorticity(s, grid);
    const auto interp = a.interp == "cubic" ? Interpolation::Cubic : Interpolation::Bilinear;

    const FollowerTrace trace = follower_run(u, chi0, a.horizon, a.dt, interp);
    Manifest manifest("follower", output_dir(config, out));
    manifest["inputs"] = {{"config", config_path}, {"state", a.state}};
    manifest["config"] = config_to_json(config);
    write_csv(manifest.output("follower.csv"), {"t", "l2_norm", "distribution_drift", "support_area"},
              {to_vector(trace.t), to_vector(trace.l2_norm), to_vector(trace.distribution_drift), to_vector(trace.support_area)});
    const double drift = std::abs(trace.l2_norm.back() - trace.l2_norm.front());
    manifest.summary() = {{"horizon", a.horizon}, {"dt", a.dt},       {"interpolation", a.interp},
                          {"cap", cap},           {"nx", a.nx},       {"ny", a.ny},
                          {"l2_drift", drift},    {"distribution_drift", trace.distribution_drift.back()},
                          {"cfl", cfl_number(grid, u, a.dt)}};
    manifest.write();
    std::printf("follower: %zu steps, L2 drift %.3e, distribution drift %.3e\n", trace.t.size() - 1, drift, trace.distribution_drift.back());
    return Ok;
}

int cmd_sweep(const std::string& config_path, const std::string& out, const std::vector<double>& mus, const std::vector<double>& nus,
              const std::vector<double>& epsilons)
{
    const auto base = load_config(config_path);
    const fs::path dir = output_dir(base, out);
    struct Point {
        double mu, nu, eps;
    };
    std::vector<Point> points;
    if (!epsilons.empty()) {
        if (base.mode != ConstraintMode::Perturbed) throw ConfigError("an epsilon sweep needs constraints.mode = perturbed");
        for (double e : epsilons) points.push_back({base.mu, base.nu, e});
    } else {
        if (base.mode != ConstraintMode::Explicit) throw ConfigError("a (mu, nu) sweep needs constraints.mode = explicit");
        const auto mu_list = mus.empty() ? std::vector<double>{base.mu} : mus;
        const auto nu_list = nus.empty() ? std::vector<double>{base.nu} : nus;
        for (double m : mu_list)
            for (double n : nu_list) points.push_back({m, n, base.epsilon});
    }
    Manifest manifest("sweep", dir);
    manifest["inputs"] = {{"config", config_path}};
    manifest["config"] = config_to_json(base);
    const auto n = Eigen::Index(points.size());
    std::vector<Eigen::VectorXd> cols(8, Eigen::VectorXd(n));
    int failures = 0;
    for (Eigen::Index p = 0; p < n; ++p) {
        WaveConfig c = base;
        c.mu = points[std::size_t(p)].mu;
        c.nu = points[std::size_t(p)].nu;
        c.epsilon = points[std::size_t(p)].eps;
        char name[32];
        std::snprintf(name, sizeof name, "point_%03d", int(p));
        double energy = std::nan(""), lambda1 = std::nan(""), residual = std::nan(""), mu = c.mu, nu = c.nu, converged = 0;
        try {
            c.validate();
            Manifest point("solve", dir / name);
            point["config"] = config_to_json(c);
            const auto r = solve_into(c, point, false);
            point.write();
            mu = point.summary()["mu"].get<double>();
            nu = point.summary()["nu"].get<double>();
            if (r.reason != Termination::DegenerateDomain) {
                energy = r.energy.total;
                lambda1 = r.state.lambda1;
                residual = r.energy.bernoulli_l2;
            }
            converged = r.reason == Termination::Converged;
            manifest["outputs"].push_back((dir / name / "manifest.json").string());
        } catch (const std::exception& e) {
            ++failures;
            std::fprintf(stderr, "%s failed: %s\n", name, e.what());
        }
        const double row[8] = {double(p), mu, nu, c.epsilon, energy, lambda1, residual, converged};
        for (int k = 0; k < 8; ++k) cols[std::size_t(k)](p) = row[k];
        std::printf("%s  mu %.6g  nu %.6g  eps %.3g  energy %.10g  lambda1 %.6g\n", name, mu, nu, c.epsilon, energy, lambda1);
    }
    write_csv(manifest.output("summary.csv"), {"point", "mu", "nu", "epsilon", "energy", "lambda1", "residual", "converged"}, cols);
    manifest.summary() = {{"points", n}, {"failures", failures}};
    manifest.write();
    return failures == 0 ? Ok : Failure;
}

int cmd_metric(const std::string& a, const std::string& b, const std::string& out, const MetricOptions& o)
{
    LoadedState s1, s2;
    try {
        s1 = load_flow_state(a);
        s2 = load_flow_state(b);
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return BadInput;
    }
    auto to_json = [](const MetricReport& r) {
        return json{{"curve", r.curve}, {"dual", r.dual}, {"gradient", r.gradient}, {"total", r.total}, {"short_form", r.short_form}};
    };
    json report = {{"dist1", to_json(dist1_report(s1.state, s2.state, o))}};
    int code = Ok;
    try {
        report["dist0"] = to_json(dist0_report(s1.state, s2.state, o));
        const auto chain = comparison_chain(s1.state, s2.state, o);
        report["comparison_chain"] = {{"affine_extension", chain.affine_extension}, {"flow_extension", chain.flow_extension}, {"holds", chain.holds()}};
    } catch (const MetricError& e) {
        report["dist0"] = {{"error", e.what()}};
        code = Failure;
    }
    std::printf("%s\n", report.dump(2).c_str());
    if (!out.empty()) {
        Manifest manifest("metric", out);
        manifest["inputs"] = {{"a", a}, {"b", b}};
        manifest.summary() = report;
        manifest.write();
    }
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Steady water waves with vorticity: constrained minimisation and stability diagnostics"};
    app.require_subcommand(1);
    std::string config, out;
    bool verbose = false;

    auto* solve = app.add_subcommand("solve", "minimise the energy for a configuration");
    solve->add_option("config", config, "configuration file")->required();
    solve->add_option("-o,--output", out, "output directory (overrides output.directory)");
    solve->add_flag("-v,--verbose", verbose, "print every iteration");

    double tol = 1e-9;
    auto* verify = app.add_subcommand("verify", "run the identity and invariant suite on the configured domain");
    verify->add_option("config", config, "configuration file")->required();
    verify->add_option("-o,--output", out, "output directory");
    verify->add_option("--tolerance", tol, "relative tolerance of every check");

    double L0 = 0;
    auto* hyp = app.add_subcommand("hypotheses", "evaluate (M2), the height cap and the parallel-flow sign condition");
    hyp->add_option("config", config, "configuration file")->required();
    hyp->add_option("--L0", L0, "energy level above the admissible infimum")->required();
    hyp->add_option("-o,--output", out, "output directory");

    FollowerArgs fa;
    auto* fol = app.add_subcommand("follower", "advect a follower field with the frozen velocity of a solved state");
    fol->add_option("config", config, "configuration file")->required();
    fol->add_option("--state", fa.state, "solve output directory or flow_state.json")->required();
    fol->add_option("--horizon", fa.horizon, "final time");
    fol->add_option("--dt", fa.dt, "time step");
    fol->add_option("--interp", fa.interp, "bilinear or cubic")->check(CLI::IsMember({"bilinear", "cubic"}));
    fol->add_flag("--zero", fa.zero, "start from the zero field instead of the state's vorticity");
    fol->add_option("--cap", fa.cap, "strip height R (default twice the highest surface point)");
    fol->add_option("--nx", fa.nx, "strip cells per period");
    fol->add_option("--ny", fa.ny, "strip cells over (0, R)");
    fol->add_option("-o,--output", out, "output directory");

    std::vector<double> mus, nus, eps;
    auto* sweep = app.add_subcommand("sweep", "solve over a grid of (mu, nu) or of epsilon");
    sweep->add_option("config", config, "configuration file")->required();
    sweep->add_option("--mu", mus, "comma-separated mu values")->delimiter(',');
    sweep->add_option("--nu", nus, "comma-separated nu values")->delimiter(',');
    sweep->add_option("--epsilon", eps, "comma-separated epsilon values (perturbed mode)")->delimiter(',');
    sweep->add_option("-o,--output", out, "output directory");

    std::string sa, sb;
    MetricOptions mo;
    auto* metric = app.add_subcommand("metric", "dist0, dist1 and the comparison chain between two solved states");
    metric->add_option("a", sa, "first state")->required();
    metric->add_option("b", sb, "second state")->required();
    metric->add_option("--cap", mo.cap, "strip height R");
    metric->add_option("--nx", mo.nx, "strip cells per period");
    metric->add_option("--ny", mo.ny, "strip cells over (0, R)");
    metric->add_option("-o,--output", out, "directory for a manifest");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? Ok : BadInput;
    }

    try {
        if (*solve) return cmd_solve(config, out, verbose);
        if (*verify) return cmd_verify(config, out, tol);
        if (*hyp) return cmd_hypotheses(config, out, L0);
        if (*fol) return cmd_follower(config, out, fa);
        if (*sweep) return cmd_sweep(config, out, mus, nus, eps);
        if (*metric) return cmd_metric(sa, sb, out, mo);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return BadInput;
    } catch (const IoError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return BadInput;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return Failure;
    }
    return Failure;
}

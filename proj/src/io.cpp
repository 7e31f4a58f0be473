#include "vortwave/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace vortwave {

std::vector<double> CsvTable::column(const std::string& name) const
{
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] != name) continue;
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[c]);
        return out;
    }
    throw IoError("missing CSV column '" + name + "'");
}

std::string format_number(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header, const std::vector<Eigen::VectorXd>& columns)
{
    if (header.size() != columns.size()) throw IoError("CSV header and columns differ in count");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
    const Eigen::Index rows = columns.empty() ? 0 : columns.front().size();
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << format_number(columns[c](r));
        out << '\n';
    }
}

CsvTable read_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty CSV file " + path);
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            table.header.push_back(cell);
        }
    }
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw IoError("non-numeric CSV entry '" + cell + "' in " + path);
            }
        }
        if (row.size() != table.header.size()) throw IoError("ragged CSV row in " + path);
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_profile_csv(const std::string& path, const VorticityProfiled& profile)
{
    const Eigen::Index n = profile.steps();
    write_csv(path, {"s", "g"},
              {Eigen::Map<const Eigen::VectorXd>(profile.ends.data(), n), Eigen::Map<const Eigen::VectorXd>(profile.values.data(), n)});
}

VorticityProfiled read_profile_csv(const std::string& path)
{
    const auto table = read_csv(path);
    const auto s = table.column("s");
    const auto g = table.column("g");
    std::vector<double> widths(s.size());
    double prev = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        widths[i] = s[i] - prev;
        if (!(widths[i] > 0)) throw IoError("profile breakpoints must increase in " + path);
        prev = s[i];
    }
    try {
        return VorticityProfiled::from_steps(g, widths);
    } catch (const VorticityError& e) {
        throw IoError(std::string(e.what()) + " in " + path);
    }
}

void write_curve_csv(const std::string& path, const PeriodicCurved& curve)
{
    write_csv(path, {"x1", "x2"}, {curve.points().col(0), curve.points().col(1)});
}

PeriodicCurved read_curve_csv(const std::string& path, double period, CurveClosure closure)
{
    const auto table = read_csv(path);
    const auto x1 = table.column("x1");
    const auto x2 = table.column("x2");
    MatrixX2<double> pts(static_cast<Eigen::Index>(x1.size()), 2);
    for (std::size_t i = 0; i < x1.size(); ++i) pts.row(static_cast<Eigen::Index>(i)) << x1[i], x2[i];
    return PeriodicCurved(std::move(pts), period, closure);
}

nlohmann::json curve_to_json(const PeriodicCurved& curve)
{
    nlohmann::json pts = nlohmann::json::array();
    for (int i = 0; i < curve.size(); ++i) pts.push_back({curve.points()(i, 0), curve.points()(i, 1)});
    return {{"period", curve.period()}, {"n", curve.size()}, {"points", pts}};
}

PeriodicCurved curve_from_json(const nlohmann::json& j)
{
    const auto& pts = j.at("points");
    if (pts.size() != j.at("n").get<std::size_t>()) throw IoError("curve JSON: n does not match the point count");
    MatrixX2<double> p(static_cast<Eigen::Index>(pts.size()), 2);
    for (std::size_t i = 0; i < pts.size(); ++i) p.row(static_cast<Eigen::Index>(i)) << pts[i].at(0).get<double>(), pts[i].at(1).get<double>();
    return PeriodicCurved(std::move(p), j.at("period").get<double>());
}

nlohmann::json state_to_json(const StreamState& state)
{
    return {{"lambda1", state.lambda1}, {"lambda2", state.lambda2}, {"C", state.C}, {"I", state.I}, {"kinetic_energy", state.kinetic_energy}};
}

void write_field_csv(const std::string& path, const Mesh& mesh, const Eigen::VectorXd& psi)
{
    Eigen::VectorXd x1(mesh.node_count()), x2(mesh.node_count()), v(mesh.node_count());
    Eigen::Index r = 0;
    for (int i = 0; i < mesh.m(); ++i) {
        for (int j = 0; j <= mesh.k(); ++j, ++r) {
            x1(r) = mesh.x1(i, j);
            x2(r) = mesh.x2(i, j);
            v(r) = psi(mesh.node(i, j));
        }
    }
    write_csv(path, {"x1", "x2", "psi"}, {x1, x2, v});
}

void write_json(const std::string& path, const nlohmann::json& j)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("invalid JSON in " + path + ": " + e.what());
    }
}

} // namespace vortwave

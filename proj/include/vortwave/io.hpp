#pragma once

#include "vortwave/elliptic.hpp"
#include "vortwave/geometry.hpp"
#include "vortwave/vorticity.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace vortwave {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::vector<double> column(const std::string& name) const;
};

/// Numbers are written with "%.17g" so reruns are byte-identical.
std::string format_number(double x);

void write_csv(const std::string& path, const std::vector<std::string>& header, const std::vector<Eigen::VectorXd>& columns);
CsvTable read_csv(const std::string& path);

/// Step table: each row (s, g) means g on [previous s, s).
void write_profile_csv(const std::string& path, const VorticityProfiled& profile);
VorticityProfiled read_profile_csv(const std::string& path);

void write_curve_csv(const std::string& path, const PeriodicCurved& curve);
PeriodicCurved read_curve_csv(const std::string& path, double period, CurveClosure closure = CurveClosure::Periodic);
nlohmann::json curve_to_json(const PeriodicCurved& curve);
PeriodicCurved curve_from_json(const nlohmann::json& j);

nlohmann::json state_to_json(const StreamState& state);
/// Nodal field dump with columns x1, x2, psi.
void write_field_csv(const std::string& path, const Mesh& mesh, const Eigen::VectorXd& psi);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

} // namespace vortwave

#include "omx/params.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace omx {

double derive_nth(double omega_m, double temperature) {
    if (omega_m <= 0.0) throw std::domain_error("derive_nth: omega_m must be positive");
    if (temperature < 0.0) throw std::domain_error("derive_nth: temperature must be >= 0");
    if (temperature == 0.0) return 0.0;
    if (temperature > kMaxTemperatureRatio * omega_m)
        throw std::range_error("derive_nth: temperature above configured cap, occupation diverges");
    return 1.0 / std::expm1(omega_m / temperature);
}

void SystemParams::validate() const {
    if (!(kappa > 0.0)) throw ConfigError("params: kappa must be > 0");
    if (!(omega_m > 0.0)) throw ConfigError("params: omega_m must be > 0");
    if (gamma_m < 0.0) throw ConfigError("params: gamma_m must be >= 0");
    if (drive_E < 0.0) throw ConfigError("params: drive amplitude must be >= 0");
    if (n_th < 0.0) throw ConfigError("params: n_th must be >= 0");
    if (g < 0.0) throw ConfigError("params: g must be >= 0");
}

TimeGrid build_grid(double kappa, double t_end, double resolution) {
    if (!(t_end > 0.0)) throw ConfigError("grid: t_end must be > 0");
    if (!(resolution > 0.0)) throw ConfigError("grid: resolution must be > 0");
    const double steps = std::ceil(kappa * t_end / resolution);
    if (steps + 1.0 > static_cast<double>(kMaxGridNodes))
        throw ConfigError("grid: node count exceeds memory cap (" +
                          std::to_string(kMaxGridNodes) + ")");
    TimeGrid grid;
    grid.t_end = t_end;
    grid.n_steps = static_cast<std::size_t>(steps);
    grid.dt = t_end / static_cast<double>(grid.n_steps);
    grid.nodes.resize(grid.n_steps + 1);
    for (std::size_t k = 0; k <= grid.n_steps; ++k)
        grid.nodes[k] = static_cast<double>(k) * grid.dt;
    grid.nodes.back() = t_end;
    return grid;
}

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_value(const std::string& key, const std::string& text) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw ConfigError("scenario: bad numeric value for '" + key + "': " + text);
    }
    if (pos != text.size())
        throw ConfigError("scenario: trailing junk in value for '" + key + "': " + text);
    return v;
}

std::string fmt12(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

Scenario Scenario::parse(std::istream& in) {
    Scenario sc;
    std::map<std::string, bool> seen;
    std::string line;
    bool any = false;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("scenario: expected 'key = value', got: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (seen[key]) throw ConfigError("scenario: duplicate key '" + key + "'");
        seen[key] = true;
        any = true;
        const double v = parse_value(key, val);
        if (key == "g_over_kappa") sc.g_over_kappa = v;
        else if (key == "omega_m_over_kappa") sc.omega_m_over_kappa = v;
        else if (key == "Q") sc.quality_factor = v;
        else if (key == "delta0_over_omega_m") sc.delta0_over_omega_m = v;
        else if (key == "E_over_kappa") sc.e_over_kappa = v;
        else if (key == "n_th") sc.n_th = v;
        else if (key == "T_over_omega_m") sc.t_over_omega_m = v;
        else if (key == "t_end_kappa") sc.t_end_kappa = v;
        else if (key == "resolution") sc.resolution = v;
        else throw ConfigError("scenario: unknown key '" + key + "'");
    }
    if (!any) throw ConfigError("scenario: empty file");
    if (sc.n_th && sc.t_over_omega_m)
        throw ConfigError("scenario: give n_th or T_over_omega_m, not both");
    if (!(sc.quality_factor > 0.0)) throw ConfigError("scenario: Q must be > 0");
    if (!(sc.t_end_kappa > 0.0)) throw ConfigError("scenario: t_end_kappa must be > 0");
    if (!(sc.omega_m_over_kappa > 0.0))
        throw ConfigError("scenario: omega_m_over_kappa must be > 0");
    sc.params().validate();
    return sc;
}

Scenario Scenario::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("scenario: cannot open " + path);
    return parse(in);
}

SystemParams Scenario::params() const {
    SystemParams p;
    p.kappa = 1.0;
    p.g = g_over_kappa;
    p.omega_m = omega_m_over_kappa;
    p.gamma_m = quality_factor > 0.0 ? omega_m_over_kappa / quality_factor : 0.0;
    p.delta0 = delta0_over_omega_m * p.omega_m;
    p.drive_E = e_over_kappa;
    if (t_over_omega_m)
        p.n_th = derive_nth(p.omega_m, *t_over_omega_m * p.omega_m);
    else
        p.n_th = n_th.value_or(0.0);
    return p;
}

TimeGrid Scenario::grid() const { return build_grid(1.0, t_end_kappa, resolution); }

std::string Scenario::serialize() const {
    std::ostringstream out;
    out << "g_over_kappa = " << fmt12(g_over_kappa) << "\n";
    out << "omega_m_over_kappa = " << fmt12(omega_m_over_kappa) << "\n";
    out << "Q = " << fmt12(quality_factor) << "\n";
    out << "delta0_over_omega_m = " << fmt12(delta0_over_omega_m) << "\n";
    out << "E_over_kappa = " << fmt12(e_over_kappa) << "\n";
    if (n_th) out << "n_th = " << fmt12(*n_th) << "\n";
    if (t_over_omega_m) out << "T_over_omega_m = " << fmt12(*t_over_omega_m) << "\n";
    out << "t_end_kappa = " << fmt12(t_end_kappa) << "\n";
    out << "resolution = " << fmt12(resolution) << "\n";
    return out.str();
}

}  // namespace omx

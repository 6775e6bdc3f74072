#ifndef OMX_PARAMS_HPP
#define OMX_PARAMS_HPP

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>

#include "omx/types.hpp"

namespace omx {

/// Thermal phonon occupation 1/(e^{omega_m/T} - 1) in units hbar = k_B = 1.
/// Returns 0 exactly at T = 0. Throws std::domain_error for omega_m <= 0 and
/// std::range_error above the configured temperature cap (the occupation
/// diverges linearly in T).
double derive_nth(double omega_m, double temperature);

/// Temperature cap for derive_nth, as a multiple of omega_m.
inline constexpr double kMaxTemperatureRatio = 1e6;

/// Rates in absolute angular-frequency units. Scenario loading normalizes to
/// kappa = 1; the formulas themselves do not assume it.
struct SystemParams {
    double g = 0.0;        // optomechanical coupling
    double kappa = 1.0;    // cavity damping
    double gamma_m = 0.0;  // mechanical damping
    double omega_m = 1.0;  // mechanical frequency
    double delta0 = 0.0;   // drive detuning, omega_c - omega_0
    double drive_E = 0.0;  // drive amplitude
    double n_th = 0.0;     // thermal phonon occupation

    void validate() const;  // throws ConfigError on an invariant violation
};

/// Uniform discretization of [0, t_end]; nodes[k] = k * dt.
struct TimeGrid {
    double t_end = 0.0;
    std::size_t n_steps = 0;
    double dt = 0.0;
    RealVec nodes;

    std::size_t node_count() const { return n_steps + 1; }
};

inline constexpr std::size_t kMaxGridNodes = 200000;

/// n_steps = ceil(kappa * t_end / resolution). Rejects t_end <= 0,
/// resolution <= 0 and grids past kMaxGridNodes (double integrals are
/// O(N^2); the cap keeps a typo from allocating the machine).
TimeGrid build_grid(double kappa, double t_end, double resolution);

/// One scenario file: `key = value` lines, '#' comments. Unknown keys are an
/// error. Rates are given as ratios to kappa, as in the figure captions.
struct Scenario {
    double g_over_kappa = 0.0;
    double omega_m_over_kappa = 1.0;
    double quality_factor = 0.0;       // Q = omega_m / gamma_m
    double delta0_over_omega_m = 0.0;
    double e_over_kappa = 0.0;
    std::optional<double> n_th;              // direct occupation
    std::optional<double> t_over_omega_m;    // or temperature ratio
    double t_end_kappa = 0.0;
    double resolution = 0.02;

    SystemParams params() const;  // kappa = 1 units
    TimeGrid grid() const;

    static Scenario parse(std::istream& in);
    static Scenario parse_file(const std::string& path);
    std::string serialize() const;  // round-trips all fields through parse()
};

}  // namespace omx

#endif

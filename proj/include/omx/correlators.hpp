#ifndef OMX_CORRELATORS_HPP
#define OMX_CORRELATORS_HPP

#include <cstddef>
#include <memory>

#include "omx/params.hpp"
#include "omx/types.hpp"

namespace omx {

// Scalar kernels. Every kernel depends on the final time t through the decay
// factors e^{-rate (t - tau)}; callers re-derive caches whenever t changes.

/// Drive displacement D1(tau) for end time t:
///   (e^{-kappa (t-tau)/2 + i delta0 tau} - e^{-kappa t/2}) * E / (kappa/2 + i delta0).
Complex d1_value(double tau, double t, const SystemParams& p);

/// Colored-noise correlation Gamma(tau, tau2) for damping `rate` and end time t:
///   e^{-rate |tau - tau2| / 2} - e^{-rate (t - tau)/2} e^{-rate (t - tau2)/2}.
double gamma_corr(double tau, double tau2, double t, double rate);

/// Antisymmetric commutator kernel m(tau_i, tau_j) =
///   2 e^{-gamma_m |tau_i - tau_j| / 2} sin(omega_m (tau_j - tau_i)).
double m_corr(double tau_i, double tau_j, const SystemParams& p);

/// D2(tau) = E * integral_0^tau e^{i delta0 u} Gamma_c(u, tau) du, trapezoid
/// against a precomputed Gamma_c row on the grid prefix [0..node].
Complex d2_value(std::size_t node, double t, const SystemParams& p, const TimeGrid& grid,
                 const RealVec& gamma_c_row);

/// Accumulated phase Theta(tau) from commuting the two quadrature exponentials:
/// nested integral of e^{-kappa(t-u)} sin(omega_m u) e^{-kappa(t-v)-gamma_m(u-v)/2}
/// cos(omega_m v) over 0 <= v <= u <= tau, times 2. Whole series in one pass.
RealVec theta_series(double t, const SystemParams& p, const TimeGrid& grid, std::size_t end_node);

/// Theta'(tau): same nesting with Gamma_c(., tau)-weighted kernels over [tau, t].
RealVec theta_prime_series(double t, const SystemParams& p, const TimeGrid& grid,
                           std::size_t end_node);

/// The light per-end-time arrays the evaluators consume: O(N) build, no dense
/// matrices. `end_node` selects t = grid.nodes[end_node].
struct DriveKernels {
    double t = 0.0;
    std::size_t end_node = 0;
    ComplexVec d1;    // D1(tau_k)
    ComplexVec d2;    // D2(tau_k)
    ComplexVec gbar;  // e^{-kappa (t-tau)/2} D1(tau) + D2(tau): scalar drive part
    static DriveKernels build(const SystemParams& p, const TimeGrid& grid, std::size_t end_node,
                              bool with_d2);
};

/// Dense kernel cache for one end time t: the Gamma matrices plus the D and
/// Theta series. This is what the Gaussian-moment contraction works against;
/// suitable for N up to a few thousand nodes (memory is O(N^2)).
struct KernelCache {
    SystemParams params;
    TimeGrid grid;    // prefix grid up to end_node
    double t = 0.0;
    std::size_t end_node = 0;
    std::vector<RealVec> gamma_c;  // Gamma_c(tau_i, tau_j), symmetric
    std::vector<RealVec> gamma_m;  // Gamma_m(tau_i, tau_j), symmetric
    ComplexVec d1;
    ComplexVec d2;
    RealVec theta;
    RealVec theta_prime;

    static std::shared_ptr<const KernelCache> build(const SystemParams& p, const TimeGrid& grid,
                                                    std::size_t end_node);
    std::size_t node_count() const { return end_node + 1; }
};

/// Dense-cache node cap: two N^2 double matrices. Grid itself may be larger;
/// only the dense cache is bounded.
inline constexpr std::size_t kMaxDenseNodes = 8192;

}  // namespace omx

#endif

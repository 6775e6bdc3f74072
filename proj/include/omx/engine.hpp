#ifndef OMX_ENGINE_HPP
#define OMX_ENGINE_HPP

#include <string>
#include <utility>
#include <vector>

#include "omx/params.hpp"
#include "omx/types.hpp"

namespace omx {

/// How the noise-corrected drive operator is treated.
///  - pure_drive: external driver alone; the optomechanical correction is off.
///  - gamma_c_zero: correction on, but every Gamma_c-dependent piece of the
///    drive operator dropped (no D2, no noise-corrected exponentials).
///  - full: the noise correction resummed into the ordered-exponential
///    bracket (valid at strong coupling; the default).
///  - neumann: the iterated-drive series truncated at `order`, kept for
///    convergence studies; diverges order by order once g is comparable to
///    kappa, which the order-4 guard reports.
struct NoiseMode {
    enum class Kind { pure_drive, gamma_c_zero, full, neumann };
    Kind kind = Kind::full;
    int order = 2;

    static NoiseMode pure_drive() { return {Kind::pure_drive, 0}; }
    static NoiseMode gamma_c_zero() { return {Kind::gamma_c_zero, 0}; }
    static NoiseMode full() { return {Kind::full, 0}; }
    static NoiseMode neumann(int order = 2);
    static NoiseMode parse(const std::string& name, int order);
    std::string name() const;
};

enum class ObservableKind { xc, np, xm, pm, amp_re, amp_im };
ObservableKind parse_observable(const std::string& name);
std::string observable_name(ObservableKind kind);

struct ObservableSeries {
    RealVec times;
    ComplexVec values;
    std::string observable;
    std::string mode;
    SystemParams params;
};

/// Per-order magnitudes of the iterated-drive contributions to the
/// amplitude correction, for convergence monitoring.
struct AmplitudeBreakdown {
    Complex d1{};
    Complex correction{};
    RealVec series_term_magnitudes;
    Complex value() const { return d1 + correction; }
};

/// Closed-form evaluators on a fixed grid. Each call evaluates at the end
/// time t = grid.nodes[node]; kernels are derived per end time, never reused
/// across different t. Immutable and safe to share across threads.
class Evaluator {
  public:
    Evaluator(const SystemParams& params, const TimeGrid& grid);

    Complex cavity_amplitude(std::size_t node, const NoiseMode& mode) const;
    AmplitudeBreakdown cavity_amplitude_breakdown(std::size_t node, const NoiseMode& mode) const;
    double cavity_quadrature(std::size_t node, const NoiseMode& mode) const;
    double photon_number(std::size_t node, const NoiseMode& mode) const;
    std::pair<double, double> mechanical_quadratures(std::size_t node) const;

    /// Series over report nodes {0, stride, 2 stride, ..., n_steps};
    /// evaluations run in parallel over report nodes.
    ObservableSeries evolve(ObservableKind kind, const NoiseMode& mode, std::size_t stride,
                            int threads) const;

    const TimeGrid& grid() const { return grid_; }
    const SystemParams& params() const { return params_; }

  private:
    SystemParams params_;
    TimeGrid grid_;
};

/// Photon-number correction from the colored mechanical noise (T = 0 closed
/// form; n_th > 0 scales the contraction by 2 n_th + 1).
double delta_np(const SystemParams& p, const TimeGrid& grid, std::size_t node);

/// Weak-coupling sideband amplitude moments at time t.
struct WeakCoupling {
    Complex l_mean;     // 0 for the zero-mean thermal state
    double l_dag_l;     // <l^dag l>
    Complex l_l;        // <l l> = 0
    double photon_number;  // |D1|^2 + <l^dag l> + delta_np
};
WeakCoupling weak_coupling_moments(const SystemParams& p, const TimeGrid& grid, std::size_t node);

/// R_m = delta_np / (|D1|^2 + <l^dag l> + delta_np), in (0, 1).
double noise_ratio_rm(const SystemParams& p, const TimeGrid& grid, std::size_t node);

}  // namespace omx

#endif

#ifndef OMX_ENGINE_RESUMMED_HPP
#define OMX_ENGINE_RESUMMED_HPP

#include <array>
#include <memory>

#include "engine_context.hpp"

namespace omx::detail {

/// Kernel families for the resummed noise-corrected drive. The correction
/// bracket contributes two more quadrature exponentials per side whose
/// kernels carry the two separable components of Gamma_c:
///   0: e^{-kappa(t-u)} sin(omega u)     1: e^{-kappa(t-u)} cos(omega u)
///   2: e^{-kappa u/2} sin(omega u)      3: e^{-kappa(t-u)/2} sin(omega u)
///   4: e^{-kappa u/2} cos(omega u)      5: e^{-kappa(t-u)/2} cos(omega u)
/// Families 0-1 integrate over [0, tau]; 2-5 over [tau, t].
struct ResumArrays {
    const EndTimeContext& c;
    RealVec theta_p;  // Theta'(tau)
    std::array<RealVec, 6> fam;
    std::array<RealVec, 6> Fp, Fm;  // prefix of f e^{+-gamma u/2}
    std::array<RealVec, 6> I, J;    // damped accumulators from below / above
    RealVec egm;                    // e^{-gamma tau/2}
    // prefix squares over [0,x]^2 for (a,b) pairs come from the context;
    // suffix squares over [x,t]^2 for primed pairs:
    std::array<std::array<RealVec, 6>, 6> Ssuf;  // only [2..5][2..5] filled
    // overlap prefixes int_0^x f(u) J_g(u) du and int_0^x f(u) I_g(u) du
    std::array<std::array<RealVec, 6>, 2> FJ, FI;  // f in {0,1}, g in 2..5

    explicit ResumArrays(const EndTimeContext& ctx);

    /// double integral of fam_i(u) fam_j(v) e^{-gamma|u-v|/2} over the
    /// families' ranges anchored at x (for i) and y (for j)
    double contract(int fi, std::size_t x, int fj, std::size_t y) const;

    /// int over fam range of fam_f(u) e^{-gamma |u - tau_sigma|/2} du
    double point_contract(int f, std::size_t x, std::size_t sigma) const;
};

/// <a>(t) with the noise-corrected drive resummed into the ordered
/// exponential bracket; with_gamma_c = false drops every Gamma_c piece
/// (the gamma_c_zero approximation shares this code path).
Complex resummed_amplitude_correction(const EndTimeContext& ctx, const ResumArrays& ra);

/// <J^dag J> for the resummed correction operator.
double resummed_jj(const EndTimeContext& ctx, const ResumArrays& ra);

/// One weighted summand of the <J^dag J> double sum (test hook; the sum of
/// these over all ordered pairs equals resummed_jj up to the g^2 prefactor).
Complex resummed_jj_summand(const EndTimeContext& ctx, const ResumArrays& ra, std::size_t k1,
                            std::size_t k2);

}  // namespace omx::detail

#endif

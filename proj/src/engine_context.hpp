#ifndef OMX_ENGINE_CONTEXT_HPP
#define OMX_ENGINE_CONTEXT_HPP

#include <cmath>
#include <cstddef>

#include "omx/correlators.hpp"
#include "omx/params.hpp"
#include "omx/quad.hpp"
#include "omx/types.hpp"

namespace omx::detail {

// Everything the closed-form evaluators need for one end time t = tau_M.
// All two-point moments of the dressed quadratures collapse onto the
// stationary kernel
//   <K(u) K(v)> = e^{-gamma_m |u-v|/2} (n_th e^{i omega_m (u-v)}
//                                       + (n_th+1) e^{-i omega_m (u-v)}),
// so every covariance reduces to exponential prefix integrals evaluated in
// O(1) per node pair.
struct EndTimeContext {
    SystemParams p;
    double t = 0.0;
    std::size_t M = 0;  // end node; arrays have M+1 entries
    double dt = 0.0;
    double nth = 0.0;
    Complex lam_p, lam_m;  // gamma_m/2 +- i omega_m

    RealVec tau, w;          // nodes and trapezoid weights on [0, t]
    RealVec h, ec2;          // e^{-kappa (t-u)}, e^{-kappa (t-u)/2}
    RealVec fa, fb;          // h sin(omega u), h cos(omega u)
    RealVec epos, einv;      // e^{-kappa u/2}, e^{+kappa u/2}
    ComplexVec Ep, Em;       // e^{-lam_p u}, e^{-lam_m u}
    ComplexVec EpI, EmI;     // inverses
    RealVec theta;
    ComplexVec phi;          // e^{-i g^2 Theta(u)} e^{-kappa (t-u)/2}

    ComplexVec d1, d2, gbar;  // drive pieces; d2 empty-by-zero in the
                              // Gamma_c = 0 approximation

    // exponent second-moment machinery
    RealVec Ia, Ib;                  // int_0^x f(u) e^{-gamma (x-u)/2} du
    RealVec Saa, Sab, Sbb;           // square double integrals over [0,x]^2
    RealVec Fm_a, Fm_b;              // int_0^x f e^{-gamma u/2} du
    RealVec egp;                     // e^{+gamma u/2}
    ComplexVec e0;                   // <e^A e^B>(tau_k)

    // insertion singleton machinery: int_0^x h(u) e^{+-lam u} du
    ComplexVec Hpp, Hpm, Hmp, Hmm;

    EndTimeContext(const SystemParams& params, const TimeGrid& grid, std::size_t end_node,
                   bool with_d2);

    // rectangle integral of f(u) g(v) e^{-gamma |u-v|/2} over [0,x] x [0,y]
    double rect(const RealVec& sq, const RealVec& fm_row, const RealVec& fm_col,
                const RealVec& i_row, const RealVec& i_col, std::size_t x, std::size_t y) const {
        if (x == y) return sq[x];
        if (x > y) return sq[y] + egp[y] * (fm_row[x] - fm_row[y]) * i_col[y];
        return sq[x] + egp[x] * (fm_col[y] - fm_col[x]) * i_row[x];
    }
    double r_aa(std::size_t x, std::size_t y) const {
        return rect(Saa, Fm_a, Fm_a, Ia, Ia, x, y);
    }
    double r_bb(std::size_t x, std::size_t y) const {
        return rect(Sbb, Fm_b, Fm_b, Ib, Ib, x, y);
    }
    double r_ab(std::size_t x, std::size_t y) const {  // f = a on [0,x], g = b on [0,y]
        return rect(Sab, Fm_a, Fm_b, Ia, Ib, x, y);
    }

    /// <e^{B^dag(t1)} e^{A^dag(t1)} e^{A(t2)} e^{B(t2)}>
    Complex e2(std::size_t k1, std::size_t k2) const {
        const double g2 = p.g * p.g;
        const double re = -g2 * (2.0 * nth + 1.0) *
                          (0.5 * (Saa[k1] + Sbb[k1] + Saa[k2] + Sbb[k2]) -
                           r_aa(k1, k2) - r_bb(k1, k2));
        const double im = g2 * (-Sab[k1] + Sab[k2] + r_ab(k2, k1) - r_ab(k1, k2));
        return std::exp(Complex(re, im));
    }

    /// ordered pair moment <K(tau_i) K(tau_j)>, first argument written first
    Complex pair(std::size_t i, std::size_t j) const {
        if (i >= j) return nth * Em[i] * EmI[j] + (nth + 1.0) * Ep[i] * EpI[j];
        return nth * Ep[j] * EpI[i] + (nth + 1.0) * Em[j] * EmI[i];
    }

    /// W(sigma, x) = int_0^x h(u) <K(u) K(sigma)> du
    Complex w_int(std::size_t sigma, std::size_t x) const {
        if (x <= sigma) return nth * Ep[sigma] * Hpp[x] + (nth + 1.0) * Em[sigma] * Hpm[x];
        return nth * (Ep[sigma] * Hpp[sigma] + EmI[sigma] * (Hmm[x] - Hmm[sigma])) +
               (nth + 1.0) * (Em[sigma] * Hpm[sigma] + EpI[sigma] * (Hmp[x] - Hmp[sigma]));
    }
    /// V(sigma, x) = int_0^x h(u) <K(sigma) K(u)> du
    Complex v_int(std::size_t sigma, std::size_t x) const {
        if (x <= sigma) return nth * Em[sigma] * Hpm[x] + (nth + 1.0) * Ep[sigma] * Hpp[x];
        return nth * (Em[sigma] * Hpm[sigma] + EpI[sigma] * (Hmp[x] - Hmp[sigma])) +
               (nth + 1.0) * (Ep[sigma] * Hpp[sigma] + EmI[sigma] * (Hmm[x] - Hmm[sigma]));
    }

    /// <K(sigma) (sum of exponents)> for an insertion left of all four
    /// exponents of e2(k1, k2): ig int_{tau_k1}^{tau_k2} h(u) <K(sigma) K(u)> du
    Complex s_left(std::size_t sigma, std::size_t k1, std::size_t k2) const {
        return Complex(0, p.g) * (v_int(sigma, k2) - v_int(sigma, k1));
    }
    /// <(sum of exponents) K(sigma)> for an insertion right of all exponents
    Complex s_right(std::size_t sigma, std::size_t k1, std::size_t k2) const {
        return Complex(0, p.g) * (w_int(sigma, k2) - w_int(sigma, k1));
    }
    /// amplitude case: exponents integrate over [0, tau], insertion at sigma
    Complex s_amp(std::size_t sigma, std::size_t tau_node) const {
        return Complex(0, p.g) * w_int(sigma, tau_node);
    }

    double gamma_c(std::size_t i, std::size_t j) const {
        const double direct = i >= j ? epos[i] * einv[j] : epos[j] * einv[i];
        return direct - ec2[i] * ec2[j];
    }
};

}  // namespace omx::detail

#endif

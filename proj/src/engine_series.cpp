#include "engine_series.hpp"

#include <algorithm>
#include <array>

#include "parallel.hpp"

// Iterated noise-corrected drive chains. Every chain integrand is a product of
// exponentials in its chain variables, so nested integrals collapse onto
// suffix/prefix sums of a small family of node arrays:
//   fam0 = e^{-lam_p u},      fam1 = e^{-lam_m u},
//   fam2 = fam0 Hpp,          fam3 = fam1 Hpm,
//   fam4 = e^{+lam_m u} Hmm,  fam5 = e^{+lam_m u},
//   fam6 = e^{+lam_p u} Hmp,  fam7 = e^{+lam_p u},
// weighted by the two separable components of Gamma_c and the scalar drive
// profile. Quadrature is trapezoid throughout; endpoint half-weights are
// restored explicitly after the prefix/suffix lookups.

namespace omx::detail {

namespace {

using std::size_t;

ComplexVec suffix_plain(const ComplexVec& q) {
    ComplexVec ss(q.size() + 1, Complex{});
    for (size_t j = q.size(); j-- > 0;) ss[j] = ss[j + 1] + q[j];
    return ss;
}

ComplexVec prefix_plain(const ComplexVec& q) {
    ComplexVec ps(q.size() + 1, Complex{});
    for (size_t j = 0; j < q.size(); ++j) ps[j + 1] = ps[j] + q[j];
    return ps;
}

ComplexVec hadamard(const ComplexVec& a, const ComplexVec& b) {
    ComplexVec out(a.size());
    for (size_t j = 0; j < a.size(); ++j) out[j] = a[j] * b[j];
    return out;
}

ComplexVec hadamard3(const ComplexVec& a, const ComplexVec& b, const ComplexVec& c) {
    ComplexVec out(a.size());
    for (size_t j = 0; j < a.size(); ++j) out[j] = a[j] * b[j] * c[j];
    return out;
}

/// Gamma_c(., tau_j)-weighted trapezoid machinery over one integrand array.
struct ChainSfx {
    const EndTimeContext* c = nullptr;
    ComplexVec q0, q1;  // epos- and ec2-weighted samples
    ComplexVec s0, s1;  // suffix plain sums, size n+1

    ChainSfx() = default;
    ChainSfx(const EndTimeContext& ctx, const ComplexVec& arr) : c(&ctx) {
        const size_t n = arr.size();
        q0.resize(n);
        q1.resize(n);
        for (size_t j = 0; j < n; ++j) {
            q0[j] = arr[j] * ctx.epos[j];
            q1[j] = arr[j] * ctx.ec2[j];
        }
        s0 = suffix_plain(q0);
        s1 = suffix_plain(q1);
    }

    /// Full-rule trapezoid over [j..M] of one weight component.
    Complex ts(int g, size_t j) const {
        const ComplexVec& q = g == 0 ? q0 : q1;
        const ComplexVec& s = g == 0 ? s0 : s1;
        const size_t m = q.size() - 1;
        if (j >= m) return Complex{};
        return c->dt * (s[j] - 0.5 * q[j] - 0.5 * q[m]);
    }
    /// Gamma_c(., tau_j)-weighted full-rule trapezoid over [j..M].
    Complex tg(size_t j) const { return c->einv[j] * ts(0, j) - c->ec2[j] * ts(1, j); }
    /// Plain (no endpoint halves) Gamma_c(., tau_anchor)-weighted sum over [a..b].
    Complex plain(const EndTimeContext& ctx, size_t anchor, size_t a, size_t b) const {
        if (a > b) return Complex{};
        return ctx.einv[anchor] * (s0[a] - s0[b + 1]) - ctx.ec2[anchor] * (s1[a] - s1[b + 1]);
    }
};

struct SeriesArrays {
    const EndTimeContext& c;
    size_t n;
    ComplexVec gbar_conj;
    std::array<ComplexVec, 8> fam;
    ChainSfx ch_f0, ch_f1;  // gbar-weighted fam0/fam1 chains
    ComplexVec tg0, tg1;
    // amplitude order-2 products
    ChainSfx ch_f0t0, ch_f0t1, ch_f1t0, ch_f1t1, ch_pit0, ch_mit1;

    explicit SeriesArrays(const EndTimeContext& ctx) : c(ctx), n(ctx.M + 1) {
        gbar_conj.resize(n);
        for (size_t j = 0; j < n; ++j) gbar_conj[j] = std::conj(c.gbar[j]);
        fam[0] = c.Ep;
        fam[1] = c.Em;
        for (int f : {2, 3, 4, 5, 6, 7}) fam[f].resize(n);
        for (size_t j = 0; j < n; ++j) {
            fam[2][j] = c.Ep[j] * c.Hpp[j];
            fam[3][j] = c.Em[j] * c.Hpm[j];
            fam[4][j] = c.EmI[j] * c.Hmm[j];
            fam[5][j] = c.EmI[j];
            fam[6][j] = c.EpI[j] * c.Hmp[j];
            fam[7][j] = c.EpI[j];
        }
        ch_f0 = ChainSfx(c, hadamard(c.gbar, fam[0]));
        ch_f1 = ChainSfx(c, hadamard(c.gbar, fam[1]));
        tg0.resize(n);
        tg1.resize(n);
        for (size_t j = 0; j < n; ++j) {
            tg0[j] = ch_f0.tg(j);
            tg1[j] = ch_f1.tg(j);
        }
        ch_f0t0 = ChainSfx(c, hadamard(fam[0], tg0));
        ch_f0t1 = ChainSfx(c, hadamard(fam[0], tg1));
        ch_f1t0 = ChainSfx(c, hadamard(fam[1], tg0));
        ch_f1t1 = ChainSfx(c, hadamard(fam[1], tg1));
        ch_pit0 = ChainSfx(c, hadamard(fam[7], tg0));
        ch_mit1 = ChainSfx(c, hadamard(fam[5], tg1));
    }
};

// ---------------------------------------------------------------------------
// amplitude chains

Complex amp_term0(const EndTimeContext& c) {
    Complex acc{};
    for (size_t k = 0; k <= c.M; ++k)
        acc += c.w[k] * c.phi[k] * c.e0[k] * c.gbar[k] * c.s_amp(k, k);
    return Complex(0, c.p.g) * acc;
}

Complex amp_term1(const EndTimeContext& c, const SeriesArrays& sa) {
    const double nth = c.nth;
    const Complex ig(0, c.p.g);
    Complex acc{};
    for (size_t k = 0; k <= c.M; ++k) {
        const Complex sk = c.s_amp(k, k);
        const Complex coef0 = sk * ig * nth * c.Hpp[k] + nth * c.EpI[k];
        const Complex coef1 = sk * ig * (nth + 1.0) * c.Hpm[k] + (nth + 1.0) * c.EmI[k];
        acc += c.w[k] * c.phi[k] * c.e0[k] * (coef0 * sa.tg0[k] + coef1 * sa.tg1[k]);
    }
    return ig * ig * acc;
}

Complex amp_term2(const EndTimeContext& c, const SeriesArrays& sa) {
    const double nth = c.nth;
    const Complex ig(0, c.p.g);
    Complex acc{};
    for (size_t k = 0; k <= c.M; ++k) {
        const Complex sk = c.s_amp(k, k);
        const Complex s_c0 = ig * nth * c.Hpp[k];
        const Complex s_c1 = ig * (nth + 1.0) * c.Hpm[k];
        const Complex p_c0 = nth * c.EpI[k];
        const Complex p_c1 = (nth + 1.0) * c.EmI[k];
        const Complex f0t0 = sa.ch_f0t0.tg(k), f0t1 = sa.ch_f0t1.tg(k);
        const Complex f1t0 = sa.ch_f1t0.tg(k), f1t1 = sa.ch_f1t1.tg(k);
        const Complex pit0 = sa.ch_pit0.tg(k), mit1 = sa.ch_mit1.tg(k);
        const Complex inner = (sk * s_c0 + p_c0) * (s_c0 * f0t0 + s_c1 * f0t1) +
                              (sk * s_c1 + p_c1) * (s_c0 * f1t0 + s_c1 * f1t1) +
                              sk * (nth * pit0 + (nth + 1.0) * mit1) +
                              s_c0 * (p_c0 * f0t0 + p_c1 * f0t1) +
                              s_c1 * (p_c0 * f1t0 + p_c1 * f1t1);
        acc += c.w[k] * c.phi[k] * c.e0[k] * inner;
    }
    return ig * ig * ig * acc;
}

Complex f2_match(const EndTimeContext& c, size_t k, size_t x, size_t y) {
    return c.s_amp(x, k) * c.s_amp(y, k) + c.pair(x, y);
}
Complex f3_match(const EndTimeContext& c, size_t k, size_t x, size_t y, size_t z) {
    return c.s_amp(x, k) * c.s_amp(y, k) * c.s_amp(z, k) + c.s_amp(x, k) * c.pair(y, z) +
           c.s_amp(y, k) * c.pair(x, z) + c.s_amp(z, k) * c.pair(x, y);
}
Complex f4_match(const EndTimeContext& c, size_t k, size_t w, size_t x, size_t y, size_t z) {
    const Complex sw = c.s_amp(w, k), sx = c.s_amp(x, k), sy = c.s_amp(y, k), sz = c.s_amp(z, k);
    return sw * sx * sy * sz + c.pair(w, x) * sy * sz + c.pair(w, y) * sx * sz +
           c.pair(w, z) * sx * sy + c.pair(x, y) * sw * sz + c.pair(x, z) * sw * sy +
           c.pair(y, z) * sw * sx + c.pair(w, x) * c.pair(y, z) + c.pair(w, y) * c.pair(x, z) +
           c.pair(w, z) * c.pair(x, y);
}

double trap_w(size_t j, size_t lo, size_t hi, double dt) {
    return (j == lo || j == hi) ? 0.5 * dt : dt;
}

Complex amp_term3(const EndTimeContext& c, const SeriesArrays& sa) {
    const double nth = c.nth;
    const Complex ig(0, c.p.g);
    Complex acc{};
    for (size_t k = 0; k + 1 <= c.M; ++k) {
        Complex outer{};
        for (size_t s1 = k; s1 <= c.M; ++s1) {
            Complex mid{};
            for (size_t s2 = s1; s2 <= c.M; ++s2) {
                const Complex f3 = f3_match(c, k, k, s1, s2);
                const Complex a3 =
                    f3 * ig * nth * c.Hpp[k] +
                    nth * (c.EpI[k] * f2_match(c, k, s1, s2) + c.EpI[s1] * f2_match(c, k, k, s2) +
                           c.EpI[s2] * f2_match(c, k, k, s1));
                const Complex b3 =
                    f3 * ig * (nth + 1.0) * c.Hpm[k] +
                    (nth + 1.0) * (c.EmI[k] * f2_match(c, k, s1, s2) +
                                   c.EmI[s1] * f2_match(c, k, k, s2) +
                                   c.EmI[s2] * f2_match(c, k, k, s1));
                mid += trap_w(s2, s1, c.M, c.dt) * c.gamma_c(s2, s1) *
                       (a3 * sa.tg0[s2] + b3 * sa.tg1[s2]);
            }
            outer += trap_w(s1, k, c.M, c.dt) * c.gamma_c(s1, k) * mid;
        }
        acc += c.w[k] * c.phi[k] * c.e0[k] * outer;
    }
    return ig * ig * ig * ig * acc;
}

Complex amp_term4(const EndTimeContext& c, const SeriesArrays& sa) {
    const double nth = c.nth;
    const Complex ig(0, c.p.g);
    Complex acc{};
    for (size_t k = 0; k + 1 <= c.M; ++k) {
        Complex outer{};
        for (size_t s1 = k; s1 <= c.M; ++s1) {
            Complex mid1{};
            for (size_t s2 = s1; s2 <= c.M; ++s2) {
                Complex mid2{};
                for (size_t s3 = s2; s3 <= c.M; ++s3) {
                    const Complex f4 = f4_match(c, k, k, s1, s2, s3);
                    const Complex a4 = f4 * ig * nth * c.Hpp[k] +
                                       nth * (c.EpI[k] * f3_match(c, k, s1, s2, s3) +
                                              c.EpI[s1] * f3_match(c, k, k, s2, s3) +
                                              c.EpI[s2] * f3_match(c, k, k, s1, s3) +
                                              c.EpI[s3] * f3_match(c, k, k, s1, s2));
                    const Complex b4 = f4 * ig * (nth + 1.0) * c.Hpm[k] +
                                       (nth + 1.0) * (c.EmI[k] * f3_match(c, k, s1, s2, s3) +
                                                      c.EmI[s1] * f3_match(c, k, k, s2, s3) +
                                                      c.EmI[s2] * f3_match(c, k, k, s1, s3) +
                                                      c.EmI[s3] * f3_match(c, k, k, s1, s2));
                    mid2 += trap_w(s3, s2, c.M, c.dt) * c.gamma_c(s3, s2) *
                            (a4 * sa.tg0[s3] + b4 * sa.tg1[s3]);
                }
                mid1 += trap_w(s2, s1, c.M, c.dt) * c.gamma_c(s2, s1) * mid2;
            }
            outer += trap_w(s1, k, c.M, c.dt) * c.gamma_c(s1, k) * mid1;
        }
        acc += c.w[k] * c.phi[k] * c.e0[k] * outer;
    }
    return ig * ig * ig * ig * ig * acc;
}

}  // namespace

std::vector<Complex> amplitude_series_terms(const EndTimeContext& ctx, int order) {
    std::vector<Complex> terms;
    terms.push_back(amp_term0(ctx));
    if (order >= 1) {
        const SeriesArrays sa(ctx);
        terms.push_back(amp_term1(ctx, sa));
        if (order >= 2) terms.push_back(amp_term2(ctx, sa));
        if (order >= 3) terms.push_back(amp_term3(ctx, sa));
        if (order >= 4) terms.push_back(amp_term4(ctx, sa));
    }
    return terms;
}

// ---------------------------------------------------------------------------
// photon-number quadratic term <J^dag J>

namespace {

/// Global arrays for the cross terms: conj-side chains of all families plus
/// the coupled-pairing prefix/product chains.
struct JJArrays {
    const EndTimeContext& c;
    const SeriesArrays& sa;
    std::array<ChainSfx, 8> chc;  // conj(gbar)-weighted family chains
    ComplexVec pf_mi0, pf_mi1, pf_pi0, pf_pi1;  // prefixes of gbar EmI / EpI chains
    // coupled-pairing product chains (sigma_L side)
    ChainSfx pc_less_mi0, pc_less_mi1, pc_less_pi0, pc_less_pi1;
    ChainSfx pc_geq_e0, pc_geq_e1, pc_geq_m0, pc_geq_m1;

    JJArrays(const EndTimeContext& ctx, const SeriesArrays& arrays) : c(ctx), sa(arrays) {
        for (int f = 0; f < 8; ++f) chc[f] = ChainSfx(c, hadamard(sa.gbar_conj, sa.fam[f]));
        const ChainSfx gb_mi(c, hadamard(c.gbar, sa.fam[5]));
        const ChainSfx gb_pi(c, hadamard(c.gbar, sa.fam[7]));
        pf_mi0 = prefix_plain(gb_mi.q0);
        pf_mi1 = prefix_plain(gb_mi.q1);
        pf_pi0 = prefix_plain(gb_pi.q0);
        pf_pi1 = prefix_plain(gb_pi.q1);
        // sigma_R < sigma_L region: conj(gbar) fam1/fam0 times the prefixes
        auto shrink = [](const ComplexVec& v) {  // drop the size-(n+1) tail entry
            return ComplexVec(v.begin(), v.end() - 1);
        };
        pc_less_mi0 = ChainSfx(c, hadamard3(sa.gbar_conj, sa.fam[1], shrink(pf_mi0)));
        pc_less_mi1 = ChainSfx(c, hadamard3(sa.gbar_conj, sa.fam[1], shrink(pf_mi1)));
        pc_less_pi0 = ChainSfx(c, hadamard3(sa.gbar_conj, sa.fam[0], shrink(pf_pi0)));
        pc_less_pi1 = ChainSfx(c, hadamard3(sa.gbar_conj, sa.fam[0], shrink(pf_pi1)));
        // sigma_R >= sigma_L region: conj(gbar) fam7/fam5 times gbar-chain suffixes
        auto head = [](const ComplexVec& v) { return ComplexVec(v.begin(), v.end() - 1); };
        pc_geq_e0 = ChainSfx(c, hadamard3(sa.gbar_conj, sa.fam[7], head(sa.ch_f0.s0)));
        pc_geq_e1 = ChainSfx(c, hadamard3(sa.gbar_conj, sa.fam[7], head(sa.ch_f0.s1)));
        pc_geq_m0 = ChainSfx(c, hadamard3(sa.gbar_conj, sa.fam[5], head(sa.ch_f1.s0)));
        pc_geq_m1 = ChainSfx(c, hadamard3(sa.gbar_conj, sa.fam[5], head(sa.ch_f1.s1)));
    }

    /// Plain Gamma_c(., k1)-weighted conj(gbar)-weighted sum of pair(sigma, y)
    /// over sigma in [a..b] (no endpoint halving).
    Complex pair_plain(size_t k1, size_t y, size_t a, size_t b) const {
        if (a > b) return Complex{};
        const double nth = c.nth;
        Complex out{};
        // sigma < y branch
        if (a < y) {
            const size_t hi = std::min(b, y - 1);
            out += nth * c.Ep[y] * chc[7].plain(c, k1, a, hi) +
                   (nth + 1.0) * c.Em[y] * chc[5].plain(c, k1, a, hi);
        }
        // sigma >= y branch
        if (b >= y) {
            const size_t lo = std::max(a, y);
            out += nth * c.EmI[y] * chc[1].plain(c, k1, lo, b) +
                   (nth + 1.0) * c.EpI[y] * chc[0].plain(c, k1, lo, b);
        }
        return out;
    }
};

/// tau_1-anchored kernels with the branch at sigma = k1 baked in per node.
struct PerK1 {
    ComplexVec wk1, pk1r, vk1, pk1l;
    ChainSfx chW, chPr;    // gbar-weighted right chains
    ChainSfx chVc, chPlc;  // conj(gbar)-weighted left chains (full rule)
    ComplexVec tgw, tgp;

    PerK1(const EndTimeContext& c, const SeriesArrays& sa, size_t k1, bool with_cross) {
        const size_t n = c.M + 1;
        wk1.resize(n);
        pk1r.resize(n);
        vk1.resize(n);
        pk1l.resize(n);
        for (size_t s = 0; s < n; ++s) {
            wk1[s] = c.w_int(s, k1);
            pk1r[s] = c.pair(k1, s);
            vk1[s] = c.v_int(s, k1);
            pk1l[s] = c.pair(s, k1);
        }
        chW = ChainSfx(c, hadamard(c.gbar, wk1));
        chPr = ChainSfx(c, hadamard(c.gbar, pk1r));
        tgw.resize(n);
        tgp.resize(n);
        for (size_t j = 0; j < n; ++j) {
            tgw[j] = chW.tg(j);
            tgp[j] = chPr.tg(j);
        }
        if (!with_cross) return;
        chVc = ChainSfx(c, hadamard(sa.gbar_conj, vk1));
        chPlc = ChainSfx(c, hadamard(sa.gbar_conj, pk1l));
    }
};

struct PairBasics {
    Complex sL1, sR2, p12, c00;
};

PairBasics pair_basics(const EndTimeContext& c, const PerK1& pk, size_t k1, size_t k2) {
    PairBasics pb;
    const Complex ig(0, c.p.g);
    pb.sL1 = ig * (c.v_int(k1, k2) - pk.vk1[k1]);
    pb.sR2 = ig * (c.w_int(k2, k2) - pk.wk1[k2]);
    pb.p12 = c.pair(k1, k2);
    pb.c00 = pb.sL1 * pb.sR2 + pb.p12;
    return pb;
}

}  // namespace

double jj_value(const EndTimeContext& ctx, int side_order) {
    const size_t n = ctx.M + 1;
    const size_t M = ctx.M;
    const double g = ctx.p.g;
    const Complex ig(0, g);
    const double nth = ctx.nth;
    const double dt = ctx.dt;
    if (n < 2 || g == 0.0 || ctx.p.drive_E == 0.0) return 0.0;

    const SeriesArrays sa(ctx);
    const JJArrays jj(ctx, sa);

    std::vector<double> partial(n, 0.0);
    parallel_for(n, 0, [&](std::size_t k1) {
        double local = 0.0;
        const PerK1 pk(ctx, sa, k1, side_order >= 1);

        // (1,1) left-side per-k1 constants
        Complex lsB{}, laK{};
        if (side_order >= 1 && k1 < M) {
            lsB = ctx.einv[k1] * pk.chVc.ts(0, k1) - ctx.ec2[k1] * pk.chVc.ts(1, k1);
            laK = ctx.einv[k1] * pk.chPlc.ts(0, k1) - ctx.ec2[k1] * pk.chPlc.ts(1, k1);
        }

        for (size_t k2 = 0; k2 < n; ++k2) {
            const PairBasics pb = pair_basics(ctx, pk, k1, k2);
            const Complex front = ctx.w[k1] * ctx.w[k2] * std::conj(ctx.phi[k1]) * ctx.phi[k2] *
                                  ctx.e2(k1, k2) * std::conj(ctx.gbar[k1]);

            if (k2 >= k1) {
                const Complex val = front * ctx.gbar[k2] * pb.c00;
                local += (k2 == k1) ? std::real(val) : 2.0 * std::real(val);
            }
            if (side_order < 1) continue;

            const Complex s_c0 = ig * nth * ctx.Hpp[k2];
            const Complex s_c1 = ig * (nth + 1.0) * ctx.Hpm[k2];
            const Complex p_c0 = nth * ctx.EpI[k2];
            const Complex p_c1 = (nth + 1.0) * ctx.EmI[k2];
            const Complex rs = s_c0 * sa.tg0[k2] + s_c1 * sa.tg1[k2] - ig * pk.tgw[k2];
            const Complex ra = pk.tgp[k2];
            const Complex rb = p_c0 * sa.tg0[k2] + p_c1 * sa.tg1[k2];

            {  // (0,1) + (1,0)
                const Complex inner01 = pb.c00 * rs + pb.sL1 * rb + pb.sR2 * ra;
                local += 2.0 * std::real(front * ig * inner01);
            }
            if (k2 >= k1 && k1 < M && k2 < M) {  // (1,1)
                // pointwise integrand helpers at sigma_L
                auto tl_weightless = [&](size_t sl) {
                    return ctx.gamma_c(sl, k1) * sa.gbar_conj[sl];
                };
                // left singles
                Complex ls{}, lb{};
                {
                    // plain sum of Gamma_c conj(gbar) V(sigma_L, k2) over [k1..M]
                    Complex pl{};
                    if (k1 < k2) {  // sigma_L < k2 branch
                        const size_t hi = std::min(M, k2 - 1);
                        pl += nth * (jj.chc[3].plain(ctx, k1, k1, hi) +
                                     ctx.Hmp[k2] * jj.chc[7].plain(ctx, k1, k1, hi) -
                                     jj.chc[6].plain(ctx, k1, k1, hi)) +
                              (nth + 1.0) * (jj.chc[2].plain(ctx, k1, k1, hi) +
                                             ctx.Hmm[k2] * jj.chc[5].plain(ctx, k1, k1, hi) -
                                             jj.chc[4].plain(ctx, k1, k1, hi));
                    }
                    const size_t lo = std::max(k1, k2);
                    pl += nth * ctx.Hpm[k2] * jj.chc[1].plain(ctx, k1, lo, M) +
                          (nth + 1.0) * ctx.Hpp[k2] * jj.chc[0].plain(ctx, k1, lo, M);
                    pl = dt * pl - 0.5 * dt * tl_weightless(k1) * ctx.v_int(k1, k2) -
                         0.5 * dt * tl_weightless(M) * ctx.v_int(M, k2);
                    ls = ig * (pl - lsB);
                }
                {
                    Complex pl = jj.pair_plain(k1, k2, k1, M);
                    pl = dt * pl - 0.5 * dt * tl_weightless(k1) * ctx.pair(k1, k2) -
                         0.5 * dt * tl_weightless(M) * ctx.pair(M, k2);
                    lb = pl;
                }
                const Complex la = laK;

                // coupled pairing CC
                auto less_pt = [&](size_t sl) {
                    if (sl <= k2) return Complex{};
                    const Complex pmi = ctx.einv[k2] * (jj.pf_mi0[sl] - jj.pf_mi0[k2]) -
                                        ctx.ec2[k2] * (jj.pf_mi1[sl] - jj.pf_mi1[k2]);
                    const Complex ppi = ctx.einv[k2] * (jj.pf_pi0[sl] - jj.pf_pi0[k2]) -
                                        ctx.ec2[k2] * (jj.pf_pi1[sl] - jj.pf_pi1[k2]);
                    Complex v = dt * (nth * ctx.Em[sl] * pmi + (nth + 1.0) * ctx.Ep[sl] * ppi);
                    v -= 0.5 * dt * ctx.gamma_c(k2, k2) * ctx.gbar[k2] * ctx.pair(sl, k2);
                    return v;
                };
                auto geq_pt = [&](size_t sl) {
                    const size_t lo = std::max(sl, k2);
                    const Complex sfe = ctx.einv[k2] * sa.ch_f0.s0[lo] -
                                        ctx.ec2[k2] * sa.ch_f0.s1[lo];
                    const Complex sfm = ctx.einv[k2] * sa.ch_f1.s0[lo] -
                                        ctx.ec2[k2] * sa.ch_f1.s1[lo];
                    Complex v = dt * (nth * ctx.EpI[sl] * sfe + (nth + 1.0) * ctx.EmI[sl] * sfm);
                    v -= 0.5 * dt * ctx.gamma_c(M, k2) * ctx.gbar[M] * ctx.pair(sl, M);
                    if (lo == k2)
                        v -= 0.5 * dt * ctx.gamma_c(k2, k2) * ctx.gbar[k2] * ctx.pair(sl, k2);
                    return v;
                };
                Complex cc{};
                {
                    Complex pl{};
                    // less part over sigma_L in [k2+1 .. M]
                    if (k2 + 1 <= M) {
                        const size_t a = k2 + 1;
                        pl += nth * (ctx.einv[k2] * jj.pc_less_mi0.plain(ctx, k1, a, M) -
                                     ctx.ec2[k2] * jj.pc_less_mi1.plain(ctx, k1, a, M)) +
                              (nth + 1.0) * (ctx.einv[k2] * jj.pc_less_pi0.plain(ctx, k1, a, M) -
                                             ctx.ec2[k2] * jj.pc_less_pi1.plain(ctx, k1, a, M));
                        pl -= nth * (ctx.einv[k2] * jj.pf_mi0[k2] - ctx.ec2[k2] * jj.pf_mi1[k2]) *
                              jj.chc[1].plain(ctx, k1, a, M);
                        pl -= (nth + 1.0) *
                              (ctx.einv[k2] * jj.pf_pi0[k2] - ctx.ec2[k2] * jj.pf_pi1[k2]) *
                              jj.chc[0].plain(ctx, k1, a, M);
                        pl -= 0.5 * ctx.gamma_c(k2, k2) * ctx.gbar[k2] *
                              jj.pair_plain(k1, k2, a, M);
                    }
                    // geq part, sigma_L > k2
                    if (k2 + 1 <= M) {
                        const size_t a = k2 + 1;
                        pl += nth * (ctx.einv[k2] * jj.pc_geq_e0.plain(ctx, k1, a, M) -
                                     ctx.ec2[k2] * jj.pc_geq_e1.plain(ctx, k1, a, M)) +
                              (nth + 1.0) * (ctx.einv[k2] * jj.pc_geq_m0.plain(ctx, k1, a, M) -
                                             ctx.ec2[k2] * jj.pc_geq_m1.plain(ctx, k1, a, M));
                    }
                    // geq part, sigma_L <= k2 (suffix anchored at k2)
                    {
                        const size_t b = std::min(k2, M);
                        const Complex sfe = ctx.einv[k2] * sa.ch_f0.s0[k2] -
                                            ctx.ec2[k2] * sa.ch_f0.s1[k2];
                        const Complex sfm = ctx.einv[k2] * sa.ch_f1.s0[k2] -
                                            ctx.ec2[k2] * sa.ch_f1.s1[k2];
                        pl += nth * sfe * jj.chc[7].plain(ctx, k1, k1, b) +
                              (nth + 1.0) * sfm * jj.chc[5].plain(ctx, k1, k1, b);
                        pl -= 0.5 * ctx.gamma_c(k2, k2) * ctx.gbar[k2] *
                              jj.pair_plain(k1, k2, k1, b);
                    }
                    // geq M-endpoint half over the whole sigma_L range
                    pl -= 0.5 * ctx.gamma_c(M, k2) * ctx.gbar[M] * jj.pair_plain(k1, M, k1, M);
                    cc = dt * dt * pl;
                    cc -= 0.5 * dt * tl_weightless(k1) * (less_pt(k1) + geq_pt(k1));
                    cc -= 0.5 * dt * tl_weightless(M) * (less_pt(M) + geq_pt(M));
                }

                const Complex inner11 = ls * (pb.c00 * rs + ra * pb.sR2 + rb * pb.sL1) +
                                        la * (pb.sR2 * rs + rb) + lb * (pb.sL1 * rs + ra) +
                                        cc * pb.c00;
                const Complex val = ctx.w[k1] * ctx.w[k2] * std::conj(ctx.phi[k1]) * ctx.phi[k2] *
                                    ctx.e2(k1, k2) * (g * g) * inner11;
                local += (k2 == k1) ? std::real(val) : 2.0 * std::real(val);
            }
        }
        partial[k1] = local;
    });

    double total = 0.0;
    for (double v : partial) total += v;
    return g * g * total;
}

}  // namespace omx::detail

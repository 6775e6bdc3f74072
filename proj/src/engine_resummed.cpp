#include "engine_resummed.hpp"

#include <cmath>

#include "parallel.hpp"

namespace omx::detail {

namespace {

using std::size_t;

RealVec prefix_trap(const RealVec& f, double dt) {
    RealVec out(f.size(), 0.0);
    for (size_t k = 1; k < f.size(); ++k) out[k] = out[k - 1] + 0.5 * dt * (f[k - 1] + f[k]);
    return out;
}

}  // namespace

ResumArrays::ResumArrays(const EndTimeContext& ctx) : c(ctx) {
    const size_t n = c.M + 1;
    const double dt = c.dt;
    const double gam = c.p.gamma_m;
    const double om = c.p.omega_m;

    egm.resize(n);
    for (size_t k = 0; k < n; ++k) egm[k] = 1.0 / c.egp[k];

    for (auto& v : fam) v.resize(n);
    for (size_t k = 0; k < n; ++k) {
        const double s = std::sin(om * c.tau[k]), co = std::cos(om * c.tau[k]);
        fam[0][k] = c.fa[k];
        fam[1][k] = c.fb[k];
        fam[2][k] = c.epos[k] * s;
        fam[3][k] = c.ec2[k] * s;
        fam[4][k] = c.epos[k] * co;
        fam[5][k] = c.ec2[k] * co;
    }

    const double damp = std::exp(-0.5 * gam * dt);
    for (int f = 0; f < 6; ++f) {
        RealVec wp(n), wm(n);
        for (size_t k = 0; k < n; ++k) {
            wp[k] = fam[f][k] * c.egp[k];
            wm[k] = fam[f][k] * egm[k];
        }
        Fp[f] = prefix_trap(wp, dt);
        Fm[f] = prefix_trap(wm, dt);
        I[f].assign(n, 0.0);
        for (size_t k = 1; k < n; ++k)
            I[f][k] = damp * I[f][k - 1] + 0.5 * dt * (damp * fam[f][k - 1] + fam[f][k]);
        J[f].assign(n, 0.0);
        for (size_t k = n - 1; k-- > 0;)
            J[f][k] = damp * J[f][k + 1] + 0.5 * dt * (fam[f][k] + damp * fam[f][k + 1]);
    }

    for (int fi = 2; fi < 6; ++fi) {
        for (int fj = fi; fj < 6; ++fj) {
            RealVec s(n, 0.0);
            for (size_t k = n - 1; k-- > 0;) {
                const double qk = fam[fi][k] * J[fj][k] + fam[fj][k] * J[fi][k];
                const double qk1 = fam[fi][k + 1] * J[fj][k + 1] + fam[fj][k + 1] * J[fi][k + 1];
                s[k] = s[k + 1] + 0.5 * dt * (qk + qk1);
            }
            Ssuf[fi][fj] = s;
            if (fj != fi) Ssuf[fj][fi] = Ssuf[fi][fj];
        }
    }

    for (int f01 = 0; f01 < 2; ++f01) {
        for (int g = 2; g < 6; ++g) {
            RealVec qj(n), qi(n);
            for (size_t k = 0; k < n; ++k) {
                qj[k] = fam[f01][k] * J[g][k];
                qi[k] = fam[f01][k] * I[g][k];
            }
            FJ[f01][g] = prefix_trap(qj, dt);
            FI[f01][g] = prefix_trap(qi, dt);
        }
    }

    // Theta'(tau): nested quadrature with the Gamma_c(., tau)-weighted kernels
    theta_p.assign(n, 0.0);
    for (size_t j = 0; j + 1 < n; ++j) {
        const double ci = c.einv[j], cd = c.ec2[j];
        double inner = 0.0;
        double f_prev = ci * fam[4][j] - cd * fam[5][j];
        double g_prev = 0.0;
        double acc = 0.0;
        for (size_t k = j + 1; k < n; ++k) {
            const double fcur = ci * fam[4][k] - cd * fam[5][k];
            inner = damp * inner + 0.5 * dt * (damp * f_prev + fcur);
            f_prev = fcur;
            const double gcur = (ci * fam[2][k] - cd * fam[3][k]) * inner;
            acc += 0.5 * dt * (g_prev + gcur);
            g_prev = gcur;
        }
        theta_p[j] = 2.0 * acc;
    }
}

double ResumArrays::contract(int fi, size_t x, int fj, size_t y) const {
    const size_t m = c.M;
    if (fi < 2 && fj < 2) {
        if (fi == 0 && fj == 0) return c.r_aa(x, y);
        if (fi == 1 && fj == 1) return c.r_bb(x, y);
        return fi == 0 ? c.r_ab(x, y) : c.r_ab(y, x);
    }
    if (fi < 2 && fj >= 2) {
        // prefix range [0,x] against suffix range [y,t]
        if (x <= y) return I[fi][x] * (egm[y] * c.egp[x]) * J[fj][y];
        return I[fi][y] * J[fj][y] + (FJ[fi][fj][x] - FJ[fi][fj][y]) +
               (FI[fi][fj][x] - FI[fi][fj][y]) -
               I[fj][y] * c.egp[y] * (Fm[fi][x] - Fm[fi][y]);
    }
    if (fi >= 2 && fj < 2) return contract(fj, y, fi, x);
    // both suffix ranges
    if (x <= y) return (I[fi][y] - (egm[y] * c.egp[x]) * I[fi][x]) * J[fj][y] + Ssuf[fi][fj][y];
    return (I[fj][x] - (egm[x] * c.egp[y]) * I[fj][y]) * J[fi][x] + Ssuf[fi][fj][x];
    (void)m;
}

double ResumArrays::point_contract(int f, size_t x, size_t sigma) const {
    const size_t m = c.M;
    if (f < 2) {  // range [0, x]
        if (sigma >= x) return egm[sigma] * Fp[f][x];
        return egm[sigma] * Fp[f][sigma] + c.egp[sigma] * (Fm[f][x] - Fm[f][sigma]);
    }
    // range [x, t]
    if (sigma <= x) return c.egp[sigma] * (Fm[f][m] - Fm[f][x]);
    return egm[sigma] * (Fp[f][sigma] - Fp[f][x]) + c.egp[sigma] * (Fm[f][m] - Fm[f][sigma]);
}

namespace {

struct ExpForm {
    Complex factor;  // +- i g
    bool op_p = false;
    int n_atoms = 1;
    double coef[2] = {1.0, 0.0};
    int f[2] = {0, 0};
    size_t x = 0;
};

ExpForm unprimed(const EndTimeContext& c, size_t node, bool op_p, bool conj) {
    ExpForm e;
    e.factor = Complex(0, conj ? -c.p.g : c.p.g);
    e.op_p = op_p;
    e.n_atoms = 1;
    e.coef[0] = 1.0;
    e.f[0] = op_p ? 0 : 1;
    e.x = node;
    return e;
}

ExpForm primed(const EndTimeContext& c, size_t node, bool op_p, bool conj) {
    ExpForm e;
    e.factor = Complex(0, conj ? -c.p.g : c.p.g);
    e.op_p = op_p;
    e.n_atoms = 2;
    e.coef[0] = c.einv[node];
    e.coef[1] = -c.ec2[node];
    e.f[0] = op_p ? 2 : 4;
    e.f[1] = op_p ? 3 : 5;
    e.x = node;
    return e;
}

/// ordered second moment of two quadrature exponents
Complex moment(const ResumArrays& ra, double nth, const ExpForm& a, const ExpForm& b) {
    double sum = 0.0;
    for (int i = 0; i < a.n_atoms; ++i)
        for (int j = 0; j < b.n_atoms; ++j)
            sum += a.coef[i] * b.coef[j] * ra.contract(a.f[i], a.x, b.f[j], b.x);
    Complex op_coef;
    if (a.op_p == b.op_p)
        op_coef = 2.0 * nth + 1.0;
    else
        op_coef = a.op_p ? Complex(0, -1) : Complex(0, 1);  // <P X> = -iG, <X P> = +iG
    return a.factor * b.factor * op_coef * sum;
}

/// <L K(sigma)> (left = true) or <K(sigma) L>
Complex singleton(const ResumArrays& ra, double nth, const ExpForm& e, size_t sigma, bool left) {
    const double om = ra.c.p.omega_m;
    const double cs = std::cos(om * ra.c.tau[sigma]), sn = std::sin(om * ra.c.tau[sigma]);
    Complex trig;
    if (e.op_p)
        trig = Complex((2.0 * nth + 1.0) * sn, left ? -cs : cs);
    else
        trig = Complex((2.0 * nth + 1.0) * cs, left ? sn : -sn);
    double sum = 0.0;
    for (int i = 0; i < e.n_atoms; ++i)
        sum += e.coef[i] * ra.point_contract(e.f[i], e.x, sigma);
    return e.factor * trig * sum;
}

struct SideForms {
    ExpForm a, b, ap, bp;  // A, B, A', B' for one anchor
};

SideForms side_forms(const EndTimeContext& c, size_t node, bool conj) {
    return SideForms{unprimed(c, node, true, conj), unprimed(c, node, false, conj),
                     primed(c, node, true, conj), primed(c, node, false, conj)};
}

/// within-side log of the four-exponent ordered product <e^A e^B e^A' e^B'>
Complex side_log(const ResumArrays& ra, double nth, const SideForms& s) {
    const ExpForm* list[4] = {&s.a, &s.b, &s.ap, &s.bp};
    Complex sum{};
    for (int i = 0; i < 4; ++i) {
        sum += 0.5 * moment(ra, nth, *list[i], *list[i]);
        for (int j = i + 1; j < 4; ++j) sum += moment(ra, nth, *list[i], *list[j]);
    }
    return sum;
}

/// insertion singleton for K(node) against its own side's exponents
Complex side_singleton(const ResumArrays& ra, double nth, const SideForms& s, size_t node) {
    return singleton(ra, nth, s.a, node, true) + singleton(ra, nth, s.b, node, true) +
           singleton(ra, nth, s.ap, node, false) + singleton(ra, nth, s.bp, node, false);
}

}  // namespace

Complex resummed_amplitude_correction(const EndTimeContext& ctx, const ResumArrays& ra) {
    const double nth = ctx.nth;
    const double g2 = ctx.p.g * ctx.p.g;
    Complex acc{};
    for (size_t k = 0; k <= ctx.M; ++k) {
        if (ctx.w[k] == 0.0) continue;
        const SideForms side = side_forms(ctx, k, false);
        const Complex e4 = std::exp(side_log(ra, nth, side) + Complex(0, -g2 * ra.theta_p[k]));
        acc += ctx.w[k] * ctx.phi[k] * e4 * side_singleton(ra, nth, side, k) * ctx.gbar[k];
    }
    return Complex(0, ctx.p.g) * acc;
}

namespace {

struct JJState {
    ComplexVec slog, ssing, weight;
    std::vector<SideForms> sides, conj_sides;
};

JJState build_jj_state(const EndTimeContext& ctx, const ResumArrays& ra) {
    const size_t n = ctx.M + 1;
    const double nth = ctx.nth;
    const double g = ctx.p.g;
    JJState st;
    st.slog.resize(n);
    st.ssing.resize(n);
    st.weight.resize(n);
    st.sides.resize(n);
    st.conj_sides.resize(n);
    for (size_t k = 0; k < n; ++k) {
        st.sides[k] = side_forms(ctx, k, false);
        st.conj_sides[k] = side_forms(ctx, k, true);
        st.slog[k] = side_log(ra, nth, st.sides[k]);
        st.ssing[k] = side_singleton(ra, nth, st.sides[k], k);
        st.weight[k] = ctx.w[k] * ctx.phi[k] * std::exp(Complex(0, -g * g * ra.theta_p[k])) *
                       ctx.gbar[k];
    }
    return st;
}

Complex jj_summand(const EndTimeContext& ctx, const ResumArrays& ra, const JJState& st,
                   size_t k1, size_t k2) {
    const double nth = ctx.nth;
    const SideForms& left = st.conj_sides[k1];
    const SideForms& right = st.sides[k2];
    // written order of the conjugated side: B'+, A'+, B+, A+
    const ExpForm* lhs[4] = {&left.bp, &left.ap, &left.b, &left.a};
    const ExpForm* rhs[4] = {&right.a, &right.b, &right.ap, &right.bp};
    Complex cross{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) cross += moment(ra, nth, *lhs[i], *rhs[j]);
    const Complex e8 = std::exp(std::conj(st.slog[k1]) + st.slog[k2] + cross);
    Complex s1 = std::conj(st.ssing[k1]);
    for (int j = 0; j < 4; ++j) s1 += singleton(ra, nth, *rhs[j], k1, false);
    Complex s2 = st.ssing[k2];
    for (int i = 0; i < 4; ++i) s2 += singleton(ra, nth, *lhs[i], k2, true);
    return std::conj(st.weight[k1]) * st.weight[k2] * e8 * (s1 * s2 + ctx.pair(k1, k2));
}

}  // namespace

Complex resummed_jj_summand(const EndTimeContext& ctx, const ResumArrays& ra, std::size_t k1,
                            std::size_t k2) {
    const JJState st = build_jj_state(ctx, ra);
    return jj_summand(ctx, ra, st, k1, k2);
}

double resummed_jj(const EndTimeContext& ctx, const ResumArrays& ra) {
    const size_t n = ctx.M + 1;
    const double g = ctx.p.g;
    if (n < 2 || g == 0.0 || ctx.p.drive_E == 0.0) return 0.0;

    const JJState st = build_jj_state(ctx, ra);
    std::vector<double> partial(n, 0.0);
    parallel_for(n, 0, [&](std::size_t k1) {
        if (st.weight[k1] == Complex{}) {
            partial[k1] = 0.0;
            return;
        }
        double local = 0.0;
        for (size_t k2 = k1; k2 < n; ++k2) {
            if (st.weight[k2] == Complex{}) continue;
            const Complex val = jj_summand(ctx, ra, st, k1, k2);
            local += (k2 == k1) ? std::real(val) : 2.0 * std::real(val);
        }
        partial[k1] = local;
    });

    double total = 0.0;
    for (double v : partial) total += v;
    return g * g * total;
}

}  // namespace omx::detail

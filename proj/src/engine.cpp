#include "omx/engine.hpp"

#include <cmath>
#include <iostream>
#include <mutex>

#include "engine_context.hpp"
#include "engine_resummed.hpp"
#include "engine_series.hpp"
#include "omx/correlators.hpp"
#include "parallel.hpp"

namespace omx {

using detail::EndTimeContext;

NoiseMode NoiseMode::neumann(int order) {
    if (order < 1 || order > 4)
        throw ConfigError("noise mode: series order must be in [1, 4]");
    return {Kind::neumann, order};
}

NoiseMode NoiseMode::parse(const std::string& name, int order) {
    if (name == "pure_drive") return pure_drive();
    if (name == "gamma_c_zero") return gamma_c_zero();
    if (name == "full") return full();
    if (name == "neumann") return neumann(order);
    throw ConfigError("noise mode: unknown mode '" + name + "'");
}

std::string NoiseMode::name() const {
    switch (kind) {
        case Kind::pure_drive: return "pure_drive";
        case Kind::gamma_c_zero: return "gamma_c_zero";
        case Kind::full: return "full";
        case Kind::neumann: return "neumann";
    }
    return "?";
}

ObservableKind parse_observable(const std::string& name) {
    if (name == "Xc") return ObservableKind::xc;
    if (name == "nP") return ObservableKind::np;
    if (name == "Xm") return ObservableKind::xm;
    if (name == "Pm") return ObservableKind::pm;
    if (name == "amp_re") return ObservableKind::amp_re;
    if (name == "amp_im") return ObservableKind::amp_im;
    throw ConfigError("unknown observable '" + name + "'");
}

std::string observable_name(ObservableKind kind) {
    switch (kind) {
        case ObservableKind::xc: return "Xc";
        case ObservableKind::np: return "nP";
        case ObservableKind::xm: return "Xm";
        case ObservableKind::pm: return "Pm";
        case ObservableKind::amp_re: return "amp_re";
        case ObservableKind::amp_im: return "amp_im";
    }
    return "?";
}

namespace detail {

EndTimeContext::EndTimeContext(const SystemParams& params, const TimeGrid& grid,
                               std::size_t end_node, bool with_d2)
    : p(params) {
    if (end_node >= grid.node_count())
        throw GridMismatchError("engine: end node outside grid");
    M = end_node;
    dt = grid.dt;
    t = grid.nodes[M];
    nth = p.n_th;
    const double gam = p.gamma_m, om = p.omega_m, kap = p.kappa;
    lam_p = Complex(0.5 * gam, om);
    lam_m = Complex(0.5 * gam, -om);

    const std::size_t n = M + 1;
    tau.assign(grid.nodes.begin(), grid.nodes.begin() + static_cast<long>(n));
    w.assign(n, dt);
    w.front() *= 0.5;
    w.back() *= 0.5;
    if (n == 1) w[0] = 0.0;

    h.resize(n);
    ec2.resize(n);
    fa.resize(n);
    fb.resize(n);
    epos.resize(n);
    einv.resize(n);
    Ep.resize(n);
    Em.resize(n);
    EpI.resize(n);
    EmI.resize(n);
    egp.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double u = tau[k];
        ec2[k] = std::exp(-0.5 * kap * (t - u));
        h[k] = ec2[k] * ec2[k];
        fa[k] = h[k] * std::sin(om * u);
        fb[k] = h[k] * std::cos(om * u);
        epos[k] = std::exp(-0.5 * kap * u);
        einv[k] = 1.0 / epos[k];
        Ep[k] = std::exp(-lam_p * u);
        Em[k] = std::exp(-lam_m * u);
        EpI[k] = 1.0 / Ep[k];
        EmI[k] = 1.0 / Em[k];
        egp[k] = std::exp(0.5 * gam * u);
    }

    theta = theta_series(t, p, grid, M);
    phi.resize(n);
    const double g2 = p.g * p.g;
    for (std::size_t k = 0; k < n; ++k)
        phi[k] = std::exp(Complex(0.0, -g2 * theta[k])) * ec2[k];

    const DriveKernels dk = DriveKernels::build(p, grid, M, with_d2);
    d1 = dk.d1;
    d2 = dk.d2;
    gbar = dk.gbar;

    // damped accumulators and square integrals for the exponent moments
    Ia.assign(n, 0.0);
    Ib.assign(n, 0.0);
    Saa.assign(n, 0.0);
    Sab.assign(n, 0.0);
    Sbb.assign(n, 0.0);
    Fm_a.assign(n, 0.0);
    Fm_b.assign(n, 0.0);
    const double damp = std::exp(-0.5 * gam * dt);
    for (std::size_t k = 1; k < n; ++k) {
        Ia[k] = damp * Ia[k - 1] + 0.5 * dt * (damp * fa[k - 1] + fa[k]);
        Ib[k] = damp * Ib[k - 1] + 0.5 * dt * (damp * fb[k - 1] + fb[k]);
        auto sq_step = [&](const RealVec& f, const RealVec& g, const RealVec& i_f,
                           const RealVec& i_g, std::size_t j) {
            return f[j] * i_g[j] + g[j] * i_f[j];
        };
        Saa[k] = Saa[k - 1] + 0.5 * dt * (sq_step(fa, fa, Ia, Ia, k - 1) + sq_step(fa, fa, Ia, Ia, k));
        Sab[k] = Sab[k - 1] + 0.5 * dt * (sq_step(fa, fb, Ia, Ib, k - 1) + sq_step(fa, fb, Ia, Ib, k));
        Sbb[k] = Sbb[k - 1] + 0.5 * dt * (sq_step(fb, fb, Ib, Ib, k - 1) + sq_step(fb, fb, Ib, Ib, k));
        const double em = std::exp(-0.5 * gam * tau[k]);
        const double em0 = std::exp(-0.5 * gam * tau[k - 1]);
        Fm_a[k] = Fm_a[k - 1] + 0.5 * dt * (fa[k - 1] * em0 + fa[k] * em);
        Fm_b[k] = Fm_b[k - 1] + 0.5 * dt * (fb[k - 1] * em0 + fb[k] * em);
    }

    e0.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double re = -0.5 * g2 * (2.0 * nth + 1.0) * (Saa[k] + Sbb[k]);
        e0[k] = std::exp(Complex(re, g2 * Sab[k]));
    }

    ComplexVec hpp(n), hpm(n), hmp(n), hmm(n);
    for (std::size_t k = 0; k < n; ++k) {
        hpp[k] = h[k] * EpI[k];
        hpm[k] = h[k] * EmI[k];
        hmp[k] = h[k] * Ep[k];
        hmm[k] = h[k] * Em[k];
    }
    Hpp = prefix_trapezoid(hpp, dt);
    Hpm = prefix_trapezoid(hpm, dt);
    Hmp = prefix_trapezoid(hmp, dt);
    Hmm = prefix_trapezoid(hmm, dt);
}

}  // namespace detail

namespace {

void check_engine_support(const SystemParams& p, double t_end) {
    p.validate();
    if (std::max(p.kappa, p.gamma_m) * t_end > 600.0)
        throw ConfigError("engine: rate * t_end beyond supported range (600)");
    if (p.gamma_m > 2.0 * p.kappa)
        throw ConfigError("engine: gamma_m above 2 kappa is outside the supported regime");
}

void warn_once(const std::string& key, const std::string& message) {
    static std::mutex mu;
    static std::vector<std::string> seen;
    std::lock_guard<std::mutex> lock(mu);
    for (const auto& s : seen)
        if (s == key) return;
    seen.push_back(key);
    std::cerr << "omx: warning: " << message << "\n";
}

}  // namespace

Evaluator::Evaluator(const SystemParams& params, const TimeGrid& grid)
    : params_(params), grid_(grid) {
    check_engine_support(params_, grid_.t_end);
    if (params_.drive_E > 0.1 * params_.kappa)
        warn_once("weak_drive", "E/kappa above 0.1; the weak-drive closed forms degrade");
}

AmplitudeBreakdown Evaluator::cavity_amplitude_breakdown(std::size_t node,
                                                         const NoiseMode& mode) const {
    AmplitudeBreakdown out;
    if (mode.kind == NoiseMode::Kind::pure_drive) {
        out.d1 = d1_value(grid_.nodes[node], grid_.nodes[node], params_);
        return out;
    }
    const bool with_d2 = mode.kind == NoiseMode::Kind::full;
    const EndTimeContext ctx(params_, grid_, node, with_d2);
    out.d1 = ctx.d1[node];
    if (mode.kind == NoiseMode::Kind::full) {
        const detail::ResumArrays ra(ctx);
        out.correction = detail::resummed_amplitude_correction(ctx, ra);
        out.series_term_magnitudes.push_back(std::abs(out.correction));
        return out;
    }
    const int order = mode.kind == NoiseMode::Kind::neumann ? mode.order : 0;
    const std::vector<Complex> terms = detail::amplitude_series_terms(ctx, order);
    out.series_term_magnitudes.reserve(terms.size());
    for (const auto& term : terms) {
        out.correction += term;
        out.series_term_magnitudes.push_back(std::abs(term));
    }
    if (order == 4) {
        const double total = std::abs(out.d1 + out.correction);
        if (out.series_term_magnitudes.back() > 1e-3 * total)
            throw NumericalError("engine: iterated-drive series not converged at order 4");
    }
    return out;
}

Complex Evaluator::cavity_amplitude(std::size_t node, const NoiseMode& mode) const {
    return cavity_amplitude_breakdown(node, mode).value();
}

double Evaluator::cavity_quadrature(std::size_t node, const NoiseMode& mode) const {
    return std::sqrt(2.0) * std::real(cavity_amplitude(node, mode));
}

double Evaluator::photon_number(std::size_t node, const NoiseMode& mode) const {
    const double t = grid_.nodes[node];
    if (mode.kind == NoiseMode::Kind::pure_drive) {
        const Complex d1 = d1_value(t, t, params_);
        return std::norm(d1);
    }
    const bool with_d2 = mode.kind == NoiseMode::Kind::full;
    const EndTimeContext ctx(params_, grid_, node, with_d2);
    const Complex d1 = ctx.d1[node];
    Complex correction{};
    double quad = 0.0;
    if (mode.kind == NoiseMode::Kind::full) {
        const detail::ResumArrays ra(ctx);
        correction = detail::resummed_amplitude_correction(ctx, ra);
        quad = detail::resummed_jj(ctx, ra);
    } else {
        // The quadratic term averages the product of the truncated correction
        // operator with its conjugate. Truncating the operator per side
        // (rather than by total order) keeps n_P an expectation of a positive
        // operator; the implemented cross terms support side order <= 1.
        const int side_order =
            mode.kind == NoiseMode::Kind::neumann ? std::min(mode.order, 1) : 0;
        for (const auto& term : detail::amplitude_series_terms(ctx, side_order))
            correction += term;
        quad = detail::jj_value(ctx, side_order);
    }
    const double np = std::norm(d1) + 2.0 * std::real(std::conj(d1) * correction) + quad;
    if (np < -1e-8)
        throw NumericalError("engine: photon number negative beyond tolerance: " +
                             std::to_string(np));
    return np;
}

std::pair<double, double> Evaluator::mechanical_quadratures(std::size_t node) const {
    const DriveKernels dk = DriveKernels::build(params_, grid_, node, true);
    const std::size_t n = node + 1;
    double xm = 0.0, pm = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double tau = grid_.nodes[k];
        double weight = std::exp(-0.5 * params_.gamma_m * (dk.t - tau)) * std::norm(dk.gbar[k]);
        weight *= (k == 0 || k == node) ? 0.5 * grid_.dt : grid_.dt;
        xm -= weight * std::sin(params_.omega_m * tau);
        pm += weight * std::cos(params_.omega_m * tau);
    }
    const double scale = std::sqrt(2.0) * params_.g;
    return {scale * xm, scale * pm};
}

ObservableSeries Evaluator::evolve(ObservableKind kind, const NoiseMode& mode, std::size_t stride,
                                   int threads) const {
    if (stride == 0) stride = 1;
    std::vector<std::size_t> report;
    for (std::size_t k = 0; k < grid_.node_count(); k += stride) report.push_back(k);
    if (report.back() != grid_.n_steps) report.push_back(grid_.n_steps);

    ObservableSeries out;
    out.observable = observable_name(kind);
    out.mode = mode.name();
    out.params = params_;
    out.times.resize(report.size());
    out.values.resize(report.size());

    parallel_for(report.size(), threads, [&](std::size_t i) {
        const std::size_t node = report[i];
        out.times[i] = grid_.nodes[node];
        switch (kind) {
            case ObservableKind::xc:
                out.values[i] = cavity_quadrature(node, mode);
                break;
            case ObservableKind::np:
                out.values[i] = photon_number(node, mode);
                break;
            case ObservableKind::xm:
                out.values[i] = mechanical_quadratures(node).first;
                break;
            case ObservableKind::pm:
                out.values[i] = mechanical_quadratures(node).second;
                break;
            case ObservableKind::amp_re:
            case ObservableKind::amp_im: {
                const Complex amp = cavity_amplitude(node, mode);
                out.values[i] = kind == ObservableKind::amp_re ? amp.real() : amp.imag();
                break;
            }
        }
    });
    return out;
}

double delta_np(const SystemParams& p, const TimeGrid& grid, std::size_t node) {
    const double t = grid.nodes[node];
    const double prefac = p.g * p.g * p.drive_E * p.drive_E /
                          (0.25 * p.kappa * p.kappa + p.delta0 * p.delta0);
    const std::size_t n = node + 1;
    RealVec ec2(n), wts(n, grid.dt);
    wts.front() *= 0.5;
    wts.back() *= 0.5;
    for (std::size_t k = 0; k < n; ++k) ec2[k] = std::exp(-0.5 * p.kappa * (t - grid.nodes[k]));
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double dtau = grid.nodes[i] - grid.nodes[j];
            const double gm = gamma_corr(grid.nodes[i], grid.nodes[j], t, p.gamma_m);
            row += wts[j] * ec2[j] * std::cos(p.omega_m * dtau) * std::cos(p.delta0 * dtau) * gm;
        }
        sum += wts[i] * ec2[i] * row;
    }
    return (2.0 * p.n_th + 1.0) * prefac * sum;
}

WeakCoupling weak_coupling_moments(const SystemParams& p, const TimeGrid& grid,
                                   std::size_t node) {
    if (p.g > 0.3 * p.kappa)
        warn_once("weak_coupling", "g/kappa above 0.3; weak-coupling moments degrade");
    const double t = grid.nodes[node];
    const Complex prefac = p.g * p.drive_E / Complex(0.5 * p.kappa, p.delta0);
    const double width = 0.5 * (p.kappa + p.gamma_m);
    const Complex anti = std::exp(Complex(0.0, (p.delta0 + p.omega_m) * t)) /
                         Complex(width, p.delta0 + p.omega_m);
    const Complex stokes = std::exp(Complex(0.0, (p.delta0 - p.omega_m) * t)) /
                           Complex(width, p.delta0 - p.omega_m);
    const double strength = std::norm(prefac) * std::norm(anti + stokes);
    WeakCoupling out;
    out.l_mean = 0.0;
    out.l_l = 0.0;
    out.l_dag_l = strength * (p.n_th + 1.0);
    out.photon_number = std::norm(d1_value(t, t, p)) + out.l_dag_l + delta_np(p, grid, node);
    return out;
}

double noise_ratio_rm(const SystemParams& p, const TimeGrid& grid, std::size_t node) {
    const WeakCoupling wc = weak_coupling_moments(p, grid, node);
    if (wc.photon_number < 1e-30)
        throw NumericalError("noise_ratio_rm: photon number denominator underflow");
    return delta_np(p, grid, node) / wc.photon_number;
}

}  // namespace omx

#include "omx/gaussian.hpp"

#include <algorithm>
#include <cmath>

namespace omx::gaussian {

namespace {

double trap_weight(std::size_t k, std::size_t last, double dt) {
    return (k == 0 || k == last) ? 0.5 * dt : dt;
}

void check_compatible(const LinearForm& a, const LinearForm& b) {
    if (!a.cache || !b.cache) throw GridMismatchError("linear form without kernel cache");
    if (a.cache == b.cache) return;
    if (a.cache->end_node != b.cache->end_node || a.cache->grid.dt != b.cache->grid.dt ||
        a.cache->t != b.cache->t)
        throw GridMismatchError("linear forms sampled on different grids");
}

/// Ordered contraction of two kernels against a symmetric correlation matrix:
/// integral u(x) v(y) Gamma(x, y) dx dy with delta terms looked up directly.
Complex contract(const NoiseKernel& u, const NoiseKernel& v, const std::vector<RealVec>& gamma,
                 std::size_t last, double dt) {
    if (u.empty() || v.empty()) return {};
    Complex sum{};
    if (!u.density.empty() && !v.density.empty()) {
        for (std::size_t i = 0; i <= last; ++i) {
            if (u.density[i] == Complex{}) continue;
            Complex row{};
            const RealVec& gi = gamma[i];
            for (std::size_t j = 0; j <= last; ++j)
                row += trap_weight(j, last, dt) * v.density[j] * gi[j];
            sum += trap_weight(i, last, dt) * u.density[i] * row;
        }
    }
    if (!u.density.empty()) {
        for (const auto& [q, c] : v.points) {
            Complex row{};
            for (std::size_t i = 0; i <= last; ++i)
                row += trap_weight(i, last, dt) * u.density[i] * gamma[i][q];
            sum += c * row;
        }
    }
    if (!v.density.empty()) {
        for (const auto& [q, c] : u.points) {
            Complex row{};
            for (std::size_t j = 0; j <= last; ++j)
                row += trap_weight(j, last, dt) * v.density[j] * gamma[q][j];
            sum += c * row;
        }
    }
    for (const auto& [qu, cu] : u.points)
        for (const auto& [qv, cv] : v.points) sum += cu * cv * gamma[qu][qv];
    return sum;
}

}  // namespace

NoiseKernel NoiseKernel::conjugated() const {
    NoiseKernel out;
    out.density.reserve(density.size());
    for (const auto& c : density) out.density.push_back(std::conj(c));
    out.points.reserve(points.size());
    for (const auto& [q, c] : points) out.points.emplace_back(q, std::conj(c));
    return out;
}

Sector LinearForm::computed_sector() const {
    const bool mech = c_x != Complex{} || c_p != Complex{} || !f_m.empty() || !f_m_dag.empty();
    const bool cav = !f_c.empty() || !f_c_dag.empty();
    if (mech && cav) return Sector::mixed;
    if (mech) return Sector::mechanical;
    if (cav) return Sector::cavity;
    return Sector::zero;
}

LinearForm LinearForm::hermitian_conjugate() const {
    LinearForm out;
    out.cache = cache;
    out.c_x = std::conj(c_x);
    out.c_p = std::conj(c_p);
    out.f_m = f_m_dag.conjugated();
    out.f_m_dag = f_m.conjugated();
    out.f_c = f_c_dag.conjugated();
    out.f_c_dag = f_c.conjugated();
    out.tag = tag;
    return out;
}

LinearForm LinearForm::scaled(Complex factor) const {
    LinearForm out = *this;
    out.c_x *= factor;
    out.c_p *= factor;
    for (auto* k : {&out.f_m, &out.f_m_dag, &out.f_c, &out.f_c_dag}) {
        for (auto& c : k->density) c *= factor;
        for (auto& [q, c] : k->points) c *= factor;
    }
    return out;
}

Complex second_moment(const LinearForm& a, const LinearForm& b, const GaussianState& state) {
    check_compatible(a, b);
    const KernelCache& kc = *a.cache;
    const std::size_t last = kc.end_node;
    const double dt = kc.grid.dt;
    const double var = state.n_th + 0.5;

    Complex sum = a.c_x * b.c_x * var + a.c_p * b.c_p * var +
                  a.c_x * b.c_p * Complex(0, 0.5) + a.c_p * b.c_x * Complex(0, -0.5);
    sum += (state.n_th + 1.0) * contract(a.f_m, b.f_m_dag, kc.gamma_m, last, dt);
    sum += state.n_th * contract(a.f_m_dag, b.f_m, kc.gamma_m, last, dt);
    sum += contract(a.f_c, b.f_c_dag, kc.gamma_c, last, dt);
    return sum;
}

Complex form_commutator(const LinearForm& a, const LinearForm& b) {
    check_compatible(a, b);
    const KernelCache& kc = *a.cache;
    const std::size_t last = kc.end_node;
    const double dt = kc.grid.dt;
    Complex sum = a.c_x * b.c_p * Complex(0, 1) + a.c_p * b.c_x * Complex(0, -1);
    sum += contract(a.f_m, b.f_m_dag, kc.gamma_m, last, dt);
    sum -= contract(a.f_m_dag, b.f_m, kc.gamma_m, last, dt);
    sum += contract(a.f_c, b.f_c_dag, kc.gamma_c, last, dt);
    sum -= contract(a.f_c_dag, b.f_c, kc.gamma_c, last, dt);
    return sum;
}

Complex ordered_exp_expectation(const std::vector<LinearForm>& exponents,
                                const std::vector<Insertion>& insertions,
                                const GaussianState& state) {
    if (insertions.size() > 2)
        throw std::invalid_argument("ordered_exp_expectation: at most two insertions supported");
    Complex log_base{};
    for (std::size_t i = 0; i < exponents.size(); ++i) {
        log_base += 0.5 * second_moment(exponents[i], exponents[i], state);
        for (std::size_t j = i + 1; j < exponents.size(); ++j)
            log_base += second_moment(exponents[i], exponents[j], state);
    }
    const Complex base = std::exp(log_base);

    auto singleton = [&](const Insertion& ins) {
        Complex s{};
        for (std::size_t i = 0; i < exponents.size(); ++i) {
            if (i < ins.position)
                s += second_moment(exponents[i], ins.form, state);
            else
                s += second_moment(ins.form, exponents[i], state);
        }
        return s;
    };

    if (insertions.empty()) return base;
    if (insertions.size() == 1) return base * singleton(insertions[0]);

    const Insertion* first = &insertions[0];
    const Insertion* second = &insertions[1];
    if (second->position < first->position) std::swap(first, second);
    const Complex pair = second_moment(first->form, second->form, state);
    return base * (singleton(*first) * singleton(*second) + pair);
}

namespace {

LinearForm base_form(std::shared_ptr<const KernelCache> cache) {
    LinearForm f;
    f.cache = std::move(cache);
    return f;
}

double decay_m(const KernelCache& kc, std::size_t node) {
    return std::exp(-0.5 * kc.params.gamma_m * (kc.t - kc.grid.nodes[node]));
}

}  // namespace

LinearForm mechanical_x(std::shared_ptr<const KernelCache> cache, Complex coeff) {
    LinearForm f = base_form(std::move(cache));
    f.c_x = coeff;
    f.tag = f.computed_sector();
    return f;
}

LinearForm mechanical_p(std::shared_ptr<const KernelCache> cache, Complex coeff) {
    LinearForm f = base_form(std::move(cache));
    f.c_p = coeff;
    f.tag = f.computed_sector();
    return f;
}

LinearForm transformed_x(std::shared_ptr<const KernelCache> cache, std::size_t node) {
    LinearForm f = base_form(std::move(cache));
    f.c_x = std::sqrt(2.0) * decay_m(*f.cache, node);
    f.f_m.points.emplace_back(node, Complex(1, 0));
    f.f_m_dag.points.emplace_back(node, Complex(1, 0));
    f.tag = f.computed_sector();
    return f;
}

LinearForm transformed_p(std::shared_ptr<const KernelCache> cache, std::size_t node) {
    LinearForm f = base_form(std::move(cache));
    f.c_p = std::sqrt(2.0) * decay_m(*f.cache, node);
    f.f_m.points.emplace_back(node, Complex(0, -1));
    f.f_m_dag.points.emplace_back(node, Complex(0, 1));
    f.tag = f.computed_sector();
    return f;
}

LinearForm k_m(std::shared_ptr<const KernelCache> cache, std::size_t node) {
    const KernelCache& kc = *cache;
    const double phase = kc.params.omega_m * kc.grid.nodes[node];
    const double c = std::cos(phase), s = std::sin(phase);
    LinearForm f = base_form(std::move(cache));
    const double em = decay_m(kc, node);
    f.c_x = std::sqrt(2.0) * em * c;
    f.c_p = std::sqrt(2.0) * em * s;
    f.f_m.points.emplace_back(node, Complex(c, -s));
    f.f_m_dag.points.emplace_back(node, Complex(c, s));
    f.tag = f.computed_sector();
    return f;
}

LinearForm cavity_noise_point(std::shared_ptr<const KernelCache> cache, std::size_t node) {
    LinearForm f = base_form(std::move(cache));
    f.f_c.points.emplace_back(node, Complex(1, 0));
    f.tag = f.computed_sector();
    return f;
}

namespace {

LinearForm exponent_impl(std::shared_ptr<const KernelCache> cache, std::size_t tau_node,
                         bool p_family) {
    const KernelCache& kc = *cache;
    const SystemParams& p = kc.params;
    const std::size_t n = kc.node_count();
    LinearForm f = base_form(std::move(cache));
    f.f_m.density.assign(n, Complex{});
    f.f_m_dag.density.assign(n, Complex{});
    const Complex ig(0, p.g);
    Complex quad{};
    double prev = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double u = kc.grid.nodes[k];
        double w = std::exp(-p.kappa * (kc.t - u)) *
                   (p_family ? std::sin(p.omega_m * u) : std::cos(p.omega_m * u));
        if (k > tau_node) w = 0.0;
        const double cur = w * decay_m(kc, k);
        if (k > 0 && k <= tau_node) quad += 0.5 * kc.grid.dt * (prev + cur);
        prev = cur;
        if (k <= tau_node) {
            // half-weight at the integration boundary so dense contraction by
            // full-grid trapezoid reproduces the [0, tau] integral
            const double boundary = (k == tau_node && tau_node != kc.end_node) ? 0.5 : 1.0;
            const Complex amp = ig * w * boundary;
            if (p_family) {
                f.f_m.density[k] = amp * Complex(0, -1);
                f.f_m_dag.density[k] = amp * Complex(0, 1);
            } else {
                f.f_m.density[k] = amp;
                f.f_m_dag.density[k] = amp;
            }
        }
    }
    if (tau_node == 0) {
        f.f_m.density.clear();
        f.f_m_dag.density.clear();
    }
    const Complex coeff = ig * std::sqrt(2.0) * quad;
    if (p_family)
        f.c_p = coeff;
    else
        f.c_x = coeff;
    f.tag = f.computed_sector();
    return f;
}

}  // namespace

LinearForm exponent_p(std::shared_ptr<const KernelCache> cache, std::size_t tau_node) {
    return exponent_impl(std::move(cache), tau_node, true);
}

LinearForm exponent_x(std::shared_ptr<const KernelCache> cache, std::size_t tau_node) {
    return exponent_impl(std::move(cache), tau_node, false);
}

}  // namespace omx::gaussian

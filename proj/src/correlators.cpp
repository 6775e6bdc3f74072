#include "omx/correlators.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "omx/quad.hpp"

namespace omx {

Complex d1_value(double tau, double t, const SystemParams& p) {
    const Complex denom(0.5 * p.kappa, p.delta0);
    const Complex osc = std::exp(Complex(-0.5 * p.kappa * (t - tau), p.delta0 * tau));
    return (osc - std::exp(-0.5 * p.kappa * t)) * p.drive_E / denom;
}

double gamma_corr(double tau, double tau2, double t, double rate) {
    return std::exp(-0.5 * rate * std::abs(tau - tau2)) -
           std::exp(-0.5 * rate * (t - tau)) * std::exp(-0.5 * rate * (t - tau2));
}

double m_corr(double tau_i, double tau_j, const SystemParams& p) {
    return 2.0 * std::exp(-0.5 * p.gamma_m * std::abs(tau_i - tau_j)) *
           std::sin(p.omega_m * (tau_j - tau_i));
}

Complex d2_value(std::size_t node, double t, const SystemParams& p, const TimeGrid& grid,
                 const RealVec& gamma_c_row) {
    (void)t;
    if (node >= grid.node_count() || gamma_c_row.size() <= node)
        throw GridMismatchError("d2_value: node outside grid or row");
    ComplexVec f(node + 1);
    for (std::size_t k = 0; k <= node; ++k)
        f[k] = std::exp(Complex(0.0, p.delta0 * grid.nodes[k])) * gamma_c_row[k];
    return p.drive_E * trapezoid(f, grid.dt);
}

RealVec theta_series(double t, const SystemParams& p, const TimeGrid& grid,
                     std::size_t end_node) {
    const double dt = grid.dt;
    const std::size_t n = end_node + 1;
    // inner: C(u) = int_0^u e^{-kappa (t-v)} e^{-gamma_m (u-v)/2} cos(omega_m v) dv,
    // advanced by one damped trapezoid step at a time.
    const double damp = std::exp(-0.5 * p.gamma_m * dt);
    RealVec integrand(n);
    double c_inner = 0.0;
    double f_prev = std::exp(-p.kappa * t);  // v = 0
    integrand[0] = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        const double v = grid.nodes[k];
        const double f = std::exp(-p.kappa * (t - v)) * std::cos(p.omega_m * v);
        c_inner = damp * c_inner + 0.5 * dt * (damp * f_prev + f);
        f_prev = f;
        integrand[k] = std::exp(-p.kappa * (t - v)) * std::sin(p.omega_m * v) * c_inner;
    }
    RealVec theta = prefix_trapezoid(integrand, dt);
    for (auto& v : theta) v *= 2.0;
    return theta;
}

RealVec theta_prime_series(double t, const SystemParams& p, const TimeGrid& grid,
                           std::size_t end_node) {
    const double dt = grid.dt;
    const std::size_t n = end_node + 1;
    RealVec out(n, 0.0);
    const double damp = std::exp(-0.5 * p.gamma_m * dt);
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const double tau = grid.nodes[j];
        double c_inner = 0.0;
        double f_prev = gamma_corr(tau, tau, t, p.kappa) * std::cos(p.omega_m * tau);
        double acc = 0.0;
        double g_prev = 0.0;  // Gamma_c(u,tau) sin(omega_m u) C'(u) at u = tau
        for (std::size_t k = j + 1; k < n; ++k) {
            const double u = grid.nodes[k];
            const double gc = gamma_corr(u, tau, t, p.kappa);
            const double f = gc * std::cos(p.omega_m * u);
            c_inner = damp * c_inner + 0.5 * dt * (damp * f_prev + f);
            f_prev = f;
            const double g = gc * std::sin(p.omega_m * u) * c_inner;
            acc += 0.5 * dt * (g_prev + g);
            g_prev = g;
        }
        out[j] = 2.0 * acc;
    }
    return out;
}

DriveKernels DriveKernels::build(const SystemParams& p, const TimeGrid& grid,
                                 std::size_t end_node, bool with_d2) {
    if (end_node >= grid.node_count())
        throw GridMismatchError("DriveKernels: end node outside grid");
    DriveKernels dk;
    dk.end_node = end_node;
    dk.t = grid.nodes[end_node];
    const double t = dk.t;
    const double dt = grid.dt;
    const std::size_t n = end_node + 1;
    dk.d1.resize(n);
    dk.d2.assign(n, Complex{});
    dk.gbar.resize(n);
    for (std::size_t k = 0; k < n; ++k) dk.d1[k] = d1_value(grid.nodes[k], t, p);
    if (with_d2) {
        // D2(tau) = E [ J(tau) - e^{-kappa (t-tau)/2} S(tau) ] where
        //   J(tau) = int_0^tau e^{-kappa (tau-u)/2} e^{i delta0 u} du
        //   S(tau) = int_0^tau e^{-kappa (t-u)/2}   e^{i delta0 u} du
        const double step = std::exp(-0.5 * p.kappa * dt);
        Complex j_acc = 0.0, s_acc = 0.0;
        Complex g_prev = 1.0;                                 // e^{i delta0 * 0}
        Complex s_prev = std::exp(-0.5 * p.kappa * t) * 1.0;  // u = 0
        for (std::size_t k = 1; k < n; ++k) {
            const double u = grid.nodes[k];
            const Complex gph = std::exp(Complex(0.0, p.delta0 * u));
            const Complex sph = std::exp(-0.5 * p.kappa * (t - u)) * gph;
            j_acc = step * j_acc + 0.5 * dt * (step * g_prev + gph);
            s_acc += 0.5 * dt * (s_prev + sph);
            g_prev = gph;
            s_prev = sph;
            dk.d2[k] = p.drive_E * (j_acc - std::exp(-0.5 * p.kappa * (t - u)) * s_acc);
        }
    }
    for (std::size_t k = 0; k < n; ++k)
        dk.gbar[k] = std::exp(-0.5 * p.kappa * (t - grid.nodes[k])) * dk.d1[k] + dk.d2[k];
    return dk;
}

namespace {

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 1469598103934665603ULL) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::string cache_path_for(const SystemParams& p, const TimeGrid& grid, std::size_t end_node) {
    const char* dir = std::getenv("OMX_CACHE_DIR");
    if (!dir || !*dir) return {};
    const double key[7] = {p.kappa, p.gamma_m, p.omega_m, grid.dt,
                           static_cast<double>(end_node), 1.0 /* format */, 0.0};
    const std::uint64_t h = fnv1a(key, sizeof(key));
    char name[64];
    std::snprintf(name, sizeof(name), "/omx-theta-%016llx.bin",
                  static_cast<unsigned long long>(h));
    return std::string(dir) + name;
}

bool load_theta_cache(const std::string& path, std::size_t n, RealVec& theta, RealVec& theta_p) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (!in || count != n) return false;
    theta.resize(n);
    theta_p.resize(n);
    in.read(reinterpret_cast<char*>(theta.data()), static_cast<std::streamsize>(n * 8));
    in.read(reinterpret_cast<char*>(theta_p.data()), static_cast<std::streamsize>(n * 8));
    return static_cast<bool>(in);
}

void store_theta_cache(const std::string& path, const RealVec& theta, const RealVec& theta_p) {
    std::ofstream out(path, std::ios::binary);
    if (!out) return;
    const std::uint64_t count = theta.size();
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(theta.data()),
              static_cast<std::streamsize>(theta.size() * 8));
    out.write(reinterpret_cast<const char*>(theta_p.data()),
              static_cast<std::streamsize>(theta_p.size() * 8));
}

}  // namespace

std::shared_ptr<const KernelCache> KernelCache::build(const SystemParams& p, const TimeGrid& grid,
                                                      std::size_t end_node) {
    if (end_node >= grid.node_count())
        throw GridMismatchError("KernelCache: end node outside grid");
    if (end_node + 1 > kMaxDenseNodes)
        throw ConfigError("KernelCache: dense cache capped at " + std::to_string(kMaxDenseNodes) +
                          " nodes; coarsen the resolution");
    auto cache = std::make_shared<KernelCache>();
    cache->params = p;
    cache->end_node = end_node;
    cache->t = grid.nodes[end_node];
    const std::size_t n = end_node + 1;
    cache->grid.t_end = cache->t;
    cache->grid.n_steps = end_node;
    cache->grid.dt = grid.dt;
    cache->grid.nodes.assign(grid.nodes.begin(), grid.nodes.begin() + static_cast<long>(n));

    cache->gamma_c.assign(n, RealVec(n));
    cache->gamma_m.assign(n, RealVec(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double gc = gamma_corr(grid.nodes[i], grid.nodes[j], cache->t, p.kappa);
            const double gm = gamma_corr(grid.nodes[i], grid.nodes[j], cache->t, p.gamma_m);
            cache->gamma_c[i][j] = cache->gamma_c[j][i] = gc;
            cache->gamma_m[i][j] = cache->gamma_m[j][i] = gm;
        }
    }

    const DriveKernels dk = DriveKernels::build(p, grid, end_node, true);
    cache->d1 = dk.d1;
    cache->d2 = dk.d2;

    const std::string path = cache_path_for(p, grid, end_node);
    if (path.empty() || !load_theta_cache(path, n, cache->theta, cache->theta_prime)) {
        cache->theta = theta_series(cache->t, p, grid, end_node);
        cache->theta_prime = theta_prime_series(cache->t, p, grid, end_node);
        if (!path.empty()) store_theta_cache(path, cache->theta, cache->theta_prime);
    }
    return cache;
}

}  // namespace omx

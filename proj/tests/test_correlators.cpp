#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "omx/correlators.hpp"
#include "omx/quad.hpp"

using namespace omx;

namespace {

SystemParams make_params(double g, double omega, double q, double delta0, double e) {
    SystemParams p;
    p.g = g;
    p.kappa = 1.0;
    p.omega_m = omega;
    p.gamma_m = omega / q;
    p.delta0 = delta0;
    p.drive_E = e;
    return p;
}

}  // namespace

TEST_CASE("drive displacement closed form") {
    SystemParams p = make_params(0.0, 1.0, 100.0, 0.0, 0.01);
    // tau = 0 vanishes for any end time
    CHECK(std::abs(d1_value(0.0, 7.3, p)) < 1e-15);
    // steady pure-drive amplitude 2E/kappa at zero detuning
    CHECK(d1_value(400.0, 400.0, p).real() == doctest::Approx(0.02).epsilon(1e-10));
    // quoted value at kappa t = 10
    const Complex v = d1_value(10.0, 10.0, p);
    CHECK(v.real() == doctest::Approx(0.02 * (1.0 - std::exp(-5.0))).epsilon(1e-12));
    CHECK(v.imag() == doctest::Approx(0.0));
}

TEST_CASE("colored-noise correlation function") {
    CHECK(gamma_corr(2.0, 2.0, 2.0, 1.0) == doctest::Approx(0.0));
    CHECK(gamma_corr(0.0, 0.0, 1e6, 1.0) == doctest::Approx(1.0));
    CHECK(gamma_corr(0.0, 1.0, 2.0, 1.0) ==
          doctest::Approx(std::exp(-0.5) - std::exp(-1.0) * std::exp(-0.5)).epsilon(1e-12));

    // defining integral: rate int_max(tau,tau2)^t e^{-rate(u-tau)/2} e^{-rate(u-tau2)/2} du
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> uni(0.0, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double t = 3.0;
        const double a = uni(rng), b = uni(rng), rate = 0.3 + uni(rng);
        const std::size_t n = 60000;
        const double lo = std::max(a, b), dt = (t - lo) / n;
        RealVec f(n + 1);
        for (std::size_t k = 0; k <= n; ++k) {
            const double u = lo + k * dt;
            f[k] = rate * std::exp(-0.5 * rate * (u - a)) * std::exp(-0.5 * rate * (u - b));
        }
        CHECK(std::abs(trapezoid(f, dt) - gamma_corr(a, b, t, rate)) < 1e-8);
    }
}

TEST_CASE("commutator kernel") {
    SystemParams p = make_params(1.0, 2.0, 50.0, 0.0, 0.01);
    CHECK(m_corr(1.3, 1.3, p) == 0.0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(0.0, 5.0);
    for (int trial = 0; trial < 30; ++trial) {
        const double a = uni(rng), b = uni(rng);
        CHECK(m_corr(a, b, p) == doctest::Approx(-m_corr(b, a, p)).epsilon(1e-14));
    }
    SystemParams lossless = p;
    lossless.gamma_m = 0.0;
    const double quarter = M_PI / (2.0 * lossless.omega_m);
    CHECK(m_corr(0.0, quarter, lossless) == doctest::Approx(2.0));
}

TEST_CASE("kernel cache invariants") {
    SystemParams p = make_params(1.0, 1.0, 100.0, 0.5, 0.01);
    const TimeGrid grid = build_grid(p.kappa, 4.0, 0.05);
    const auto cache = KernelCache::build(p, grid, grid.n_steps);
    const std::size_t n = cache->node_count();
    const double t = cache->t;

    // diagonal identity Gamma(tau,tau) + e^{-rate (t-tau)} = 1 at machine precision
    for (std::size_t k = 0; k < n; ++k) {
        const double tau = grid.nodes[k];
        CHECK(cache->gamma_c[k][k] + std::exp(-p.kappa * (t - tau)) ==
              doctest::Approx(1.0).epsilon(1e-14));
        CHECK(cache->gamma_m[k][k] + std::exp(-p.gamma_m * (t - tau)) ==
              doctest::Approx(1.0).epsilon(1e-14));
    }
    // symmetry and range
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t i = pick(rng), j = pick(rng);
        CHECK(cache->gamma_c[i][j] == cache->gamma_c[j][i]);
        CHECK(cache->gamma_c[i][j] >= 0.0);
        CHECK(cache->gamma_c[i][j] <= 1.0);
        CHECK(cache->gamma_m[i][j] >= 0.0);
        CHECK(cache->gamma_m[i][j] <= 1.0);
    }
    // combined quadrature commutator identity at machine precision
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t i = pick(rng), j = pick(rng);
        const double u = grid.nodes[i], v = grid.nodes[j];
        const double lhs = 2.0 * (std::exp(-0.5 * p.gamma_m * (t - u)) *
                                      std::exp(-0.5 * p.gamma_m * (t - v)) +
                                  cache->gamma_m[i][j]);
        CHECK(lhs == doctest::Approx(2.0 * std::exp(-0.5 * p.gamma_m * std::abs(u - v)))
                         .epsilon(1e-13));
    }
    CHECK(cache->theta.front() == 0.0);
    CHECK(cache->theta_prime.back() == 0.0);
}

TEST_CASE("d2 vanishes without drive or range") {
    SystemParams p = make_params(1.0, 1.0, 100.0, 0.0, 0.0);
    const TimeGrid grid = build_grid(p.kappa, 2.0, 0.05);
    const auto cache = KernelCache::build(p, grid, grid.n_steps);
    CHECK(std::abs(cache->d2[0]) == 0.0);
    for (const auto& v : cache->d2) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("d2 against the cached gamma row and grid refinement") {
    SystemParams p = make_params(1.0, 1.0, 100.0, 0.0, 0.01);
    const double t_end = 10.0;
    const TimeGrid coarse = build_grid(p.kappa, t_end, 0.004);
    const auto cc = KernelCache::build(p, coarse, coarse.n_steps);

    // the separable accumulation matches direct trapezoid against the row
    const std::size_t probe = coarse.n_steps / 2;
    RealVec row(coarse.node_count());
    for (std::size_t k = 0; k < row.size(); ++k) row[k] = cc->gamma_c[k][probe];
    const Complex direct = d2_value(probe, t_end, p, coarse, row);
    CHECK(std::abs(direct - cc->d2[probe]) < 1e-12);

    // the colored-noise window closes at the end point, and the empty range
    CHECK(std::abs(cc->d2.back()) < 1e-14);
    CHECK(std::abs(cc->d2.front()) == 0.0);

    // half-step refinement stays within 1e-6 relative away from the end point
    const TimeGrid ga = build_grid(p.kappa, t_end, 0.0008);
    const TimeGrid gb = build_grid(p.kappa, t_end, 0.0004);
    const DriveKernels da = DriveKernels::build(p, ga, ga.n_steps, true);
    const DriveKernels db = DriveKernels::build(p, gb, gb.n_steps, true);
    const Complex a = da.d2[ga.n_steps / 2], b = db.d2[gb.n_steps / 2];
    CHECK(std::abs(a - b) / std::abs(b) < 1e-6);
}

TEST_CASE("theta grid refinement") {
    SystemParams p = make_params(1.0, 1.0, 100.0, 0.0, 0.01);
    const double t_end = 10.0;
    const TimeGrid coarse = build_grid(p.kappa, t_end, 0.0008);
    const TimeGrid fine = build_grid(p.kappa, t_end, 0.0004);
    const RealVec a = theta_series(t_end, p, coarse, coarse.n_steps);
    const RealVec b = theta_series(t_end, p, fine, fine.n_steps);
    CHECK(a.front() == 0.0);
    CHECK(std::abs(a.back() - b.back()) / std::abs(b.back()) < 1e-6);
    // theta does not involve g or E
    SystemParams q = make_params(17.0, 1.0, 100.0, 0.0, 5.0);
    const RealVec c = theta_series(t_end, q, coarse, coarse.n_steps);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == c[k]);
}

TEST_CASE("theta prime grid refinement and endpoints") {
    SystemParams p = make_params(1.0, 1.0, 100.0, 0.0, 0.01);
    const double t_end = 10.0;
    const TimeGrid coarse = build_grid(p.kappa, t_end, 0.001);
    const TimeGrid fine = build_grid(p.kappa, t_end, 0.0005);
    const RealVec a = theta_prime_series(t_end, p, coarse, coarse.n_steps);
    const RealVec b = theta_prime_series(t_end, p, fine, fine.n_steps);
    CHECK(a.back() == 0.0);
    CHECK(std::abs(a.front() - b.front()) / std::abs(b.front()) < 1e-6);
}

TEST_CASE("drive kernels track d1 and compose gbar") {
    SystemParams p = make_params(2.0, 2.0, 100.0, 1.3, 0.01);
    const TimeGrid grid = build_grid(p.kappa, 6.0, 0.02);
    const DriveKernels dk = DriveKernels::build(p, grid, grid.n_steps, true);
    for (std::size_t k = 0; k < dk.d1.size(); k += 37) {
        CHECK(std::abs(dk.d1[k] - d1_value(grid.nodes[k], dk.t, p)) < 1e-13);
        const Complex expect =
            std::exp(-0.5 * p.kappa * (dk.t - grid.nodes[k])) * dk.d1[k] + dk.d2[k];
        CHECK(std::abs(dk.gbar[k] - expect) < 1e-13);
    }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "omx/correlators.hpp"
#include "omx/oracle.hpp"

using namespace omx;
using namespace omx::oracle;

namespace {

SystemParams make_params(double g, double omega, double q, double delta0, double e,
                         double nth = 0.0) {
    SystemParams p;
    p.g = g;
    p.kappa = 1.0;
    p.omega_m = omega;
    p.gamma_m = q > 0 ? omega / q : 0.0;
    p.delta0 = delta0;
    p.drive_E = e;
    p.n_th = nth;
    return p;
}

MatrixSchedule random_schedule(std::mt19937_64& rng, int dim, double scale) {
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Matrix c0(dim, dim), c1(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            c0(i, j) = Complex(uni(rng), uni(rng));
            c1(i, j) = Complex(uni(rng), uni(rng));
        }
    c0 = Matrix((c0 + c0.adjoint()) / 2.0);
    c1 = Matrix((c1 + c1.adjoint()) / 2.0);
    // normalize so the generator's Frobenius norm stays below `scale`
    const double f = scale / (c0.norm() + c1.norm());
    c0 *= f;
    c1 *= f;
    const double nu = 0.5 + uni(rng);
    return MatrixSchedule{
        [c0, c1, nu](double t) { return Matrix(c0 * std::cos(nu * t) + c1 * std::sin(nu * t)); },
        dim};
}

}  // namespace

TEST_CASE("initial state construction") {
    const FockState vac = build_initial_state(3, 4, 0.0);
    CHECK(vac.rho(0, 0) == Complex(1.0));
    CHECK(std::abs(vac.rho.trace() - Complex(1.0)) < 1e-15);

    const FockState warm = build_initial_state(3, 40, 0.5);
    CHECK(std::abs(warm.rho.trace() - Complex(1.0)) < 1e-14);
    // geometric weights proportional to (1/3)^n
    const double w0 = warm.rho(0, 0).real();
    const double w1 = warm.rho(1, 1).real();  // |0>_c |1>_m diagonal entry
    CHECK(w1 / w0 == doctest::Approx(1.0 / 3.0).epsilon(1e-10));

    CHECK_THROWS_AS(build_initial_state(3, 4, 3.0), NumericalError);  // tail too fat
    CHECK_THROWS_AS(build_initial_state(80, 80, 0.0), ConfigError);   // over the dim cap
    CHECK_THROWS_AS(build_initial_state(1, 4, 0.0), ConfigError);
}

TEST_CASE("pure cavity decay of one photon") {
    const SystemParams p = make_params(0.0, 1.0, 100.0, 0.0, 0.0);
    LindbladIntegrator integ(p, 3, 2);
    FockState s = build_initial_state(3, 2, 0.0);
    s.rho.setZero();
    s.rho(1 * 2 + 0, 1 * 2 + 0) = 1.0;  // |1>_c |0>_m
    const double dt = 0.02;
    double t = 0.0;
    for (int k = 0; k < 100; ++k) {
        integ.step(s, t, dt);
        t += dt;
    }
    CHECK(integ.measure_np(s) == doctest::Approx(std::exp(-t)).epsilon(1e-8));
}

TEST_CASE("superposition amplitude damps at kappa/2") {
    const SystemParams p = make_params(0.0, 1.0, 100.0, 0.0, 0.0);
    LindbladIntegrator integ(p, 3, 2);
    FockState s = build_initial_state(3, 2, 0.0);
    s.rho.setZero();
    // (|0> + |1>)/sqrt2 on the cavity, mechanical ground state
    s.rho(0, 0) = 0.5;
    s.rho(0, 2) = 0.5;
    s.rho(2, 0) = 0.5;
    s.rho(2, 2) = 0.5;
    const double dt = 0.02;
    double t = 0.0;
    for (int k = 0; k < 80; ++k) {
        integ.step(s, t, dt);
        t += dt;
    }
    CHECK(std::abs(integ.measure_amp(s) - 0.5 * std::exp(-0.5 * t)) < 1e-8);
}

TEST_CASE("coherent drive matches the displacement closed form") {
    const SystemParams p = make_params(0.0, 1.0, 100.0, 0.7, 0.01);
    const TimeGrid grid = build_grid(p.kappa, 6.0, 0.02);
    const OracleSeries series = evolve_and_measure(p, 6, 2, grid);
    for (std::size_t k = 0; k < grid.node_count(); k += 50) {
        const Complex expect = d1_value(grid.nodes[k], grid.nodes[k], p);
        CHECK(std::abs(series.amp[k] - expect) < 1e-6);
    }
    CHECK(series.np.back() > 0.0);
}

TEST_CASE("photon-number conserving coupling keeps the vacuum dark") {
    const SystemParams p = make_params(1.5, 1.0, 50.0, 0.0, 0.0);
    const TimeGrid grid = build_grid(p.kappa, 3.0, 0.05);
    const OracleSeries series = evolve_and_measure(p, 3, 12, grid);
    for (double np : series.np) CHECK(std::abs(np) < 1e-12);
}

TEST_CASE("state invariants hold along a driven trajectory") {
    const SystemParams p = make_params(0.5, 1.0, 50.0, 0.0, 0.05, 0.2);
    LindbladIntegrator integ(p, 3, 12);
    FockState s = build_initial_state(3, 12, 0.2);
    double t = 0.0;
    const double dt = 0.05;
    for (int step = 0; step < 60; ++step) {
        integ.step(s, t, dt);
        t += dt;
        CHECK(s.trace_deviation() < 1e-8);
        CHECK(s.hermiticity_deviation() < 1e-10);
    }
    CHECK(s.min_eigenvalue() > -1e-8);
}

TEST_CASE("mechanical thermal tail is preserved at finite temperature") {
    const SystemParams p = make_params(0.0, 1.0, 10.0, 0.0, 0.0, 0.5);
    const TimeGrid grid = build_grid(p.kappa, 4.0, 0.05);
    const OracleSeries series = evolve_and_measure(p, 2, 30, grid);
    // thermal state is stationary for the mechanical dissipator
    CHECK(std::abs(series.xm.back()) < 1e-10);
    CHECK(std::abs(series.pm.back()) < 1e-10);
}

TEST_CASE("time-ordered exponential of a constant generator") {
    std::mt19937_64 rng(5);
    const MatrixSchedule sched = random_schedule(rng, 4, 0.5);
    const Matrix h = sched.generator(0.3);
    const MatrixSchedule constant{[h](double) { return h; }, 4};
    const Matrix u = time_ordered_exp(constant, 0.0, 1.0, 1e-3);
    const Matrix expect = matrix_exp(Complex(0, -1.0) * h);
    CHECK((u - expect).norm() < 1e-8);
}

TEST_CASE("commuting family reduces to the exponential of the integral") {
    Matrix h0(3, 3);
    h0.setZero();
    h0(0, 0) = 1.0;
    h0(1, 1) = -0.4;
    h0(2, 2) = 0.2;
    const MatrixSchedule sched{[h0](double t) { return Matrix(std::cos(t) * h0); }, 3};
    const Matrix u = time_ordered_exp(sched, 0.0, 2.0, 1e-3);
    const Matrix expect = matrix_exp(Complex(0, -1.0) * std::sin(2.0) * h0);
    CHECK((u - expect).norm() < 1e-7);
}

TEST_CASE("time-ordered exponentials are unitary") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 5; ++trial) {
        const MatrixSchedule sched = random_schedule(rng, 4, 1.0);
        const Matrix u = time_ordered_exp(sched, 0.0, 1.0, 2e-3);
        CHECK((u.adjoint() * u - Matrix::Identity(4, 4)).norm() < 1e-8);
    }
}

TEST_CASE("step guard rejects a coarse grid") {
    std::mt19937_64 rng(13);
    const MatrixSchedule sched = random_schedule(rng, 4, 10.0);
    CHECK_THROWS_AS(time_ordered_exp(sched, 0.0, 1.0, 0.5), NumericalError);
}

TEST_CASE("splitting identities hold for vanishing and commuting partners") {
    std::mt19937_64 rng(17);
    const MatrixSchedule h1 = random_schedule(rng, 4, 0.8);
    const MatrixSchedule zero{[](double) { return Matrix::Zero(4, 4); }, 4};
    auto [r1, r2] = verify_decompositions(h1, zero, 1.0, 5e-3);
    CHECK(r1 < 1e-9);
    CHECK(r2 < 1e-9);

    // generators diagonal in the same basis commute at all time pairs
    Matrix d1m(3, 3), d2m(3, 3);
    d1m.setZero();
    d2m.setZero();
    d1m(0, 0) = 0.7;
    d1m(1, 1) = -0.3;
    d1m(2, 2) = 0.1;
    d2m(0, 0) = -0.2;
    d2m(1, 1) = 0.5;
    d2m(2, 2) = 0.4;
    const MatrixSchedule s1{[d1m](double t) { return Matrix(std::cos(t) * d1m); }, 3};
    const MatrixSchedule s2{[d2m](double t) { return Matrix(std::sin(t) * d2m); }, 3};
    auto [c1, c2] = verify_decompositions(s1, s2, 1.0, 5e-3);
    CHECK(c1 < 1e-6);
    CHECK(c2 < 1e-6);
}

TEST_CASE("splitting residuals shrink at second order") {
    std::mt19937_64 rng(21);
    const MatrixSchedule h1 = random_schedule(rng, 4, 1.0);
    const MatrixSchedule h2 = random_schedule(rng, 4, 1.0);
    auto [a1, a2] = verify_decompositions(h1, h2, 0.5, 0.02);
    auto [b1, b2] = verify_decompositions(h1, h2, 0.5, 0.01);
    CHECK(a1 > 1e-10);  // genuinely non-commuting
    CHECK(b1 < 0.35 * a1);
    CHECK(b2 < 0.35 * a2);
}

TEST_CASE("truncation robustness of a small driven run") {
    const SystemParams p = make_params(0.3, 1.0, 50.0, 0.0, 0.02);
    const TimeGrid grid = build_grid(p.kappa, 4.0, 0.05);
    const OracleSeries a = evolve_and_measure(p, 3, 8, grid);
    const OracleSeries b = evolve_and_measure(p, 3, 10, grid);
    double max_np = 0.0, dev = 0.0;
    for (std::size_t k = 0; k < grid.node_count(); ++k) {
        max_np = std::max(max_np, std::abs(b.np[k]));
        dev = std::max(dev, std::abs(a.np[k] - b.np[k]));
    }
    CHECK(dev < 0.01 * max_np);
}

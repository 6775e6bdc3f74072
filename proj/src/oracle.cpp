#include "omx/oracle.hpp"

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

namespace omx::oracle {

double FockState::trace_deviation() const { return std::abs(rho.trace() - Complex(1.0)); }

double FockState::hermiticity_deviation() const {
    return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
}

double FockState::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es((rho + rho.adjoint()) / 2.0);
    return es.eigenvalues().minCoeff();
}

Matrix annihilation_operator(int dim) {
    Matrix a = Matrix::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

Matrix thermal_state(int dim, double n_th) {
    Matrix rho = Matrix::Zero(dim, dim);
    if (n_th <= 0.0) {
        rho(0, 0) = 1.0;
        return rho;
    }
    const double q = n_th / (n_th + 1.0);
    double w = 1.0, norm = 0.0;
    for (int n = 0; n < dim; ++n, w *= q) {
        rho(n, n) = w;
        norm += w;
    }
    rho /= norm;
    return rho;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Matrix matrix_exp(const Matrix& m) { return m.exp(); }

FockState build_initial_state(int dim_cav, int dim_mech, double n_th) {
    if (dim_cav < 2 || dim_mech < 2) throw ConfigError("oracle: dims must be >= 2");
    if (dim_cav * dim_mech > kMaxHilbertDim)
        throw ConfigError("oracle: Hilbert dimension above desk-scale cap");
    if (n_th > 0.0) {
        const double tail = std::pow(n_th, dim_mech) / std::pow(n_th + 1.0, dim_mech + 1);
        if (!(tail < 1e-8))
            throw NumericalError("oracle: mechanical truncation insufficient for n_th");
    }
    Matrix vac = Matrix::Zero(dim_cav, dim_cav);
    vac(0, 0) = 1.0;
    FockState s;
    s.dim_cav = dim_cav;
    s.dim_mech = dim_mech;
    s.rho = kron(vac, thermal_state(dim_mech, n_th));
    return s;
}

LindbladIntegrator::LindbladIntegrator(const SystemParams& p, int dim_cav, int dim_mech)
    : params_(p), dim_cav_(dim_cav), dim_mech_(dim_mech) {
    if (dim_cav * dim_mech > kMaxHilbertDim)
        throw ConfigError("oracle: Hilbert dimension above desk-scale cap");
    const Matrix a = annihilation_operator(dim_cav);
    const Matrix b = annihilation_operator(dim_mech);
    const Matrix ic = Matrix::Identity(dim_cav, dim_cav);
    const Matrix im = Matrix::Identity(dim_mech, dim_mech);
    const Matrix x = (b + b.adjoint()) / std::sqrt(2.0);
    const Matrix pm = Complex(0, -1) * (b - b.adjoint()) / std::sqrt(2.0);

    a_ = kron(a, im);
    adag_ = a_.adjoint();
    num_cav_ = adag_ * a_;
    xm_ = kron(ic, x);
    pm_ = kron(ic, pm);
    coup_x_ = -std::sqrt(2.0) * p.g * num_cav_ * xm_;
    coup_p_ = -std::sqrt(2.0) * p.g * num_cav_ * pm_;

    jump_a_ = a_;
    jump_b_ = kron(ic, b);
    jump_bdag_ = jump_b_.adjoint();
    rate_a_ = p.kappa;
    rate_b_ = p.gamma_m * (p.n_th + 1.0);
    rate_bdag_ = p.gamma_m * p.n_th;

    heff_const_ = Complex(0, -0.5) *
                  (rate_a_ * (jump_a_.adjoint() * jump_a_) + rate_b_ * (jump_b_.adjoint() * jump_b_) +
                   rate_bdag_ * (jump_bdag_.adjoint() * jump_bdag_));

    const double coupling_bound =
        std::sqrt(2.0) * p.g * (dim_cav - 1) * std::sqrt(2.0 * dim_mech);
    max_rate_ = p.kappa + p.gamma_m * (2.0 * p.n_th + 1.0) + coupling_bound +
                2.0 * p.drive_E + std::abs(p.delta0);
}

Matrix LindbladIntegrator::liouvillian(const Matrix& rho, double t) const {
    // H(t) - (i/2) sum rate c^dag c, then Lrho = -i(Heff rho - rho Heff^dag) + jumps
    const double c = std::cos(params_.omega_m * t);
    const double s = std::sin(params_.omega_m * t);
    const Complex drive = params_.drive_E * std::exp(Complex(0, params_.delta0 * t));
    Matrix heff = c * coup_x_ + s * coup_p_ + heff_const_;
    heff.noalias() += (Complex(0, 1) * drive) * adag_;
    heff.noalias() += (Complex(0, -1) * std::conj(drive)) * a_;

    Matrix out = Complex(0, -1) * (heff * rho - rho * heff.adjoint());
    out.noalias() += rate_a_ * (jump_a_ * rho * jump_a_.adjoint());
    if (rate_b_ != 0.0) out.noalias() += rate_b_ * (jump_b_ * rho * jump_b_.adjoint());
    if (rate_bdag_ != 0.0) out.noalias() += rate_bdag_ * (jump_bdag_ * rho * jump_bdag_.adjoint());
    return out;
}

void LindbladIntegrator::step(FockState& state, double t, double dt) const {
    const int n_sub = std::max(1, static_cast<int>(std::ceil(dt * max_rate_ / 1e-2)));
    const double h = dt / n_sub;
    Matrix& rho = state.rho;
    for (int i = 0; i < n_sub; ++i) {
        const double ti = t + i * h;
        const Matrix k1 = liouvillian(rho, ti);
        const Matrix k2 = liouvillian(rho + (0.5 * h) * k1, ti + 0.5 * h);
        const Matrix k3 = liouvillian(rho + (0.5 * h) * k2, ti + 0.5 * h);
        const Matrix k4 = liouvillian(rho + h * k3, ti + h);
        rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
}

Complex LindbladIntegrator::measure_amp(const FockState& s) const { return (a_ * s.rho).trace(); }
double LindbladIntegrator::measure_xc(const FockState& s) const {
    return std::sqrt(2.0) * std::real(measure_amp(s));
}
double LindbladIntegrator::measure_np(const FockState& s) const {
    return std::real((num_cav_ * s.rho).trace());
}
double LindbladIntegrator::measure_xm(const FockState& s) const {
    return std::real((xm_ * s.rho).trace());
}
double LindbladIntegrator::measure_pm(const FockState& s) const {
    return std::real((pm_ * s.rho).trace());
}

OracleSeries evolve_and_measure(const SystemParams& p, int dim_cav, int dim_mech,
                                const TimeGrid& grid) {
    LindbladIntegrator integ(p, dim_cav, dim_mech);
    FockState state = build_initial_state(dim_cav, dim_mech, p.n_th);
    OracleSeries out;
    const std::size_t n = grid.node_count();
    out.times = grid.nodes;
    out.amp.resize(n);
    out.xc.resize(n);
    out.np.resize(n);
    out.xm.resize(n);
    out.pm.resize(n);
    double drift_mark = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        out.amp[k] = integ.measure_amp(state);
        out.xc[k] = integ.measure_xc(state);
        out.np[k] = integ.measure_np(state);
        out.xm[k] = integ.measure_xm(state);
        out.pm[k] = integ.measure_pm(state);
        if (grid.nodes[k] >= drift_mark) {
            if (state.trace_deviation() > 1e-6 * (1.0 + p.kappa * grid.nodes[k]))
                throw NumericalError("oracle: trace drift exceeded tolerance at t=" +
                                     std::to_string(grid.nodes[k]));
            drift_mark += 1.0 / p.kappa;
        }
        if (k + 1 < n) integ.step(state, grid.nodes[k], grid.dt);
    }
    return out;
}

Matrix time_ordered_exp(const MatrixSchedule& schedule, double t0, double t1, double dt) {
    const int steps = std::max(1, static_cast<int>(std::ceil((t1 - t0) / dt)));
    const double h = (t1 - t0) / steps;
    Matrix u = Matrix::Identity(schedule.dimension, schedule.dimension);
    for (int k = 0; k < steps; ++k) {
        const Matrix hk = schedule.generator(t0 + (k + 0.5) * h);
        // Frobenius bound: invariant under the unitary conjugations of the
        // split generators
        if (hk.norm() * h > 0.05)
            throw NumericalError("time_ordered_exp: ||H|| dt above 0.05 guard");
        u = matrix_exp(Complex(0, -h) * hk) * u;
    }
    return u;
}

std::pair<double, double> verify_decompositions(const MatrixSchedule& h1,
                                                const MatrixSchedule& h2, double t, double dt) {
    const int dim = h1.dimension;
    const int steps = std::max(1, static_cast<int>(std::ceil(t / dt)));
    const double h = t / steps;

    MatrixSchedule sum{
        [&](double tau) { return Matrix(h1.generator(tau) + h2.generator(tau)); }, dim};
    const Matrix u_full = time_ordered_exp(sum, 0.0, t, h);
    const Matrix u1 = time_ordered_exp(h1, 0.0, t, h);
    const Matrix u2 = time_ordered_exp(h2, 0.0, t, h);

    // V2(t, tau) at segment midpoints, marching down from tau = t on half steps.
    std::vector<Matrix> v2_mid(steps);
    {
        Matrix v = Matrix::Identity(dim, dim);
        for (int k = steps - 1; k >= 0; --k) {
            const double mid = (k + 0.5) * h;
            // advance from tau = (k+1) h down to the midpoint
            v = v * matrix_exp(Complex(0, -0.5 * h) * h2.generator((k + 0.75) * h));
            v2_mid[k] = v;
            v = v * matrix_exp(Complex(0, -0.5 * h) * h2.generator((k + 0.25) * h));
            (void)mid;
        }
    }
    Matrix u_t1 = Matrix::Identity(dim, dim);
    for (int k = 0; k < steps; ++k) {
        const Matrix gen = v2_mid[k] * h1.generator((k + 0.5) * h) * v2_mid[k].adjoint();
        u_t1 = matrix_exp(Complex(0, -h) * gen) * u_t1;
    }
    const double r1 = (u_full - u_t1 * u2).norm();

    // V1(tau, 0) at segment midpoints, marching up from tau = 0 on half steps.
    std::vector<Matrix> v1_mid(steps);
    {
        Matrix v = Matrix::Identity(dim, dim);
        for (int k = 0; k < steps; ++k) {
            v = matrix_exp(Complex(0, -0.5 * h) * h1.generator((k + 0.25) * h)) * v;
            v1_mid[k] = v;
            v = matrix_exp(Complex(0, -0.5 * h) * h1.generator((k + 0.75) * h)) * v;
        }
    }
    Matrix u_t2 = Matrix::Identity(dim, dim);
    for (int k = 0; k < steps; ++k) {
        const Matrix gen = v1_mid[k].adjoint() * h2.generator((k + 0.5) * h) * v1_mid[k];
        u_t2 = matrix_exp(Complex(0, -h) * gen) * u_t2;
    }
    const double r2 = (u_full - u1 * u_t2).norm();
    return {r1, r2};
}

}  // namespace omx::oracle

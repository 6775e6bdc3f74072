#ifndef OMX_ORACLE_HPP
#define OMX_ORACLE_HPP

#include <Eigen/Dense>
#include <functional>

#include "omx/params.hpp"
#include "omx/types.hpp"

namespace omx::oracle {

using Matrix = Eigen::MatrixXcd;

/// Dense density matrix on H_cav (x) H_mech.
struct FockState {
    Matrix rho;
    int dim_cav = 0;
    int dim_mech = 0;

    double trace_deviation() const;      // |tr(rho) - 1|
    double hermiticity_deviation() const;  // max |rho - rho^dagger|
    double min_eigenvalue() const;
};

inline constexpr int kMaxHilbertDim = 4096;

Matrix annihilation_operator(int dim);
Matrix thermal_state(int dim, double n_th);  // truncated + renormalized
Matrix kron(const Matrix& a, const Matrix& b);
Matrix matrix_exp(const Matrix& m);

/// Cavity vacuum (x) truncated mechanical thermal state. Throws NumericalError
/// when the thermal tail n_th^dim / (n_th+1)^(dim+1) is not below 1e-8.
FockState build_initial_state(int dim_cav, int dim_mech, double n_th);

/// Fixed-step RK4 integrator for the master equation with the explicitly
/// time-dependent interaction-picture Hamiltonian
///   H(t) = -sqrt(2) g a^dag a {x cos(omega_m t) + p sin(omega_m t)}
///          + iE(e^{i delta0 t} a^dag - e^{-i delta0 t} a)
/// and dissipators kappa D[a] + gamma_m (n_th+1) D[b] + gamma_m n_th D[b^dag].
class LindbladIntegrator {
  public:
    LindbladIntegrator(const SystemParams& p, int dim_cav, int dim_mech);

    /// One grid step of size dt from time t, substepping internally so each
    /// RK4 substep satisfies dt_sub <= 1e-2 / max_rate.
    void step(FockState& state, double t, double dt) const;

    /// Liouvillian action at time t (exposed for convergence tests).
    Matrix liouvillian(const Matrix& rho, double t) const;

    double max_rate() const { return max_rate_; }

    Complex measure_amp(const FockState& s) const;
    double measure_xc(const FockState& s) const;
    double measure_np(const FockState& s) const;
    double measure_xm(const FockState& s) const;
    double measure_pm(const FockState& s) const;

  private:
    SystemParams params_;
    int dim_cav_, dim_mech_;
    double max_rate_ = 0.0;
    Matrix a_, adag_, num_cav_;       // cavity ops on the product space
    Matrix xm_, pm_;                  // mechanical quadratures
    Matrix coup_x_, coup_p_;          // -sqrt2 g n (x) x_m, -sqrt2 g n (x) p_m
    Matrix jump_a_, jump_b_, jump_bdag_;
    Matrix heff_const_;               // -i/2 sum_k rate_k c_k^dag c_k
    double rate_a_, rate_b_, rate_bdag_;
};

struct OracleSeries {
    RealVec times;
    ComplexVec amp;
    RealVec xc, np, xm, pm;
};

/// Evolve from the standard initial state and record interaction-picture
/// observables at every grid node. Trace drift beyond 1e-6 per unit kappa*t
/// aborts with a NumericalError.
OracleSeries evolve_and_measure(const SystemParams& p, int dim_cav, int dim_mech,
                                const TimeGrid& grid);

/// Time-dependent generator for the decomposition checks.
struct MatrixSchedule {
    std::function<Matrix(double)> generator;
    int dimension = 0;
};

/// Ordered product of midpoint-rule exponentials exp(-i H(t_mid) dt), later
/// factors on the left. Guard: ||H|| dt <= 0.05.
Matrix time_ordered_exp(const MatrixSchedule& schedule, double t0, double t1, double dt);

/// Residuals of the two splitting identities for Texp over H1 + H2:
///   r1 = || Texp(H1+H2) - Texp(V2 H1 V2^dag) Texp(H2) ||,
///        V2(t,tau) = Texp over [tau, t] of H2;
///   r2 = || Texp(H1+H2) - Texp(H1) Texp(V1^dag H2 V1) ||,
///        V1(tau,0) = Texp over [0, tau] of H1.
std::pair<double, double> verify_decompositions(const MatrixSchedule& h1,
                                                const MatrixSchedule& h2, double t, double dt);

}  // namespace omx::oracle

#endif

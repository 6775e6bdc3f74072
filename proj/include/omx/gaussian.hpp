#ifndef OMX_GAUSSIAN_HPP
#define OMX_GAUSSIAN_HPP

#include <memory>
#include <utility>
#include <vector>

#include "omx/correlators.hpp"
#include "omx/types.hpp"

namespace omx::gaussian {

/// State over which forms are averaged: mechanical oscillator and mechanical
/// reservoir thermal at n_th, cavity reservoir vacuum. Second moments:
///   <x^2> = <p^2> = n_th + 1/2,   <x p> = i/2 = -<p x>,
///   <n_m n_m^dag> = (n_th+1) Gamma_m,  <n_m^dag n_m> = n_th Gamma_m,
///   <n_c n_c^dag> = Gamma_c,           <n_c^dag n_c> = 0,
/// first moments zero, sectors uncorrelated.
struct GaussianState {
    double n_th = 0.0;
};

enum class Sector { zero, mechanical, cavity, mixed };

/// Kernel multiplying one noise-operator family: a smooth density sampled on
/// the grid, plus point (delta) terms at grid nodes. Contractions integrate
/// densities by trapezoid and look point terms up directly.
struct NoiseKernel {
    ComplexVec density;                                   // empty or node_count
    std::vector<std::pair<std::size_t, Complex>> points;  // (node, weight)

    bool empty() const { return density.empty() && points.empty(); }
    NoiseKernel conjugated() const;
};

/// Operator-valued linear functional over the Gaussian variables:
///   c_x x_m + c_p p_m + f_m . n_m + f_m_dag . n_m^dag + f_c . n_c + f_c_dag . n_c^dag
/// with kernels sampled on the cache grid.
struct LinearForm {
    std::shared_ptr<const KernelCache> cache;
    Complex c_x{};
    Complex c_p{};
    NoiseKernel f_m, f_m_dag, f_c, f_c_dag;
    Sector tag = Sector::zero;

    Sector computed_sector() const;
    LinearForm hermitian_conjugate() const;
    LinearForm scaled(Complex factor) const;
};

/// Ordered second moment <A B>. Throws GridMismatchError when the forms are
/// sampled on different grids.
Complex second_moment(const LinearForm& a, const LinearForm& b, const GaussianState& state);

/// Scalar commutator [A, B] = <AB> - <BA> assembled from [x,p] = i and
/// [n_i, n_i^dag] = Gamma_i.
Complex form_commutator(const LinearForm& a, const LinearForm& b);

struct Insertion {
    std::size_t position = 0;  // number of exponents to its left
    LinearForm form;
};

/// <e^{L_1} ... K ... e^{L_n}> for zero-mean jointly Gaussian linear forms:
/// exp(sum_i <L_i^2>/2 + sum_{i<j} <L_i L_j>) times the Wick insertion factor.
/// At most two insertions; more is a misuse of this machinery and throws.
Complex ordered_exp_expectation(const std::vector<LinearForm>& exponents,
                                const std::vector<Insertion>& insertions,
                                const GaussianState& state);

// Builders for the transformed-operator forms on a kernel cache.

LinearForm mechanical_x(std::shared_ptr<const KernelCache> cache, Complex coeff);
LinearForm mechanical_p(std::shared_ptr<const KernelCache> cache, Complex coeff);

/// X_m(t, tau) = sqrt2 e^{-gamma_m (t-tau)/2} x_m + n_m(t,tau) + n_m^dag(t,tau)
LinearForm transformed_x(std::shared_ptr<const KernelCache> cache, std::size_t node);
/// P_m(t, tau) = sqrt2 e^{-gamma_m (t-tau)/2} p_m - i n_m(t,tau) + i n_m^dag(t,tau)
LinearForm transformed_p(std::shared_ptr<const KernelCache> cache, std::size_t node);
/// K_m(t, tau) = cos(omega_m tau) X_m + sin(omega_m tau) P_m
LinearForm k_m(std::shared_ptr<const KernelCache> cache, std::size_t node);
/// n_c(t, tau) point operator
LinearForm cavity_noise_point(std::shared_ptr<const KernelCache> cache, std::size_t node);

/// ig int_0^tau e^{-kappa (t-u)} sin(omega_m u) P_m(t,u) du  (dense kernels)
LinearForm exponent_p(std::shared_ptr<const KernelCache> cache, std::size_t tau_node);
/// ig int_0^tau e^{-kappa (t-u)} cos(omega_m u) X_m(t,u) du
LinearForm exponent_x(std::shared_ptr<const KernelCache> cache, std::size_t tau_node);

}  // namespace omx::gaussian

#endif

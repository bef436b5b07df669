#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "sepalpha/params.hpp"

namespace sep {

// boundary regime of the limiting heat semigroup, selected by theta
enum class Regime { dirichlet, robin, neumann };

inline Regime regime_for(double theta) {
    if (theta < 1.0) return Regime::dirichlet;
    if (theta > 1.0) return Regime::neumann;
    return Regime::robin;
}

// Eigenpairs of the uniform-rate interior walk: lambda_l = 4 N^2 sin^2(pi l / 2N)
// with orthonormal modes v_l(x) = sqrt(2/N) sin(pi l x / N) on the interior sites.
struct DiscreteSpectrum {
    explicit DiscreteSpectrum(int N);
    int N;
    Eigen::VectorXd values;  // increasing, entry l-1
    Eigen::MatrixXd vectors; // column l-1, rows are sites 1..N-1
};

// reference kernel at rate alpha with uniform boundary bonds:
// sum_l e^{-alpha lambda_l t} v_l(x) v_l(y)
double discrete_kernel(const DiscreteSpectrum& s, int alpha, int x, int y, double t);
double discrete_kernel(int x, int y, double t, int N, int alpha);

// (e^{-u} - 1 + u) / u^2, series-evaluated below u = 1e-4; 0 <= psi <= min(1/2, 1/u)
double psi(double u);

// Sums over a site window of the iterated time integrals of the reference
// kernel: diag collects the on-window diagonal, boundary pairs the window
// against both wall columns, cross the distinct on-window pairs. Each equals
// an exact psi-weighted eigensum through
// int_0^t int_0^s e^{-a(s-v)} dv ds = t^2 psi(a t).
struct KernelTimeIntegrals {
    double diag = 0.0;
    double boundary = 0.0;
    double cross = 0.0;
};
KernelTimeIntegrals kernel_time_integrals(const std::vector<int>& window, double t,
                                          const ModelParams& p);

// First K positive roots of (ll+lr) cos(b) + (ll lr / b - b) sin(b) = 0, the
// mixed-boundary eigencondition; root k bisected to 1e-12 inside
// ((k-1)pi, (k-1)pi + pi/2), with the first bracket opening at sqrt(ll lr).
Eigen::VectorXd robin_roots(double lambda_l, double lambda_r, int K);

// Truncated eigenexpansion of a test function for one boundary regime.
// Mode shapes: sin(pi k u) (dirichlet, k >= 1), cos(pi k u) (neumann, k >= 0),
// (ll / beta_k) sin(beta_k u) + cos(beta_k u) (robin). Coefficients are
// orthogonal projections; robin norms are kept for inspection.
struct SemigroupExpansion {
    Regime regime = Regime::dirichlet;
    int K = 0;
    double alpha = 1.0;
    double lambda_l = 1.0, lambda_r = 1.0;
    Eigen::VectorXd coeff; // neumann: entry k is mode k (size K+1); else entry k-1
    Eigen::VectorXd roots; // robin only
    Eigen::VectorXd norms; // robin only: ||f_k||^2
};

SemigroupExpansion build_expansion(const std::function<double(double)>& phi,
                                   const ModelParams& p, int K);

double semigroup_eval(const SemigroupExpansion& e, double t, double u);
double semigroup_eval_derivative(const SemigroupExpansion& e, double t, double u);

// S_t phi sampled on the uniform grid u_i = i/(grid_points-1). t = 0 returns
// phi itself; 0 < t < 1e-6 falls back to the finite-difference reference
// solver; otherwise the series with K modes (K = 0 picks the truncation from
// the e^{-pi^2 K^2 alpha t} tail bound).
Eigen::VectorXd semigroup_apply(const std::function<double(double)>& phi, double t,
                                const ModelParams& p, int grid_points = 513, int K = 0);

// Crank-Nicolson solve of the same boundary-value problem on the grid,
// second-order ghost-node boundary rows; the independent cross-check for the
// series route
Eigen::VectorXd heat_reference_solve(const std::function<double(double)>& phi, double t,
                                     const ModelParams& p, int grid_points = 513);

} // namespace sep

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "sepalpha/density.hpp"
#include "sepalpha/kmc.hpp"
#include "sepalpha/params.hpp"
#include "sepalpha/spectral.hpp"
#include "sepalpha/twotime.hpp"

namespace sep {

// Smooth test function in the boundary class selected by theta. Mode sums in
// the regime eigenbasis satisfy their class conditions at every derivative
// order; the theta < 0 class (all derivatives vanish at the walls) is out of
// reach for finite mode sums, so it is built from bumps supported strictly
// inside (0,1) instead and checked up to a finite derivative order.
struct TestFunction {
    Regime regime = Regime::dirichlet;
    bool bump = false;
    Eigen::VectorXd coeff;          // mode coefficients; bump amplitudes when bump
    Eigen::VectorXd roots;          // robin frequencies, polished past the bisection tol
    Eigen::VectorXd center, width;  // bump k lives on [center(k)-width(k), center(k)+width(k)]
    double lambda_l = 1.0, lambda_r = 1.0; // robin wall slopes

    double eval(double u) const;
    // order-j derivative; exact for mode sums, Taylor-mode arithmetic for bumps
    double deriv(double u, int order = 1) const;
    double operator()(double u) const { return eval(u); }
    Eigen::VectorXd on_sites(int N) const; // values at x/N, x = 1..N-1
};

// sine modes sin(pi k u), coeff entry k-1; value class (theta < 1)
TestFunction sine_test_function(const Eigen::VectorXd& coeff);
// cosine modes cos(pi k u), coeff entry k is mode k; gradient class (theta > 1)
TestFunction cosine_test_function(const Eigen::VectorXd& coeff);
// mixed-wall modes (lambda_l/beta_k) sin(beta_k u) + cos(beta_k u) (theta = 1)
TestFunction robin_test_function(const Eigen::VectorXd& coeff, const ModelParams& p);
// compactly supported bumps exp(-1/(1-v^2)), v = (u-center)/width (theta < 0)
TestFunction bump_test_function(const Eigen::VectorXd& amplitude, const Eigen::VectorXd& center,
                                const Eigen::VectorXd& width);

// whether the construction certifies the boundary class used at this theta;
// bumps qualify for any theta < 1, plain sine sums only for 0 <= theta < 1
bool regime_matches(const TestFunction& f, double theta);

// Largest wall-condition violation among derivative orders <= order, relative
// to max(1, size of the derivative that enters the condition). Zero by
// construction for bumps, limited only by roundoff for the mode bases.
double class_defect(const TestFunction& f, int order = 6);

// Closed-form scales of the correlation-decay statements: R bounds the
// boundary-row correlation sup, d normalizes the boundary occupation
// integral, delta is the Holder exponent of its second moment.
struct DecayRates {
    double R = 0.0;
    double d = 0.0;
    double delta = 0.0;
};
DecayRates decay_rates(int N, double theta);

// N^{-1/2} sum_x phi(x/N) (eta(x) - rho(x)); the centering is always the
// deterministic density, never an empirical mean
double field_eval(const Configuration& cfg, const TestFunction& phi, const DensityProfile& rho);

// Per-replica fluctuation field values on a time grid, centered by the
// density path at the matching times. Every replica must carry its event log.
struct FluctuationObservable {
    TestFunction phi;
    std::vector<double> times;
    Eigen::MatrixXd samples; // (replica, grid index)
};
FluctuationObservable field_samples(const std::vector<Trajectory>& ensemble,
                                    const TestFunction& phi, const DensityPath& rho,
                                    const std::vector<double>& times);

// Carre-du-champ of the field at one configuration: the wall terms weighted
// by N^{1-theta} phi^2 plus the bond terms weighted by the squared discrete
// gradient. Its time integral is the predictable quadratic variation of the
// field martingale.
double qv_integrand(const Configuration& cfg, const TestFunction& phi, const ModelParams& p);

// Field martingale reconstructed along one logged trajectory,
//   M_t = Y_t - Y_0 - (bulk + boundary + gradient integrals),
// with the compensator split into the Laplacian term Y_s(alpha Delta_N phi),
// the N^{3/2}/N^theta reservoir term, and the sqrt(N) wall-gradient term. The
// occupation part of each integral is summed exactly between events and the
// density part uses the path's exact time integral, so the reconstruction
// carries no quadrature error.
struct DynkinSeries {
    std::vector<double> times;
    Eigen::VectorXd field;      // Y at the grid times
    Eigen::VectorXd bulk;       // cumulative Laplacian integral
    Eigen::VectorXd boundary;   // cumulative reservoir integral
    Eigen::VectorXd gradient;   // cumulative wall-gradient integral
    Eigen::VectorXd martingale;
};
DynkinSeries dynkin_residual(const Trajectory& traj, const TestFunction& phi,
                             const DensityPath& rho, const std::vector<double>& times,
                             const ModelParams& p);

// Variance of the limiting field's noise part at time t,
//   int_0^t [ int_0^1 2 chi(rho_s(u)) (d_u S_{t-s} f(u))^2 du + wall terms ] ds,
// where the wall terms appear only at theta = 1 and weigh the boundary values
// (S_{t-s} f)(0)^2 and (S_{t-s} f)(1)^2 by lambda (alpha - 2 rho) rho_s + alpha
// lambda rho. rho_su is the hydrodynamic density rho(s, u). The semigroup acts
// diagonally on the stored modes (bumps are projected onto the sine basis
// once), and the time quadrature is graded toward s = t where the fast modes
// are still alive.
double ou_variance_predictor(const TestFunction& f, double t,
                             const std::function<double(double, double)>& rho_su,
                             const ModelParams& p);

// Log-log decay of the transient correlation sup against N: evolves the pair
// hierarchy from zero correlations under a linear initial profile, records
// sup_t max |phi| over the interior pairs ("bulk") and over the pairs touching
// site 1 or N-1 ("boundary"), and fits one slope per (theta, region).
struct DecayFit {
    double theta = 0.0;
    std::string region; // "bulk" or "boundary"
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    std::vector<int> N_list;
    std::vector<double> sup_abs; // per N
};
std::vector<DecayFit> decay_fit(const std::vector<double>& thetas, const std::vector<int>& Ns,
                                const ModelParams& tmpl);
std::string decay_fit_json(const std::vector<DecayFit>& fits);

// MC estimate of E|int_0^t (eta_s(x) - mean of the L sites right of x) ds|
// over logged replicas
EnsembleEstimate replacement_statistic(int x, int L, double t,
                                       const std::vector<Trajectory>& ensemble);

// Empirical-measure pairing <pi_t, G> averaged over replicas against the
// macroscopic prediction (1/N) sum_x G(x/N) rho_t(x/N), with rho_t solved by
// the regime semigroup from the initial profile gamma0 plus the stationary
// offset that homogenizes the wall conditions.
struct HydroReport {
    double mc = 0.0;
    double mc_se = 0.0;
    double solver = 0.0;
    double deviation = 0.0; // mc - solver
    int replicas = 0;
};
HydroReport hydro_check(const std::function<double(double)>& G, double t,
                        const std::vector<Trajectory>& ensemble,
                        const std::function<double(double)>& gamma0, const ModelParams& p);

} // namespace sep

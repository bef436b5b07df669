#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <memory>
#include <stdexcept>

#include "sepalpha/params.hpp"

namespace sep {

// Density values on the interior sites with the reservoir densities pinned at
// the virtual vertices 0 and N.
struct DensityProfile {
    double rho_l = 0.0, rho_r = 0.0;
    Eigen::VectorXd interior; // entry x-1 is rho(x)
    double time = 0.0;

    int N() const { return (int)interior.size() + 1; }
    double full(int x) const {
        if (x == 0) return rho_l;
        if (x == N()) return rho_r;
        if (x < 0 || x > N()) throw std::domain_error("DensityProfile: site outside 0..N");
        return interior(x - 1);
    }
};

DensityProfile make_profile(const ModelParams& p, const Eigen::VectorXd& interior,
                            double time = 0.0);

// interior generator du/dt = A u + c: A is the symmetric tridiagonal part of
// N^2 Delta_N (bond rates alpha in the bulk, alpha lambda_j / N^theta at the
// boundary bonds), c carries the pinned boundary values
struct DensitySystem {
    Eigen::SparseMatrix<double> A;
    Eigen::VectorXd c;
};

DensitySystem density_system(const ModelParams& p);

// unscaled Delta_N^i f on the interior sites, using f's own endpoint values
Eigen::VectorXd density_generator_apply(const DensityProfile& f, const ModelParams& p);

struct StationaryCoefficients {
    double a = 0.0, b = 0.0;        // profile a*x + b on the interior
    bool closed_form_valid = false; // false when N^theta == lambda_l degenerates
    double a_closed = 0.0, b_closed = 0.0;
    Eigen::VectorXd interior;
};

StationaryCoefficients stationary_profile(const ModelParams& p);

// Exact-in-time representation of the pinned diffusion through the spectral
// form of the symmetric tridiagonal generator. Used directly as the
// time-dependent source of the correlation solver, and as the fast path of
// evolve_density when the bond rates are uniform.
class DensityPath {
  public:
    DensityPath(const DensityProfile& rho0, const ModelParams& p);
    ~DensityPath();
    DensityPath(DensityPath&&) noexcept;

    const ModelParams& params() const { return p_; }
    Eigen::VectorXd at(double t) const;    // interior values
    Eigen::VectorXd deriv(double t) const; // time derivative
    Eigen::VectorXd integral(double t0, double t1) const; // int_{t0}^{t1} rho_s ds, exact
    DensityProfile profile(double t) const;

  private:
    ModelParams p_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// implicit-trapezoid solution of the pinned discrete heat equation; dispatches
// to the exact spectral path when the bond rates are uniform (theta = 0,
// lambda = 1)
DensityProfile evolve_density(const DensityProfile& rho0, double t, const ModelParams& p,
                              double tol = 1e-10);

// g_N = stationary ramp + bump, the admissible initial profile family
Eigen::VectorXd admissible_initial_profile(const std::function<double(double)>& f,
                                           const ModelParams& p);

} // namespace sep

#pragma once

#include <Eigen/Dense>

#include "sepalpha/density.hpp"
#include "sepalpha/params.hpp"
#include "sepalpha/triangle.hpp"

namespace sep {

// Unequal-time pair moments E[eta-bar_v(x) eta-bar_r(y)]: the row index x is
// read at the earlier time v, the column index y at r. Sites are 1-based.
struct TwoTimeField {
    int N = 0;
    double v = 0.0;
    double r = 0.0;
    Eigen::MatrixXd values; // entry (x-1, y-1)

    double operator()(int x, int y) const { return values(x - 1, y - 1); }
};

// Propagates an equal-time correlation field to unequal times: for each fixed
// x the slice y -> E[eta-bar_v(x) eta-bar_r(y)] solves the one-particle line
// system in r with zero endpoint values, started from the time-v moments. The
// diagonal of the initial slice carries the true variance, assembled from the
// field's extension and the density profile at the same time. r < v is a
// domain error; r = v returns the assembled initial matrix.
TwoTimeField two_time_correlation(const CorrelationField& phi_v, const DensityProfile& rho_v,
                                  double r, const ModelParams& p, double tol = 1e-9);

// Steady state of the correlation hierarchy: solves the triangle system with
// the stationary profile's gradient source. Entries are <= 0, and for a
// linear interior profile they equal -(N a)^2 times the absorbed pair walk's
// superdiagonal occupation time, a the profile slope.
CorrelationField stationary_correlation(const ModelParams& p);

// E[( integral_0^t Y_s(iota_eps^j) ds )^2] for the stationary process, where
// iota_eps^0 = eps^{-1} 1_{(0,eps]} and iota_eps^1 = eps^{-1} 1_{[1-eps,1)}.
// Expanded into window-summed two-time moments and integrated exactly through
// an augmented linear system, so the only error is the time stepper's.
// Requires theta < 1 (scope of the vanishing statement) and 0 < eps < 1/2.
double boundary_window_statistic(double eps, int j, double t, const ModelParams& p,
                                 double tol = 1e-8);

} // namespace sep

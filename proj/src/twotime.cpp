#include "sepalpha/twotime.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "sepalpha/integrate.hpp"
#include "sepalpha/walks.hpp"

namespace sep {

namespace {

// equal-time moment matrix E[eta-bar(x) eta-bar(z)]: the packed field off the
// diagonal, the true variance chi/alpha + ((alpha-1)/alpha) phi(x,x) on it
Eigen::MatrixXd equal_time_matrix(const CorrelationField& phi, const DensityProfile& rho,
                                  const ModelParams& p) {
    const int n = p.N - 1;
    TriangleLattice lat(p.N, phi.with_diagonal);
    Eigen::MatrixXd m(n, n);
    for (int x = 1; x <= n; ++x) {
        for (int y = x; y <= n; ++y) {
            double val;
            if (x == y)
                val = variance_from_extended(
                    phi.with_diagonal ? phi.values(lat.index(x, x)) : 0.0, rho.full(x), p);
            else
                val = phi.values(lat.index(x, y));
            m(x - 1, y - 1) = val;
            m(y - 1, x - 1) = val;
        }
    }
    return m;
}

void check_field_inputs(const CorrelationField& phi, const DensityProfile& rho,
                        const ModelParams& p, const char* who) {
    std::ostringstream msg;
    if (phi.N != p.N || rho.N() != p.N) {
        msg << who << ": lattice size mismatch";
        throw std::invalid_argument(msg.str());
    }
    if (phi.with_diagonal != (p.alpha >= 2)) {
        msg << who << ": diagonal flag contradicts alpha";
        throw std::invalid_argument(msg.str());
    }
    if (std::abs(phi.time - rho.time) > 1e-12 * std::max(1.0, std::abs(phi.time))) {
        msg << who << ": field and profile times differ";
        throw std::invalid_argument(msg.str());
    }
}

} // namespace

TwoTimeField two_time_correlation(const CorrelationField& phi_v, const DensityProfile& rho_v,
                                  double r, const ModelParams& p, double tol) {
    p.validate_for_solvers();
    check_field_inputs(phi_v, rho_v, p, "two_time_correlation");
    const double v = phi_v.time;
    if (r < v) throw std::domain_error("two_time_correlation: r precedes the field time");
    TwoTimeField out;
    out.N = p.N;
    out.v = v;
    out.r = r;
    Eigen::MatrixXd m0 = equal_time_matrix(phi_v, rho_v, p);
    if (r == v) {
        out.values = std::move(m0);
        return out;
    }
    // columns of m0 are the fixed-x slices; the propagated matrix holds
    // (e^{tau A} m0)(y, x) = E[eta-bar_v(x) eta-bar_r(y)], so transpose back
    out.values = line_walk_propagate(m0, r - v, p, tol).transpose();
    return out;
}

CorrelationField stationary_correlation(const ModelParams& p) {
    p.validate_for_solvers();
    StationaryCoefficients sc = stationary_profile(p);
    DensityProfile rho = make_profile(p, sc.interior, 0.0);
    Eigen::VectorXd g = correlation_source(rho);
    TriangleLattice lat(p.N, p.alpha >= 2);
    Eigen::SparseMatrix<double> A = correlation_generator_matrix(lat, p);
    A *= double(p.N) * p.N;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(lat.size());
    for (int x = 1; x <= p.N - 2; ++x) rhs(lat.index(x, x + 1)) = -g(x - 1);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("stationary_correlation: factorization failed");
    CorrelationField f;
    f.N = p.N;
    f.with_diagonal = p.alpha >= 2;
    f.time = 0.0;
    f.values = lu.solve(rhs);
    const double defect = (A * f.values - rhs).cwiseAbs().maxCoeff();
    Eigen::VectorXd weighted = Eigen::VectorXd::Zero(A.rows());
    for (int k = 0; k < A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
            weighted(it.row()) += std::abs(it.value()) * std::abs(f.values(it.col()));
    const double scaled = defect / std::max(1.0, weighted.maxCoeff());
    if (scaled > 1e-10) {
        std::ostringstream msg;
        msg << "stationary_correlation: scaled residual " << scaled << " exceeds 1e-10";
        throw std::runtime_error(msg.str());
    }
    return f;
}

double boundary_window_statistic(double eps, int j, double t, const ModelParams& p, double tol) {
    p.validate_for_solvers();
    if (p.theta >= 1)
        throw std::domain_error("boundary_window_statistic: statement covers theta < 1 only");
    if (!(eps > 0.0 && eps < 0.5))
        throw std::invalid_argument("boundary_window_statistic: eps outside (0, 1/2)");
    if (j != 0 && j != 1)
        throw std::invalid_argument("boundary_window_statistic: side must be 0 or 1");
    if (t < 0) throw std::domain_error("boundary_window_statistic: negative horizon");
    if (!(tol > 0))
        throw std::invalid_argument("boundary_window_statistic: tolerance must be positive");
    const int width = (int)std::floor(eps * p.N + 1e-12);
    if (width < 1) throw std::domain_error("boundary_window_statistic: window misses the lattice");
    if (t == 0.0) return 0.0;

    const int n = p.N - 1;
    std::vector<int> window(width);
    for (int i = 0; i < width; ++i) window[i] = j == 0 ? 1 + i : p.N - 1 - i;

    CorrelationField phi = stationary_correlation(p);
    StationaryCoefficients sc = stationary_profile(p);
    DensityProfile rho = make_profile(p, sc.interior, 0.0);
    Eigen::MatrixXd m0 = equal_time_matrix(phi, rho, p);
    Eigen::VectorXd slice = Eigen::VectorXd::Zero(n);
    for (int x : window) slice += m0.row(x - 1).transpose();

    // stationarity collapses the double time integral: with m0 fixed,
    // E[(int Y)^2] = 2/(eps^2 N) sum_{y in W} int_0^t int_0^sigma
    // (e^{tau A} slice)(y) dtau dsigma, read off the integral block of the
    // augmented system u' = A u + slice, w' = u
    Eigen::VectorXd src = Eigen::VectorXd::Zero(2 * n);
    src.head(n) = slice;
    StiffStepper::Options opt;
    opt.tol = tol;
    StiffStepper stepper(with_running_integral(line_walk_generator(p)), opt,
                         [&](double, Eigen::VectorXd& b) { b = src; });
    Eigen::VectorXd state = Eigen::VectorXd::Zero(2 * n);
    stepper.advance(state, t);
    double sum = 0.0;
    for (int y : window) sum += state(n + y - 1);
    return 2.0 * sum / (eps * eps * p.N);
}

} // namespace sep

#include "sepalpha/spectral.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Sparse>

#include "sepalpha/integrate.hpp"

namespace sep {

namespace {

constexpr double kPi = 3.14159265358979323846;

// 16-point Gauss-Legendre rule on [-1,1], upper-half nodes
constexpr double kGx[8] = {0.09501250983763744, 0.28160355077925891, 0.45801677765722739,
                           0.61787624440264375, 0.75540440835500303, 0.86563120238783174,
                           0.94457502307323258, 0.98940093499164993};
constexpr double kGw[8] = {0.18945061045506850, 0.18260341504492359, 0.16915651939500254,
                           0.14959598881657673, 0.12462897125553387, 0.09515851168249278,
                           0.06225352393864789, 0.02715245941175409};

template <class F> double integrate01(const F& f, int panels) {
    const double h = 1.0 / panels;
    double acc = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double c = (p + 0.5) * h;
        for (int j = 0; j < 8; ++j) {
            const double d = 0.5 * h * kGx[j];
            acc += kGw[j] * (f(c + d) + f(c - d));
        }
    }
    return 0.5 * h * acc;
}

double robin_mode(double lambda_l, double beta, double u) {
    return (lambda_l / beta) * std::sin(beta * u) + std::cos(beta * u);
}

// zero iff beta^2 is an eigenvalue of -d^2/du^2 under f'(0) = ll f(0),
// f'(1) = -lr f(1); continuous on (0, inf) with sign changes bracketing
// exactly one root per branch of the equivalent tangent equation
double robin_defect(double lambda_l, double lambda_r, double b) {
    return (lambda_l + lambda_r) * std::cos(b) + (lambda_l * lambda_r / b - b) * std::sin(b);
}

} // namespace

DiscreteSpectrum::DiscreteSpectrum(int N_) : N(N_) {
    if (N < 3) throw std::invalid_argument("DiscreteSpectrum: N must be at least 3");
    values.resize(N - 1);
    vectors.resize(N - 1, N - 1);
    const double scale = std::sqrt(2.0 / N);
    for (int l = 1; l <= N - 1; ++l) {
        const double s = std::sin(kPi * l / (2.0 * N));
        values(l - 1) = 4.0 * double(N) * double(N) * s * s;
        for (int x = 1; x <= N - 1; ++x)
            vectors(x - 1, l - 1) = scale * std::sin(kPi * l * x / N);
    }
}

double discrete_kernel(const DiscreteSpectrum& s, int alpha, int x, int y, double t) {
    if (x < 1 || x > s.N - 1 || y < 1 || y > s.N - 1)
        throw std::invalid_argument("discrete_kernel: site outside the interior");
    if (t < 0) throw std::domain_error("discrete_kernel: negative time");
    double acc = 0.0;
    for (int l = 0; l < s.N - 1; ++l)
        acc += std::exp(-alpha * s.values(l) * t) * s.vectors(x - 1, l) * s.vectors(y - 1, l);
    return acc;
}

double discrete_kernel(int x, int y, double t, int N, int alpha) {
    return discrete_kernel(DiscreteSpectrum(N), alpha, x, y, t);
}

double psi(double u) {
    if (u < 0) throw std::domain_error("psi: negative argument");
    if (u < 1e-4) return 0.5 - u / 6.0 + u * u / 24.0 - u * u * u / 120.0;
    return (std::expm1(-u) + u) / (u * u);
}

KernelTimeIntegrals kernel_time_integrals(const std::vector<int>& window, double t,
                                          const ModelParams& p) {
    p.validate_for_solvers();
    if (t < 0) throw std::domain_error("kernel_time_integrals: negative horizon");
    for (int x : window)
        if (x < 1 || x > p.N - 1)
            throw std::invalid_argument("kernel_time_integrals: window site outside interior");
    DiscreteSpectrum spec(p.N);
    KernelTimeIntegrals out;
    for (int l = 0; l < p.N - 1; ++l) {
        const double w = t * t * psi(p.alpha * spec.values(l) * t);
        double lin = 0.0, sq = 0.0;
        for (int x : window) {
            const double v = spec.vectors(x - 1, l);
            lin += v;
            sq += v * v;
        }
        const double wall = spec.vectors(0, l) + spec.vectors(p.N - 2, l);
        out.diag += w * sq;
        out.boundary += w * wall * lin;
        out.cross += w * (lin * lin - sq);
    }
    return out;
}

Eigen::VectorXd robin_roots(double lambda_l, double lambda_r, int K) {
    if (!(lambda_l > 0) || !(lambda_r > 0))
        throw std::invalid_argument("robin_roots: couplings must be positive");
    if (K < 1) throw std::invalid_argument("robin_roots: need K >= 1");
    Eigen::VectorXd roots(K);
    for (int k = 1; k <= K; ++k) {
        // one sign change per bracket: the defect is (ll+lr)(-1)^(k-1) at the
        // left edge and has the sign of -(b - ll lr / b)(-1)^(k-1) at the right
        double lo = (k == 1) ? std::sqrt(lambda_l * lambda_r) : (k - 1) * kPi;
        double hi = (k - 1) * kPi + kPi / 2.0;
        double flo = robin_defect(lambda_l, lambda_r, lo);
        if (k > 1) {
            // nudge off the bracket edge where sin vanishes exactly
            lo += 1e-12 * std::max(1.0, lo);
            flo = robin_defect(lambda_l, lambda_r, lo);
        }
        double fhi = robin_defect(lambda_l, lambda_r, hi);
        if (flo * fhi > 0) throw std::runtime_error("robin_roots: bracket lost a sign change");
        while (hi - lo > 1e-12) {
            const double mid = 0.5 * (lo + hi);
            const double fm = robin_defect(lambda_l, lambda_r, mid);
            if (fm == 0.0) {
                lo = hi = mid;
                break;
            }
            if (flo * fm < 0) {
                hi = mid;
            } else {
                lo = mid;
                flo = fm;
            }
        }
        roots(k - 1) = 0.5 * (lo + hi);
    }
    return roots;
}

SemigroupExpansion build_expansion(const std::function<double(double)>& phi,
                                   const ModelParams& p, int K) {
    p.validate_for_solvers();
    if (K < 1) throw std::invalid_argument("build_expansion: need K >= 1");
    SemigroupExpansion e;
    e.regime = regime_for(p.theta);
    e.K = K;
    e.alpha = p.alpha;
    e.lambda_l = p.lambda_l;
    e.lambda_r = p.lambda_r;
    const int panels = std::max(48, 2 * K);
    switch (e.regime) {
    case Regime::dirichlet:
        e.coeff.resize(K);
        for (int k = 1; k <= K; ++k)
            e.coeff(k - 1) =
                2.0 * integrate01([&](double u) { return phi(u) * std::sin(kPi * k * u); }, panels);
        break;
    case Regime::neumann:
        e.coeff.resize(K + 1);
        e.coeff(0) = integrate01(phi, panels);
        for (int k = 1; k <= K; ++k)
            e.coeff(k) =
                2.0 * integrate01([&](double u) { return phi(u) * std::cos(kPi * k * u); }, panels);
        break;
    case Regime::robin:
        e.roots = robin_roots(p.lambda_l, p.lambda_r, K);
        e.coeff.resize(K);
        e.norms.resize(K);
        for (int k = 0; k < K; ++k) {
            const double b = e.roots(k);
            auto mode = [&](double u) { return robin_mode(p.lambda_l, b, u); };
            e.norms(k) = integrate01([&](double u) { return mode(u) * mode(u); }, panels);
            e.coeff(k) = integrate01([&](double u) { return phi(u) * mode(u); }, panels) / e.norms(k);
        }
        break;
    }
    return e;
}

double semigroup_eval(const SemigroupExpansion& e, double t, double u) {
    if (t < 0) throw std::domain_error("semigroup_eval: negative time");
    double acc = 0.0;
    switch (e.regime) {
    case Regime::dirichlet:
        for (int k = 1; k <= e.K; ++k)
            acc += e.coeff(k - 1) * std::exp(-kPi * kPi * k * k * e.alpha * t) *
                   std::sin(kPi * k * u);
        break;
    case Regime::neumann:
        acc = e.coeff(0);
        for (int k = 1; k <= e.K; ++k)
            acc += e.coeff(k) * std::exp(-kPi * kPi * k * k * e.alpha * t) * std::cos(kPi * k * u);
        break;
    case Regime::robin:
        for (int k = 0; k < e.K; ++k) {
            const double b = e.roots(k);
            acc += e.coeff(k) * std::exp(-b * b * e.alpha * t) * robin_mode(e.lambda_l, b, u);
        }
        break;
    }
    return acc;
}

double semigroup_eval_derivative(const SemigroupExpansion& e, double t, double u) {
    if (t < 0) throw std::domain_error("semigroup_eval_derivative: negative time");
    double acc = 0.0;
    switch (e.regime) {
    case Regime::dirichlet:
        for (int k = 1; k <= e.K; ++k)
            acc += e.coeff(k - 1) * std::exp(-kPi * kPi * k * k * e.alpha * t) * kPi * k *
                   std::cos(kPi * k * u);
        break;
    case Regime::neumann:
        for (int k = 1; k <= e.K; ++k)
            acc -= e.coeff(k) * std::exp(-kPi * kPi * k * k * e.alpha * t) * kPi * k *
                   std::sin(kPi * k * u);
        break;
    case Regime::robin:
        for (int k = 0; k < e.K; ++k) {
            const double b = e.roots(k);
            acc += e.coeff(k) * std::exp(-b * b * e.alpha * t) *
                   (e.lambda_l * std::cos(b * u) - b * std::sin(b * u));
        }
        break;
    }
    return acc;
}

Eigen::VectorXd semigroup_apply(const std::function<double(double)>& phi, double t,
                                const ModelParams& p, int grid_points, int K) {
    p.validate_for_solvers();
    if (t < 0) throw std::domain_error("semigroup_apply: negative time");
    if (grid_points < 2) throw std::invalid_argument("semigroup_apply: need at least two points");
    const int M = grid_points - 1;
    if (t == 0.0) {
        Eigen::VectorXd out(grid_points);
        for (int i = 0; i <= M; ++i) out(i) = phi(double(i) / M);
        return out;
    }
    // below this horizon the series needs thousands of modes; the grid solver
    // is the better tool
    if (t < 1e-6) return heat_reference_solve(phi, t, p, grid_points);
    if (K == 0) {
        // smallest K with e^{-pi^2 K^2 alpha t} below 1e-10
        const double k2 = std::log(1e10) / (kPi * kPi * p.alpha * t);
        K = (int)std::ceil(std::sqrt(k2)) + (regime_for(p.theta) == Regime::robin ? 1 : 0);
        K = std::min(std::max(K, 8), 512);
    }
    SemigroupExpansion e = build_expansion(phi, p, K);
    Eigen::VectorXd out(grid_points);
    for (int i = 0; i <= M; ++i) out(i) = semigroup_eval(e, t, double(i) / M);
    return out;
}

Eigen::VectorXd heat_reference_solve(const std::function<double(double)>& phi, double t,
                                     const ModelParams& p, int grid_points) {
    p.validate_for_solvers();
    if (t < 0) throw std::domain_error("heat_reference_solve: negative time");
    if (grid_points < 3) throw std::invalid_argument("heat_reference_solve: grid too coarse");
    const int M = grid_points - 1;
    const double h = 1.0 / M;
    const double a = double(p.alpha);
    Eigen::VectorXd u(grid_points);
    for (int i = 0; i <= M; ++i) u(i) = phi(double(i) / M);
    if (t == 0.0) return u;

    const Regime regime = regime_for(p.theta);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(3 * (std::size_t)grid_points);
    for (int i = 1; i < M; ++i) {
        trip.emplace_back(i, i - 1, a / (h * h));
        trip.emplace_back(i, i, -2.0 * a / (h * h));
        trip.emplace_back(i, i + 1, a / (h * h));
    }
    if (regime != Regime::dirichlet) {
        // ghost-node closure of f'(0) = kl f(0), f'(1) = -kr f(1) at second order
        const double kl = regime == Regime::robin ? p.lambda_l : 0.0;
        const double kr = regime == Regime::robin ? p.lambda_r : 0.0;
        trip.emplace_back(0, 0, -(2.0 + 2.0 * h * kl) * a / (h * h));
        trip.emplace_back(0, 1, 2.0 * a / (h * h));
        trip.emplace_back(M, M, -(2.0 + 2.0 * h * kr) * a / (h * h));
        trip.emplace_back(M, M - 1, 2.0 * a / (h * h));
    }
    Eigen::SparseMatrix<double> A(grid_points, grid_points);
    A.setFromTriplets(trip.begin(), trip.end());

    StiffStepper::Options opt;
    opt.tol = 1e-8;
    opt.h_init = std::min(1e-4, t / 8.0);
    StiffStepper stepper(std::move(A), opt);
    stepper.advance(u, t);
    return u;
}

} // namespace sep

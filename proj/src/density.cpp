#include "sepalpha/density.hpp"

#include <cmath>
#include <vector>

#include "sepalpha/integrate.hpp"
#include "sepalpha/linalg.hpp"

namespace sep {

DensityProfile make_profile(const ModelParams& p, const Eigen::VectorXd& interior, double time) {
    if ((int)interior.size() != p.N - 1)
        throw std::invalid_argument("make_profile: interior must have N-1 entries");
    return DensityProfile{p.rho_l, p.rho_r, interior, time};
}

DensitySystem density_system(const ModelParams& p) {
    p.validate_for_solvers();
    const int L = p.N - 1;
    const double n2 = double(p.N) * p.N;
    const double al = p.alpha;
    const double bl = p.bond_rate_left(), br = p.bond_rate_right();

    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(L);
    for (int x = 1; x <= L; ++x) {
        double left = (x == 1) ? bl : al;
        double right = (x == L) ? br : al;
        trip.emplace_back(x - 1, x - 1, -n2 * (left + right));
        if (x > 1) trip.emplace_back(x - 1, x - 2, n2 * al);
        if (x < L) trip.emplace_back(x - 1, x, n2 * al);
    }
    c(0) = n2 * bl * p.rho_l;
    c(L - 1) = n2 * br * p.rho_r;
    DensitySystem sys;
    sys.A.resize(L, L);
    sys.A.setFromTriplets(trip.begin(), trip.end());
    sys.A.makeCompressed();
    sys.c = std::move(c);
    return sys;
}

Eigen::VectorXd density_generator_apply(const DensityProfile& f, const ModelParams& p) {
    const int L = p.N - 1;
    if ((int)f.interior.size() != L)
        throw std::invalid_argument("density_generator_apply: size mismatch");
    const double al = p.alpha;
    const double bl = al * p.lambda_l / p.n_theta(), br = al * p.lambda_r / p.n_theta();
    Eigen::VectorXd out(L);
    for (int x = 1; x <= L; ++x) {
        double cl = (x == 1) ? bl : al;
        double cr = (x == L) ? br : al;
        out(x - 1) = cl * (f.full(x - 1) - f.full(x)) + cr * (f.full(x + 1) - f.full(x));
    }
    return out;
}

StationaryCoefficients stationary_profile(const ModelParams& p) {
    DensitySystem sys = density_system(p);
    StationaryCoefficients out;
    out.interior = sparse_solve(sys.A, Eigen::VectorXd(-sys.c));
    // interior harmonicity with uniform bulk rates forces an exact ramp
    out.a = out.interior(1) - out.interior(0);
    out.b = out.interior(0) - out.a;

    double nt = p.n_theta();
    if (std::abs(nt - p.lambda_l) > 1e-9 * nt) {
        double denom = p.lambda_l * p.lambda_r * (p.N - 1) + p.lambda_l * nt +
                       p.lambda_r * (nt - p.lambda_l);
        out.b_closed = (p.lambda_r * p.rho_r * (nt - p.lambda_l) +
                        p.lambda_l * p.rho_l * (nt + (p.N - 1) * p.lambda_r)) /
                       denom;
        out.a_closed = p.lambda_l * (out.b_closed - p.rho_l) / (nt - p.lambda_l);
        out.closed_form_valid = true;
    }
    return out;
}

struct DensityPath::Impl {
    SymmetricEigen eig;
    Eigen::VectorXd fixed; // stationary interior values
    Eigen::VectorXd y0;    // rho0 - fixed

    Impl(const Eigen::MatrixXd& A, Eigen::VectorXd fixed_, Eigen::VectorXd y0_)
        : eig(A), fixed(std::move(fixed_)), y0(std::move(y0_)) {}
};

DensityPath::DensityPath(const DensityProfile& rho0, const ModelParams& p) : p_(p) {
    DensitySystem sys = density_system(p);
    Eigen::VectorXd fixed = sparse_solve(sys.A, Eigen::VectorXd(-sys.c));
    if ((int)rho0.interior.size() != p.N - 1)
        throw std::invalid_argument("DensityPath: profile size mismatch");
    Eigen::VectorXd y0 = rho0.interior - fixed;
    impl_ = std::make_unique<Impl>(Eigen::MatrixXd(sys.A), std::move(fixed), std::move(y0));
}

DensityPath::~DensityPath() = default;
DensityPath::DensityPath(DensityPath&&) noexcept = default;

Eigen::VectorXd DensityPath::at(double t) const {
    return impl_->fixed + impl_->eig.propagate(impl_->y0, t);
}

Eigen::VectorXd DensityPath::deriv(double t) const {
    return impl_->eig.propagate_derivative(impl_->y0, t);
}

Eigen::VectorXd DensityPath::integral(double t0, double t1) const {
    if (t1 < t0) throw std::domain_error("DensityPath::integral: reversed window");
    return (t1 - t0) * impl_->fixed + impl_->eig.propagate_integral(impl_->y0, t0, t1);
}

DensityProfile DensityPath::profile(double t) const { return make_profile(p_, at(t), t); }

DensityProfile evolve_density(const DensityProfile& rho0, double t, const ModelParams& p,
                              double tol) {
    if (t < 0) throw std::domain_error("evolve_density: negative time");
    const double n2 = double(p.N) * p.N;
    bool uniform_rates = p.theta == 0.0 && p.lambda_l == 1.0 && p.lambda_r == 1.0;
    if (uniform_rates) {
        DensityPath path(rho0, p);
        return path.profile(t);
    }
    DensitySystem sys = density_system(p);
    StiffStepper::Options opt;
    opt.tol = tol;
    opt.h_init = std::min(1e-2, 0.1 / n2);
    Eigen::VectorXd c = sys.c;
    StiffStepper stepper(std::move(sys.A), opt,
                         [&c](double, Eigen::VectorXd& b) { b = c; });
    Eigen::VectorXd u = rho0.interior;
    stepper.advance(u, t);
    return make_profile(p, u, t);
}

Eigen::VectorXd admissible_initial_profile(const std::function<double(double)>& f,
                                           const ModelParams& p) {
    p.validate_for_solvers();
    const double nt = p.n_theta();
    double slope, offset; // ramp g(u) = offset + slope*u
    if (std::abs(nt - p.lambda_l) > 1e-9 * nt && std::abs(nt - p.lambda_r) > 1e-9 * nt &&
        p.lambda_l == p.lambda_r) {
        double mu = p.N * p.lambda_l / (nt - p.lambda_l);
        offset = (p.rho_r + p.rho_l * (1.0 + mu)) / (2.0 + mu);
        slope = mu * (p.rho_r - p.rho_l) / (2.0 + mu);
    } else {
        // closed Robin form unavailable; fall back to the discrete ramp
        StationaryCoefficients ss = stationary_profile(p);
        slope = p.N * ss.a;
        offset = ss.b;
    }
    Eigen::VectorXd g(p.N - 1);
    for (int x = 1; x <= p.N - 1; ++x) {
        double u = double(x) / p.N;
        g(x - 1) = offset + slope * u + (f ? f(u) : 0.0);
        if (g(x - 1) < 0.0 || g(x - 1) > double(p.alpha))
            throw std::domain_error("admissible_initial_profile: profile escapes [0,alpha]");
    }
    return g;
}

} // namespace sep

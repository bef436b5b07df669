#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "sepalpha/density.hpp"
#include "sepalpha/oracle.hpp"

using namespace sep;

namespace {

ModelParams make_params(int alpha, int N, double theta, double ll, double lr, double rl,
                        double rr) {
    ModelParams p;
    p.alpha = alpha;
    p.N = N;
    p.theta = theta;
    p.lambda_l = ll;
    p.lambda_r = lr;
    p.rho_l = rl;
    p.rho_r = rr;
    return p;
}

} // namespace

TEST_CASE("discrete generator on ramps and constants") {
    ModelParams p = make_params(2, 8, 0.0, 1.0, 1.0, 0.6, 1.4);
    // slope through the pinned endpoints: exactly harmonic for uniform rates
    Eigen::VectorXd ramp(7);
    for (int x = 1; x <= 7; ++x) ramp(x - 1) = 0.6 + (1.4 - 0.6) * x / 8.0;
    DensityProfile f = make_profile(p, ramp);
    Eigen::VectorXd lap = density_generator_apply(f, p);
    CHECK(lap.cwiseAbs().maxCoeff() < 1e-14);

    ModelParams pc = make_params(3, 6, 1.3, 0.4, 0.9, 2.0, 2.0);
    DensityProfile fc = make_profile(pc, Eigen::VectorXd::Constant(5, 2.0));
    CHECK(density_generator_apply(fc, pc).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("boundary-site harmonicity of the ramp profile") {
    // theta=1, lambda=1, N=5, rho_l=0, rho_r=1: x/13 + 4/13 is annihilated
    ModelParams p = make_params(1, 5, 1.0, 1.0, 1.0, 0.0, 1.0);
    Eigen::VectorXd vals(4);
    for (int x = 1; x <= 4; ++x) vals(x - 1) = x / 13.0 + 4.0 / 13.0;
    DensityProfile f{0.0, 1.0, vals, 0.0};
    Eigen::VectorXd lap = density_generator_apply(f, p);
    CHECK(std::abs(lap(0)) < 1e-15);
    CHECK(std::abs(lap(3)) < 1e-15);
}

TEST_CASE("stationary profile") {
    // equilibrium: flat
    ModelParams pe = make_params(2, 9, 0.5, 0.7, 0.7, 1.2, 1.2);
    StationaryCoefficients se = stationary_profile(pe);
    CHECK(std::abs(se.a) < 1e-13);
    CHECK(se.b == doctest::Approx(1.2));

    // ramp example with the closed-form cross-check
    ModelParams p = make_params(1, 5, 1.0, 1.0, 1.0, 0.0, 1.0);
    StationaryCoefficients s = stationary_profile(p);
    CHECK(s.a == doctest::Approx(1.0 / 13.0).epsilon(1e-12));
    CHECK(s.b == doctest::Approx(4.0 / 13.0).epsilon(1e-12));
    REQUIRE(s.closed_form_valid);
    CHECK(s.a_closed == doctest::Approx(s.a).epsilon(1e-10));
    CHECK(s.b_closed == doctest::Approx(s.b).epsilon(1e-10));

    // degenerate closed form (N^theta = lambda): direct solve gives the
    // uniform-rate interpolation rho_l + x (rho_r - rho_l)/N
    ModelParams pd = make_params(2, 7, 0.0, 1.0, 1.0, 0.4, 1.6);
    StationaryCoefficients sd = stationary_profile(pd);
    CHECK_FALSE(sd.closed_form_valid);
    for (int x = 1; x <= 6; ++x)
        CHECK(sd.interior(x - 1) == doctest::Approx(0.4 + x * (1.6 - 0.4) / 7.0).epsilon(1e-12));

    // residual of the assembled profile under the scaled generator
    for (const auto& q : {pe, p, pd}) {
        StationaryCoefficients ss = stationary_profile(q);
        DensityProfile prof{q.rho_l, q.rho_r, ss.interior, 0.0};
        double n2 = double(q.N) * q.N;
        CHECK((n2 * density_generator_apply(prof, q)).cwiseAbs().maxCoeff() < 1e-10 * n2);
    }
}

TEST_CASE("evolve_density: constants, relaxation, bounds") {
    ModelParams p = make_params(2, 12, 0.8, 0.9, 0.6, 1.1, 1.1);
    DensityProfile flat = make_profile(p, Eigen::VectorXd::Constant(11, 1.1));
    DensityProfile out = evolve_density(flat, 0.4, p);
    CHECK((out.interior.array() - 1.1).abs().maxCoeff() < 1e-12);

    ModelParams pr = make_params(3, 10, -0.5, 0.8, 0.5, 0.3, 2.4);
    Eigen::VectorXd init(9);
    for (int x = 1; x <= 9; ++x) init(x - 1) = 1.5 + 1.2 * std::sin(2.0 * M_PI * x / 10.0);
    DensityProfile rho0 = make_profile(pr, init);
    StationaryCoefficients ss = stationary_profile(pr);
    DensityProfile late = evolve_density(rho0, 25.0, pr);
    CHECK((late.interior - ss.interior).cwiseAbs().maxCoeff() < 1e-8);

    // interior values stay inside [0, alpha] along the way
    for (double t : {0.001, 0.01, 0.05, 0.2, 1.0}) {
        DensityProfile mid = evolve_density(rho0, t, pr);
        CHECK(mid.interior.minCoeff() > -1e-9);
        CHECK(mid.interior.maxCoeff() < 3.0 + 1e-9);
    }
}

TEST_CASE("evolve_density matches the exact spectral path") {
    // uniform-rate fast path vs the stepping path on a tilted system
    ModelParams p = make_params(2, 9, 0.0, 1.0, 1.0, 0.5, 1.8);
    Eigen::VectorXd init(8);
    for (int x = 1; x <= 8; ++x) init(x - 1) = 1.0 + 0.8 * std::cos(3.0 * x);
    DensityProfile rho0 = make_profile(p, init);
    DensityPath path(rho0, p);
    for (double t : {0.01, 0.1, 0.7}) {
        DensityProfile stepped = evolve_density(rho0, t, p); // dispatches to spectral
        CHECK((stepped.interior - path.at(t)).cwiseAbs().maxCoeff() < 1e-12);
    }

    // non-uniform rates: trapezoid stepping against the spectral representation
    ModelParams pq = make_params(2, 9, 1.5, 0.7, 0.4, 0.5, 1.8);
    DensityPath pathq(make_profile(pq, init), pq);
    for (double t : {0.02, 0.3}) {
        DensityProfile stepped = evolve_density(make_profile(pq, init), t, pq, 1e-11);
        CHECK((stepped.interior - pathq.at(t)).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("evolve_density matches oracle marginals") {
    for (double theta : {-1.0, 0.0, 1.0, 2.0}) {
        ModelParams p = make_params(2, 4, theta, 0.8, 0.6, 0.5, 1.4);
        OracleModel m(p);
        Eigen::VectorXd prof(3);
        prof << 0.3, 1.7, 1.0;
        Eigen::VectorXd dist = product_distribution(m, prof);
        DensityProfile rho0 = make_profile(p, prof);
        for (double t : {0.05, 0.5}) {
            ExactMoments mm = exact_moments(m, m.evolve_distribution(dist, t));
            DensityProfile solved = evolve_density(rho0, t, p, 1e-11);
            CHECK((solved.interior - mm.rho).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("admissible initial profiles") {
    // equilibrium, no bump: constant
    ModelParams pe = make_params(2, 16, 0.7, 0.8, 0.8, 1.3, 1.3);
    Eigen::VectorXd ge = admissible_initial_profile(nullptr, pe);
    CHECK((ge.array() - 1.3).abs().maxCoeff() < 1e-12);

    // theta < 1: ramp converges to the linear interpolation of the reservoir densities
    for (double theta : {-1.0, 0.0, 0.5}) {
        double worst_prev = 1e9;
        for (int N : {16, 32, 64, 128, 256}) {
            ModelParams p = make_params(1, N, theta, 0.9, 0.9, 0.2, 0.8);
            Eigen::VectorXd g = admissible_initial_profile(nullptr, p);
            double worst = 0.0;
            for (int x = 1; x <= N - 1; ++x) {
                double u = double(x) / N;
                worst = std::max(worst, std::abs(g(x - 1) - (0.2 + 0.6 * u)));
            }
            if (N > 16) CHECK(worst < worst_prev + 1e-12);
            worst_prev = worst;
        }
        // the tilt closes like N^(theta-1), so theta=0.5 is still ~3e-2 at N=256
        CHECK(worst_prev < (theta > 0 ? 0.05 : 0.02));
    }

    // the ramp reproduces the discrete stationary profile exactly when f = 0
    ModelParams p = make_params(2, 24, 1.0, 0.6, 0.6, 0.4, 1.7);
    Eigen::VectorXd g = admissible_initial_profile(nullptr, p);
    StationaryCoefficients ss = stationary_profile(p);
    CHECK((g - ss.interior).cwiseAbs().maxCoeff() < 1.0 / p.N);

    // out-of-range bump is rejected
    CHECK_THROWS_AS(admissible_initial_profile([](double) { return 5.0; }, p), std::domain_error);
}

#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "sepalpha/density.hpp"
#include "sepalpha/linalg.hpp"
#include "sepalpha/oracle.hpp"
#include "sepalpha/params.hpp"
#include "sepalpha/triangle.hpp"
#include "sepalpha/twotime.hpp"
#include "sepalpha/walks.hpp"

using namespace sep;

namespace {

ModelParams make_params(int alpha, int N, double theta, double ll, double lr, double rho_l,
                        double rho_r) {
    ModelParams p;
    p.alpha = alpha;
    p.N = N;
    p.theta = theta;
    p.lambda_l = ll;
    p.lambda_r = lr;
    p.rho_l = rho_l;
    p.rho_r = rho_r;
    return p;
}

} // namespace

TEST_CASE("equal times return the assembled moment slice") {
    ModelParams p = make_params(2, 6, 0.5, 0.8, 0.6, 0.5, 1.3);
    TriangleLattice lat(6, true);
    CorrelationField phi;
    phi.N = 6;
    phi.with_diagonal = true;
    phi.time = 0.3;
    phi.values.resize(lat.size());
    for (int i = 0; i < lat.size(); ++i) phi.values(i) = -0.01 - 0.001 * i;
    Eigen::VectorXd interior(5);
    interior << 0.6, 0.8, 1.0, 1.1, 1.2;
    DensityProfile rho = make_profile(p, interior, 0.3);

    TwoTimeField f = two_time_correlation(phi, rho, 0.3, p);
    CHECK(f.v == 0.3);
    CHECK(f.r == 0.3);
    for (int x = 1; x <= 5; ++x) {
        for (int y = 1; y <= 5; ++y) {
            double expect = x == y ? variance_from_extended(phi.values(lat.index(x, x)),
                                                            interior(x - 1), p)
                                   : phi.values(lat.index(std::min(x, y), std::max(x, y)));
            CHECK(std::abs(f(x, y) - expect) < 1e-15);
        }
    }

    CHECK_THROWS_AS(two_time_correlation(phi, rho, 0.2, p), std::domain_error);
    DensityProfile late = make_profile(p, interior, 0.9);
    CHECK_THROWS_AS(two_time_correlation(phi, late, 0.5, p), std::invalid_argument);
    ModelParams small = make_params(2, 5, 0.5, 0.8, 0.6, 0.5, 1.3);
    CHECK_THROWS_AS(two_time_correlation(phi, rho, 0.5, small), std::invalid_argument);
    ModelParams single = make_params(1, 6, 0.5, 0.8, 0.6, 0.3, 0.7);
    CHECK_THROWS_AS(two_time_correlation(phi, rho, 0.5, single), std::invalid_argument);
}

TEST_CASE("two-time moments match the oracle away from equilibrium") {
    const double v = 0.08, tau = 0.12;

    SUBCASE("alpha 2") {
        ModelParams p = make_params(2, 4, 0.5, 0.9, 0.7, 0.5, 1.3);
        OracleModel m(p);
        Eigen::VectorXd profile(3);
        profile << 0.4, 1.1, 1.7;
        Eigen::VectorXd dist = m.evolve_distribution(product_distribution(m, profile), v);
        ExactMoments mo = exact_moments(m, dist);
        CorrelationField phi = field_from_moments(mo, p);
        phi.time = v;
        DensityProfile rho = make_profile(p, mo.rho, v);
        TwoTimeField ours = two_time_correlation(phi, rho, v + tau, p, 1e-10);
        for (int x = 1; x <= 3; ++x) {
            Eigen::VectorXd oracle = exact_two_time(m, dist, x, tau);
            for (int y = 1; y <= 3; ++y)
                CHECK(std::abs(ours(x, y) - oracle(y - 1)) < 1e-7);
        }
    }

    SUBCASE("alpha 1 has no diagonal extension") {
        ModelParams p = make_params(1, 4, 0.0, 1.0, 1.0, 0.2, 0.8);
        OracleModel m(p);
        Eigen::VectorXd profile(3);
        profile << 0.2, 0.5, 0.7;
        Eigen::VectorXd dist = m.evolve_distribution(product_distribution(m, profile), v);
        ExactMoments mo = exact_moments(m, dist);
        CorrelationField phi = field_from_moments(mo, p);
        phi.time = v;
        DensityProfile rho = make_profile(p, mo.rho, v);
        TwoTimeField ours = two_time_correlation(phi, rho, v + tau, p, 1e-10);
        for (int x = 1; x <= 3; ++x) {
            Eigen::VectorXd oracle = exact_two_time(m, dist, x, tau);
            for (int y = 1; y <= 3; ++y)
                CHECK(std::abs(ours(x, y) - oracle(y - 1)) < 1e-7);
        }
    }
}

TEST_CASE("equilibrium two-time moments depend only on the lag") {
    ModelParams p = make_params(2, 5, 0.3, 0.7, 0.5, 0.9, 0.9);
    OracleModel m(p);
    Eigen::VectorXd pi = m.stationary();
    const double tau = 0.1;

    Eigen::VectorXd d1 = m.evolve_distribution(pi, 0.2);
    Eigen::VectorXd d2 = m.evolve_distribution(pi, 0.7);
    Eigen::VectorXd o1 = exact_two_time(m, d1, 2, tau);
    Eigen::VectorXd o2 = exact_two_time(m, d2, 2, tau);
    CHECK((o1 - o2).lpNorm<Eigen::Infinity>() < 1e-9);

    // flat profile leaves no gradient source, so the stationary correlations
    // vanish and the slice is the bare Binomial variance on the diagonal
    CorrelationField phi = stationary_correlation(p);
    CHECK(phi.values.cwiseAbs().maxCoeff() < 1e-13);
    phi.time = 0.2;
    StationaryCoefficients sc = stationary_profile(p);
    DensityProfile rho = make_profile(p, sc.interior, 0.2);
    TwoTimeField ours = two_time_correlation(phi, rho, 0.2 + tau, p, 1e-10);
    for (int y = 1; y <= 4; ++y) CHECK(std::abs(ours(2, y) - o1(y - 1)) < 1e-7);
}

TEST_CASE("stationary correlation solves the hierarchy's steady state") {
    SUBCASE("oracle comparison") {
        ModelParams p = make_params(2, 4, 0.5, 0.9, 0.7, 0.5, 1.3);
        OracleModel m(p);
        ExactMoments mo = exact_moments(m, m.stationary());
        CorrelationField oracle = field_from_moments(mo, p);
        CorrelationField ours = stationary_correlation(p);
        CHECK((oracle.values - ours.values).lpNorm<Eigen::Infinity>() < 1e-8);
        StationaryCoefficients sc = stationary_profile(p);
        CHECK((mo.rho - sc.interior).lpNorm<Eigen::Infinity>() < 1e-10);

        ModelParams q = make_params(1, 5, -0.5, 0.8, 0.6, 0.3, 0.7);
        OracleModel mq(q);
        ExactMoments moq = exact_moments(mq, mq.stationary());
        CorrelationField oq = field_from_moments(moq, q);
        CorrelationField sq = stationary_correlation(q);
        CHECK((oq.values - sq.values).lpNorm<Eigen::Infinity>() < 1e-8);
    }

    SUBCASE("matches the occupation identity for a linear profile") {
        // the interior profile is exactly linear, so the gradient source is
        // constant and the steady state is -(N a)^2 times the superdiagonal
        // occupation of the absorbed pair walk
        for (double theta : {-0.5, 0.0, 1.5}) {
            for (int alpha : {1, 2}) {
                ModelParams p =
                    make_params(alpha, 10, theta, 0.85, 0.55, 0.2 * alpha, 0.8 * alpha);
                CorrelationField phi = stationary_correlation(p);
                OccupationSolution occ = occupation_solve(p);
                const double a = stationary_profile(p).a;
                const double scale = double(p.N) * p.N * a * a;
                TriangleLattice lat(p.N, alpha >= 2);
                double worst = 0.0;
                for (int x = 1; x <= p.N - 1; ++x)
                    for (int y = x + (alpha >= 2 ? 0 : 1); y <= p.N - 1; ++y)
                        worst = std::max(worst, std::abs(phi.values(lat.index(x, y)) +
                                                         scale * occ(x, y)));
                CAPTURE(theta);
                CAPTURE(alpha);
                CHECK(worst < 1e-10);
                CHECK(phi.values.maxCoeff() <= 1e-14);
            }
        }
    }
}

TEST_CASE("window statistic matches a direct oracle quadrature") {
    ModelParams p = make_params(2, 4, 0.5, 0.9, 0.7, 0.5, 1.3);
    const double t = 0.2, eps = 0.3; // window {1} on the left, {3} on the right
    OracleModel m(p);
    Eigen::VectorXd pi = m.stationary();

    for (int j : {0, 1}) {
        const int x = j == 0 ? 1 : 3;
        QuadratureRule q = gauss_legendre(32, 0.0, t);
        double oracle = 0.0;
        for (int k = 0; k < 32; ++k) {
            double tau = q.nodes(k);
            double c = exact_two_time(m, pi, x, tau)(x - 1);
            oracle += q.weights(k) * (t - tau) * c;
        }
        oracle *= 2.0 / (eps * eps * p.N);
        double ours = boundary_window_statistic(eps, j, t, p, 1e-9);
        CAPTURE(j);
        CHECK(std::abs(ours - oracle) < 1e-6);
        CHECK(ours > 0.0);
    }
}

TEST_CASE("window statistic shrinks with the window") {
    ModelParams p = make_params(1, 64, -0.5, 0.8, 0.6, 0.3, 0.7);
    const double t = 0.1;
    double wide = boundary_window_statistic(0.4, 0, t, p);
    double mid = boundary_window_statistic(0.2, 0, t, p);
    double narrow = boundary_window_statistic(0.1, 0, t, p);
    CHECK(wide > mid);
    CHECK(mid > narrow);
    CHECK(narrow > 0.0);

    CHECK(boundary_window_statistic(0.2, 1, 0.0, p) == 0.0);
}

TEST_CASE("window statistic validates its scope") {
    ModelParams ok = make_params(1, 8, 0.5, 0.8, 0.6, 0.3, 0.7);
    ModelParams robin = make_params(1, 8, 1.0, 0.8, 0.6, 0.3, 0.7);
    ModelParams slow = make_params(1, 8, 2.0, 0.8, 0.6, 0.3, 0.7);
    CHECK_THROWS_AS(boundary_window_statistic(0.2, 0, 0.1, robin), std::domain_error);
    CHECK_THROWS_AS(boundary_window_statistic(0.2, 0, 0.1, slow), std::domain_error);
    CHECK_THROWS_AS(boundary_window_statistic(0.5, 0, 0.1, ok), std::invalid_argument);
    CHECK_THROWS_AS(boundary_window_statistic(0.0, 0, 0.1, ok), std::invalid_argument);
    CHECK_THROWS_AS(boundary_window_statistic(0.2, 2, 0.1, ok), std::invalid_argument);
    CHECK_THROWS_AS(boundary_window_statistic(0.2, 0, -0.1, ok), std::domain_error);
    CHECK_THROWS_AS(boundary_window_statistic(0.05, 0, 0.1, ok), std::domain_error);
}

#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "sepalpha/density.hpp"
#include "sepalpha/kmc.hpp"
#include "sepalpha/oracle.hpp"
#include "sepalpha/params.hpp"
#include "sepalpha/rng.hpp"

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

int total_particles(const Configuration& cfg) {
    int s = 0;
    for (int x = 1; x <= cfg.N() - 1; ++x) s += cfg.at(x);
    return s;
}

} // namespace

TEST_CASE("zero horizon returns the initial configuration untouched") {
    ModelParams p = make_params(2, 6, 0.5, 0.8, 0.6, 0.5, 1.3);
    Configuration cfg(6, 2);
    cfg.set(2, 1);
    cfg.set(4, 2);
    CounterRng rng(42, 0, 1);
    Trajectory traj = simulate(cfg, 0.0, p, rng, true);
    CHECK(traj.events.empty());
    CHECK(traj.last.counts() == cfg.counts());
    CHECK(traj.initial.counts() == cfg.counts());
    CHECK(traj.stream_key == rng.key());

    CHECK_THROWS_AS(simulate(cfg, -1.0, p, rng), std::domain_error);
    Configuration wrong(5, 2);
    CHECK_THROWS_AS(simulate(wrong, 0.1, p, rng), std::invalid_argument);
}

TEST_CASE("a fixed stream reproduces the trajectory bit for bit") {
    ModelParams p = make_params(2, 8, 0.3, 0.9, 0.7, 0.6, 1.2);
    Eigen::VectorXd gamma = Eigen::VectorXd::Constant(7, 1.0);
    CounterRng init_rng(9001, 3, 0);
    Configuration cfg0 = sample_local_gibbs(gamma, p, init_rng);

    CounterRng a(9001, 3, 1), b(9001, 3, 1);
    Trajectory ta = simulate(cfg0, 0.5, p, a, true);
    Trajectory tb = simulate(cfg0, 0.5, p, b, true);
    REQUIRE(ta.events.size() == tb.events.size());
    CHECK(ta.events.size() > 50);
    for (std::size_t i = 0; i < ta.events.size(); ++i) {
        CHECK(ta.events[i].time == tb.events[i].time);
        CHECK(ta.events[i].slot == tb.events[i].slot);
    }
    CHECK(ta.last.counts() == tb.last.counts());

    CounterRng c(9001, 4, 1);
    Trajectory tc = simulate(cfg0, 0.5, p, c, true);
    bool same = tc.events.size() == ta.events.size();
    if (same)
        for (std::size_t i = 0; i < ta.events.size() && same; ++i)
            same = tc.events[i].slot == ta.events[i].slot;
    CHECK_FALSE(same);
}

TEST_CASE("every event is legal and particles enter only at the walls") {
    ModelParams p = make_params(3, 7, -0.5, 0.8, 0.5, 1.0, 2.0);
    CounterRng rng(77, 0, 1);
    Configuration cfg0(7, 3);
    for (int x = 1; x <= 6; ++x) cfg0.set(x, x % 4);
    Trajectory traj = simulate(cfg0, 0.2, p, rng, true);
    REQUIRE(traj.events.size() > 20);

    Configuration cfg = cfg0;
    double prev = 0.0;
    for (const Event& e : traj.events) {
        CHECK(e.time > prev);
        prev = e.time;
        CHECK(slot_rate(cfg, e.slot, p) > 0.0);
        MoveInfo mv = decode_slot(e.slot, p.N);
        int before = total_particles(cfg);
        apply_move(cfg, mv);
        int after = total_particles(cfg);
        bool reservoir = mv.kind != MoveKind::BulkRight && mv.kind != MoveKind::BulkLeft;
        if (reservoir)
            CHECK(std::abs(after - before) == 1);
        else
            CHECK(after == before);
        for (int x = 1; x <= 6; ++x) {
            CHECK(cfg.at(x) >= 0);
            CHECK(cfg.at(x) <= 3);
        }
    }
    CHECK(cfg.counts() == traj.last.counts());
}

TEST_CASE("local Gibbs draws honor the marginals") {
    ModelParams p = make_params(2, 10, 0.0, 1.0, 1.0, 0.5, 1.5);
    CounterRng rng(5, 0, 0);

    Configuration empty = sample_local_gibbs(Eigen::VectorXd::Zero(9), p, rng);
    for (int x = 1; x <= 9; ++x) CHECK(empty.at(x) == 0);
    Configuration full = sample_local_gibbs(Eigen::VectorXd::Constant(9, 2.0), p, rng);
    for (int x = 1; x <= 9; ++x) CHECK(full.at(x) == 2);

    const double rho = 0.7;
    const int n = 100000;
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(9);
    for (int k = 0; k < n; ++k) {
        CounterRng draw(5, (uint64_t)k, 0);
        Configuration cfg = sample_local_gibbs(Eigen::VectorXd::Constant(9, rho), p, draw);
        for (int x = 1; x <= 9; ++x) sums(x - 1) += cfg.at(x);
    }
    const double se = std::sqrt(rho * (1.0 - rho / 2.0) / n); // Binomial(2, rho/2) variance
    for (int x = 0; x < 9; ++x) CHECK(std::abs(sums(x) / n - rho) < 4.0 * se);

    Eigen::VectorXd bad = Eigen::VectorXd::Constant(9, 2.1);
    CHECK_THROWS_AS(sample_local_gibbs(bad, p, rng), std::domain_error);
    CHECK_THROWS_AS(sample_local_gibbs(Eigen::VectorXd::Zero(5), p, rng), std::invalid_argument);
}

TEST_CASE("small chain matches the oracle distribution at a fixed time") {
    ModelParams p = make_params(1, 3, 0.0, 1.0, 1.0, 0.3, 0.7);
    OracleModel m(p);
    Configuration cfg0(3, 1);
    cfg0.set(1, 1);
    Eigen::VectorXd target = m.evolve_distribution(point_distribution(m, cfg0), 0.15);

    const int n = 100000;
    Eigen::VectorXd tally = Eigen::VectorXd::Zero((int)m.space().size());
    for (int k = 0; k < n; ++k) {
        CounterRng rng(1234, (uint64_t)k, 1);
        Trajectory traj = simulate(cfg0, 0.15, p, rng);
        tally((int)m.space().index(traj.last)) += 1.0;
    }
    for (int s = 0; s < tally.size(); ++s) {
        double pk = target(s);
        double se = std::sqrt(std::max(pk * (1.0 - pk), 1e-12) / n);
        CHECK(std::abs(tally(s) / n - pk) < 4.0 * se);
    }
}

TEST_CASE("equilibrium time averages sit at the reservoir density") {
    ModelParams p = make_params(2, 8, 0.0, 1.0, 1.0, 1.2, 1.2);
    CounterRng init_rng(31, 0, 0);
    Configuration cfg0 = sample_local_gibbs(Eigen::VectorXd::Constant(7, 1.2), p, init_rng);
    CounterRng rng(31, 0, 1);
    Trajectory traj = simulate(cfg0, 50.0, p, rng, true);

    const double burn = 5.0;
    const int batches = 15;
    const double len = (50.0 - burn) / batches;
    for (int x = 1; x <= 7; ++x) {
        std::vector<double> avg(batches);
        for (int b = 0; b < batches; ++b) {
            double lo = burn + b * len;
            avg[b] = trajectory_integral(traj, lo, lo + len,
                                         [x](const Configuration& c) { return double(c.at(x)); }) /
                     len;
        }
        EnsembleEstimate e = estimate_from_samples(avg);
        CAPTURE(x);
        CHECK(std::abs(e.value - 1.2) < 4.0 * e.se);
        CHECK(e.se < 0.08);
    }
}

TEST_CASE("ensemble moments track the oracle away from equilibrium") {
    ModelParams p = make_params(2, 4, 0.5, 0.9, 0.7, 0.5, 1.3);
    OracleModel m(p);
    Eigen::VectorXd gamma(3);
    gamma << 0.4, 1.1, 1.7;
    std::vector<double> times = {0.08, 0.2};
    Eigen::VectorXd dist = product_distribution(m, gamma);

    EnsembleMoments mc = run_ensemble(
        [&](CounterRng& r) { return sample_local_gibbs(gamma, p, r); }, 20000, times, p, 2024, 4);

    for (std::size_t ti = 0; ti < times.size(); ++ti) {
        ExactMoments ex = exact_moments(m, m.evolve_distribution(dist, times[ti]));
        for (int x = 0; x < 3; ++x) {
            CAPTURE(ti);
            CAPTURE(x);
            CHECK(std::abs(mc.rho(ti, x) - ex.rho(x)) < 4.0 * mc.rho_se(ti, x));
            CHECK(mc.rho_se(ti, x) < 0.01);
            for (int y = x; y < 3; ++y)
                CHECK(std::abs(mc.phi[ti](x, y) - ex.phi(x + 1, y + 1)) <
                      4.0 * mc.phi_se[ti](x, y));
        }
    }
}

TEST_CASE("equilibrium product measure keeps correlations at zero") {
    ModelParams p = make_params(2, 8, 0.0, 1.0, 1.0, 1.0, 1.0);
    std::vector<double> times = {0.12};
    EnsembleMoments mc = run_ensemble(
        [&](CounterRng& r) {
            return sample_local_gibbs(Eigen::VectorXd::Constant(7, 1.0), p, r);
        },
        4000, times, p, 99, 4);
    for (int x = 0; x < 7; ++x)
        for (int y = x; y < 7; ++y) {
            CAPTURE(x);
            CAPTURE(y);
            CHECK(std::abs(mc.phi[0](x, y)) < 4.0 * mc.phi_se[0](x, y));
        }
}

TEST_CASE("ensemble density agrees with the hierarchy solver") {
    ModelParams p = make_params(2, 16, 0.0, 1.0, 1.0, 0.6, 1.4);
    Eigen::VectorXd gamma(15);
    for (int x = 1; x <= 15; ++x) {
        double u = double(x) / 16.0;
        gamma(x - 1) = 0.6 + 0.8 * u + 0.3 * std::sin(2.0 * 3.14159265358979 * u);
    }
    DensityPath path(make_profile(p, gamma, 0.0), p);
    Eigen::VectorXd rho_ode = path.at(0.1);

    EnsembleMoments mc = run_ensemble(
        [&](CounterRng& r) { return sample_local_gibbs(gamma, p, r); }, 4000, {0.1}, p, 5150, 4);
    for (int x = 0; x < 15; ++x) {
        CAPTURE(x);
        CHECK(std::abs(mc.rho(0, x) - rho_ode(x)) < 4.0 * mc.rho_se(0, x));
        CHECK(mc.rho_se(0, x) < 0.02);
    }
}

TEST_CASE("identical replicas report zero spread") {
    ModelParams p = make_params(1, 5, 0.0, 1.0, 1.0, 0.3, 0.7);
    Configuration cfg0(5, 1);
    cfg0.set(2, 1);
    CounterRng a(7, 0, 1), b(7, 0, 1);
    std::vector<Trajectory> reps;
    reps.push_back(simulate(cfg0, 0.3, p, a, true));
    reps.push_back(simulate(cfg0, 0.3, p, b, true));
    EnsembleMoments mom = ensemble_moments(reps, {0.1, 0.3}, p);
    CHECK(mom.rho_se.maxCoeff() == 0.0);
    CHECK(mom.replicas == 2);

    EnsembleEstimate e = estimate_from_samples({2.5, 2.5, 2.5});
    CHECK(e.value == 2.5);
    CHECK(e.se == 0.0);
    CHECK_THROWS_AS(estimate_from_samples({1.0}), std::domain_error);
}

TEST_CASE("replayed trajectories give the same moments as streaming capture") {
    ModelParams p = make_params(2, 6, 0.2, 0.8, 0.9, 0.7, 1.1);
    Configuration cfg0(6, 2);
    for (int x = 1; x <= 5; ++x) cfg0.set(x, 1);
    std::vector<Trajectory> reps;
    for (int k = 0; k < 40; ++k) {
        CounterRng rng(2718, (uint64_t)k, 1);
        reps.push_back(simulate(cfg0, 0.25, p, rng, true));
    }
    EnsembleMoments replay = ensemble_moments(reps, {0.1, 0.25}, p);
    Eigen::MatrixXd manual = Eigen::MatrixXd::Zero(2, 5);
    for (int k = 0; k < 40; ++k) {
        Configuration mid = state_at(reps[k], 0.1);
        Configuration end = state_at(reps[k], 0.25);
        CHECK(end.counts() == reps[k].last.counts());
        for (int x = 1; x <= 5; ++x) {
            manual(0, x - 1) += mid.at(x) / 40.0;
            manual(1, x - 1) += end.at(x) / 40.0;
        }
    }
    CHECK(replay.replicas == 40);
    CHECK((replay.rho - manual).cwiseAbs().maxCoeff() < 1e-12);

    std::vector<Trajectory> unlogged;
    CounterRng r1(1, 0, 1), r2(1, 1, 1);
    unlogged.push_back(simulate(cfg0, 0.25, p, r1, false));
    unlogged.push_back(simulate(cfg0, 0.25, p, r2, false));
    CHECK_THROWS_AS(ensemble_moments(unlogged, {0.1}, p), std::domain_error);
    CHECK_THROWS_AS(ensemble_moments(reps, {0.1, 0.5}, p), std::domain_error);
    std::vector<Trajectory> one = {reps[0]};
    CHECK_THROWS_AS(ensemble_moments(one, {0.1}, p), std::domain_error);
}

TEST_CASE("thread count does not change the estimates") {
    ModelParams p = make_params(1, 5, 0.0, 1.0, 1.0, 0.3, 0.7);
    auto init = [&](CounterRng& r) {
        return sample_local_gibbs(Eigen::VectorXd::Constant(4, 0.5), p, r);
    };
    EnsembleMoments solo = run_ensemble(init, 200, {0.05, 0.1}, p, 11, 1);
    EnsembleMoments pooled = run_ensemble(init, 200, {0.05, 0.1}, p, 11, 3);
    CHECK(solo.rho == pooled.rho);
    CHECK(solo.rho_se == pooled.rho_se);
    for (int t = 0; t < 2; ++t) {
        // the alpha = 1 diagonal is NaN by convention, so compare off it
        for (int x = 0; x < 4; ++x) {
            CHECK(std::isnan(solo.phi[t](x, x)));
            for (int y = 0; y < 4; ++y)
                if (x != y) CHECK(solo.phi[t](x, y) == pooled.phi[t](x, y));
        }
    }

    CHECK_THROWS_AS(run_ensemble(init, 1, {0.1}, p, 11, 1), std::domain_error);
    CHECK_THROWS_AS(run_ensemble(init, 4, {0.2, 0.1}, p, 11, 1), std::invalid_argument);
    CHECK_THROWS_AS(run_ensemble(init, 4, {0.1}, p, 11, 0), std::invalid_argument);
}

TEST_CASE("trajectory integral reduces to exact segment sums") {
    ModelParams p = make_params(1, 4, 0.0, 1.0, 1.0, 0.4, 0.6);
    Configuration cfg0(4, 1);
    cfg0.set(1, 1);
    CounterRng rng(404, 0, 1);
    Trajectory traj = simulate(cfg0, 0.4, p, rng, true);
    REQUIRE(traj.events.size() > 3);

    // piecewise-constant occupancy of site 1 summed by hand over the log
    auto f = [](const Configuration& c) { return double(c.at(1)); };
    double direct = 0.0, cur = 0.0;
    Configuration cfg = cfg0;
    for (const Event& e : traj.events) {
        direct += f(cfg) * (e.time - cur);
        apply_move(cfg, decode_slot(e.slot, 4));
        cur = e.time;
    }
    direct += f(cfg) * (0.4 - cur);
    CHECK(std::abs(trajectory_integral(traj, 0.0, 0.4, f) - direct) < 1e-14);

    double split = trajectory_integral(traj, 0.0, 0.17, f) + trajectory_integral(traj, 0.17, 0.4, f);
    CHECK(std::abs(split - direct) < 1e-14);

    CHECK_THROWS_AS(trajectory_integral(traj, -0.1, 0.2, f), std::domain_error);
    CHECK_THROWS_AS(trajectory_integral(traj, 0.0, 0.5, f), std::domain_error);
    CHECK_THROWS_AS(state_at(traj, 0.5), std::domain_error);
    Trajectory bare;
    CHECK_THROWS_AS(state_at(bare, 0.0), std::domain_error);
}

#include "sepalpha/kmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "sepalpha/rates.hpp"

namespace sep {

namespace {

// Fenwick tree over the slot rates; sample() walks down the implicit binary
// structure, so selection and update are both O(log slots)
class RateTree {
  public:
    explicit RateTree(int n) : n_(n), leaf_(n, 0.0), tree_(n + 1, 0.0) {
        bit_ = 1;
        while (bit_ * 2 <= n_) bit_ *= 2;
    }

    void set(int i, double v) {
        double d = v - leaf_[i];
        leaf_[i] = v;
        for (int k = i + 1; k <= n_; k += k & -k) tree_[k] += d;
    }

    double total() const {
        double s = 0.0;
        for (int k = n_; k > 0; k -= k & -k) s += tree_[k];
        return s;
    }

    double rate(int i) const { return leaf_[i]; }

    // slot whose cumulative range contains target; incremental roundoff in
    // the partial sums can land on an empty slot, so the caller re-anchors
    int sample(double target) const {
        int pos = 0;
        for (int step = bit_; step > 0; step >>= 1) {
            int next = pos + step;
            if (next <= n_ && tree_[next] <= target) {
                target -= tree_[next];
                pos = next;
            }
        }
        int slot = std::min(pos, n_ - 1);
        for (int k = slot; k < n_; ++k)
            if (leaf_[k] > 0.0) return k;
        for (int k = slot - 1; k >= 0; --k)
            if (leaf_[k] > 0.0) return k;
        return -1;
    }

  private:
    int n_, bit_ = 1;
    std::vector<double> leaf_;
    std::vector<double> tree_;
};

double pairwise_sum(const double* v, int n) {
    if (n <= 32) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += v[i];
        return s;
    }
    int half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

void refresh_around(RateTree& tree, const Configuration& cfg, const ModelParams& p, int lo_site,
                    int hi_site) {
    const int N = cfg.N();
    const int base = 2 * (N - 2);
    for (int b = std::max(1, lo_site - 1); b <= std::min(N - 2, hi_site); ++b) {
        tree.set(2 * (b - 1), slot_rate(cfg, 2 * (b - 1), p));
        tree.set(2 * (b - 1) + 1, slot_rate(cfg, 2 * (b - 1) + 1, p));
    }
    if (lo_site == 1) {
        tree.set(base + 0, slot_rate(cfg, base + 0, p));
        tree.set(base + 1, slot_rate(cfg, base + 1, p));
    }
    if (hi_site == N - 1) {
        tree.set(base + 2, slot_rate(cfg, base + 2, p));
        tree.set(base + 3, slot_rate(cfg, base + 3, p));
    }
}

// snapshot tensor laid out replica-major: counts[(r * times + t) * sites + x]
EnsembleMoments moments_from_snapshots(const std::vector<uint8_t>& counts, int replicas,
                                       const std::vector<double>& times, const ModelParams& p) {
    const int sites = p.N - 1;
    const int T = (int)times.size();
    const double n = replicas;
    EnsembleMoments out;
    out.times = times;
    out.replicas = replicas;
    out.rho.resize(T, sites);
    out.rho_se.resize(T, sites);
    out.phi.assign(T, Eigen::MatrixXd::Zero(sites, sites));
    out.phi_se.assign(T, Eigen::MatrixXd::Zero(sites, sites));
    std::vector<double> buf(replicas), sq(replicas);
    auto cnt = [&](int r, int t, int x) -> double {
        return counts[((std::size_t)r * T + t) * sites + x];
    };
    for (int t = 0; t < T; ++t) {
        for (int x = 0; x < sites; ++x) {
            for (int r = 0; r < replicas; ++r) buf[r] = cnt(r, t, x);
            double mean = pairwise_sum(buf.data(), replicas) / n;
            for (int r = 0; r < replicas; ++r) sq[r] = (buf[r] - mean) * (buf[r] - mean);
            double var = pairwise_sum(sq.data(), replicas) / (n - 1.0);
            out.rho(t, x) = mean;
            out.rho_se(t, x) = std::sqrt(var / n);
        }
        for (int x = 0; x < sites; ++x) {
            for (int y = x; y < sites; ++y) {
                if (x == y) {
                    if (p.alpha == 1) {
                        out.phi[t](x, x) = std::numeric_limits<double>::quiet_NaN();
                        out.phi_se[t](x, x) = std::numeric_limits<double>::quiet_NaN();
                        continue;
                    }
                    const double w = double(p.alpha) / (p.alpha - 1);
                    const double rx = out.rho(t, x);
                    // delta-method linearization of mean(w c(c-1)) - rho^2
                    for (int r = 0; r < replicas; ++r) {
                        double c = cnt(r, t, x);
                        buf[r] = w * c * (c - 1.0) - 2.0 * rx * c;
                    }
                    double mean_u = pairwise_sum(buf.data(), replicas) / n;
                    for (int r = 0; r < replicas; ++r)
                        sq[r] = (buf[r] - mean_u) * (buf[r] - mean_u);
                    double var_u = pairwise_sum(sq.data(), replicas) / (n - 1.0);
                    out.phi[t](x, x) = mean_u + rx * rx;
                    out.phi_se[t](x, x) = std::sqrt(var_u / n);
                } else {
                    const double rx = out.rho(t, x), ry = out.rho(t, y);
                    for (int r = 0; r < replicas; ++r)
                        buf[r] = (cnt(r, t, x) - rx) * (cnt(r, t, y) - ry);
                    double s1 = pairwise_sum(buf.data(), replicas);
                    for (int r = 0; r < replicas; ++r)
                        sq[r] = (buf[r] - s1 / n) * (buf[r] - s1 / n);
                    double var_v = pairwise_sum(sq.data(), replicas) / (n - 1.0);
                    out.phi[t](x, y) = s1 / (n - 1.0);
                    out.phi[t](y, x) = out.phi[t](x, y);
                    out.phi_se[t](x, y) = std::sqrt(var_v / n);
                    out.phi_se[t](y, x) = out.phi_se[t](x, y);
                }
            }
        }
    }
    return out;
}

void check_times(const std::vector<double>& times) {
    if (times.empty()) throw std::invalid_argument("ensemble moments: empty time grid");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < 0 || (i > 0 && times[i] <= times[i - 1]))
            throw std::invalid_argument("ensemble moments: times must increase from 0");
    }
}

} // namespace

int slot_count(int N) { return 2 * (N - 2) + 4; }

MoveInfo decode_slot(int slot, int N) {
    if (slot < 0 || slot >= slot_count(N)) throw std::invalid_argument("decode_slot: bad slot");
    const int base = 2 * (N - 2);
    if (slot < base) {
        int bond = slot / 2 + 1;
        return {slot % 2 == 0 ? MoveKind::BulkRight : MoveKind::BulkLeft, bond};
    }
    switch (slot - base) {
        case 0: return {MoveKind::InjectLeft, 1};
        case 1: return {MoveKind::RemoveLeft, 1};
        case 2: return {MoveKind::InjectRight, N - 1};
    }
    return {MoveKind::RemoveRight, N - 1};
}

void apply_move(Configuration& cfg, const MoveInfo& mv) {
    switch (mv.kind) {
        case MoveKind::BulkRight:
            cfg.add(mv.site, -1);
            cfg.add(mv.site + 1, +1);
            return;
        case MoveKind::BulkLeft:
            cfg.add(mv.site + 1, -1);
            cfg.add(mv.site, +1);
            return;
        case MoveKind::InjectLeft:
        case MoveKind::InjectRight: cfg.add(mv.site, +1); return;
        case MoveKind::RemoveLeft:
        case MoveKind::RemoveRight: cfg.add(mv.site, -1); return;
    }
}

double slot_rate(const Configuration& cfg, int slot, const ModelParams& p) {
    const int base = 2 * (cfg.N() - 2);
    if (slot < 0 || slot >= slot_count(cfg.N()))
        throw std::invalid_argument("slot_rate: bad slot");
    if (slot < base) {
        int bond = slot / 2 + 1;
        return slot % 2 == 0 ? bulk_rate(cfg, bond, Dir::Right, p)
                             : bulk_rate(cfg, bond + 1, Dir::Left, p);
    }
    ReservoirRates rr = reservoir_rates(cfg, p);
    switch (slot - base) {
        case 0: return rr.inj_left;
        case 1: return rr.rem_left;
        case 2: return rr.inj_right;
    }
    return rr.rem_right;
}

Trajectory simulate(const Configuration& cfg0, double t_end, const ModelParams& p,
                    CounterRng& rng, bool log_events) {
    p.validate();
    if (cfg0.N() != p.N || cfg0.alpha() != p.alpha)
        throw std::invalid_argument("simulate: configuration does not match the parameters");
    if (t_end < 0) throw std::domain_error("simulate: negative horizon");
    Trajectory out;
    out.initial = cfg0;
    out.t_end = t_end;
    out.logged = log_events;
    out.stream_key = rng.key();
    Configuration cfg = cfg0;
    const int slots = slot_count(p.N);
    RateTree tree(slots);
    for (int s = 0; s < slots; ++s) tree.set(s, slot_rate(cfg, s, p));
    const double speedup = double(p.N) * p.N;
    double t = 0.0;
    while (true) {
        const double total = tree.total();
        if (!(total > 0.0)) throw std::logic_error("simulate: rate total vanished");
        const double dt = rng.exponential() / (total * speedup);
        if (t + dt > t_end) break;
        t += dt;
        const int slot = tree.sample(rng.uniform() * total);
        if (slot < 0) throw std::logic_error("simulate: no firable slot");
        const MoveInfo mv = decode_slot(slot, p.N);
        apply_move(cfg, mv);
        const int hi = mv.kind == MoveKind::BulkRight || mv.kind == MoveKind::BulkLeft
                           ? mv.site + 1
                           : mv.site;
        refresh_around(tree, cfg, p, mv.site, hi);
        if (log_events) out.events.push_back({t, slot});
    }
    out.last = std::move(cfg);
    return out;
}

Configuration sample_local_gibbs(const Eigen::VectorXd& profile, const ModelParams& p,
                                 CounterRng& rng) {
    p.validate_for_solvers();
    if (profile.size() != p.N - 1)
        throw std::invalid_argument("sample_local_gibbs: profile must cover the interior");
    Configuration cfg(p.N, p.alpha);
    for (int x = 1; x <= p.N - 1; ++x) {
        const double g = profile(x - 1);
        if (g < 0.0 || g > double(p.alpha))
            throw std::domain_error("sample_local_gibbs: profile outside [0, alpha]");
        cfg.set(x, rng.binomial(p.alpha, g / p.alpha));
    }
    return cfg;
}

Configuration state_at(const Trajectory& traj, double t) {
    if (!traj.logged) throw std::domain_error("state_at: event log required");
    if (t < 0 || t > traj.t_end) throw std::domain_error("state_at: time outside the trajectory");
    Configuration cfg = traj.initial;
    for (const Event& e : traj.events) {
        if (e.time > t) break;
        apply_move(cfg, decode_slot(e.slot, cfg.N()));
    }
    return cfg;
}

double trajectory_integral(const Trajectory& traj, double t0, double t1,
                           const std::function<double(const Configuration&)>& f) {
    if (!traj.logged) throw std::domain_error("trajectory_integral: event log required");
    if (t0 < 0 || t1 > traj.t_end || t0 > t1)
        throw std::domain_error("trajectory_integral: window outside the trajectory");
    Configuration cfg = traj.initial;
    double acc = 0.0, cur = 0.0;
    for (const Event& e : traj.events) {
        const double lo = std::max(cur, t0), hi = std::min(e.time, t1);
        if (hi > lo) acc += f(cfg) * (hi - lo);
        apply_move(cfg, decode_slot(e.slot, cfg.N()));
        cur = e.time;
        if (cur >= t1) break;
    }
    if (cur < t1) {
        const double lo = std::max(cur, t0);
        if (t1 > lo) acc += f(cfg) * (t1 - lo);
    }
    return acc;
}

EnsembleEstimate estimate_from_samples(const std::vector<double>& samples) {
    const int n = (int)samples.size();
    if (n < 2) throw std::domain_error("estimate_from_samples: need at least two samples");
    EnsembleEstimate e;
    e.replicas = n;
    e.value = pairwise_sum(samples.data(), n) / n;
    std::vector<double> sq(n);
    for (int i = 0; i < n; ++i) sq[i] = (samples[i] - e.value) * (samples[i] - e.value);
    e.se = std::sqrt(pairwise_sum(sq.data(), n) / (n - 1.0) / n);
    return e;
}

EnsembleMoments ensemble_moments(const std::vector<Trajectory>& replicas,
                                 const std::vector<double>& times, const ModelParams& p) {
    p.validate_for_solvers();
    check_times(times);
    const int R = (int)replicas.size();
    if (R < 2) throw std::domain_error("ensemble_moments: need at least two replicas");
    const int sites = p.N - 1;
    const int T = (int)times.size();
    std::vector<uint8_t> counts((std::size_t)R * T * sites);
    for (int r = 0; r < R; ++r) {
        const Trajectory& traj = replicas[r];
        if (!traj.logged) throw std::domain_error("ensemble_moments: event log required");
        if (traj.initial.N() != p.N || traj.initial.alpha() != p.alpha)
            throw std::invalid_argument("ensemble_moments: replica does not match the parameters");
        if (times.back() > traj.t_end)
            throw std::domain_error("ensemble_moments: grid exceeds the trajectory horizon");
        // one incremental replay covers the whole ascending grid
        Configuration cfg = traj.initial;
        std::size_t next = 0;
        auto capture_until = [&](double tcut) {
            while (next < times.size() && times[next] <= tcut) {
                for (int x = 0; x < sites; ++x)
                    counts[((std::size_t)r * T + next) * sites + x] = (uint8_t)cfg.at(x + 1);
                ++next;
            }
        };
        for (const Event& e : traj.events) {
            capture_until(std::nextafter(e.time, 0.0));
            apply_move(cfg, decode_slot(e.slot, cfg.N()));
            if (next >= times.size()) break;
        }
        capture_until(traj.t_end);
    }
    EnsembleMoments out = moments_from_snapshots(counts, R, times, p);
    return out;
}

EnsembleMoments run_ensemble(const InitialSampler& init, int replicas,
                             const std::vector<double>& times, const ModelParams& p,
                             uint64_t seed, int threads) {
    p.validate();
    check_times(times);
    if (replicas < 2) throw std::domain_error("run_ensemble: need at least two replicas");
    if (threads < 1) throw std::invalid_argument("run_ensemble: thread count must be positive");
    const int sites = p.N - 1;
    const int T = (int)times.size();
    std::vector<uint8_t> counts((std::size_t)replicas * T * sites);
    auto worker = [&](int lo, int hi) {
        for (int r = lo; r < hi; ++r) {
            CounterRng init_rng(seed, (uint64_t)r, 0);
            CounterRng dyn_rng(seed, (uint64_t)r, 1);
            Configuration cfg = init(init_rng);
            if (cfg.N() != p.N || cfg.alpha() != p.alpha)
                throw std::invalid_argument("run_ensemble: sampler size mismatch");
            double prev = 0.0;
            for (int t = 0; t < T; ++t) {
                Trajectory leg = simulate(cfg, times[t] - prev, p, dyn_rng, false);
                cfg = leg.last;
                prev = times[t];
                for (int x = 0; x < sites; ++x)
                    counts[((std::size_t)r * T + t) * sites + x] = (uint8_t)cfg.at(x + 1);
            }
        }
    };
    if (threads == 1) {
        worker(0, replicas);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(threads);
        const int chunk = (replicas + threads - 1) / threads;
        for (int j = 0; j < threads; ++j) {
            const int lo = j * chunk, hi = std::min(replicas, (j + 1) * chunk);
            if (lo < hi)
                pool.emplace_back([&, lo, hi, j] {
                    try {
                        worker(lo, hi);
                    } catch (...) {
                        errors[j] = std::current_exception();
                    }
                });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    EnsembleMoments out = moments_from_snapshots(counts, replicas, times, p);
    out.seed = seed;
    return out;
}

} // namespace sep

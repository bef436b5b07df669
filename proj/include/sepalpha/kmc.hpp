#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "sepalpha/configuration.hpp"
#include "sepalpha/params.hpp"
#include "sepalpha/rng.hpp"

namespace sep {

// Rate-table layout: two directed slots per interior bond (2(N-2) in total,
// bond x uses slots 2(x-1) and 2(x-1)+1), then the four reservoir slots in
// the order inject-left, remove-left, inject-right, remove-right.
enum class MoveKind { BulkRight, BulkLeft, InjectLeft, RemoveLeft, InjectRight, RemoveRight };

struct MoveInfo {
    MoveKind kind;
    int site; // left end of the bond for bulk moves, the boundary site otherwise
};

int slot_count(int N);
MoveInfo decode_slot(int slot, int N);
void apply_move(Configuration& cfg, const MoveInfo& mv);

// rate of one slot at the current configuration, without the N^2 speedup
double slot_rate(const Configuration& cfg, int slot, const ModelParams& p);

struct Event {
    double time; // macroscopic: the N^2 speedup is already divided out
    int slot;
};

struct Trajectory {
    Configuration initial;
    Configuration last; // state at t_end
    std::vector<Event> events;
    bool logged = false;
    double t_end = 0.0;
    uint64_t stream_key = 0; // CounterRng key of the stream that produced it
};

// Exact continuous-time chain at the diffusive scale: waiting times are
// exponential with rate N^2 times the slot-rate total, moves chosen
// proportionally to their rate through a Fenwick tree (O(log N) per event).
// Event logging is off by default; estimators prefer streaming snapshots.
Trajectory simulate(const Configuration& cfg0, double t_end, const ModelParams& p,
                    CounterRng& rng, bool log_events = false);

// independent Binomial(alpha, gamma(x/N)/alpha) draws; profile entry x-1 is
// gamma(x/N), which must lie in [0, alpha]
Configuration sample_local_gibbs(const Eigen::VectorXd& profile, const ModelParams& p,
                                 CounterRng& rng);

// state of a logged trajectory at time t (the last event at or before t)
Configuration state_at(const Trajectory& traj, double t);

// integral of f along a logged trajectory over [t0, t1], exact between events
double trajectory_integral(const Trajectory& traj, double t0, double t1,
                           const std::function<double(const Configuration&)>& f);

struct EnsembleEstimate {
    double value = 0.0;
    double se = 0.0; // sample std over sqrt(replicas)
    int replicas = 0;
};

// pairwise-summed mean and standard error; throws below two samples
EnsembleEstimate estimate_from_samples(const std::vector<double>& samples);

// Ensemble moments on a time grid. rho holds the site means, phi the centered
// pair moments in the oracle's convention: sample covariance off the diagonal
// and (alpha/(alpha-1)) E[eta(eta-1)] - rho^2 on it (NaN when alpha = 1).
struct EnsembleMoments {
    std::vector<double> times;
    Eigen::MatrixXd rho, rho_se;                // times x (N-1)
    std::vector<Eigen::MatrixXd> phi, phi_se;   // per time, (N-1) x (N-1)
    int replicas = 0;
    uint64_t seed = 0; // replica k used streams (seed, k, 0) and (seed, k, 1)
};

// estimates from retained trajectories; every replica must carry its event
// log, and at least two replicas are required
EnsembleMoments ensemble_moments(const std::vector<Trajectory>& replicas,
                                 const std::vector<double>& times, const ModelParams& p);

// Streaming ensemble: runs `replicas` independent chains without retaining
// logs, capturing occupation snapshots at the grid times. Replica k draws its
// initial configuration through CounterRng(seed, k, 0) and its dynamics
// through CounterRng(seed, k, 1), so results are thread-count independent;
// the reduction is pairwise over the replica index.
using InitialSampler = std::function<Configuration(CounterRng&)>;
EnsembleMoments run_ensemble(const InitialSampler& init, int replicas,
                             const std::vector<double>& times, const ModelParams& p,
                             uint64_t seed, int threads = 1);

} // namespace sep

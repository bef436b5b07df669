#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <vector>

#include "sepalpha/configuration.hpp"
#include "sepalpha/params.hpp"

namespace sep {

// Enumeration of all (alpha+1)^(N-1) occupation configurations, mixed-radix
// encoded with site 1 as the least significant digit.
class StateSpace {
  public:
    StateSpace(int N, int alpha, std::size_t cap = 500000);

    std::size_t size() const { return n_; }
    int N() const { return N_; }
    int alpha() const { return alpha_; }

    std::size_t index(const std::vector<uint8_t>& counts) const;
    std::size_t index(const Configuration& cfg) const { return index(cfg.counts()); }
    void decode(std::size_t idx, std::vector<uint8_t>& counts) const;
    Configuration state(std::size_t idx) const;

  private:
    int N_, alpha_;
    std::size_t n_;
};

// Full generator of the N^2-accelerated chain on the enumerated state space.
// Q(s,s') is the rate s -> s'; distributions evolve by dp/dt = Q^T p.
class OracleModel {
  public:
    OracleModel(const ModelParams& p, std::size_t cap = 500000);

    const ModelParams& params() const { return p_; }
    const StateSpace& space() const { return space_; }
    const Eigen::SparseMatrix<double>& generator() const { return Q_; }
    const Eigen::SparseMatrix<double>& generator_transpose() const { return Qt_; }
    double uniformization_rate() const { return unif_; }

    // e^{t Q^T} w for any (possibly signed) vector w, by uniformization with
    // Poisson tail below tail_tol * ||w||_1
    Eigen::VectorXd evolve(const Eigen::VectorXd& w, double t, double tail_tol = 1e-14) const;

    // evolve with probability-vector validation on input and output
    Eigen::VectorXd evolve_distribution(const Eigen::VectorXd& p0, double t) const;

    Eigen::VectorXd stationary() const; // pi^T Q = 0, normalized, residual-checked

  private:
    ModelParams p_;
    StateSpace space_;
    Eigen::SparseMatrix<double> Q_, Qt_;
    double unif_ = 0.0;
};

struct ExactMoments {
    int alpha = 0;
    Eigen::VectorXd rho;  // site densities, entry x-1 is rho(x)
    Eigen::MatrixXd pair; // E[eta(x)eta(y)] off-diagonal, E[eta(x)(eta(x)-1)] on it
    Eigen::MatrixXd phi_; // centered two-point field with the degree-two diagonal
                          // extension (alpha/(alpha-1)) E[eta(eta-1)] - rho^2
    Eigen::VectorXd var;  // Var eta(x)

    // sites are 1-based; the alpha = 1 chain has no extended diagonal
    double phi(int x, int y) const {
        if (alpha == 1 && x == y) throw std::domain_error("phi: no diagonal for alpha = 1");
        return phi_(x - 1, y - 1);
    }
};

ExactMoments exact_moments(const OracleModel& m, const Eigen::VectorXd& dist);

// product measure with per-site Binomial(alpha, g(x)/alpha) marginals;
// profile has N-1 entries
Eigen::VectorXd product_distribution(const OracleModel& m, const Eigen::VectorXd& profile);

Eigen::VectorXd point_distribution(const OracleModel& m, const Configuration& cfg);

// E[(eta_v(x) - rho_v(x)) (eta_r(y) - rho_r(y))] for all y, starting from the
// time-v distribution and running the chain for tau = r - v
Eigen::VectorXd exact_two_time(const OracleModel& m, const Eigen::VectorXd& dist_v, int x,
                               double tau);

// sum_s p_s log(p_s / q_s); entries of p below 1e-300 contribute zero
double relative_entropy(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

} // namespace sep

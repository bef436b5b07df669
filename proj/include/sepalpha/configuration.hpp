#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "sepalpha/params.hpp"

namespace sep {

// Occupation numbers on the bulk sites 1..N-1. Index shift is kept in one
// place: site x lives at counts[x-1].
class Configuration {
  public:
    Configuration() = default;
    Configuration(int N, int alpha) : N_(N), alpha_(alpha), counts_(N - 1, 0) {
        if (N < 3 || alpha < 1) throw std::invalid_argument("Configuration: bad N or alpha");
    }
    Configuration(int N, int alpha, std::vector<uint8_t> counts)
        : N_(N), alpha_(alpha), counts_(std::move(counts)) {
        if (N < 3 || alpha < 1) throw std::invalid_argument("Configuration: bad N or alpha");
        if ((int)counts_.size() != N - 1)
            throw std::invalid_argument("Configuration: counts must have N-1 entries");
        for (auto c : counts_)
            if (c > alpha) throw std::invalid_argument("Configuration: count exceeds alpha");
    }

    int N() const { return N_; }
    int alpha() const { return alpha_; }
    int size() const { return N_ - 1; }

    int at(int x) const {
        check_site(x);
        return counts_[x - 1];
    }
    void set(int x, int v) {
        check_site(x);
        if (v < 0 || v > alpha_) throw std::domain_error("Configuration: count outside 0..alpha");
        counts_[x - 1] = (uint8_t)v;
    }
    void add(int x, int dv) { set(x, at(x) + dv); }

    const std::vector<uint8_t>& counts() const { return counts_; }

  private:
    void check_site(int x) const {
        if (x < 1 || x > N_ - 1) throw std::domain_error("Configuration: site outside 1..N-1");
    }

    int N_ = 0;
    int alpha_ = 0;
    std::vector<uint8_t> counts_;
};

// Dual particle configuration: counts on 1..N-1 plus absorbed particles at the
// two boundary vertices 0 and N.
struct DualConfiguration {
    int at0 = 0;
    std::vector<uint8_t> interior; // site x at interior[x-1]
    int atN = 0;
};

// binomial pmf factor prod_x C(alpha, eta(x)) (rho/alpha)^eta (1-rho/alpha)^(alpha-eta)
inline double equilibrium_pmf(const Configuration& cfg, double rho, const ModelParams& p) {
    if (!(rho > 0.0) || !(rho < double(p.alpha)))
        throw std::domain_error("equilibrium_pmf: rho outside (0,alpha)");
    double q = rho / p.alpha;
    double out = 1.0;
    for (int x = 1; x <= cfg.N() - 1; ++x) {
        int k = cfg.at(x);
        double choose = 1.0;
        for (int j = 0; j < k; ++j) choose = choose * double(p.alpha - j) / double(j + 1);
        out *= choose * std::pow(q, k) * std::pow(1.0 - q, p.alpha - k);
    }
    return out;
}

// (1/N) sum_x eta(x) G(x/N); the empirical measure paired with G
inline double empirical_pairing(const Configuration& cfg, const std::function<double(double)>& G) {
    double s = 0.0;
    for (int x = 1; x <= cfg.N() - 1; ++x) s += cfg.at(x) * G(double(x) / cfg.N());
    return s / cfg.N();
}

enum class BlockSide { Left, Right };

// mean of the L occupations strictly to one side of z
inline double block_average(const Configuration& cfg, int z, int L, BlockSide side) {
    if (L < 1) throw std::domain_error("block_average: L must be positive");
    int lo, hi;
    if (side == BlockSide::Right) {
        lo = z + 1;
        hi = z + L;
    } else {
        lo = z - L;
        hi = z - 1;
    }
    if (lo < 1 || hi > cfg.N() - 1)
        throw std::domain_error("block_average: window leaves the lattice");
    double s = 0.0;
    for (int x = lo; x <= hi; ++x) s += cfg.at(x);
    return s / L;
}

} // namespace sep

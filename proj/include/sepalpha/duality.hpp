#pragma once

#include <stdexcept>

#include "sepalpha/configuration.hpp"
#include "sepalpha/params.hpp"

namespace sep {

// evaluates the product duality function
//   D(eta, xi) = rho_l^xi(0) * prod_x [ eta(x)! (alpha-xi(x))! / ((eta(x)-xi(x))! alpha!) ] * rho_r^xi(N)
// with the convention that a site with xi(x) > eta(x) kills the whole product.
// Dual counts above alpha are outside the state space and rejected.
inline double duality_eval(const Configuration& cfg, const DualConfiguration& dual,
                           const ModelParams& p) {
    if ((int)dual.interior.size() != cfg.N() - 1)
        throw std::invalid_argument("duality_eval: dual interior size mismatch");
    double out = 1.0;
    for (int x = 1; x <= cfg.N() - 1; ++x) {
        int k = dual.interior[x - 1];
        if (k > p.alpha) throw std::domain_error("duality_eval: dual count exceeds alpha");
        int e = cfg.at(x);
        if (k > e) return 0.0;
        // eta!/(eta-k)! / (alpha!/(alpha-k)!) = falling factorials ratio
        for (int j = 0; j < k; ++j) out *= double(e - j) / double(p.alpha - j);
    }
    for (int j = 0; j < dual.at0; ++j) out *= p.rho_l;
    for (int j = 0; j < dual.atN; ++j) out *= p.rho_r;
    return out;
}

// dual configuration with k particles at x (helper for moment duals)
inline DualConfiguration dual_delta(int N, int x, int k = 1) {
    DualConfiguration d;
    d.interior.assign(N - 1, 0);
    if (x == 0)
        d.at0 = k;
    else if (x == N)
        d.atN = k;
    else if (x >= 1 && x <= N - 1)
        d.interior[x - 1] = (uint8_t)k;
    else
        throw std::domain_error("dual_delta: vertex outside 0..N");
    return d;
}

} // namespace sep

#pragma once

#include <stdexcept>

#include "sepalpha/configuration.hpp"
#include "sepalpha/params.hpp"

namespace sep {

enum class Dir { Left, Right };

// jump rate of one particle across the bond (x, x +/- 1); zero when the target
// vertex is a reservoir (those moves are owned by reservoir_rates)
inline double bulk_rate(const Configuration& cfg, int x, Dir dir, const ModelParams& p) {
    if (x < 1 || x > cfg.N() - 1) throw std::domain_error("bulk_rate: site outside 1..N-1");
    int tgt = (dir == Dir::Right) ? x + 1 : x - 1;
    if (tgt < 1 || tgt > cfg.N() - 1) return 0.0;
    return double(cfg.at(x)) * (p.alpha - cfg.at(tgt));
}

struct ReservoirRates {
    double inj_left, rem_left, inj_right, rem_right;
};

// the four boundary rates, already carrying the N^-theta slowdown
inline ReservoirRates reservoir_rates(const Configuration& cfg, const ModelParams& p) {
    double nt = p.n_theta();
    int e1 = cfg.at(1), eN1 = cfg.at(cfg.N() - 1);
    return {
        p.lambda_l * p.rho_l * (p.alpha - e1) / nt,
        p.lambda_l * (p.alpha - p.rho_l) * e1 / nt,
        p.lambda_r * p.rho_r * (p.alpha - eN1) / nt,
        p.lambda_r * (p.alpha - p.rho_r) * eN1 / nt,
    };
}

enum class GammaPosition { BulkOffDiag, BulkDiag, LeftCorner, RightCorner };

// carre-du-champ building block Gamma(f,g) = L(fg) - f Lg - g Lf restricted to
// a single mechanism. a is the count at the site of interest, b the count at
// the other end of the shared bond (ignored for the corner mechanisms, which
// only involve one site and its reservoir).
//   BulkOffDiag: pair (x, x+1) through their shared bond
//   BulkDiag:    pair (x, x) through ONE adjacent bond; callers sum both bonds
//   corners:     pair (1,1) resp. (N-1,N-1) through the adjacent reservoir
inline double gamma_term(int a, int b, GammaPosition pos, const ModelParams& p) {
    double al = p.alpha;
    switch (pos) {
        case GammaPosition::BulkOffDiag:
            return 2.0 * a * b - al * (a + b);
        case GammaPosition::BulkDiag:
            return al * (a + b) - 2.0 * a * b;
        case GammaPosition::LeftCorner:
            return (p.lambda_l / p.n_theta()) * (p.rho_l * (al - a) + (al - p.rho_l) * a);
        case GammaPosition::RightCorner:
            return (p.lambda_r / p.n_theta()) * (p.rho_r * (al - a) + (al - p.rho_r) * a);
    }
    throw std::logic_error("gamma_term: unreachable");
}

} // namespace sep

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace sep {

// Parameters of the boundary-driven partial exclusion chain on {1,...,N-1}.
// Sites hold 0..alpha particles; the two reservoirs are tuned by
// (lambda_l, rho_l) and (lambda_r, rho_r) and slowed/accelerated by N^-theta.
struct ModelParams {
    int alpha = 1;
    double lambda_l = 1.0, lambda_r = 1.0;
    double rho_l = 0.5, rho_r = 0.5;
    double theta = 0.0;
    int N = 3;

    void validate() const {
        if (alpha < 1) throw std::invalid_argument("alpha must be a positive integer");
        if (N < 3) throw std::invalid_argument("N must be at least 3");
        check_coupling("lambda_l", lambda_l);
        check_coupling("lambda_r", lambda_r);
        check_density("rho_l", rho_l);
        check_density("rho_r", rho_r);
        if (!std::isfinite(theta)) throw std::invalid_argument("theta must be finite");
    }

    // The deterministic solvers are well posed with pinned boundary densities
    // anywhere in the closed interval [0,alpha]; only the stochastic chain
    // needs the strict bounds (they keep all four reservoir rates positive).
    void validate_for_solvers() const {
        if (alpha < 1) throw std::invalid_argument("alpha must be a positive integer");
        if (N < 3) throw std::invalid_argument("N must be at least 3");
        check_coupling("lambda_l", lambda_l);
        check_coupling("lambda_r", lambda_r);
        if (!(rho_l >= 0.0) || !(rho_l <= double(alpha)))
            throw std::invalid_argument("rho_l must lie in [0,alpha]");
        if (!(rho_r >= 0.0) || !(rho_r <= double(alpha)))
            throw std::invalid_argument("rho_r must lie in [0,alpha]");
        if (!std::isfinite(theta)) throw std::invalid_argument("theta must be finite");
    }

    double n_theta() const { return std::pow(double(N), theta); }

    // injection/removal strengths; all four are positive whenever validate() passes
    double eps() const { return lambda_l * rho_l; }          // left injection
    double gamma() const { return lambda_l * (alpha - rho_l); } // left removal
    double delta() const { return lambda_r * rho_r; }        // right injection
    double beta() const { return lambda_r * (alpha - rho_r); }  // right removal

    // effective boundary bond rate alpha*lambda_j/N^theta used by the dual walks
    double bond_rate_left() const { return alpha * lambda_l / n_theta(); }
    double bond_rate_right() const { return alpha * lambda_r / n_theta(); }

  private:
    void check_coupling(const char* name, double v) const {
        if (!(v > 0.0) || !(v <= 1.0))
            throw std::invalid_argument(std::string(name) + " must lie in (0,1]");
    }
    void check_density(const char* name, double v) const {
        if (!(v > 0.0) || !(v < double(alpha)))
            throw std::invalid_argument(std::string(name) + " must lie in (0,alpha)");
    }
};

// rho(alpha - rho), the static mobility of the alpha-exclusion family
inline double mobility(double rho, int alpha) {
    if (!(rho >= 0.0) || !(rho <= double(alpha)))
        throw std::domain_error("mobility: rho outside [0,alpha]");
    return rho * (double(alpha) - rho);
}

} // namespace sep

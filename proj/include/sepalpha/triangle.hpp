#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sepalpha/density.hpp"
#include "sepalpha/oracle.hpp"
#include "sepalpha/params.hpp"

namespace sep {

// Packed row-major index set {(x,y): 1 <= x <= y <= N-1}, x < y when the
// diagonal is excluded. All pair-walk moves are enumerated in one place so
// the correlation operator and the two-particle walks cannot drift apart.
class TriangleLattice {
  public:
    TriangleLattice(int N, bool with_diagonal);

    int N() const { return N_; }
    bool with_diagonal() const { return diag_; }
    int size() const { return size_; }

    int index(int x, int y) const; // throws outside the triangle
    std::pair<int, int> site(int idx) const;
    bool contains(int x, int y) const;

    // Folded pair-walk moves from every packed site: fn(from, to, rate), with
    // to = -1 when the move crosses into the absorbing boundary (x = 0 or
    // y = N). Bulk bonds carry `alpha`; the boundary bonds additionally carry
    // the factor bl (left wall) or br (right wall). Moves onto the diagonal
    // carry alpha - 1 (gone at alpha = 1), the diagonal itself moves at
    // 2 alpha, so its two corner sites are absorbed at 2 alpha bl / 2 alpha br.
    template <class F>
    void for_each_move(int alpha, double bl, double br, F&& fn) const {
        if (!diag_ && alpha != 1)
            throw std::logic_error("for_each_move: alpha >= 2 needs the diagonal");
        const double a = alpha;
        for (int i = 0; i < size_; ++i) {
            auto [x, y] = site(i);
            if (x == y) {
                if (x == 1)
                    fn(i, -1, 2.0 * a * bl);
                else
                    fn(i, index(x - 1, x), 2.0 * a);
                if (x == N_ - 1)
                    fn(i, -1, 2.0 * a * br);
                else
                    fn(i, index(x, x + 1), 2.0 * a);
            } else if (y == x + 1) {
                if (alpha > 1) {
                    fn(i, index(x, x), a - 1.0);
                    fn(i, index(y, y), a - 1.0);
                }
                fn(i, x == 1 ? -1 : index(x - 1, y), x == 1 ? a * bl : a);
                fn(i, y == N_ - 1 ? -1 : index(x, y + 1), y == N_ - 1 ? a * br : a);
            } else {
                fn(i, x == 1 ? -1 : index(x - 1, y), x == 1 ? a * bl : a);
                fn(i, index(x + 1, y), a);
                fn(i, index(x, y - 1), a);
                fn(i, y == N_ - 1 ? -1 : index(x, y + 1), y == N_ - 1 ? a * br : a);
            }
        }
    }

  private:
    int N_;
    bool diag_;
    int size_;
    std::vector<int> offset_; // packed start of row x
};

// Two-point correlation field on the triangle, implicitly zero on the
// absorbing boundary and symmetric under (x,y) swap. For alpha >= 2 the
// diagonal holds the degree-two extension, for alpha = 1 it is absent.
struct CorrelationField {
    int N = 0;
    bool with_diagonal = true;
    Eigen::VectorXd values;
    double time = 0.0;
};

// packs the oracle's centered field (extension included when alpha >= 2)
CorrelationField field_from_moments(const ExactMoments& m, const ModelParams& p);

// g(x, x+1) = -(N (rho(x+1) - rho(x)))^2, entry x-1, for x = 1..N-2
Eigen::VectorXd correlation_source(const DensityProfile& rho);

// unscaled triangle operator applied matrix-free; boundary bonds carry
// lambda^j / N^theta
Eigen::VectorXd correlation_generator_apply(const CorrelationField& phi, const ModelParams& p);

// the same operator assembled as a sparse matrix (rows = from-site)
Eigen::SparseMatrix<double> correlation_generator_matrix(const TriangleLattice& lat,
                                                         const ModelParams& p);

// solves d phi / dt = N^2 Delta phi + g_t 1_{D+} from phi0.time over a span
// of t, with the density path supplying rho_s for the source
CorrelationField evolve_correlation(const CorrelationField& phi0, const DensityPath& rho_path,
                                    double t, const ModelParams& p, double tol = 1e-9);

// Var eta(x) = chi_alpha(rho)/alpha + ((alpha-1)/alpha) phi(x,x); the phi
// term is absent for alpha = 1
double variance_from_extended(double phi_diag, double rho, const ModelParams& p);

// Initial-correlation decay report: largest centered pair correlation and
// largest diagonal deviation alpha E[eta(eta-1)] - (alpha-1) rho^2, split
// into bulk rows and the two boundary rows, with their decay scales.
struct HypothesisReport {
    double offdiag_all = 0.0;      // max over x != y
    double diag_bulk = 0.0;        // max over x not in {1, N-1}
    double offdiag_boundary = 0.0; // rows x in {1, N-1} only
    double diag_boundary = 0.0;    // x in {1, N-1}
    double bulk_scale = 0.0;       // 1/N
    double boundary_scale = 0.0;   // min(1, N^(theta-1)) / N
};

// pair follows the oracle convention: raw E[eta(x)eta(y)] off the diagonal,
// E[eta(eta-1)] on it
HypothesisReport hypothesis_check(const Eigen::VectorXd& rho, const Eigen::MatrixXd& pair,
                                  const ModelParams& p);
HypothesisReport hypothesis_check(const ExactMoments& m, const ModelParams& p);

} // namespace sep

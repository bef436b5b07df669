#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <stdexcept>

namespace sep {

// spectral form of a symmetric matrix; exact propagator for the 1D systems
struct SymmetricEigen {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors; // columns

    explicit SymmetricEigen(const Eigen::MatrixXd& A) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
        if (es.info() != Eigen::Success) throw std::runtime_error("SymmetricEigen: failed");
        values = es.eigenvalues();
        vectors = es.eigenvectors();
    }

    // e^{tA} y
    Eigen::VectorXd propagate(const Eigen::VectorXd& y, double t) const {
        Eigen::VectorXd c = vectors.transpose() * y;
        for (Eigen::Index i = 0; i < c.size(); ++i) c(i) *= std::exp(t * values(i));
        return vectors * c;
    }

    // d/dt e^{tA} y = A e^{tA} y
    Eigen::VectorXd propagate_derivative(const Eigen::VectorXd& y, double t) const {
        Eigen::VectorXd c = vectors.transpose() * y;
        for (Eigen::Index i = 0; i < c.size(); ++i) c(i) *= values(i) * std::exp(t * values(i));
        return vectors * c;
    }

    // int_{t0}^{t1} e^{sA} y ds; expm1 keeps the near-zero eigenvalues exact
    Eigen::VectorXd propagate_integral(const Eigen::VectorXd& y, double t0, double t1) const {
        Eigen::VectorXd c = vectors.transpose() * y;
        const double span = t1 - t0;
        for (Eigen::Index i = 0; i < c.size(); ++i) {
            double u = span * values(i);
            double factor = std::abs(u) < 1e-12 ? span * (1.0 + 0.5 * u)
                                                : std::expm1(u) / values(i);
            c(i) *= std::exp(t0 * values(i)) * factor;
        }
        return vectors * c;
    }
};

inline Eigen::VectorXd sparse_solve(const Eigen::SparseMatrix<double>& A,
                                    const Eigen::VectorXd& rhs) {
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
    if (lu.info() != Eigen::Success) throw std::runtime_error("sparse_solve: factorization failed");
    Eigen::VectorXd x = lu.solve(rhs);
    if (lu.info() != Eigen::Success) throw std::runtime_error("sparse_solve: solve failed");
    return x;
}

// Gauss-Legendre rule on [a, b]: exact for polynomials of degree 2n - 1,
// nodes found by Newton refinement of the Chebyshev guess
struct QuadratureRule {
    Eigen::VectorXd nodes, weights;
};

inline QuadratureRule gauss_legendre(int n, double a, double b) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
    QuadratureRule q;
    q.nodes.resize(n);
    q.weights.resize(n);
    for (int k = 0; k < n; ++k) {
        double x = std::cos(3.14159265358979323846 * (k + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int m = 2; m <= n; ++m) {
                double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double step = p1 / dp;
            x -= step;
            if (std::abs(step) < 1e-15) break;
        }
        q.nodes(k) = a + 0.5 * (b - a) * (1.0 - x); // descending roots -> ascending nodes
        q.weights(k) = (b - a) / ((1.0 - x * x) * dp * dp);
    }
    return q;
}

} // namespace sep

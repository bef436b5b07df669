#include "sepalpha/triangle.hpp"

#include <cmath>

#include "sepalpha/integrate.hpp"

namespace sep {

TriangleLattice::TriangleLattice(int N, bool with_diagonal) : N_(N), diag_(with_diagonal) {
    if (N < 3) throw std::invalid_argument("TriangleLattice: N >= 3");
    offset_.assign(N_, 0); // rows x = 1..N-1 (the last may be empty without diagonal)
    int acc = 0;
    for (int x = 1; x <= N_ - 1; ++x) {
        offset_[x - 1] = acc;
        int y0 = diag_ ? x : x + 1;
        acc += N_ - y0; // y runs y0..N-1
    }
    size_ = acc;
}

int TriangleLattice::index(int x, int y) const {
    if (!contains(x, y)) throw std::domain_error("TriangleLattice: site outside the triangle");
    int y0 = diag_ ? x : x + 1;
    return offset_[x - 1] + (y - y0);
}

std::pair<int, int> TriangleLattice::site(int idx) const {
    if (idx < 0 || idx >= size_) throw std::domain_error("TriangleLattice: index out of range");
    int x = 1;
    while (x < N_ - 1 && offset_[x] <= idx) ++x;
    int y0 = diag_ ? x : x + 1;
    return {x, y0 + (idx - offset_[x - 1])};
}

bool TriangleLattice::contains(int x, int y) const {
    if (x < 1 || y > N_ - 1) return false;
    return diag_ ? x <= y : x < y;
}

CorrelationField field_from_moments(const ExactMoments& m, const ModelParams& p) {
    TriangleLattice lat(p.N, m.alpha >= 2);
    CorrelationField f;
    f.N = p.N;
    f.with_diagonal = m.alpha >= 2;
    f.values.resize(lat.size());
    for (int i = 0; i < lat.size(); ++i) {
        auto [x, y] = lat.site(i);
        f.values(i) = m.phi(x, y);
    }
    return f;
}

Eigen::VectorXd correlation_source(const DensityProfile& rho) {
    const int N = rho.N();
    Eigen::VectorXd g(N - 2);
    for (int x = 1; x <= N - 2; ++x) {
        double d = N * (rho.interior(x) - rho.interior(x - 1));
        g(x - 1) = -d * d;
    }
    return g;
}

Eigen::VectorXd correlation_generator_apply(const CorrelationField& phi, const ModelParams& p) {
    p.validate_for_solvers();
    if (phi.N != p.N) throw std::invalid_argument("correlation_generator_apply: size mismatch");
    if (phi.with_diagonal != (p.alpha >= 2))
        throw std::domain_error("correlation_generator_apply: diagonal storage must match alpha");
    TriangleLattice lat(p.N, phi.with_diagonal);
    if (phi.values.size() != lat.size())
        throw std::invalid_argument("correlation_generator_apply: packed size mismatch");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(lat.size());
    const double nt = p.n_theta();
    lat.for_each_move(p.alpha, p.lambda_l / nt, p.lambda_r / nt,
                      [&](int from, int to, double rate) {
                          double target = to >= 0 ? phi.values(to) : 0.0;
                          out(from) += rate * (target - phi.values(from));
                      });
    return out;
}

Eigen::SparseMatrix<double> correlation_generator_matrix(const TriangleLattice& lat,
                                                         const ModelParams& p) {
    p.validate_for_solvers();
    if (lat.N() != p.N) throw std::invalid_argument("correlation_generator_matrix: size mismatch");
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * (std::size_t)lat.size());
    const double nt = p.n_theta();
    lat.for_each_move(p.alpha, p.lambda_l / nt, p.lambda_r / nt,
                      [&](int from, int to, double rate) {
                          if (to >= 0) trip.emplace_back(from, to, rate);
                          trip.emplace_back(from, from, -rate);
                      });
    Eigen::SparseMatrix<double> A(lat.size(), lat.size());
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

CorrelationField evolve_correlation(const CorrelationField& phi0, const DensityPath& rho_path,
                                    double t, const ModelParams& p, double tol) {
    p.validate_for_solvers();
    if (t < 0) throw std::domain_error("evolve_correlation: negative time");
    if (p.alpha == 1 && phi0.with_diagonal)
        throw std::domain_error("evolve_correlation: alpha = 1 carries no diagonal data");
    if (p.alpha >= 2 && !phi0.with_diagonal)
        throw std::domain_error("evolve_correlation: alpha >= 2 couples to the diagonal");
    if (phi0.N != p.N) throw std::invalid_argument("evolve_correlation: size mismatch");

    TriangleLattice lat(p.N, phi0.with_diagonal);
    const double n2 = (double)p.N * p.N;
    Eigen::SparseMatrix<double> A = n2 * correlation_generator_matrix(lat, p);

    std::vector<int> plus(p.N - 2); // packed slots of the source diagonal
    for (int x = 1; x <= p.N - 2; ++x) plus[x - 1] = lat.index(x, x + 1);

    // the path clock and the field timestamps share an origin, so a later leg
    // of the same field keeps sampling the same density trajectory
    const double N = p.N;
    auto source = [&](double s, Eigen::VectorXd& b) {
        b.setZero();
        Eigen::VectorXd r = rho_path.at(s);
        for (int x = 1; x <= p.N - 2; ++x) {
            double d = N * (r(x) - r(x - 1));
            b(plus[x - 1]) = -d * d;
        }
    };

    StiffStepper::Options opt;
    opt.tol = tol;
    opt.h_init = std::min(1e-2, 0.1 / n2);
    StiffStepper stepper(std::move(A), opt, source);
    stepper.set_time(phi0.time);
    Eigen::VectorXd u = phi0.values;
    stepper.advance(u, phi0.time + t);
    return CorrelationField{phi0.N, phi0.with_diagonal, std::move(u), phi0.time + t};
}

double variance_from_extended(double phi_diag, double rho, const ModelParams& p) {
    double chi = mobility(rho, p.alpha);
    if (p.alpha == 1) return chi;
    return chi / p.alpha + (p.alpha - 1.0) / p.alpha * phi_diag;
}

HypothesisReport hypothesis_check(const Eigen::VectorXd& rho, const Eigen::MatrixXd& pair,
                                  const ModelParams& p) {
    const int n = p.N - 1;
    if (rho.size() != n || pair.rows() != n || pair.cols() != n)
        throw std::invalid_argument("hypothesis_check: moment sizes mismatch");
    HypothesisReport rep;
    rep.bulk_scale = 1.0 / p.N;
    rep.boundary_scale = std::min(1.0, std::pow((double)p.N, p.theta - 1.0)) / p.N;
    for (int x = 1; x <= n; ++x) {
        bool xb = (x == 1 || x == n);
        for (int y = 1; y <= n; ++y) {
            if (y == x) continue;
            double c = std::abs(pair(x - 1, y - 1) - rho(x - 1) * rho(y - 1));
            rep.offdiag_all = std::max(rep.offdiag_all, c);
            if (xb || y == 1 || y == n) rep.offdiag_boundary = std::max(rep.offdiag_boundary, c);
        }
        double dev =
            std::abs(p.alpha * pair(x - 1, x - 1) - (p.alpha - 1.0) * rho(x - 1) * rho(x - 1));
        if (xb)
            rep.diag_boundary = std::max(rep.diag_boundary, dev);
        else
            rep.diag_bulk = std::max(rep.diag_bulk, dev);
    }
    return rep;
}

HypothesisReport hypothesis_check(const ExactMoments& m, const ModelParams& p) {
    return hypothesis_check(m.rho, m.pair, p);
}

} // namespace sep

#include "sepalpha/walks.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "sepalpha/integrate.hpp"
#include "sepalpha/spectral.hpp"

namespace sep {

namespace {

Eigen::VectorXd superdiagonal_indicator(const TriangleLattice& lat) {
    Eigen::VectorXd ind = Eigen::VectorXd::Zero(lat.size());
    for (int x = 1; x <= lat.N() - 2; ++x) ind(lat.index(x, x + 1)) = 1.0;
    return ind;
}

// running supremum sup_{s<=t} of the reference kernel: the comparison
// argument controls the monotone envelope of the wall columns, not their
// instantaneous value, which decays at the reference spectral gap while a
// weakly absorbed kernel keeps its mass
double sup_wall_kernel(const DiscreteSpectrum& spec, int alpha, int w, int y, double t) {
    auto val = [&](double s) { return discrete_kernel(spec, alpha, w, y, s); };
    const int grid = 64;
    double best = w == y ? 1.0 : 0.0; // the s = 0 indicator
    double arg = 0.0;
    for (int k = 1; k <= grid; ++k) {
        double s = t * k / grid;
        double v = val(s);
        if (v > best) {
            best = v;
            arg = s;
        }
    }
    double lo = std::max(0.0, arg - t / grid), hi = std::min(t, arg + t / grid);
    for (int it = 0; it < 200 && hi - lo > 1e-14 * t; ++it) {
        double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        if (val(m1) < val(m2))
            lo = m1;
        else
            hi = m2;
    }
    return std::max(best, val(0.5 * (lo + hi)));
}

void check_generator_rates(const Eigen::SparseMatrix<double>& A, bool conservative,
                           const Eigen::SparseMatrix<double>* B) {
    for (int k = 0; k < A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
            if (it.row() != it.col() && it.value() < -1e-13)
                throw std::invalid_argument("maximum principle: negative off-diagonal rate");
    Eigen::VectorXd row_sum = A * Eigen::VectorXd::Ones(A.cols());
    if (B) {
        for (int k = 0; k < B->outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(*B, k); it; ++it)
                if (it.value() < -1e-13)
                    throw std::invalid_argument("maximum principle: negative boundary rate");
        row_sum += *B * Eigen::VectorXd::Ones(B->cols());
    }
    const double scale = std::max(1.0, row_sum.cwiseAbs().maxCoeff());
    for (int i = 0; i < row_sum.size(); ++i) {
        if (conservative ? std::abs(row_sum(i)) > 1e-9 * scale : row_sum(i) > 1e-9 * scale)
            throw std::invalid_argument("maximum principle: rows must not create mass");
    }
}

} // namespace

OccupationSolution occupation_closed_form(int N, int alpha) {
    if (N < 3) throw std::invalid_argument("occupation_closed_form: N >= 3");
    if (alpha < 1) throw std::invalid_argument("occupation_closed_form: alpha >= 1");
    OccupationSolution sol{TriangleLattice(N, true), Eigen::VectorXd(), 0.0};
    sol.values.resize(sol.lattice.size());
    const double denom = double(N) * N * (double(alpha) * N - 1.0);
    for (int i = 0; i < sol.lattice.size(); ++i) {
        auto [x, y] = sol.lattice.site(i);
        sol.values(i) = (double(N) - y) * x / denom;
        if (x == y) sol.values(i) -= 0.5 * N / denom;
    }
    return sol;
}

OccupationSolution occupation_solve(const ModelParams& p) {
    p.validate_for_solvers();
    OccupationSolution sol{TriangleLattice(p.N, true), Eigen::VectorXd(), 0.0};
    const TriangleLattice& lat = sol.lattice;
    Eigen::SparseMatrix<double> A = correlation_generator_matrix(lat, p);
    A *= double(p.N) * p.N;
    Eigen::VectorXd rhs = -superdiagonal_indicator(lat);
    if (p.N <= 256) {
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(A);
        if (lu.info() != Eigen::Success)
            throw std::runtime_error("occupation_solve: factorization failed");
        sol.values = lu.solve(rhs);
    } else {
        Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::DiagonalPreconditioner<double>> it;
        it.setTolerance(1e-12);
        it.setMaxIterations(20000);
        it.compute(A);
        sol.values = it.solve(rhs);
        if (it.info() != Eigen::Success)
            throw std::runtime_error("occupation_solve: iteration stalled");
    }
    // backward error: the raw defect divided by the row scale |A||T|, since
    // the generator norm grows like alpha N^2 and an absolute defect bound
    // would sit below roundoff for stiff parameter sets
    const double defect = (A * sol.values - rhs).cwiseAbs().maxCoeff();
    double row_scale = 1.0;
    Eigen::VectorXd weighted = Eigen::VectorXd::Zero(A.rows());
    for (int k = 0; k < A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
            weighted(it.row()) += std::abs(it.value()) * std::abs(sol.values(it.col()));
    row_scale = std::max(row_scale, weighted.maxCoeff());
    sol.residual = defect / row_scale;
    if (sol.residual > 1e-10) {
        std::ostringstream msg;
        msg << "occupation_solve: scaled residual " << sol.residual << " exceeds 1e-10";
        throw std::runtime_error(msg.str());
    }
    return sol;
}

Eigen::VectorXd potential_field(const TriangleLattice& lat, const ModelParams& p) {
    p.validate_for_solvers();
    if (lat.N() != p.N) throw std::invalid_argument("potential_field: size mismatch");
    const double scale = p.alpha * double(p.N) * p.N / p.n_theta();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(lat.size());
    for (int i = 0; i < lat.size(); ++i) {
        auto [x, y] = lat.site(i);
        double walls = p.lambda_l * ((x == 1) + (y == 1)) + p.lambda_r * ((x == p.N - 1) + (y == p.N - 1));
        v(i) = -scale * walls;
    }
    return v;
}

Eigen::SparseMatrix<double> reflected_generator_matrix(const TriangleLattice& lat, int alpha) {
    if (alpha < 1) throw std::invalid_argument("reflected_generator_matrix: alpha >= 1");
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * (std::size_t)lat.size());
    lat.for_each_move(alpha, 1.0, 1.0, [&](int from, int to, double rate) {
        if (to < 0) return; // wall crossing suppressed: the walk waits instead
        trip.emplace_back(from, to, rate);
        trip.emplace_back(from, from, -rate);
    });
    Eigen::SparseMatrix<double> A(lat.size(), lat.size());
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

Eigen::VectorXd reflected_occupation_field(double t, const ModelParams& p, double tol) {
    p.validate_for_solvers();
    if (t < 0) throw std::domain_error("reflected_occupation_field: negative horizon");
    TriangleLattice lat(p.N, true);
    Eigen::SparseMatrix<double> W = reflected_generator_matrix(lat, p.alpha);
    W *= double(p.N) * p.N;
    Eigen::VectorXd src = superdiagonal_indicator(lat);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(lat.size());
    if (t == 0.0) return g;
    StiffStepper::Options opt;
    opt.tol = tol;
    StiffStepper stepper(std::move(W), opt, [&](double, Eigen::VectorXd& b) { b = src; });
    stepper.advance(g, t);
    return g;
}

double reflected_occupation(int x, int y, double t, const ModelParams& p, double tol) {
    if (x > y) std::swap(x, y);
    TriangleLattice lat(p.N, true);
    if (!lat.contains(x, y))
        throw std::invalid_argument("reflected_occupation: start outside the triangle");
    return reflected_occupation_field(t, p, tol)(lat.index(x, y));
}

Eigen::SparseMatrix<double> line_walk_generator(const ModelParams& p) {
    p.validate_for_solvers();
    const int n = p.N - 1;
    const double n2 = double(p.N) * p.N;
    const double a = p.alpha;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(3 * (std::size_t)n);
    for (int i = 0; i < n; ++i) {
        double out = 0.0;
        if (i > 0) {
            trip.emplace_back(i, i - 1, a * n2);
            out += a * n2;
        } else {
            out += p.bond_rate_left() * n2;
        }
        if (i < n - 1) {
            trip.emplace_back(i, i + 1, a * n2);
            out += a * n2;
        } else {
            out += p.bond_rate_right() * n2;
        }
        trip.emplace_back(i, i, -out);
    }
    Eigen::SparseMatrix<double> A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

Eigen::MatrixXd line_walk_propagate(const Eigen::MatrixXd& u0, double t, const ModelParams& p,
                                    double tol) {
    p.validate_for_solvers();
    if (u0.rows() != p.N - 1)
        throw std::invalid_argument("line_walk_propagate: rows must cover the interior");
    if (t < 0) throw std::domain_error("line_walk_propagate: negative time");
    if (!(tol > 0)) throw std::invalid_argument("line_walk_propagate: tolerance must be positive");
    if (t == 0.0) return u0;
    // Fixed-step trapezoid. For indicator data the accumulated error behaves
    // like (h/t)^2 uniformly in the stiffness, so the step count is set by
    // the tolerance alone; one factorization serves every solve because the
    // damped startup below uses half steps of the same matrix.
    const int steps = std::clamp((int)std::ceil(std::sqrt(1.0 / (3.0 * tol))), 64, 400000);
    const double h = t / steps;
    Eigen::SparseMatrix<double> A = line_walk_generator(p);
    Eigen::SparseMatrix<double> M(A.rows(), A.cols());
    M.setIdentity();
    M -= (h / 2.0) * A;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(M);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("line_walk_propagate: factorization failed");
    Eigen::MatrixXd u = u0;
    // two damped steps (backward Euler half-steps) absorb the modes the
    // trapezoid rule would otherwise carry undamped out of rough data
    for (int k = 0; k < 4; ++k) {
        Eigen::MatrixXd next = lu.solve(u);
        u = std::move(next);
    }
    for (int k = 2; k < steps; ++k) {
        Eigen::MatrixXd rhs = u + (h / 2.0) * (A * u);
        u = lu.solve(rhs);
    }
    return u;
}

Eigen::VectorXd transition_row(int x, double t, const ModelParams& p, double tol) {
    p.validate_for_solvers();
    if (x < 1 || x > p.N - 1) throw std::invalid_argument("transition_row: site outside interior");
    if (t < 0) throw std::domain_error("transition_row: negative time");
    if (!(tol > 0)) throw std::invalid_argument("transition_row: tolerance must be positive");
    Eigen::VectorXd row = Eigen::VectorXd::Zero(p.N - 1);
    row(x - 1) = 1.0;
    if (t == 0.0) return row;
    return line_walk_propagate(row, t, p, tol);
}

double transition_kernel(int x, int y, double t, const ModelParams& p, double tol) {
    if (y < 1 || y > p.N - 1) throw std::invalid_argument("transition_kernel: site outside interior");
    return transition_row(x, t, p, tol)(y - 1);
}

DominationReport kernel_domination_check(const std::vector<KernelSample>& samples,
                                         const ModelParams& p, double tol) {
    p.validate_for_solvers();
    const double nt = p.n_theta();
    if (p.theta < 0 && (p.lambda_l < nt || p.lambda_r < nt))
        throw std::invalid_argument(
            "kernel_domination_check: theta < 0 needs lambda_j >= N^theta");
    DiscreteSpectrum spec(p.N);
    DominationReport rep;
    const double flag = -std::max(1e-12, 10.0 * tol);
    for (const KernelSample& s : samples) {
        const double lhs = transition_kernel(s.x, s.y, s.t, p, tol);
        double rhs = discrete_kernel(spec, p.alpha, s.x, s.y, s.t);
        if (p.theta >= 0) {
            const double cl = nt / p.lambda_l - 1.0;
            const double cr = nt / p.lambda_r - 1.0;
            if (cl > 0.0) rhs += cl * sup_wall_kernel(spec, p.alpha, 1, s.y, s.t);
            if (cr > 0.0) rhs += cr * sup_wall_kernel(spec, p.alpha, p.N - 1, s.y, s.t);
        }
        const double margin = rhs - lhs;
        rep.worst_margin = std::min(rep.worst_margin, margin);
        if (margin < flag) {
            rep.ok = false;
            rep.violations.push_back({s.x, s.y, s.t, margin});
        }
    }
    return rep;
}

PrincipleVerdict max_principle_elliptic(const Eigen::SparseMatrix<double>& interior_op,
                                        const Eigen::SparseMatrix<double>& boundary_op,
                                        const Eigen::VectorXd& f, const Eigen::VectorXd& boundary) {
    if (interior_op.rows() != interior_op.cols() || interior_op.rows() != f.size() ||
        boundary_op.rows() != f.size() || boundary_op.cols() != boundary.size())
        throw std::invalid_argument("max_principle_elliptic: shape mismatch");
    check_generator_rates(interior_op, /*conservative=*/true, &boundary_op);
    PrincipleVerdict v;
    v.residual = (interior_op * f + boundary_op * boundary).cwiseAbs().maxCoeff();
    v.precondition_ok = v.residual <= 1e-9;
    if (!v.precondition_ok) return v;
    const double slack_max = boundary.maxCoeff() - f.maxCoeff();
    const double slack_min = f.minCoeff() - boundary.minCoeff();
    v.slack = std::min(slack_max, slack_min);
    v.pass = v.slack >= -1e-12;
    return v;
}

PrincipleVerdict max_principle_markov(const Eigen::SparseMatrix<double>& generator,
                                      const Eigen::VectorXd& f) {
    if (generator.rows() != generator.cols() || generator.rows() != f.size())
        throw std::invalid_argument("max_principle_markov: shape mismatch");
    check_generator_rates(generator, /*conservative=*/false, nullptr);
    PrincipleVerdict v;
    Eigen::VectorXd source = generator * f;
    // the sign test scales with the solve that produced f: a linear solve
    // cannot certify the source sign below its own roundoff
    const double floor =
        1e-12 * std::max(1.0, source.cwiseAbs().maxCoeff() + f.cwiseAbs().maxCoeff());
    v.residual = std::max(0.0, -source.minCoeff());
    v.precondition_ok = v.residual <= floor;
    if (!v.precondition_ok) return v;
    v.slack = -f.maxCoeff();
    v.pass = f.maxCoeff() <= 1e-12;
    return v;
}

PrincipleVerdict max_principle_parabolic(const Eigen::SparseMatrix<double>& generator,
                                         const Eigen::MatrixXd& snapshots,
                                         const Eigen::VectorXd& times, double tol) {
    if (generator.rows() != generator.cols() || generator.rows() != snapshots.rows())
        throw std::invalid_argument("max_principle_parabolic: shape mismatch");
    if (snapshots.cols() != times.size() || times.size() < 2)
        throw std::invalid_argument("max_principle_parabolic: need at least two snapshots");
    check_generator_rates(generator, /*conservative=*/false, nullptr);
    PrincipleVerdict v;
    for (int i = 0; i + 1 < times.size(); ++i) {
        const double h = times(i + 1) - times(i);
        if (!(h > 0)) throw std::invalid_argument("max_principle_parabolic: times not increasing");
        // implied trapezoid source of the interval; <= 0 certifies the
        // differential inequality in discrete form
        Eigen::VectorXd mid = 0.5 * (snapshots.col(i) + snapshots.col(i + 1));
        Eigen::VectorXd r = (snapshots.col(i + 1) - snapshots.col(i)) / h - generator * mid;
        v.residual = std::max(v.residual, r.maxCoeff());
    }
    v.precondition_ok = v.residual <= tol;
    if (!v.precondition_ok) return v;
    const double cap = std::max(0.0, snapshots.col(0).maxCoeff());
    v.slack = cap - snapshots.maxCoeff();
    v.pass = v.slack >= -1e-12;
    return v;
}

} // namespace sep

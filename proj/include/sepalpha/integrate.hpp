#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>

namespace sep {

// Adaptive implicit-trapezoid stepper for u' = A u + b(t) with constant sparse
// A. The N^2 speed-up makes these systems stiff, so explicit stepping is out;
// trapezoid keeps second order at any step size. Step sizes prefer the dyadic
// ladder h_max/2^k so the LU factor of (I - h/2 A) is reused across steps, and
// accuracy is controlled by step doubling. The first few accepted steps are
// damped (backward Euler substeps, which share the same factors) so rough
// initial data cannot ride the trapezoid rule's undamped stiff modes.
class StiffStepper {
  public:
    using Source = std::function<void(double, Eigen::VectorXd&)>; // writes b(t)
    using Observer = std::function<void(double, const Eigen::VectorXd&)>;

    struct Options {
        // Accepted steps obey ||err|| <= tol*(h + h_floor) in max-norm. For
        // macroscopic steps this is per-unit-time control; the floor grants
        // each transient step a fixed budget so fast dissipative modes, which
        // the flow itself damps, are stepped through at bounded cost instead
        // of being resolved to the per-unit-time budget.
        double tol = 1e-10;
        double h_floor = 1e-4;
        double h_init = 1e-4;
        double h_max = 2.5e-2;
        int be_startup = 4; // damped steps at the very start
    };

    StiffStepper(Eigen::SparseMatrix<double> A, Options opt, Source source = {})
        : A_(std::move(A)), opt_(opt), source_(std::move(source)) {
        if (A_.rows() != A_.cols()) throw std::invalid_argument("StiffStepper: A not square");
        h_cur_ = std::min(opt_.h_init, opt_.h_max);
        if (!(h_cur_ > 0)) throw std::invalid_argument("StiffStepper: bad step sizes");
        b0_.resize(A_.rows());
        b1_.resize(A_.rows());
        bm_.resize(A_.rows());
        if (!source_) {
            b0_.setZero();
            b1_.setZero();
            bm_.setZero();
        }
    }

    double time() const { return t_; }
    void set_time(double t0) { t_ = t0; }

    void advance(Eigen::VectorXd& u, double t_target, const Observer& observe = {}) {
        if (t_target < t_ - 1e-13) throw std::domain_error("StiffStepper: time runs forward");
        const double tiny = 1e-13 * std::max(1.0, std::abs(t_target));
        while (t_ < t_target - tiny) {
            double h = std::min(h_cur_, t_target - t_);
            bool damped = accepted_ < opt_.be_startup;
            // full step vs two half steps
            Eigen::VectorXd full = damped ? be_macro(u, t_, h) : cn_step(u, t_, h);
            Eigen::VectorXd mid = damped ? be_macro(u, t_, h / 2) : cn_step(u, t_, h / 2);
            Eigen::VectorXd two =
                damped ? be_macro(mid, t_ + h / 2, h / 2) : cn_step(mid, t_ + h / 2, h / 2);
            double est = (full - two).cwiseAbs().maxCoeff() / (damped ? 1.0 : 3.0);
            // roundoff guard: the doubling estimate cannot resolve errors below
            // a few ulps of the state, so an unreachable budget would reject forever
            double unorm = u.cwiseAbs().maxCoeff();
            double budget = opt_.tol * (h + opt_.h_floor) +
                            64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, unorm);
            if (est <= budget || h <= 64 * tiny) {
                u = std::move(two);
                if (observe) {
                    observe(t_ + h / 2, mid);
                    observe(t_ + h, u);
                }
                t_ += h;
                ++accepted_;
                if (h == h_cur_ && est <= budget / 20.0) {
                    if (++streak_ >= 2 && 2.0 * h_cur_ <= opt_.h_max) {
                        h_cur_ *= 2.0;
                        streak_ = 0;
                    }
                } else if (h == h_cur_) {
                    streak_ = 0;
                }
            } else {
                h_cur_ = h / 2;
                streak_ = 0;
                if (h_cur_ < 16 * tiny) throw std::runtime_error("StiffStepper: step underflow");
            }
        }
        t_ = t_target;
    }

  private:
    using Solver = Eigen::SparseLU<Eigen::SparseMatrix<double>>;

    Solver& factor(double h) {
        uint64_t key;
        std::memcpy(&key, &h, sizeof key);
        auto it = cache_.find(key);
        if (it != cache_.end()) return *it->second;
        Eigen::SparseMatrix<double> M(A_.rows(), A_.cols());
        M.setIdentity();
        M -= (h / 2.0) * A_;
        auto solver = std::make_unique<Solver>();
        solver->compute(M);
        if (solver->info() != Eigen::Success)
            throw std::runtime_error("StiffStepper: factorization failed");
        return *cache_.emplace(key, std::move(solver)).first->second;
    }

    void eval_source(double t, Eigen::VectorXd& out) {
        if (source_) source_(t, out);
    }

    // one trapezoid step of size h from (t, u)
    Eigen::VectorXd cn_step(const Eigen::VectorXd& u, double t, double h) {
        eval_source(t, b0_);
        eval_source(t + h, b1_);
        Eigen::VectorXd rhs = u + (h / 2.0) * (A_ * u) + (h / 2.0) * (b0_ + b1_);
        return factor(h).solve(rhs);
    }

    // two backward Euler substeps of size h/2 (same factor as cn_step(h))
    Eigen::VectorXd be_macro(const Eigen::VectorXd& u, double t, double h) {
        Solver& f = factor(h);
        eval_source(t + h / 2, bm_);
        Eigen::VectorXd u1 = f.solve(u + (h / 2.0) * bm_);
        eval_source(t + h, b1_);
        return f.solve(u1 + (h / 2.0) * b1_);
    }

    Eigen::SparseMatrix<double> A_;
    Options opt_;
    Source source_;
    Eigen::VectorXd b0_, b1_, bm_;
    std::map<uint64_t, std::unique_ptr<Solver>> cache_;
    double t_ = 0.0, h_cur_;
    long accepted_ = 0;
    int streak_ = 0;
};

// appends the running-integral block to a generator: d/dt [u; s] = [[A,0],[I,0]] [u; s],
// so s(t) = integral of u with the same error control as u itself
inline Eigen::SparseMatrix<double> with_running_integral(const Eigen::SparseMatrix<double>& A) {
    const Eigen::Index n = A.rows();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve((std::size_t)A.nonZeros() + n);
    for (int k = 0; k < A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
            trip.emplace_back((int)it.row(), (int)it.col(), it.value());
    for (Eigen::Index i = 0; i < n; ++i) trip.emplace_back((int)(n + i), (int)i, 1.0);
    Eigen::SparseMatrix<double> B(2 * n, 2 * n);
    B.setFromTriplets(trip.begin(), trip.end());
    return B;
}

} // namespace sep

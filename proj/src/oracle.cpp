#include "sepalpha/oracle.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sep {

StateSpace::StateSpace(int N, int alpha, std::size_t cap) : N_(N), alpha_(alpha) {
    if (N < 3 || alpha < 1) throw std::invalid_argument("StateSpace: bad N or alpha");
    n_ = 1;
    for (int i = 0; i < N - 1; ++i) {
        if (n_ > cap / (alpha + 1) + 1) throw std::length_error("StateSpace: size exceeds cap");
        n_ *= (std::size_t)(alpha + 1);
    }
    if (n_ > cap) throw std::length_error("StateSpace: size exceeds cap");
}

std::size_t StateSpace::index(const std::vector<uint8_t>& counts) const {
    if ((int)counts.size() != N_ - 1) throw std::invalid_argument("StateSpace: size mismatch");
    std::size_t idx = 0, base = 1;
    for (int i = 0; i < N_ - 1; ++i) {
        if (counts[i] > alpha_) throw std::domain_error("StateSpace: count exceeds alpha");
        idx += counts[i] * base;
        base *= (std::size_t)(alpha_ + 1);
    }
    return idx;
}

void StateSpace::decode(std::size_t idx, std::vector<uint8_t>& counts) const {
    counts.resize(N_ - 1);
    for (int i = 0; i < N_ - 1; ++i) {
        counts[i] = (uint8_t)(idx % (alpha_ + 1));
        idx /= (alpha_ + 1);
    }
}

Configuration StateSpace::state(std::size_t idx) const {
    std::vector<uint8_t> c;
    decode(idx, c);
    return Configuration(N_, alpha_, std::move(c));
}

OracleModel::OracleModel(const ModelParams& p, std::size_t cap)
    : p_(p), space_(p.N, p.alpha, cap) {
    p_.validate();
    const int N = p.N, al = p.alpha;
    const double n2 = double(N) * N;
    const double nt = p.n_theta();

    std::vector<Eigen::Triplet<double>> trip;
    std::vector<uint8_t> c;
    const std::size_t n = space_.size();
    for (std::size_t s = 0; s < n; ++s) {
        space_.decode(s, c);
        double out = 0.0;
        auto push = [&](int x, int dx_from, int dx_to, double rate) {
            // move one particle from site x to site x+ (encoded by deltas)
            if (rate <= 0.0) return;
            c[x - 1] = (uint8_t)(c[x - 1] + dx_from);
            if (dx_to != 0) c[x] = (uint8_t)(c[x] + dx_to);
            std::size_t s2 = space_.index(c);
            c[x - 1] = (uint8_t)(c[x - 1] - dx_from);
            if (dx_to != 0) c[x] = (uint8_t)(c[x] - dx_to);
            trip.emplace_back((int)s, (int)s2, n2 * rate);
            out += n2 * rate;
        };
        for (int x = 1; x <= N - 2; ++x) {
            push(x, -1, +1, double(c[x - 1]) * (al - c[x])); // x -> x+1
            push(x, +1, -1, double(c[x]) * (al - c[x - 1])); // x+1 -> x
        }
        int e1 = c[0], eR = c[N - 2];
        auto push1 = [&](int x, int d, double rate) {
            if (rate <= 0.0) return;
            c[x - 1] = (uint8_t)(c[x - 1] + d);
            std::size_t s2 = space_.index(c);
            c[x - 1] = (uint8_t)(c[x - 1] - d);
            trip.emplace_back((int)s, (int)s2, n2 * rate);
            out += n2 * rate;
        };
        push1(1, +1, p.lambda_l * p.rho_l * (al - e1) / nt);
        push1(1, -1, p.lambda_l * (al - p.rho_l) * e1 / nt);
        push1(N - 1, +1, p.lambda_r * p.rho_r * (al - eR) / nt);
        push1(N - 1, -1, p.lambda_r * (al - p.rho_r) * eR / nt);
        trip.emplace_back((int)s, (int)s, -out);
        if (out > unif_) unif_ = out;
    }
    Q_.resize((Eigen::Index)n, (Eigen::Index)n);
    Q_.setFromTriplets(trip.begin(), trip.end());
    Q_.makeCompressed();
    Qt_ = Q_.transpose();
    Qt_.makeCompressed();
}

Eigen::VectorXd OracleModel::evolve(const Eigen::VectorXd& w, double t, double tail_tol) const {
    if (t < 0) throw std::domain_error("OracleModel::evolve: negative time");
    if (t == 0.0 || unif_ == 0.0) return w;
    const double m = unif_ * t;
    // P^T = I + Q^T / unif_ applied repeatedly; Poisson(m) weights in log space
    long K = (long)std::ceil(m + 12.0 * std::sqrt(m + 1.0) + 30.0);
    Eigen::VectorXd term = w, acc = Eigen::VectorXd::Zero(w.size());
    for (long k = 0; k <= K; ++k) {
        double lw = -m + k * std::log(m) - std::lgamma(double(k) + 1.0);
        double wk = (k == 0) ? std::exp(-m) : std::exp(lw);
        if (wk > 0) acc += wk * term;
        if (k > (long)m && wk < tail_tol * 1e-4) break;
        if (k < K) term += Qt_ * term / unif_;
    }
    return acc;
}

Eigen::VectorXd OracleModel::evolve_distribution(const Eigen::VectorXd& p0, double t) const {
    if ((std::size_t)p0.size() != space_.size())
        throw std::invalid_argument("evolve_distribution: size mismatch");
    if (p0.minCoeff() < 0.0) throw std::domain_error("evolve_distribution: negative entry");
    if (std::abs(p0.sum() - 1.0) > 1e-10)
        throw std::domain_error("evolve_distribution: mass not 1");
    Eigen::VectorXd pt = evolve(p0, t, 1e-15);
    if (std::abs(pt.sum() - 1.0) > 1e-12)
        throw std::runtime_error("evolve_distribution: mass drift beyond tolerance");
    return pt;
}

Eigen::VectorXd OracleModel::stationary() const {
    const std::size_t n = space_.size();
    // replace the first balance equation by the normalization sum(pi) = 1
    std::vector<Eigen::Triplet<double>> trip;
    for (int k = 0; k < Qt_.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(Qt_, k); it; ++it)
            if (it.row() != 0) trip.emplace_back((int)it.row(), (int)it.col(), it.value());
    for (std::size_t j = 0; j < n; ++j) trip.emplace_back(0, (int)j, 1.0);
    Eigen::SparseMatrix<double> A((Eigen::Index)n, (Eigen::Index)n);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
    if (lu.info() != Eigen::Success) throw std::runtime_error("stationary: factorization failed");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero((Eigen::Index)n);
    rhs(0) = 1.0;
    Eigen::VectorXd pi = lu.solve(rhs);
    double resid = (Qt_ * pi).cwiseAbs().maxCoeff();
    if (resid > 1e-10) throw std::runtime_error("stationary: residual too large");
    return pi;
}

ExactMoments exact_moments(const OracleModel& m, const Eigen::VectorXd& dist) {
    const StateSpace& sp = m.space();
    const int L = sp.N() - 1, al = sp.alpha();
    ExactMoments out;
    out.alpha = al;
    out.rho = Eigen::VectorXd::Zero(L);
    out.pair = Eigen::MatrixXd::Zero(L, L);
    Eigen::VectorXd second = Eigen::VectorXd::Zero(L); // E[eta^2]
    std::vector<uint8_t> c;
    for (std::size_t s = 0; s < sp.size(); ++s) {
        double p = dist((Eigen::Index)s);
        if (p == 0.0) continue;
        sp.decode(s, c);
        for (int i = 0; i < L; ++i) {
            out.rho(i) += p * c[i];
            second(i) += p * double(c[i]) * c[i];
            out.pair(i, i) += p * double(c[i]) * (c[i] - 1);
            for (int j = i + 1; j < L; ++j) {
                double v = p * double(c[i]) * c[j];
                out.pair(i, j) += v;
                out.pair(j, i) += v;
            }
        }
    }
    out.var = second - out.rho.cwiseProduct(out.rho);
    out.phi_ = out.pair - out.rho * out.rho.transpose();
    for (int i = 0; i < L; ++i) {
        if (al >= 2)
            out.phi_(i, i) = double(al) / (al - 1) * out.pair(i, i) - out.rho(i) * out.rho(i);
        else
            out.phi_(i, i) = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

Eigen::VectorXd product_distribution(const OracleModel& m, const Eigen::VectorXd& profile) {
    const StateSpace& sp = m.space();
    const int L = sp.N() - 1, al = sp.alpha();
    if (profile.size() != L) throw std::invalid_argument("product_distribution: profile size");
    // per-site pmf table
    Eigen::MatrixXd pmf(L, al + 1);
    for (int i = 0; i < L; ++i) {
        double q = profile(i) / al;
        if (!(q >= 0.0) || !(q <= 1.0))
            throw std::domain_error("product_distribution: profile outside [0,alpha]");
        for (int k = 0; k <= al; ++k) {
            double choose = 1.0;
            for (int j = 0; j < k; ++j) choose = choose * double(al - j) / double(j + 1);
            pmf(i, k) = choose * std::pow(q, k) * std::pow(1.0 - q, al - k);
        }
    }
    Eigen::VectorXd dist((Eigen::Index)sp.size());
    std::vector<uint8_t> c;
    for (std::size_t s = 0; s < sp.size(); ++s) {
        sp.decode(s, c);
        double p = 1.0;
        for (int i = 0; i < L; ++i) p *= pmf(i, c[i]);
        dist((Eigen::Index)s) = p;
    }
    return dist;
}

Eigen::VectorXd point_distribution(const OracleModel& m, const Configuration& cfg) {
    Eigen::VectorXd dist = Eigen::VectorXd::Zero((Eigen::Index)m.space().size());
    dist((Eigen::Index)m.space().index(cfg)) = 1.0;
    return dist;
}

Eigen::VectorXd exact_two_time(const OracleModel& m, const Eigen::VectorXd& dist_v, int x,
                               double tau) {
    const StateSpace& sp = m.space();
    const int L = sp.N() - 1;
    if (x < 1 || x > L) throw std::domain_error("exact_two_time: site outside 1..N-1");
    ExactMoments mv = exact_moments(m, dist_v);
    Eigen::VectorXd w(dist_v.size());
    std::vector<uint8_t> c;
    for (std::size_t s = 0; s < sp.size(); ++s) {
        sp.decode(s, c);
        w((Eigen::Index)s) = dist_v((Eigen::Index)s) * (c[x - 1] - mv.rho(x - 1));
    }
    Eigen::VectorXd wr = m.evolve(w, tau);
    Eigen::VectorXd pr = m.evolve(dist_v, tau);
    ExactMoments mr = exact_moments(m, pr);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(L);
    for (std::size_t s = 0; s < sp.size(); ++s) {
        double v = wr((Eigen::Index)s);
        if (v == 0.0) continue;
        sp.decode(s, c);
        for (int j = 0; j < L; ++j) out(j) += v * (c[j] - mr.rho(j));
    }
    return out;
}

double relative_entropy(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    if (p.size() != q.size()) throw std::invalid_argument("relative_entropy: size mismatch");
    double h = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p(i) < 1e-300) continue;
        if (q(i) <= 0.0) throw std::domain_error("relative_entropy: support mismatch");
        h += p(i) * std::log(p(i) / q(i));
    }
    return h;
}

} // namespace sep

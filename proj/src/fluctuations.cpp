#include "sepalpha/fluctuations.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "sepalpha/linalg.hpp"
#include "sepalpha/triangle.hpp"

namespace sep {

namespace {

constexpr double kPi = std::numbers::pi;

// sin(pi k u) / cos(pi k u) with the wall values pinned exactly, so the class
// conditions of the mode bases hold to the bit at u = 0, 1
double mode_sin(int k, double u) {
    if (u == 0.0 || u == 1.0) return 0.0;
    return std::sin(kPi * k * u);
}

double mode_cos(int k, double u) {
    if (u == 0.0) return 1.0;
    if (u == 1.0) return (k & 1) ? -1.0 : 1.0;
    return std::cos(kPi * k * u);
}

// j-th derivative shape (unit frequency factor) of the two periodic families
double cycle_sin(int j, int k, double u) {
    switch (j & 3) {
        case 0: return mode_sin(k, u);
        case 1: return mode_cos(k, u);
        case 2: return -mode_sin(k, u);
        default: return -mode_cos(k, u);
    }
}

double cycle_cos(int j, int k, double u) {
    switch (j & 3) {
        case 0: return mode_cos(k, u);
        case 1: return -mode_sin(k, u);
        case 2: return -mode_cos(k, u);
        default: return mode_sin(k, u);
    }
}

// mixed-wall mode and its first derivative; higher orders reduce through
// f'' = -beta^2 f, so only these two shapes are ever needed
double robin_shape(double beta, double ll, double u) {
    return ll / beta * std::sin(beta * u) + std::cos(beta * u);
}

double robin_shape_d1(double beta, double ll, double u) {
    return ll * std::cos(beta * u) - beta * std::sin(beta * u);
}

// Taylor coefficients f^{(n)}/n! through order 8, enough for the class checks
constexpr int kJetLen = 9;
using Jet = std::array<double, kJetLen>;

Jet jet_reciprocal(const Jet& s) {
    Jet r{};
    r[0] = 1.0 / s[0];
    for (int n = 1; n < kJetLen; ++n) {
        double acc = 0.0;
        for (int k = 1; k <= n; ++k) acc += s[k] * r[n - k];
        r[n] = -r[0] * acc;
    }
    return r;
}

Jet jet_exp(const Jet& g) {
    Jet e{};
    e[0] = std::exp(g[0]);
    for (int n = 1; n < kJetLen; ++n) {
        double acc = 0.0;
        for (int k = 1; k <= n; ++k) acc += k * g[k] * e[n - k];
        e[n] = acc / n;
    }
    return e;
}

// coefficients of exp(-1/(1-v^2)) at v0; identically zero from 1-v0^2 <= 1e-12
// on, where the value is already far below the double range
Jet bump_jet(double v0) {
    Jet s{};
    s[0] = 1.0 - v0 * v0;
    if (!(s[0] > 1e-12)) return Jet{};
    s[1] = -2.0 * v0;
    s[2] = -1.0;
    Jet r = jet_reciprocal(s);
    Jet g{};
    for (int n = 0; n < kJetLen; ++n) g[n] = -r[n];
    return jet_exp(g);
}

double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

// frequency of mode k (0-based storage index) in the function's own basis
double mode_frequency(const TestFunction& f, Eigen::Index k) {
    switch (f.regime) {
        case Regime::dirichlet: return kPi * double(k + 1);
        case Regime::neumann: return kPi * double(k);
        case Regime::robin: return f.roots(k);
    }
    return 0.0;
}

// shared state lookup: logged replicas answer any time in range, unlogged
// ones only their endpoint
Configuration state_for(const Trajectory& traj, double t, const char* who) {
    if (traj.logged) return state_at(traj, t);
    if (t == traj.t_end) return traj.last;
    throw std::domain_error(std::string(who) + ": unlogged replica does not cover the requested time");
}

void check_grid(const std::vector<double>& times, double t_end, const char* who) {
    if (times.empty()) throw std::domain_error(std::string(who) + ": empty time grid");
    double prev = -1.0;
    for (double t : times) {
        if (!(t >= 0.0) || t > t_end)
            throw std::domain_error(std::string(who) + ": grid time outside the trajectory");
        if (t <= prev) throw std::domain_error(std::string(who) + ": grid must increase");
        prev = t;
    }
}

// least squares of y against x with the textbook slope standard error
void fit_line(const std::vector<double>& xs, const std::vector<double>& ys, double& slope,
              double& intercept, double& se) {
    const int n = (int)xs.size();
    double xbar = 0.0, ybar = 0.0;
    for (int i = 0; i < n; ++i) {
        xbar += xs[i];
        ybar += ys[i];
    }
    xbar /= n;
    ybar /= n;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (xs[i] - xbar) * (xs[i] - xbar);
        sxy += (xs[i] - xbar) * (ys[i] - ybar);
    }
    slope = sxy / sxx;
    intercept = ybar - slope * xbar;
    double ssr = 0.0;
    for (int i = 0; i < n; ++i) {
        double r = ys[i] - intercept - slope * xs[i];
        ssr += r * r;
    }
    se = n > 2 ? std::sqrt(ssr / (n - 2) / sxx) : 0.0;
}

} // namespace

double TestFunction::deriv(double u, int order) const {
    if (order < 0) throw std::invalid_argument("TestFunction::deriv: negative order");
    if (bump) {
        if (order >= kJetLen)
            throw std::invalid_argument("TestFunction::deriv: bump derivatives stop at order 8");
        double out = 0.0;
        for (Eigen::Index k = 0; k < coeff.size(); ++k) {
            double v0 = (u - center(k)) / width(k);
            Jet jet = bump_jet(v0);
            out += coeff(k) * factorial(order) * jet[order] / std::pow(width(k), order);
        }
        return out;
    }
    double out = 0.0;
    switch (regime) {
        case Regime::dirichlet:
            for (Eigen::Index k = 0; k < coeff.size(); ++k) {
                int mode = int(k) + 1;
                out += coeff(k) * std::pow(kPi * mode, order) * cycle_sin(order, mode, u);
            }
            return out;
        case Regime::neumann:
            for (Eigen::Index k = 0; k < coeff.size(); ++k) {
                int mode = int(k);
                double freq = order == 0 ? 1.0 : std::pow(kPi * mode, order);
                out += coeff(k) * freq * cycle_cos(order, mode, u);
            }
            return out;
        case Regime::robin:
            for (Eigen::Index k = 0; k < coeff.size(); ++k) {
                double b = roots(k);
                int m = order / 2;
                double fac = (m & 1) ? -1.0 : 1.0;
                fac *= std::pow(b, 2 * m);
                double shape = (order & 1) ? robin_shape_d1(b, lambda_l, u)
                                           : robin_shape(b, lambda_l, u);
                out += coeff(k) * fac * shape;
            }
            return out;
    }
    return out;
}

double TestFunction::eval(double u) const { return deriv(u, 0); }

Eigen::VectorXd TestFunction::on_sites(int N) const {
    if (N < 3) throw std::invalid_argument("TestFunction::on_sites: N below 3");
    Eigen::VectorXd v(N - 1);
    for (int x = 1; x <= N - 1; ++x) v(x - 1) = eval(double(x) / N);
    return v;
}

TestFunction sine_test_function(const Eigen::VectorXd& coeff) {
    TestFunction f;
    f.regime = Regime::dirichlet;
    f.coeff = coeff;
    return f;
}

TestFunction cosine_test_function(const Eigen::VectorXd& coeff) {
    TestFunction f;
    f.regime = Regime::neumann;
    f.coeff = coeff;
    return f;
}

TestFunction robin_test_function(const Eigen::VectorXd& coeff, const ModelParams& p) {
    p.validate_for_solvers();
    TestFunction f;
    f.regime = Regime::robin;
    f.coeff = coeff;
    f.lambda_l = p.lambda_l;
    f.lambda_r = p.lambda_r;
    f.roots = robin_roots(p.lambda_l, p.lambda_r, int(coeff.size()));
    // polish past the bisection tolerance; the roots are simple, three Newton
    // steps reach the floating-point fixed point
    const double ll = p.lambda_l, lr = p.lambda_r;
    for (Eigen::Index k = 0; k < f.roots.size(); ++k) {
        double b = f.roots(k);
        for (int it = 0; it < 3; ++it) {
            double g = (ll + lr) * std::cos(b) + (ll * lr / b - b) * std::sin(b);
            double dg = -(ll + lr) * std::sin(b) - (ll * lr / (b * b) + 1.0) * std::sin(b) +
                        (ll * lr / b - b) * std::cos(b);
            b -= g / dg;
        }
        f.roots(k) = b;
    }
    return f;
}

TestFunction bump_test_function(const Eigen::VectorXd& amplitude, const Eigen::VectorXd& center,
                                const Eigen::VectorXd& width) {
    if (amplitude.size() != center.size() || center.size() != width.size())
        throw std::invalid_argument("bump_test_function: mismatched component counts");
    for (Eigen::Index k = 0; k < center.size(); ++k) {
        if (!(width(k) > 0.0))
            throw std::invalid_argument("bump_test_function: width must be positive");
        if (!(center(k) - width(k) > 0.0) || !(center(k) + width(k) < 1.0))
            throw std::invalid_argument("bump_test_function: support must stay inside (0,1)");
    }
    TestFunction f;
    f.regime = Regime::dirichlet;
    f.bump = true;
    f.coeff = amplitude;
    f.center = center;
    f.width = width;
    return f;
}

bool regime_matches(const TestFunction& f, double theta) {
    if (theta < 0.0) return f.bump;
    if (theta < 1.0) return f.regime == Regime::dirichlet;
    if (theta == 1.0) return f.regime == Regime::robin;
    return f.regime == Regime::neumann;
}

double class_defect(const TestFunction& f, int order) {
    if (order < 0) throw std::invalid_argument("class_defect: negative order");
    // natural size of the order-j derivative, so the defect is relative for
    // large coefficients yet absolute near zero
    auto scale = [&f](int j) {
        double s = 0.0;
        for (Eigen::Index k = 0; k < f.coeff.size(); ++k) {
            double om = mode_frequency(f, k);
            double amp = std::abs(f.coeff(k));
            if (f.regime == Regime::robin) amp *= 1.0 + f.lambda_l / om;
            s += amp * (j == 0 ? 1.0 : std::pow(om, j));
        }
        return std::max(1.0, s);
    };
    double worst = 0.0;
    if (f.bump) {
        for (int j = 0; j <= order && j < kJetLen; ++j)
            worst = std::max({worst, std::abs(f.deriv(0.0, j)), std::abs(f.deriv(1.0, j))});
        return worst;
    }
    switch (f.regime) {
        case Regime::dirichlet:
            for (int j = 0; j <= order; j += 2)
                worst = std::max(worst, std::max(std::abs(f.deriv(0.0, j)),
                                                 std::abs(f.deriv(1.0, j))) /
                                            scale(j));
            break;
        case Regime::neumann:
            for (int j = 1; j <= order; j += 2)
                worst = std::max(worst, std::max(std::abs(f.deriv(0.0, j)),
                                                 std::abs(f.deriv(1.0, j))) /
                                            scale(j));
            break;
        case Regime::robin:
            for (int j = 1; j <= order; j += 2) {
                double d0 = std::abs(f.deriv(0.0, j) - f.lambda_l * f.deriv(0.0, j - 1));
                double d1 = std::abs(f.deriv(1.0, j) + f.lambda_r * f.deriv(1.0, j - 1));
                worst = std::max(worst, std::max(d0, d1) / scale(j));
            }
            break;
    }
    return worst;
}

DecayRates decay_rates(int N, double theta) {
    if (N < 3) throw std::invalid_argument("decay_rates: N below 3");
    const double n = N;
    DecayRates out;
    if (theta > 1.0) out.R = 1.0 / n;
    else if (theta >= 0.0) out.R = std::pow(n, theta) / (n * n);
    else if (theta > -1.0) out.R = std::pow(n, theta) / n;
    else out.R = 1.0 / (n * n);
    out.d = theta <= 1.0 ? std::sqrt(n) : std::pow(n, 1.5 - theta);
    out.delta = theta >= 3.0 ? 1.0 : std::abs(1.0 - theta) / 2.0;
    return out;
}

double field_eval(const Configuration& cfg, const TestFunction& phi, const DensityProfile& rho) {
    const int N = cfg.N();
    if (rho.N() != N)
        throw std::invalid_argument("field_eval: configuration and density disagree on N");
    double s = 0.0;
    for (int x = 1; x <= N - 1; ++x)
        s += phi.eval(double(x) / N) * (cfg.at(x) - rho.interior(x - 1));
    return s / std::sqrt(double(N));
}

FluctuationObservable field_samples(const std::vector<Trajectory>& ensemble,
                                    const TestFunction& phi, const DensityPath& rho,
                                    const std::vector<double>& times) {
    if (ensemble.empty()) throw std::domain_error("field_samples: empty ensemble");
    const int N = rho.params().N;
    for (const Trajectory& traj : ensemble) {
        if (!traj.logged) throw std::domain_error("field_samples: event log required");
        if (traj.initial.N() != N)
            throw std::invalid_argument("field_samples: replica and density disagree on N");
        check_grid(times, traj.t_end, "field_samples");
    }
    std::vector<DensityProfile> prof;
    prof.reserve(times.size());
    for (double t : times) prof.push_back(rho.profile(t));
    FluctuationObservable out;
    out.phi = phi;
    out.times = times;
    out.samples.resize((Eigen::Index)ensemble.size(), (Eigen::Index)times.size());
    for (std::size_t r = 0; r < ensemble.size(); ++r)
        for (std::size_t i = 0; i < times.size(); ++i)
            out.samples((Eigen::Index)r, (Eigen::Index)i) =
                field_eval(state_at(ensemble[r], times[i]), phi, prof[i]);
    return out;
}

double qv_integrand(const Configuration& cfg, const TestFunction& phi, const ModelParams& p) {
    if (cfg.N() != p.N || cfg.alpha() != p.alpha)
        throw std::invalid_argument("qv_integrand: configuration does not match the parameters");
    const int N = p.N;
    const double a = p.alpha;
    const double pl = phi.eval(1.0 / N);
    const double pr = phi.eval(double(N - 1) / N);
    double wall = p.lambda_l * ((a - 2.0 * p.rho_l) * cfg.at(1) + a * p.rho_l) * pl * pl +
                  p.lambda_r * ((a - 2.0 * p.rho_r) * cfg.at(N - 1) + a * p.rho_r) * pr * pr;
    double out = double(N) / p.n_theta() * wall;
    double bulk = 0.0;
    double prev = pl;
    for (int x = 1; x <= N - 2; ++x) {
        double next = phi.eval(double(x + 1) / N);
        double g = N * (next - prev);
        bulk += g * g * (cfg.at(x) * (a - cfg.at(x + 1)) + cfg.at(x + 1) * (a - cfg.at(x)));
        prev = next;
    }
    return out + bulk / N;
}

DynkinSeries dynkin_residual(const Trajectory& traj, const TestFunction& phi,
                             const DensityPath& rho, const std::vector<double>& times,
                             const ModelParams& p) {
    if (!traj.logged) throw std::domain_error("dynkin_residual: event log required");
    if (traj.initial.N() != p.N || traj.initial.alpha() != p.alpha)
        throw std::invalid_argument("dynkin_residual: trajectory does not match the parameters");
    if (rho.params().N != p.N)
        throw std::invalid_argument("dynkin_residual: density path does not match the parameters");
    check_grid(times, traj.t_end, "dynkin_residual");

    const int N = p.N;
    const double a = p.alpha;
    const double rtN = std::sqrt(double(N));
    Eigen::VectorXd pv(N + 1);
    for (int x = 0; x <= N; ++x) pv(x) = phi.eval(double(x) / N);

    // per-site weights of the three compensator pieces acting on eta-bar
    Eigen::VectorXd wb(N - 1);
    Eigen::VectorXd wd = Eigen::VectorXd::Zero(N - 1);
    Eigen::VectorXd wg = Eigen::VectorXd::Zero(N - 1);
    for (int x = 1; x <= N - 1; ++x)
        wb(x - 1) = a * double(N) * double(N) * (pv(x + 1) + pv(x - 1) - 2.0 * pv(x)) / rtN;
    const double bscale = a * double(N) * rtN / p.n_theta();
    wd(0) += -bscale * p.lambda_l * pv(1);
    wd(N - 2) += -bscale * p.lambda_r * pv(N - 1);
    wg(0) += a * rtN * double(N) * (pv(1) - pv(0));
    wg(N - 2) += -a * rtN * double(N) * (pv(N) - pv(N - 1));

    Configuration cfg = traj.initial;
    double sb = 0.0, sd = 0.0, sg = 0.0; // running weight dot occupation
    for (int x = 1; x <= N - 1; ++x) {
        sb += wb(x - 1) * cfg.at(x);
        sd += wd(x - 1) * cfg.at(x);
        sg += wg(x - 1) * cfg.at(x);
    }
    auto shift = [&](int x, double d) {
        sb += wb(x - 1) * d;
        sd += wd(x - 1) * d;
        sg += wg(x - 1) * d;
    };

    const double y0 = field_eval(traj.initial, phi, rho.profile(0.0));
    DynkinSeries out;
    out.times = times;
    const Eigen::Index n = (Eigen::Index)times.size();
    out.field.resize(n);
    out.bulk.resize(n);
    out.boundary.resize(n);
    out.gradient.resize(n);
    out.martingale.resize(n);

    double ib = 0.0, id = 0.0, ig = 0.0; // occupation integrals, exact between events
    double tcur = 0.0;
    std::size_t ei = 0;
    for (Eigen::Index gi = 0; gi < n; ++gi) {
        const double T = times[(std::size_t)gi];
        while (ei < traj.events.size() && traj.events[ei].time <= T) {
            const double te = traj.events[ei].time;
            ib += sb * (te - tcur);
            id += sd * (te - tcur);
            ig += sg * (te - tcur);
            tcur = te;
            MoveInfo mv = decode_slot(traj.events[ei].slot, N);
            switch (mv.kind) {
                case MoveKind::BulkRight:
                    shift(mv.site, -1.0);
                    shift(mv.site + 1, +1.0);
                    break;
                case MoveKind::BulkLeft:
                    shift(mv.site, +1.0);
                    shift(mv.site + 1, -1.0);
                    break;
                case MoveKind::InjectLeft:
                case MoveKind::InjectRight: shift(mv.site, +1.0); break;
                case MoveKind::RemoveLeft:
                case MoveKind::RemoveRight: shift(mv.site, -1.0); break;
            }
            apply_move(cfg, mv);
            ++ei;
        }
        ib += sb * (T - tcur);
        id += sd * (T - tcur);
        ig += sg * (T - tcur);
        tcur = T;

        Eigen::VectorXd ir = rho.integral(0.0, T);
        out.bulk(gi) = ib - wb.dot(ir);
        out.boundary(gi) = id - wd.dot(ir);
        out.gradient(gi) = ig - wg.dot(ir);
        out.field(gi) = field_eval(cfg, phi, rho.profile(T));
        out.martingale(gi) =
            out.field(gi) - y0 - out.bulk(gi) - out.boundary(gi) - out.gradient(gi);
    }
    return out;
}

double ou_variance_predictor(const TestFunction& f, double t,
                             const std::function<double(double, double)>& rho_su,
                             const ModelParams& p) {
    p.validate_for_solvers();
    if (!regime_matches(f, p.theta))
        throw std::invalid_argument("ou_variance_predictor: test function class does not match theta");
    if (t < 0.0) throw std::domain_error("ou_variance_predictor: negative time");
    if (t == 0.0) return 0.0;

    // flatten to one diagonal mode list; bumps are projected onto the sine
    // basis, which their class contains
    Regime reg = f.regime;
    std::vector<double> om, cf;
    if (f.bump) {
        const int K = 64;
        Eigen::VectorXd c = Eigen::VectorXd::Zero(K);
        for (Eigen::Index j = 0; j < f.coeff.size(); ++j) {
            QuadratureRule q =
                gauss_legendre(512, f.center(j) - f.width(j), f.center(j) + f.width(j));
            for (Eigen::Index i = 0; i < q.nodes.size(); ++i) {
                double u = q.nodes(i);
                double v = (u - f.center(j)) / f.width(j);
                double s0 = 1.0 - v * v;
                double fv = s0 > 1e-12 ? f.coeff(j) * std::exp(-1.0 / s0) : 0.0;
                for (int k = 1; k <= K; ++k)
                    c(k - 1) += 2.0 * q.weights(i) * fv * std::sin(kPi * k * u);
            }
        }
        for (int k = 1; k <= K; ++k) {
            om.push_back(kPi * k);
            cf.push_back(c(k - 1));
        }
    } else {
        for (Eigen::Index k = 0; k < f.coeff.size(); ++k) {
            om.push_back(mode_frequency(f, k));
            cf.push_back(f.coeff(k));
        }
    }
    if (om.empty()) return 0.0;
    const int M = (int)om.size();
    double om_max = 0.0;
    for (double w : om) om_max = std::max(om_max, w);

    const double a = p.alpha;
    const bool walls = p.theta == 1.0;
    std::vector<double> val0(M, 0.0), val1(M, 0.0);
    if (walls)
        for (int k = 0; k < M; ++k) {
            val0[k] = 1.0;
            val1[k] = robin_shape(om[k], f.lambda_l, 1.0);
        }

    // d/du of S_tau f as a mode sum with decayed coefficients
    std::vector<double> dk(M);
    auto load_decay = [&](double tau) {
        for (int k = 0; k < M; ++k) {
            double e = a * om[k] * om[k] * tau;
            dk[k] = e > 45.0 ? 0.0 : cf[k] * std::exp(-e);
        }
    };
    auto du_value = [&](double u) {
        double s = 0.0;
        for (int k = 0; k < M; ++k) {
            if (dk[k] == 0.0) continue;
            double shape;
            switch (reg) {
                case Regime::dirichlet: shape = om[k] * std::cos(om[k] * u); break;
                case Regime::neumann: shape = -om[k] * std::sin(om[k] * u); break;
                default: shape = robin_shape_d1(om[k], f.lambda_l, u); break;
            }
            s += dk[k] * shape;
        }
        return s;
    };

    // integrate over tau = t - s with dyadic panels graded toward tau = 0,
    // where the fast modes are still alive; the first panel is shorter than
    // the fastest decay scale
    int panels = 8;
    {
        double need = std::log2(std::max(2.0, 4.0 * t * a * om_max * om_max));
        panels = std::clamp((int)std::ceil(need) + 1, 8, 48);
    }
    double total = 0.0;
    double lo = 0.0;
    for (int j = 1; j <= panels; ++j) {
        double hi = t * std::pow(2.0, double(j - panels));
        if (j == panels) hi = t;
        QuadratureRule qt = gauss_legendre(16, lo, hi);
        // inner rule sized to the fastest mode that survives this panel
        double om_live = std::min(om_max, std::sqrt(45.0 / (a * std::max(lo, 1e-300))));
        int nu = std::clamp((int)std::ceil(0.7 * om_live) + 48, 64, 1024);
        QuadratureRule qu = gauss_legendre(nu, 0.0, 1.0);
        for (Eigen::Index it = 0; it < qt.nodes.size(); ++it) {
            double tau = qt.nodes(it);
            double s = t - tau;
            load_decay(tau);
            double inner = 0.0;
            for (Eigen::Index iu = 0; iu < qu.nodes.size(); ++iu) {
                double g = du_value(qu.nodes(iu));
                inner += qu.weights(iu) * 2.0 * mobility(rho_su(s, qu.nodes(iu)), p.alpha) * g * g;
            }
            if (walls) {
                double v0 = 0.0, v1 = 0.0;
                for (int k = 0; k < M; ++k) {
                    v0 += dk[k] * val0[k];
                    v1 += dk[k] * val1[k];
                }
                inner += p.lambda_l * ((a - 2.0 * p.rho_l) * rho_su(s, 0.0) + a * p.rho_l) * v0 * v0;
                inner += p.lambda_r * ((a - 2.0 * p.rho_r) * rho_su(s, 1.0) + a * p.rho_r) * v1 * v1;
            }
            total += qt.weights(it) * inner;
        }
        lo = hi;
    }
    return total;
}

std::vector<DecayFit> decay_fit(const std::vector<double>& thetas, const std::vector<int>& Ns,
                                const ModelParams& tmpl) {
    if (thetas.empty()) throw std::domain_error("decay_fit: no theta values");
    if (Ns.size() < 3) throw std::domain_error("decay_fit: need at least three lattice sizes");
    for (int N : Ns)
        if (N < 4) throw std::domain_error("decay_fit: N below 4");
    if (tmpl.rho_l == tmpl.rho_r)
        throw std::invalid_argument("decay_fit: reservoir densities must differ");

    const int steps = 49;
    const double horizon = 1.0;
    std::vector<double> logN;
    for (int N : Ns) logN.push_back(std::log(double(N)));

    std::vector<DecayFit> out;
    for (double theta : thetas) {
        std::vector<double> sup_bulk, sup_bdry;
        for (int N : Ns) {
            ModelParams p = tmpl;
            p.N = N;
            p.theta = theta;
            p.validate_for_solvers();
            Eigen::VectorXd interior(N - 1);
            for (int x = 1; x <= N - 1; ++x)
                interior(x - 1) = p.rho_l + (p.rho_r - p.rho_l) * double(x) / N;
            DensityPath path(make_profile(p, interior, 0.0), p);
            const bool diag = p.alpha >= 2;
            TriangleLattice lat(N, diag);
            CorrelationField phi{N, diag, Eigen::VectorXd::Zero(lat.size()), 0.0};
            double sb = 0.0, sd = 0.0;
            for (int j = 0; j < steps; ++j) {
                phi = evolve_correlation(phi, path, horizon / steps, p, 1e-8);
                for (int idx = 0; idx < lat.size(); ++idx) {
                    auto [x, y] = lat.site(idx);
                    if (x == y) continue;
                    double v = std::abs(phi.values(idx));
                    if (x == 1 || y == N - 1) sd = std::max(sd, v);
                    else sb = std::max(sb, v);
                }
            }
            if (!(sb > 0.0) || !(sd > 0.0))
                throw std::runtime_error("decay_fit: degenerate correlation sup");
            sup_bulk.push_back(sb);
            sup_bdry.push_back(sd);
        }
        auto emit = [&](const char* region, const std::vector<double>& sups) {
            DecayFit fit;
            fit.theta = theta;
            fit.region = region;
            fit.N_list = Ns;
            fit.sup_abs = sups;
            std::vector<double> ys;
            for (double s : sups) ys.push_back(std::log(s));
            fit_line(logN, ys, fit.slope, fit.intercept, fit.stderr_slope);
            out.push_back(std::move(fit));
        };
        emit("boundary", sup_bdry);
        emit("bulk", sup_bulk);
    }
    return out;
}

std::string decay_fit_json(const std::vector<DecayFit>& fits) {
    nlohmann::json arr = nlohmann::json::array();
    for (const DecayFit& f : fits)
        arr.push_back({{"theta", f.theta},
                       {"region", f.region},
                       {"slope", f.slope},
                       {"intercept", f.intercept},
                       {"stderr", f.stderr_slope},
                       {"N_list", f.N_list},
                       {"sup_abs", f.sup_abs}});
    return arr.dump(2);
}

EnsembleEstimate replacement_statistic(int x, int L, double t,
                                       const std::vector<Trajectory>& ensemble) {
    if (L < 1) throw std::domain_error("replacement_statistic: window must be positive");
    std::vector<double> samples;
    samples.reserve(ensemble.size());
    for (const Trajectory& traj : ensemble) {
        if (!traj.logged) throw std::domain_error("replacement_statistic: event log required");
        const int N = traj.initial.N();
        if (x < 1 || x + L > N - 1)
            throw std::domain_error("replacement_statistic: window leaves the lattice");
        samples.push_back(std::abs(trajectory_integral(traj, 0.0, t, [&](const Configuration& c) {
            return c.at(x) - block_average(c, x, L, BlockSide::Right);
        })));
    }
    return estimate_from_samples(samples);
}

HydroReport hydro_check(const std::function<double(double)>& G, double t,
                        const std::vector<Trajectory>& ensemble,
                        const std::function<double(double)>& gamma0, const ModelParams& p) {
    p.validate_for_solvers();
    if (t < 0.0) throw std::domain_error("hydro_check: negative time");
    std::vector<double> samples;
    samples.reserve(ensemble.size());
    for (const Trajectory& traj : ensemble) {
        if (traj.initial.N() != p.N)
            throw std::invalid_argument("hydro_check: replica does not match the parameters");
        samples.push_back(empirical_pairing(state_for(traj, t, "hydro_check"), G));
    }
    EnsembleEstimate est = estimate_from_samples(samples);

    // stationary offset that homogenizes the wall conditions of the regime
    std::function<double(double)> h;
    switch (regime_for(p.theta)) {
        case Regime::dirichlet:
            h = [rl = p.rho_l, rr = p.rho_r](double u) { return rl + (rr - rl) * u; };
            break;
        case Regime::robin: {
            double A = p.lambda_l * p.lambda_r * (p.rho_r - p.rho_l) /
                       (p.lambda_l + p.lambda_l * p.lambda_r + p.lambda_r);
            double B = p.rho_l + A / p.lambda_l;
            h = [A, B](double u) { return A * u + B; };
            break;
        }
        case Regime::neumann: h = [](double) { return 0.0; }; break;
    }

    double solver = 0.0;
    if (t == 0.0) {
        for (int x = 1; x <= p.N - 1; ++x) solver += G(double(x) / p.N) * gamma0(double(x) / p.N);
    } else {
        SemigroupExpansion e =
            build_expansion([&](double u) { return gamma0(u) - h(u); }, p, 64);
        for (int x = 1; x <= p.N - 1; ++x) {
            double u = double(x) / p.N;
            solver += G(u) * (semigroup_eval(e, t, u) + h(u));
        }
    }
    solver /= p.N;

    HydroReport rep;
    rep.mc = est.value;
    rep.mc_se = est.se;
    rep.solver = solver;
    rep.deviation = est.value - solver;
    rep.replicas = est.replicas;
    return rep;
}

} // namespace sep

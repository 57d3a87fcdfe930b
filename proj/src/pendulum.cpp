#include "beatnls/pendulum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "beatnls/errors.hpp"

namespace beat {

namespace {

constexpr double kPi = std::numbers::pi;

// Truncated Taylor series in dp, c[k] = f^(k)/k!.
struct Jet {
    static constexpr int N = 5;
    std::array<double, N> c{};

    static Jet constant(double v) {
        Jet j;
        j.c[0] = v;
        return j;
    }
    static Jet linear(double v, double slope) {
        Jet j;
        j.c[0] = v;
        j.c[1] = slope;
        return j;
    }
    friend Jet operator+(Jet a, const Jet& b) {
        for (int k = 0; k < N; ++k) a.c[k] += b.c[k];
        return a;
    }
    friend Jet operator-(Jet a, const Jet& b) {
        for (int k = 0; k < N; ++k) a.c[k] -= b.c[k];
        return a;
    }
    friend Jet operator*(double s, Jet a) {
        for (auto& x : a.c) x *= s;
        return a;
    }
    friend Jet operator*(const Jet& a, const Jet& b) {
        Jet r;
        for (int i = 0; i < N; ++i)
            for (int k = 0; i + k < N; ++k) r.c[i + k] += a.c[i] * b.c[k];
        return r;
    }
    Jet sqrt() const {
        if (!(c[0] > 0)) throw DomainError("hamiltonian_AB: square-root argument not positive");
        Jet s;
        s.c[0] = std::sqrt(c[0]);
        for (int k = 1; k < N; ++k) {
            double acc = c[k];
            for (int i = 1; i < k; ++i) acc -= s.c[i] * s.c[k - i];
            s.c[k] = acc / (2 * s.c[0]);
        }
        return s;
    }
    std::array<double, N> derivatives() const {
        std::array<double, N> d{};
        double fact = 1;
        for (int k = 0; k < N; ++k) {
            if (k > 0) fact *= k;
            d[k] = c[k] * fact;
        }
        return d;
    }
};

double lin_part(const KVector& K) { return K[0] + K[1] + 4 * K[2]; }

double safe_sqrt(double x) {
    if (x < 0) {
        if (x > -1e-13) return 0.0;
        throw DomainError("reduced system: square-root argument negative");
    }
    return std::sqrt(x);
}

// Elliptic chart around (p_fixed, 0): P = lam (p - pc), Q = q / lam.
struct Chart {
    KVector K;
    double pc, lam, hmax, alpha2;
    PRange range;

    explicit Chart(const KVector& k) : K(k) {
        const auto fp = fixed_points(K);
        pc = fp.p_stable;
        const auto ab = hamiltonian_AB(K, pc);
        const double gpp = ab.A[2] + ab.B[2];
        lam = std::pow(-gpp / ab.B[0], 0.25);
        hmax = ab.A[0] + ab.B[0];
        alpha2 = std::sqrt(-ab.B[0] * gpp);
        range = admissible_p_range(K);
    }
    ReducedPoint at(double rho, double theta) const {
        return {pc + rho * std::cos(theta) / lam, lam * rho * std::sin(theta)};
    }
};

// Radius of the level set hmax - delta along one ray, and dh/drho there.
std::pair<double, double> solve_ray(const Chart& ch, double theta, double delta, double guess) {
    auto g = [&](double rho) {
        const auto pt = ch.at(rho, theta);
        return ch.hmax - reduced_energy(ch.K, pt.p, pt.q) - delta;
    };
    double hi = guess;
    double lo = 0.0;
    if (g(hi) >= 0) {
        lo = hi;
        while (g(lo) >= 0) {
            hi = lo;
            lo /= 1.25;
        }
    } else {
        // the ray may not leave the strip |q| <= pi or the admissible p-range
        const double c = std::cos(theta), sn = std::abs(std::sin(theta));
        double rmax = 1e300;
        if (c > 0) rmax = (ch.range.hi - ch.pc) * ch.lam / c;
        if (c < 0) rmax = (ch.range.lo - ch.pc) * ch.lam / c;
        if (sn > 0) rmax = std::min(rmax, kPi / (ch.lam * sn));
        while (true) {
            lo = hi;
            hi *= 1.25;
            if (hi >= rmax) {
                hi = rmax;
                if (g(hi) < 0) throw DomainError("action_angle: level set leaves the libration region");
                break;
            }
            if (g(hi) >= 0) break;
        }
    }
    boost::math::tools::eps_tolerance<double> tol(50);
    std::uintmax_t iters = 200;
    auto [a, b] = boost::math::tools::toms748_solve(g, lo, hi, tol, iters);
    double rho = 0.5 * (a + b);
    auto slope = [&](double r) {
        const auto pt = ch.at(r, theta);
        const auto ab = hamiltonian_AB(ch.K, pt.p);
        const double hp = ab.A[1] + ab.B[1] * std::cos(pt.q);
        const double hq = -ab.B[0] * std::sin(pt.q);
        return hp * std::cos(theta) / ch.lam + hq * ch.lam * std::sin(theta);
    };
    double dhdrho = slope(rho);
    if (dhdrho > 0) throw DomainError("action_angle: level set not star-shaped about the fixed point");
    for (int k = 0; k < 2 && dhdrho < 0; ++k) {
        const double next = rho - g(rho) / (-dhdrho);
        if (!(next >= a && next <= b)) break;
        rho = next;
        dhdrho = slope(rho);
    }
    return {rho, dhdrho};
}

struct LevelStats {
    double E, T;
};

LevelStats level_stats(const Chart& ch, double h, int rays) {
    const double delta = ch.hmax - h;
    if (!(delta > 0)) throw DomainError("action_angle: level at or above the elliptic maximum");
    double sum_r2 = 0, sum_t = 0;
    double guess = std::sqrt(2 * delta / ch.alpha2);
    for (int i = 0; i < rays; ++i) {
        const double theta = 2 * kPi * i / rays;
        auto [rho, d] = solve_ray(ch, theta, delta, guess);
        guess = rho;
        sum_r2 += rho * rho;
        sum_t += rho / (-d);
    }
    return {sum_r2 / (2.0 * rays), sum_t * 2 * kPi / rays};
}

double level_from_chart(const Chart& ch, double E, int rays) {
    if (!(E > 0)) throw DomainError("level_of_action: E must be positive");
    // safeguarded Newton; E(h) decreases from the separatrix level to hmax
    double lo = separatrix_crossings(ch.K).level, hi = ch.hmax;
    double h = std::max(ch.hmax - ch.alpha2 * E, lo + 0.5 * (hi - lo));
    if (ch.hmax - ch.alpha2 * E > lo) h = ch.hmax - ch.alpha2 * E;
    for (int it = 0; it < 200; ++it) {
        const auto s = level_stats(ch, h, rays);
        if (s.E > E)
            lo = h;
        else
            hi = h;
        double next = h + (s.E - E) * 2 * kPi / s.T;  // dE/dh = -T/2pi
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double dh = next - h;
        h = next;
        if (std::abs(dh) <= 4e-16 * std::abs(h)) return h;
        if (hi - lo <= 4e-16 * std::abs(hi)) break;
    }
    throw DomainError("level_of_action: no orbit with this action inside the separatrix");
}

using Vec2 = Eigen::Vector2d;

Vec2 rhs(const KVector& K, const Vec2& y) {
    const auto v = reduced_vector_field(K, y[0], y[1]);
    return {v.p, v.q};
}

double err2(const Vec2& e, const Vec2& y0, const Vec2& y1, double rtol, double atol) {
    double m = 0;
    for (int i = 0; i < 2; ++i) {
        const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        m = std::max(m, std::abs(e[i]) / sc);
    }
    return m;
}

Vec2 flow(const KVector& K, Vec2 y, double t, const OdeOptions& ode) {
    return dopri5([&](double, const Vec2& s) { return rhs(K, s); }, 0.0, t, y, err2, ode);
}

template <class F>
double richardson(F&& d, double h) {
    return (4 * d(h / 2) - d(h)) / 3;
}

double binom(int n, int k) {
    if (k < 0 || k > n) return 0;
    double r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

double factorial(int n) {
    double r = 1;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

}  // namespace

std::array<double, 4> tangential_actions(const KVector& K, double p) {
    return {p, K[0] - 2 * p, K[1] + 2 * p, K[2] - p};
}

PRange admissible_p_range(const KVector& K) {
    PRange r{std::max(0.0, -K[1] / 2), std::min(K[2], K[0] / 2)};
    if (!(r.lo < r.hi)) throw DomainError("admissible_p_range: empty range for this K");
    return r;
}

ABValues hamiltonian_AB(const KVector& K, double p) {
    ABValues out;
    out.lin = lin_part(K);
    const double S = K[0] + K[1] + K[2];
    const auto I = tangential_actions(K, p);
    const std::array<double, 4> slope{1, -2, 2, -1};
    Jet Q, C;
    std::array<Jet, 4> J;
    for (int i = 0; i < 4; ++i) {
        J[i] = Jet::linear(I[i], slope[i]);
        Q = Q + J[i] * J[i];
        C = C + J[i] * J[i] * J[i];
    }
    const Jet a = Jet::constant(6 * S * S * S) - (9 * S) * Q + 4.0 * C;
    const Jet root = (J[0] * J[3]).sqrt();
    const Jet b = 18.0 * (J[1] * J[2] * root);
    out.A = a.derivatives();
    out.B = b.derivatives();

    const double q0 = Q.c[0];
    // I_1, I_-1, I_-2 depend on K1, K2, K3 respectively.
    for (int i = 0; i < 3; ++i) {
        const double Ii = I[i + 1];
        out.A_K[i] = 18 * S * S - 9 * q0 - 18 * S * Ii + 12 * Ii * Ii;
    }
    const double r = root.c[0];
    out.B_K[0] = 18 * I[2] * r;
    out.B_K[1] = 18 * I[1] * r;
    out.B_K[2] = 18 * I[1] * I[2] * p / (2 * r);
    return out;
}

double reduced_energy(const KVector& K, double p, double q) {
    const double S = K[0] + K[1] + K[2];
    const auto I = tangential_actions(K, p);
    double Q = 0, C = 0;
    for (double x : I) {
        Q += x * x;
        C += x * x * x;
    }
    const double a = 6 * S * S * S - 9 * S * Q + 4 * C;
    const double b = 18 * I[1] * I[2] * safe_sqrt(I[0] * I[3]);
    return a + b * std::cos(q);
}

double reduced_hamiltonian(const KVector& K, double p, double q, double eps) {
    return lin_part(K) + eps * reduced_energy(K, p, q);
}

ReducedPoint reduced_vector_field(const KVector& K, double p, double q) {
    const auto ab = hamiltonian_AB(K, p);
    return {ab.B[0] * std::sin(q), ab.A[1] + ab.B[1] * std::cos(q)};
}

double f_coefficient(const KVector& K, double p) {
    const double S = K[0] + K[1] + K[2];
    double Q = 0;
    for (double x : tangential_actions(K, p)) Q += x * x;
    return 18 * S * S - 9 * Q;
}

double coupling_U(int j, const KVector& K, double p) {
    const auto I = tangential_actions(K, p);
    if (j == 3) return 72 * safe_sqrt(I[0] * I[1] * I[2] * I[3]);
    if (j == 4) return 18 * I[0] * I[3];
    throw InvalidInput("coupling_U: j must be 3 or 4");
}

double coupling_V(int j, const KVector& K, double p, double q) {
    int n, l;
    if (j == 3) {
        n = -1;
        l = 3;
    } else if (j == 4) {
        n = -2;
        l = 4;
    } else {
        throw InvalidInput("coupling_V: j must be 3 or 4");
    }
    const auto ab = hamiltonian_AB(K, p);
    const double c = std::cos(q);
    const double dK = (ab.A_K[0] - ab.A_K[1]) + (ab.B_K[0] - ab.B_K[1]) * c;
    const double dp = ab.A[1] + ab.B[1] * c;
    return l * dK + n * dp;
}

FixedPoints fixed_points(const KVector& K) {
    const auto range = admissible_p_range(K);
    auto newton = [&](double sign) {
        double p = 1.0;
        for (int it = 0; it < 60; ++it) {
            if (!(p > range.lo && p < range.hi)) break;
            const auto ab = hamiltonian_AB(K, p);
            const double g = ab.A[1] + sign * ab.B[1];
            const double dg = ab.A[2] + sign * ab.B[2];
            const double step = g / dg;
            p -= step;
            if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(p))) return p;
        }
        throw ConvergenceError("fixed_points: Newton did not converge (K outside the admissible neighbourhood)");
    };
    FixedPoints fp{newton(+1), newton(-1)};
    const auto s = hamiltonian_AB(K, fp.p_stable);
    if (!((s.A[2] + s.B[2]) * s.B[0] < 0))
        throw DomainError("fixed_points: q = 0 fixed point is not elliptic");
    const auto u = hamiltonian_AB(K, fp.p_unstable);
    if (!((u.A[2] - u.B[2]) * u.B[0] < 0))
        throw DomainError("fixed_points: q = pi fixed point is not hyperbolic");
    return fp;
}

SeparatrixCrossings separatrix_crossings(const KVector& K) {
    const auto fp = fixed_points(K);
    const auto range = admissible_p_range(K);
    const double level = reduced_energy(K, fp.p_unstable, kPi);
    auto g = [&](double p) { return reduced_energy(K, p, 0.0) - level; };
    auto solve = [&](double a, double b) {
        if (!(g(a) * g(b) < 0)) throw DomainError("separatrix_crossings: root not bracketed");
        boost::math::tools::eps_tolerance<double> tol(52);
        std::uintmax_t iters = 200;
        auto [x, y] = boost::math::tools::toms748_solve(g, a, b, tol, iters);
        return 0.5 * (x + y);
    };
    return {solve(range.lo, fp.p_stable), solve(fp.p_stable, range.hi), level};
}

double action_of_level(const KVector& K, double h, int rays) {
    return level_stats(Chart(K), h, rays).E;
}

double level_of_action(const KVector& K, double E, int rays) { return level_from_chart(Chart(K), E, rays); }

double action_at_separatrix(const KVector& K, int rays) {
    const Chart ch(K);
    const double level = separatrix_crossings(K).level;
    return level_stats(ch, level + 1e-8 * (ch.hmax - level), rays).E;
}

ActionAngleData action_angle_data(const ParameterPoint& xi, const ActionAngleOptions& opt) {
    if (opt.rays < 8 || opt.samples < 4) throw InvalidInput("action_angle_data: too few rays or samples");
    const Chart ch(xi.K);
    if (xi.E < opt.guard) throw DomainError("action_angle_data: E inside the guard band at 0");
    const double Esep = action_at_separatrix(xi.K, opt.rays);
    if (xi.E > Esep - opt.guard) throw DomainError("action_angle_data: E inside the guard band at the separatrix");

    ActionAngleData out;
    out.xi = xi;
    out.energy = level_from_chart(ch, xi.E, opt.rays);
    const auto st = level_stats(ch, out.energy, opt.rays);
    out.period = st.T;
    out.dHdE = -2 * kPi / st.T;
    out.p_hi = ch.pc + solve_ray(ch, 0.0, ch.hmax - out.energy, 1e-3).first / ch.lam;
    out.p_lo = ch.pc - solve_ray(ch, kPi, ch.hmax - out.energy, 1e-3).first / ch.lam;

    const int n = opt.samples;
    out.phi.resize(n);
    out.p.resize(n);
    out.q.resize(n);
    Vec2 y(out.p_hi, 0.0);
    const double dt = st.T / n;
    for (int k = 0; k < n; ++k) {
        out.phi[k] = 2 * kPi * k / n;
        out.p[k] = y[0];
        out.q[k] = y[1];
        y = flow(xi.K, y, dt, opt.ode);
    }

    // Return time to q = 0 from above, found on the integrated trajectory.
    Vec2 z(out.p_hi, 0.0);
    const double chunk = st.T / 64;
    double t = 0;
    int crossings = 0;
    while (true) {
        Vec2 z1 = flow(xi.K, z, chunk, opt.ode);
        if (z[1] > 0 && z1[1] <= 0) ++crossings;
        if (crossings == 1 && t > 0.5 * st.T) {
            const Vec2 base = z;
            auto g = [&](double s) { return flow(xi.K, base, s, opt.ode)[1]; };
            boost::math::tools::eps_tolerance<double> tol(50);
            std::uintmax_t iters = 100;
            auto [a, b] = boost::math::tools::toms748_solve(g, 0.0, chunk, g(0.0), z1[1], tol, iters);
            out.period_vf = t + 0.5 * (a + b);
            break;
        }
        z = z1;
        t += chunk;
        if (t > 3 * st.T) throw ConvergenceError("action_angle_data: orbit did not close");
    }
    return out;
}

FrequencyMap frequency_map(const ParameterPoint& xi, const FrequencyOptions& opt) {
    ActionAngleOptions aa = opt.aa;
    aa.samples = opt.grid;
    const auto data = action_angle_data(xi, aa);
    FrequencyMap out;
    out.period = data.period;
    out.lambda[0] = data.dHdE;
    for (int i = 0; i < 3; ++i) {
        auto d = [&](double h) {
            KVector kp = xi.K, km = xi.K;
            kp[i] += h;
            km[i] -= h;
            return (level_of_action(kp, xi.E, aa.rays) - level_of_action(km, xi.E, aa.rays)) / (2 * h);
        };
        out.lambda[i + 1] = richardson(d, opt.fd_step);
    }
    auto& o = out.orbit;
    o.phi = data.phi;
    o.p = data.p;
    o.q = data.q;
    const int n = static_cast<int>(data.p.size());
    for (int k = 0; k < n; ++k) {
        const double p = data.p[k], q = data.q[k];
        o.f.push_back(f_coefficient(xi.K, p));
        o.U3.push_back(coupling_U(3, xi.K, p));
        o.U4.push_back(coupling_U(4, xi.K, p));
        o.V3.push_back(coupling_V(3, xi.K, p, q));
        o.V4.push_back(coupling_V(4, xi.K, p, q));
    }
    auto mean = [n](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x;
        return s / n;
    };
    out.f0 = mean(o.f);
    out.Ubar3 = mean(o.U3);
    out.Ubar4 = mean(o.U4);
    out.Vbar3 = mean(o.V3);
    out.Vbar4 = mean(o.V4);
    return out;
}

FrequencyLimit frequency_limit(const KVector& K, const FrequencyOptions& opt) {
    std::array<FrequencyMap, 3> m;
    for (int i = 0; i < 3; ++i) m[i] = frequency_map({kExtrapolationEnergies[i], K}, opt);
    const auto& E = kExtrapolationEnergies;
    std::array<double, 3> w{};
    for (int i = 0; i < 3; ++i) {
        w[i] = 1;
        for (int j = 0; j < 3; ++j)
            if (j != i) w[i] *= (0 - E[j]) / (E[i] - E[j]);
    }
    FrequencyLimit out;
    for (int i = 0; i < 3; ++i) {
        for (int c = 0; c < 4; ++c) out.lambda[c] += w[i] * m[i].lambda[c];
        out.f0 += w[i] * m[i].f0;
    }
    return out;
}

double EllipticExpansion::alpha(int i, int j) const {
    if (i < 0 || j < 0 || i > 4) throw InvalidInput("alpha: index out of range");
    if (j == 0) return G[i] / (factorial(i) * std::pow(lambda4, 0.25 * i));
    const double lam = std::pow(lambda4, 0.25);
    const double sgn = (j % 2) ? -1.0 : 1.0;
    return B[i] * sgn * std::pow(lam, 2 * j - i) / (factorial(i) * factorial(2 * j));
}

namespace {
double beta_cascade(const EllipticExpansion& e, int l, int m, bool alternate) {
    const int h = l + m;
    double s = 0;
    for (int j = 0; 2 * j <= h; ++j) {
        const int i = h - 2 * j;
        if (i > 4) continue;
        double inner = 0;
        for (int a = 0; a <= i; ++a) {
            const int b = l - a;
            if (b < 0 || b > 2 * j) continue;
            inner += binom(i, a) * binom(2 * j, b) * ((alternate && (b % 2)) ? -1.0 : 1.0);
        }
        s += ((j % 2) ? -1.0 : 1.0) * e.alpha(i, j) * inner;
    }
    return s * std::pow(2.0, -0.5 * h);
}
}  // namespace

double EllipticExpansion::beta(int l, int m) const { return beta_cascade(*this, l, m, true); }
double EllipticExpansion::beta22_literal() const { return beta_cascade(*this, 2, 2, false); }

double EllipticExpansion::gamma22() const {
    const double b30 = beta(3, 0), b21 = beta(2, 1);
    return beta(2, 2) + 3 * (b30 * b30 + b21 * b21) / alpha2;
}

EllipticExpansion elliptic_expansion(const KVector& K) {
    EllipticExpansion e{};
    e.p_fixed = fixed_points(K).p_stable;
    const auto ab = hamiltonian_AB(K, e.p_fixed);
    for (int k = 0; k < 5; ++k) {
        e.G[k] = ab.A[k] + ab.B[k];
        e.B[k] = ab.B[k];
    }
    e.alpha0 = e.G[0];
    e.alpha2 = std::sqrt(-e.B[0] * e.G[2]);
    e.lambda4 = -e.G[2] / e.B[0];
    return e;
}

TwistResult twist_matrix(const KVector& K, double step) {
    auto a0 = [](const KVector& k) { return elliptic_expansion(k).alpha0; };
    auto a2 = [](const KVector& k) { return elliptic_expansion(k).alpha2; };
    auto shifted = [&](int i, double hi, int j, double hj) {
        KVector k = K;
        k[i] += hi;
        k[j] += hj;
        return k;
    };
    TwistResult out;
    const double f0 = a0(K);
    for (int i = 0; i < 3; ++i) {
        auto d0 = [&](double h) { return (a0(shifted(i, h, i, 0)) - a0(shifted(i, -h, i, 0))) / (2 * h); };
        auto d2 = [&](double h) { return (a2(shifted(i, h, i, 0)) - a2(shifted(i, -h, i, 0))) / (2 * h); };
        out.dalpha0[i] = richardson(d0, step);
        out.dalpha2[i] = richardson(d2, step);
        for (int j = i; j < 3; ++j) {
            auto dd = [&](double h) {
                if (i == j)
                    return (a0(shifted(i, h, i, 0)) - 2 * f0 + a0(shifted(i, -h, i, 0))) / (h * h);
                return (a0(shifted(i, h, j, h)) - a0(shifted(i, h, j, -h)) - a0(shifted(i, -h, j, h)) +
                        a0(shifted(i, -h, j, -h))) /
                       (4 * h * h);
            };
            out.M(i, j) = out.M(j, i) = richardson(dd, step);
        }
        out.M(i, 3) = out.M(3, i) = -out.dalpha2[i];
    }
    const auto e = elliptic_expansion(K);
    out.beta22 = e.beta(2, 2);
    out.beta22_literal = e.beta22_literal();
    out.gamma22 = e.gamma22();
    out.beta3 = {e.beta(3, 0), e.beta(2, 1), e.beta(1, 2), e.beta(0, 3)};
    out.M(3, 3) = 2 * out.gamma22;
    out.det = out.M.determinant();
    return out;
}

std::string phase_portrait_csv(const KVector& K, int n) {
    if (n < 2) throw InvalidInput("phase_portrait: n must be at least 2");
    const auto r = admissible_p_range(K);
    std::ostringstream os;
    os.precision(17);
    os << "p,q,H\n";
    for (int i = 0; i < n; ++i) {
        const double p = r.lo + (r.hi - r.lo) * i / (n - 1);
        for (int k = 0; k < n; ++k) {
            const double q = 2 * kPi * k / n;
            os << p << ',' << q << ',' << reduced_energy(K, p, q) << '\n';
        }
    }
    return os.str();
}

}  // namespace beat

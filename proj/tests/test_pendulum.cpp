#include <chrono>
#include <cmath>
#include <numbers>

#include "beatnls/errors.hpp"
#include "beatnls/pendulum.hpp"
#include "doctest.h"

using namespace beat;

namespace {

constexpr double kPi = std::numbers::pi;

// The closed form at K = (4,0,2), written with eps = 1 (so the constant is 12 + 1296).
double star_literal(double p, double q) {
    const double r = 2 - p;
    return 1308 - 270 * (p * p + r * r) + 36 * (p * p * p + r * r * r) + 72 * std::pow(p, 1.5) * std::pow(r, 1.5) * std::cos(q);
}

// Same polynomial split into the linear part and the eps-scaled sextic part.
double star_eps(double p, double q, double eps) {
    const double r = 2 - p;
    return 12 + eps * (1296 - 270 * (p * p + r * r) + 36 * (p * p * p + r * r * r) +
                       72 * std::pow(p, 1.5) * std::pow(r, 1.5) * std::cos(q));
}

double bisect(auto f, double a, double b) {
    double fa = f(a);
    for (int i = 0; i < 200; ++i) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if ((fm < 0) == (fa < 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

TEST_CASE("closed form at K star") {
    for (double p : {0.05, 0.3, 0.77, 1.0, 1.4, 1.93}) {
        for (double q : {0.0, 0.7, 2.0, kPi, 5.1}) {
            CHECK(std::abs(reduced_hamiltonian(kKStar, p, q, 1.0) - star_literal(p, q)) < 1e-12 * 1308);
            CHECK(std::abs(reduced_hamiltonian(kKStar, p, q, 1e-3) - star_eps(p, q, 1e-3)) < 1e-13);
        }
        const auto ab = hamiltonian_AB(kKStar, p);
        const auto mirror = hamiltonian_AB(kKStar, 2 - p);
        CHECK(ab.A[0] == doctest::Approx(mirror.A[0]).epsilon(1e-14));
        CHECK(ab.B[0] == doctest::Approx(mirror.B[0]).epsilon(1e-14));
    }
    CHECK(hamiltonian_AB(kKStar, 1.0).B[0] == doctest::Approx(72).epsilon(1e-15));
    CHECK(hamiltonian_AB(kKStar, 1.0).lin == 12);
}

TEST_CASE("derivatives agree with finite differences") {
    const KVector K{3.93, 0.04, 2.05};
    for (double p : {0.4, 1.0, 1.3}) {
        const auto ab = hamiltonian_AB(K, p);
        auto A = [&](double x) { return hamiltonian_AB(K, x).A[0]; };
        auto B = [&](double x) { return hamiltonian_AB(K, x).B[0]; };
        const double h = 1e-3;
        // five-point stencils
        auto d1 = [&](auto f) { return (-f(p + 2 * h) + 8 * f(p + h) - 8 * f(p - h) + f(p - 2 * h)) / (12 * h); };
        auto d2 = [&](auto f) {
            return (-f(p + 2 * h) + 16 * f(p + h) - 30 * f(p) + 16 * f(p - h) - f(p - 2 * h)) / (12 * h * h);
        };
        CHECK(ab.A[1] == doctest::Approx(d1(A)).epsilon(1e-9));
        CHECK(ab.B[1] == doctest::Approx(d1(B)).epsilon(1e-9));
        CHECK(ab.A[2] == doctest::Approx(d2(A)).epsilon(1e-6));
        CHECK(ab.B[2] == doctest::Approx(d2(B)).epsilon(1e-6));
        auto dA2 = [&](double x) { return hamiltonian_AB(K, x).A[2]; };
        auto dB2 = [&](double x) { return hamiltonian_AB(K, x).B[2]; };
        CHECK(ab.A[4] == doctest::Approx(d2(dA2)).epsilon(1e-5));
        CHECK(ab.B[4] == doctest::Approx(d2(dB2)).epsilon(1e-5));
        for (int i = 0; i < 3; ++i) {
            auto AK = [&](double x) {
                KVector k = K;
                k[i] = x;
                return hamiltonian_AB(k, p).A[0];
            };
            auto BK = [&](double x) {
                KVector k = K;
                k[i] = x;
                return hamiltonian_AB(k, p).B[0];
            };
            const double c = K[i];
            CHECK(ab.A_K[i] == doctest::Approx((AK(c + h) - AK(c - h)) / (2 * h)).epsilon(1e-8));
            CHECK(ab.B_K[i] == doctest::Approx((BK(c + h) - BK(c - h)) / (2 * h)).epsilon(1e-6));
        }
    }
    CHECK_THROWS_AS(hamiltonian_AB(kKStar, 2.5), DomainError);
    CHECK_THROWS_AS(hamiltonian_AB(kKStar, -0.1), DomainError);
}

TEST_CASE("fixed points") {
    const auto fp = fixed_points(kKStar);
    CHECK(std::abs(fp.p_stable - 1) < 1e-12);
    CHECK(std::abs(fp.p_unstable - 1) < 1e-12);

    const KVector K{4.1, 0.0, 2.0};
    const auto f = fixed_points(K);
    CHECK(std::abs(f.p_stable - 1) > 1e-6);
    const auto ab = hamiltonian_AB(K, f.p_stable);
    CHECK(std::abs(ab.A[1] + ab.B[1]) < 1e-12);
    const double oracle = bisect([&](double p) {
        const auto x = hamiltonian_AB(K, p);
        return x.A[1] + x.B[1];
    }, 0.5, 1.5);
    CHECK(f.p_stable == doctest::Approx(oracle).epsilon(1e-12));
    for (auto [p, q] : {std::pair{f.p_stable, 0.0}, std::pair{f.p_unstable, kPi}}) {
        const auto v = reduced_vector_field(K, p, q);
        CHECK(std::abs(v.p) < 1e-12);
        CHECK(std::abs(v.q) < 1e-12);
    }
}

TEST_CASE("separatrix crossings") {
    const auto s = separatrix_crossings(kKStar);
    CHECK(std::abs(s.p1 + s.p2 - 2) < 1e-10);
    CHECK(s.p1 < 0.5);
    CHECK(s.p2 > 1.5);
    CHECK(s.level == doctest::Approx(756).epsilon(1e-14));
    // level equation in v = sqrt(p(2-p)) factors as (v+1)(2v^2+7v-7) = 0
    const double v = (-7 + std::sqrt(105.0)) / 4;
    CHECK(s.p1 == doctest::Approx(1 - std::sqrt(1 - v * v)).epsilon(1e-12));

    const KVector K{3.95, 0.05, 2.02};
    const auto t = separatrix_crossings(K);
    CHECK(std::abs(reduced_energy(K, t.p1, 0) - t.level) < 1e-10);
    CHECK(std::abs(reduced_energy(K, t.p2, 0) - t.level) < 1e-10);
}

TEST_CASE("action-angle data at mid-domain") {
    const ParameterPoint xi{0.3, {4.02, -0.03, 1.99}};
    const auto d = action_angle_data(xi);
    // dH/dE by differencing the inverted action map, T by integrating the flow to its return
    const double h = 1e-5;
    const double dHdE = (level_of_action(xi.K, xi.E + h) - level_of_action(xi.K, xi.E - h)) / (2 * h);
    CHECK(std::abs(dHdE * d.period_vf + 2 * kPi) < 1e-8 * 2 * kPi);
    CHECK(d.period == doctest::Approx(d.period_vf).epsilon(1e-10));
    CHECK(action_of_level(xi.K, d.energy) == doctest::Approx(xi.E).epsilon(1e-13));
    for (size_t k = 0; k < d.p.size(); ++k) CHECK(std::abs(reduced_energy(xi.K, d.p[k], d.q[k]) - d.energy) < 1e-9);
    CHECK(d.q.front() == 0.0);
    CHECK(std::abs(d.q[d.q.size() / 2]) < 1e-8);
    CHECK(d.p[d.p.size() / 2] == doctest::Approx(d.p_lo).epsilon(1e-9));

    // nested orbits: action decreases toward the elliptic maximum
    double prev = 1e300;
    const double hmax = elliptic_expansion(xi.K).alpha0;
    for (double dh : {60.0, 30.0, 10.0, 3.0, 1.0, 0.1}) {
        const double E = action_of_level(xi.K, hmax - dh);
        CHECK(E < prev);
        prev = E;
    }
    CHECK_THROWS_AS(action_angle_data({1e-4, kKStar}), DomainError);
    CHECK_THROWS_AS(action_angle_data({5.0, kKStar}), DomainError);
}

TEST_CASE("frequency anchors at E -> 0") {
    const auto t0 = std::chrono::steady_clock::now();
    const auto lim = frequency_limit(kKStar);
    const std::array<double, 4> expected{-144 * std::sqrt(3.0), 426, 426, 498};
    for (int i = 0; i < 4; ++i) CHECK(std::abs(lim.lambda[i] / expected[i] - 1) < 1e-6);
    CHECK(lim.f0 == doctest::Approx(558).epsilon(1e-6));
    CHECK(seconds_since(t0) < 60);

    CHECK(coupling_U(3, kKStar, 1.0) == doctest::Approx(144).epsilon(1e-15));
    CHECK(coupling_U(4, kKStar, 1.0) == doctest::Approx(18).epsilon(1e-15));
    CHECK(std::abs(coupling_V(3, kKStar, 1.0, 0.0)) < 1e-12);
    CHECK(std::abs(coupling_V(4, kKStar, 1.0, 0.0)) < 1e-12);
    CHECK(f_coefficient(kKStar, 1.0) == 558);
}

TEST_CASE("frequency map orbit averages") {
    const auto fm = frequency_map({0.2, kKStar}, {64});
    CHECK(fm.lambda[0] < 0);
    CHECK(std::abs(fm.lambda[1] - fm.lambda[2]) < 1e-6);
    // V contains d_p H = qdot, whose orbit average is zero; the K-part vanishes by symmetry at K star
    CHECK(std::abs(fm.Vbar3) < 1e-8);
    CHECK(std::abs(fm.Vbar4) < 1e-8);
    CHECK(fm.Ubar3 < 144);
    CHECK(fm.orbit.U3.size() == 64);
}

TEST_CASE("twist matrix") {
    const auto tw = twist_matrix(kKStar);
    for (double b : tw.beta3) CHECK(std::abs(b) < 1e-10);
    for (int i = 0; i < 3; ++i) CHECK(tw.dalpha0[i] == doctest::Approx(std::array{426.0, 426.0, 498.0}[i]).epsilon(1e-8));
    CHECK(tw.beta22 == doctest::Approx(84.375).epsilon(1e-12));
    CHECK(tw.beta22_literal == doctest::Approx(-23.625).epsilon(1e-12));
    CHECK(std::abs(tw.det) > 1e7);  // regression floor, measured 8.2055e7
    CHECK(tw.M.isApprox(tw.M.transpose(), 1e-12));

    const auto e = elliptic_expansion(kKStar);
    CHECK(e.alpha2 == doctest::Approx(144 * std::sqrt(3.0)).epsilon(1e-14));
    CHECK(e.lambda4 == doctest::Approx(12).epsilon(1e-14));
    CHECK(e.beta(1, 1) == doctest::Approx(-e.alpha2).epsilon(1e-14));
    CHECK(e.alpha(2, 0) == doctest::Approx(e.alpha(0, 1)).epsilon(1e-14));
}

TEST_CASE("quartic coefficient matches the action-angle second derivative") {
    // dH/dE = -alpha2 + 2 gamma E + O(E^2); fit the slope from three small energies
    for (const KVector& K : {kKStar, KVector{4.05, -0.04, 1.97}}) {
        const std::array<double, 3> E{0.004, 0.008, 0.012};
        std::array<double, 3> d{};
        for (int i = 0; i < 3; ++i) {
            const double h = 1e-5;
            d[i] = (level_of_action(K, E[i] + h) - level_of_action(K, E[i] - h)) / (2 * h);
        }
        // derivative at 0 of the quadratic through (E_i, d_i)
        double slope = 0;
        for (int i = 0; i < 3; ++i) {
            double w = 0;
            for (int j = 0; j < 3; ++j) {
                if (j == i) continue;
                double t = 1 / (E[i] - E[j]);
                for (int k = 0; k < 3; ++k)
                    if (k != i && k != j) t *= (0 - E[k]) / (E[i] - E[k]);
                w += t;
            }
            slope += w * d[i];
        }
        const auto e = elliptic_expansion(K);
        CHECK(slope == doctest::Approx(2 * e.gamma22()).epsilon(0.05));
        CHECK(d[0] == doctest::Approx(-e.alpha2).epsilon(1e-2));
    }
}

TEST_CASE("phase portrait csv") {
    const auto csv = phase_portrait_csv(kKStar, 5);
    CHECK(csv.rfind("p,q,H\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 26);
    CHECK_THROWS_AS(phase_portrait_csv(kKStar, 1), InvalidInput);
}

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "beatnls/errors.hpp"
#include "beatnls/poly.hpp"
#include "doctest.h"

using namespace beat;

namespace {

constexpr cplx I{0.0, 1.0};

struct Gen {
    std::mt19937 rng;
    explicit Gen(unsigned seed) : rng(seed) {}
    int uni(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); }

    MonomialKey key(int max_y = 2, int modes = 4) {
        MonomialKey k;
        for (int h = 0; h < kAngles; ++h) {
            k.ell[h] = uni(-2, 2);
            k.y[h] = uni(0, 3) == 0 ? uni(0, max_y) : 0;
        }
        const int nz = uni(0, 3);
        for (int t = 0; t < nz; ++t) {
            const int m = uni(-modes, modes);
            if (uni(0, 1))
                k.set_alpha(m, k.alpha_at(m) + 1);
            else
                k.set_beta(m, k.beta_at(m) + 1);
        }
        return k;
    }
    // Gaussian-integer coefficients keep all bracket arithmetic exact.
    PolyHamiltonian poly(int terms) {
        PolyHamiltonian p;
        for (int t = 0; t < terms; ++t) p.add(key(), cplx(uni(-3, 3), uni(-3, 3)));
        return p;
    }
    PolyHamiltonian homogeneous(int terms, int degree) {
        PolyHamiltonian p;
        while (static_cast<int>(p.size()) < terms) {
            MonomialKey k = key();
            if (k.degree() == degree) p.add(k, cplx(uni(1, 3), uni(-3, 3)));
        }
        return p;
    }
};

MonomialKey mk(std::array<int, 4> ell, std::array<int, 4> y, std::vector<std::pair<int, int>> a = {},
               std::vector<std::pair<int, int>> b = {}) {
    MonomialKey k;
    k.ell = ell;
    k.y = y;
    for (auto [m, e] : a) k.set_alpha(m, e);
    for (auto [m, e] : b) k.set_beta(m, e);
    return k;
}

// Bracket at a point from finite differences of the evaluated polynomials.
cplx fd_bracket(const PolyHamiltonian& f, const PolyHamiltonian& g, std::array<cplx, 4> phi, std::array<cplx, 4> y,
                std::map<int, cplx> z, std::map<int, cplx> zb, const std::vector<int>& modes) {
    const double h = 1e-4;
    auto d = [&](const PolyHamiltonian& p, int var, int idx) {
        auto ph = phi, yy = y;
        auto zz = z, zzb = zb;
        auto eval = [&](double s) {
            auto a = ph;
            auto b = yy;
            auto c = zz;
            auto e = zzb;
            if (var == 0) a[idx] += s;
            if (var == 1) b[idx] += s;
            if (var == 2) c[idx] += s;
            if (var == 3) e[idx] += s;
            return p.evaluate(a, b, c, e);
        };
        return (-eval(2 * h) + 8.0 * eval(h) - 8.0 * eval(-h) + eval(-2 * h)) / (12 * h);
    };
    cplx out{};
    for (int k = 0; k < 4; ++k) out += d(f, 1, k) * d(g, 0, k) - d(f, 0, k) * d(g, 1, k);
    for (int m : modes) out += I * (d(f, 2, m) * d(g, 3, m) - d(f, 3, m) * d(g, 2, m));
    return out;
}

}  // namespace

TEST_CASE("bracket sign convention") {
    auto f = PolyHamiltonian::action(1);
    auto g = PolyHamiltonian::angle({0, 1, 0, 0});
    CHECK(poisson_bracket(f, g) == PolyHamiltonian::angle({0, 1, 0, 0}, I));
    auto n = PolyHamiltonian::mode_action(5);
    CHECK(poisson_bracket(n, PolyHamiltonian::z(5)) == PolyHamiltonian::z(5, -I));
    CHECK(poisson_bracket(n, PolyHamiltonian::zbar(5)) == PolyHamiltonian::zbar(5, I));
}

TEST_CASE("bracket agrees with finite-difference evaluation") {
    Gen g(11);
    std::array<cplx, 4> phi{0.3, -0.2, 0.5, 0.1}, y{0.4, 0.3, -0.2, 0.25};
    std::map<int, cplx> z, zb;
    std::vector<int> modes;
    for (int m = -4; m <= 4; ++m) {
        modes.push_back(m);
        z[m] = cplx(0.3 + 0.05 * m, 0.1);
        zb[m] = cplx(0.2, -0.07 * m);
    }
    for (int t = 0; t < 10; ++t) {
        auto f = g.poly(4), h = g.poly(4);
        const cplx exact = poisson_bracket(f, h).evaluate(phi, y, z, zb);
        const cplx fd = fd_bracket(f, h, phi, y, z, zb, modes);
        CHECK(std::abs(exact - fd) < 1e-6 * (1 + std::abs(exact)));
    }
}

TEST_CASE("Jacobi identity, antisymmetry, bilinearity exact") {
    Gen g(3);
    for (int t = 0; t < 40; ++t) {
        auto a = g.poly(5), b = g.poly(5), c = g.poly(5);
        auto jac = poisson_bracket(a, poisson_bracket(b, c)) + poisson_bracket(b, poisson_bracket(c, a)) +
                   poisson_bracket(c, poisson_bracket(a, b));
        CHECK(jac.empty());
        CHECK((poisson_bracket(a, b) + poisson_bracket(b, a)).empty());
        CHECK(poisson_bracket(a + 2.0 * b, c) == poisson_bracket(a, c) + 2.0 * poisson_bracket(b, c));
    }
}

TEST_CASE("degree additivity") {
    Gen g(5);
    for (int t = 0; t < 40; ++t) {
        const int df = g.uni(-2, 2), dg = g.uni(-2, 2);
        auto f = g.homogeneous(4, df), h = g.homogeneous(4, dg);
        const auto fh = poisson_bracket(f, h);
        for (const auto& [k, c] : fh.terms()) CHECK(k.degree() == df + dg);
    }
}

TEST_CASE("brackets of real Hamiltonians are real; mass-balanced terms commute with L") {
    Gen g(9);
    PolyHamiltonian L;
    for (int m = -6; m <= 6; ++m) L += PolyHamiltonian::mode_action(m);
    for (int t = 0; t < 20; ++t) {
        PolyHamiltonian f, h;
        for (int s = 0; s < 4; ++s) {
            MonomialKey k = g.key();
            cplx c(g.uni(-3, 3), g.uni(-3, 3));
            f.add(k, c);
            f.add(k.conjugate(), std::conj(c));
            MonomialKey k2 = g.key();
            h.add(k2, c);
            h.add(k2.conjugate(), std::conj(c));
        }
        CHECK(f.is_real());
        CHECK(poisson_bracket(f, h).is_real());
        PolyHamiltonian balanced;
        for (const auto& [k, c] : f.terms())
            if (k.mass() == 0) balanced.add(k, c);
        CHECK(poisson_bracket(balanced, L).empty());
    }
}

TEST_CASE("majorant norm closed cases") {
    NormParams np{0.4, 0.3, 0.1, 1.0, 0.0};
    CHECK(majorant_norm(PolyHamiltonian{}, np) == 0.0);
    auto f = PolyHamiltonian::angle({1, -2, 0, 1}, cplx(3, 4));
    CHECK(majorant_norm(f, np) == doctest::Approx(5.0 * std::exp(0.4 * 4) * 4 / (0.09)).epsilon(1e-14));
    CHECK_THROWS_AS(majorant_norm(f, NormParams{0.4, 1.5, 0.1, 1.0, 0.0}), InvalidInput);
}

TEST_CASE("majorant norm of action polynomials against a grid search on the boundary") {
    NormParams np{0.5, 0.4, 0.1, 1.0, 0.0};
    const double R = np.r * np.r;
    auto grid_max = [&](auto field) {
        double best = 0;
        const int n = 40;
        for (int a = 0; a <= n; ++a)
            for (int b = 0; a + b <= n; ++b)
                for (int c = 0; a + b + c <= n; ++c) {
                    std::array<double, 4> y{R * a / n, R * b / n, R * c / n, R * (n - a - b - c) / n};
                    best = std::max(best, field(y));
                }
        return best;
    };
    // y1^2: phi-field (2 y1, 0, 0, 0)
    auto f1 = PolyHamiltonian::monomial(mk({0, 0, 0, 0}, {2, 0, 0, 0}), 1.0);
    CHECK(majorant_norm(f1, np) == doctest::Approx(grid_max([&](auto y) { return 2 * y[0] / np.s; })));
    // y1*y2: phi-field (y2, y1, 0, 0)
    auto f2 = PolyHamiltonian::monomial(mk({0, 0, 0, 0}, {1, 1, 0, 0}), 1.0);
    CHECK(majorant_norm(f2, np) ==
          doctest::Approx(grid_max([&](auto y) { return std::max(y[0], y[1]) / np.s; })));
    // y1*y2^2: phi-field (y2^2, 2 y1 y2, 0, 0); bound is the max of separate sups
    auto f3 = PolyHamiltonian::monomial(mk({0, 0, 0, 0}, {1, 2, 0, 0}), 1.0);
    const double g1 = grid_max([&](auto y) { return y[1] * y[1]; });
    const double g2 = grid_max([&](auto y) { return 2 * y[0] * y[1]; });
    CHECK(majorant_norm(f3, np) == doctest::Approx(std::max(g1, g2) / np.s).epsilon(1e-3));
}

TEST_CASE("z supremum matches Lagrange allocation") {
    NormParams np{0.5, 0.2, 0.3, 1.0, 0.0};
    // f = z3^2 z5: zbar-field component at 3 is 2 z3 z5, at 5 is z3^2.
    auto f = PolyHamiltonian::monomial(mk({0, 0, 0, 0}, {0, 0, 0, 0}, {{3, 2}, {5, 1}}), 1.0);
    auto w = [&](int k) { return mode_weight(k, np); };
    // direct maximization of each component over the weighted ball (1-d search)
    double best3 = 0, best5 = 0;
    for (int i = 0; i <= 20000; ++i) {
        const double t = i / 20000.0;  // share of r^2 on mode 3
        const double x3 = std::sqrt(t) * np.r / w(3), x5 = std::sqrt(1 - t) * np.r / w(5);
        best3 = std::max(best3, 2 * x3 * x5);
        best5 = std::max(best5, x3 * x3);
    }
    const double expect = std::sqrt(std::pow(w(3) * best3, 2) + std::pow(w(5) * best5, 2)) / np.r;
    CHECK(majorant_norm(f, np) == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("projections") {
    auto y1 = PolyHamiltonian::action(1);
    auto f = y1 + PolyHamiltonian::monomial(mk({1, 0, 0, 0}, {0, 1, 0, 0}), 1.0);
    CHECK(project(f, Projection::ker()) == y1);
    auto g = PolyHamiltonian::mode_action(3) + PolyHamiltonian::monomial(mk({0, 0, 0, 0}, {0, 0, 0, 0}, {{3, 1}}, {{5, 1}}), 1.0);
    CHECK(project(g, Projection::ker()) == PolyHamiltonian::mode_action(3));

    Gen gen(21);
    NormParams np{0.5, 0.3, 0.1, 1.0, 0.0};
    const Projection all[] = {Projection::degree_eq(0), Projection::degree_le(0), Projection::degree_gt(0),
                              Projection::fourier_le(2), Projection::fourier_gt(2), Projection::ker(),
                              Projection::rg()};
    for (int t = 0; t < 30; ++t) {
        auto p = gen.poly(8) + PolyHamiltonian::action(2, 2.0) + PolyHamiltonian::mode_action(-4, 1.0);
        CHECK(project(p, Projection::fourier_le(2)) + project(p, Projection::fourier_gt(2)) == p);
        CHECK(project(p, Projection::degree_le(0)) + project(p, Projection::degree_gt(0)) == p);
        for (auto pr : all) {
            auto q = project(p, pr);
            CHECK(project(q, pr) == q);
            CHECK(majorant_norm(q, np) <= majorant_norm(p, np) * (1 + 1e-15));
        }
        CHECK(project(project(p, Projection::rg()), Projection::ker()).empty());
    }
}

TEST_CASE("smoothing inequality on samples") {
    Gen gen(33);
    NormParams np{0.3, 0.3, 0.1, 1.0, 0.0};
    NormParams wide = np;
    wide.s = 0.5;
    for (int t = 0; t < 30; ++t) {
        auto p = gen.poly(10);
        for (int N = 1; N <= 6; ++N) {
            const double lhs = majorant_norm(project(p, Projection::fourier_gt(N)), np);
            CHECK(lhs <= std::pow(N, -(wide.s - np.s)) * majorant_norm(p, wide) * (1 + 1e-14));
            CHECK(lhs <= std::exp(-(wide.s - np.s) * (N + 1)) * majorant_norm(p, wide) * (1 + 1e-12));
        }
    }
}

TEST_CASE("lie transform") {
    Gen gen(41);
    auto H = gen.poly(6);
    CHECK(lie_transform(PolyHamiltonian{}, H, 3) == H);

    // N = w.y + sum Omega |z|^2, P one rg monomial, F = P / (i * divisor)
    const std::array<double, 4> w{0.3, 1.1, 1.7, 4.2};
    PolyHamiltonian N;
    for (int h = 0; h < 4; ++h) N += PolyHamiltonian::action(h, w[h]);
    N += PolyHamiltonian::mode_action(3, 9.5) + PolyHamiltonian::mode_action(-4, 16.25);
    MonomialKey pk = mk({1, -1, 0, 2}, {0, 0, 0, 0}, {{3, 1}}, {{-4, 1}});
    const cplx c(0.01, -0.02);
    const double div = w[0] - w[1] + 2 * w[3] + (16.25 - 9.5);
    auto P = PolyHamiltonian::monomial(pk, c);
    auto F = PolyHamiltonian::monomial(pk, c / (I * div));
    auto NF = poisson_bracket(N, F);
    CHECK(std::abs(NF.coeff(pk) - c) < 1e-15);
    CHECK(NF.size() == 1);
    auto H1 = lie_transform(F, N + P, 1);
    CHECK(std::abs(H1.coeff(pk)) < 1e-15);

    // order-2 degree bookkeeping: l-th iterate has degree dF*l + dH
    for (int t = 0; t < 10; ++t) {
        const int dF = gen.uni(1, 2), dH = gen.uni(-2, 1);
        auto f = gen.homogeneous(3, dF), h = gen.homogeneous(3, dH);
        auto t1 = poisson_bracket(f, h);
        auto t2 = poisson_bracket(f, t1);
        for (const auto& [k, cc] : t1.terms()) CHECK(k.degree() == dF + dH);
        for (const auto& [k, cc] : t2.terms()) CHECK(k.degree() == 2 * dF + dH);
        auto full = lie_transform(f, h, 2);
        CHECK((full - h - t1 - 0.5 * t2).cleaned(1e-12).empty());
    }
}

TEST_CASE("caps truncate lie iterates") {
    Gen gen(43);
    auto f = gen.homogeneous(3, 1), h = gen.homogeneous(3, 0);
    Caps caps;
    caps.max_degree = 1;
    auto out = lie_transform(f, h, 3, caps);
    for (const auto& [k, c] : out.terms()) CHECK(k.degree() <= 1);
}

TEST_CASE("text round trip is bit exact") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    Gen gen(77);
    PolyHamiltonian p;
    for (int t = 0; t < 50; ++t) p.add(gen.key(), cplx(u(rng) * 1e-7, u(rng)));
    p.add(MonomialKey{}, cplx(1.0 / 3.0, -std::nextafter(0.1, 1.0)));
    auto back = from_text(to_text(p));
    CHECK(back == p);
    CHECK_THROWS_AS(from_text("0,0,0 0,0,0,0 - - 1 0\n"), FormatError);
    CHECK_THROWS_AS(from_text("0,0,0,0 0,0,0,0 3:x - 1 0\n"), FormatError);
}

TEST_CASE("weighted norm with Lipschitz part") {
    NormParams np{0.5, 0.3, 0.1, 1.0, 0.0};
    ParametricPoly f;
    f.xi = {{0, 0, 0, 0}, {0.1, 0, 0, 0}};
    f.samples = {PolyHamiltonian::action(0, 1.0), PolyHamiltonian::action(0, 1.2)};
    const double sup = majorant_norm(f.samples[1], np);
    CHECK(weighted_norm(f, np) == doctest::Approx(sup));
    np.gamma = 0.5;
    CHECK(weighted_norm(f, np) ==
          doctest::Approx(sup + 0.5 * majorant_norm(PolyHamiltonian::action(0, 0.2), np) / 0.1));
}

TEST_CASE("property suite timing (200 cases)") {
    auto t0 = std::chrono::steady_clock::now();
    Gen g(1234);
    int failures = 0;
    for (int t = 0; t < 200; ++t) {
        auto a = g.poly(5), b = g.poly(5), c = g.poly(5);
        auto jac = poisson_bracket(a, poisson_bracket(b, c)) + poisson_bracket(b, poisson_bracket(c, a)) +
                   poisson_bracket(c, poisson_bracket(a, b));
        failures += jac.empty() ? 0 : 1;
    }
    CHECK(failures == 0);
    CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 30.0);
}

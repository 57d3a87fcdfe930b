#include <cmath>
#include <sstream>

#include "beatnls/errors.hpp"
#include "beatnls/galerkin.hpp"
#include "beatnls/ode.hpp"
#include "doctest.h"

using namespace beat;

namespace {

ParameterPoint near_separatrix(double frac = 0.9) {
    ParameterPoint xi;
    xi.K = kKStar;
    xi.E = frac * action_at_separatrix(xi.K);
    return xi;
}

double rel_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double d = 0, n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += std::norm(a[i] - b[i]);
        n += std::norm(b[i]);
    }
    return std::sqrt(d / n);
}

// reduced orbit p(tau) from (p_hi, 0)
double reduced_p(const ParameterPoint& xi, double tau) {
    const auto aa = action_angle_data(xi);
    Eigen::Vector2d y(aa.p_hi, 0.0);
    if (tau == 0) return y[0];
    auto rhs = [&](double, const Eigen::Vector2d& z) -> Eigen::Vector2d {
        const auto v = reduced_vector_field(xi.K, z[0], z[1]);
        return {v.p, v.q};
    };
    auto nrm = [](const Eigen::Vector2d& e, const Eigen::Vector2d& a, const Eigen::Vector2d& b, double rtol, double atol) {
        return (e.array().abs() / (atol + rtol * a.array().abs().max(b.array().abs()))).maxCoeff();
    };
    return dopri5(rhs, 0.0, tau, y, nrm)[0];
}

}  // namespace

TEST_CASE("initial data from the reduced orbit") {
    const double eps = 1e-3, se = std::sqrt(eps);
    ParameterPoint xi0;
    xi0.K = kKStar;
    const auto s0 = initial_data(xi0, eps, 16, 0.0);
    CHECK(std::norm(s0.at(2)) == doctest::Approx(se).epsilon(1e-12));
    CHECK(s0.f(2) == doctest::Approx(1.0).epsilon(1e-12));

    for (double phi : {0.0, 1.0, 2.5, 4.0}) {
        const auto s = initial_data(near_separatrix(), eps, 16, phi);
        const double a1 = std::norm(s.at(1)), am1 = std::norm(s.at(-1)), a2 = std::norm(s.at(2)),
                     am2 = std::norm(s.at(-2));
        CHECK(std::abs(a1 + 2 * a2 - se * kKStar[0]) < 1e-14);
        CHECK(std::abs(am1 - 2 * a2 - se * kKStar[1]) < 1e-14);
        CHECK(std::abs(am2 + a2 - se * kKStar[2]) < 1e-14);
        CHECK(s.mass() == doctest::Approx(se * (kKStar[0] + kKStar[1] + kKStar[2])).epsilon(1e-13));
        for (int j = -16; j <= 16; ++j)
            if (std::abs(j) != 1 && std::abs(j) != 2) CHECK(s.at(j) == cplx{});
    }
    // phi0 = 0 starts at the top of the orbit
    const auto aa = action_angle_data(near_separatrix());
    CHECK(initial_data(near_separatrix(), eps, 16, 0.0).f(2) == doctest::Approx(aa.p_hi).epsilon(1e-12));
    CHECK(initial_data(near_separatrix(), eps, 16, M_PI).f(2) == doctest::Approx(aa.p_lo).epsilon(1e-6));

    CHECK_THROWS_AS(initial_data(xi0, 0.0, 16), InvalidInput);
    CHECK_THROWS_AS(initial_data(xi0, eps, 1), InvalidInput);
}

TEST_CASE("tiny amplitudes follow the linear flow") {
    GalerkinState s;
    s.J = 6;
    s.eps = 1e-3;
    s.u.assign(13, cplx{});
    for (int j = -6; j <= 6; ++j) s.at(j) = 1e-9 * std::polar(1.0 + 0.1 * j, 0.3 * j);
    IntegrateOptions o;
    o.dt = 0.01;
    o.T = 3.0;
    o.stride = 50;
    for (auto sc : {Scheme::SplitStep, Scheme::SymplecticImplicit}) {
        o.scheme = sc;
        const auto tr = integrate(s, o);
        const auto& last = tr.samples.back();
        double err = 0;
        for (int j = -6; j <= 6; ++j) {
            const double w = double(j * j);
            // the midpoint rule rotates by the Cayley factor per step
            const cplx step = sc == Scheme::SplitStep ? std::polar(1.0, -w * o.dt) : cplx(1, -w * o.dt / 2) / cplx(1, w * o.dt / 2);
            const cplx exact = s.at(j) * std::pow(step, static_cast<int>(tr.steps));
            err = std::max(err, std::abs(last.u[j + 6] - exact) / 1e-9);
        }
        CHECK(err < 1e-11);
    }
}

TEST_CASE("mass and momentum conservation over long runs") {
    const auto s = initial_data(near_separatrix(), 1e-3, 16, 0.7);
    IntegrateOptions o;
    o.dt = 0.05;
    o.T = 1000.0;
    o.stride = 500;
    const auto tr = integrate(s, o);
    CHECK(tr.L_drift < 1e-8);
    CHECK(tr.M_drift < 1e-8);
    CHECK(tr.H_drift < 1e-2);
    CHECK(tr.samples.size() == 41);
    CHECK(tr.samples.back().t == doctest::Approx(1000.0));
}

TEST_CASE("step halving") {
    const auto s = initial_data(near_separatrix(), 1e-3, 16, 0.0);
    IntegrateOptions o;
    o.stride = 1 << 30;
    auto endpoint = [&](double dt, double T) {
        o.dt = dt;
        o.T = T;
        return integrate(s, o).samples.back().u;
    };
    // defaults dt = 1e-3, T = 1
    CHECK(rel_diff(endpoint(1e-3, 1.0), endpoint(5e-4, 1.0)) < 1e-6);
    // second order
    const auto a = endpoint(0.02, 10.0), b = endpoint(0.01, 10.0), c = endpoint(0.005, 10.0);
    const double order = std::log2(rel_diff(a, c) / rel_diff(b, c));
    CHECK(order > 1.5);
}

TEST_CASE("gauge and translation invariance of the mode energies") {
    const auto s = initial_data(near_separatrix(), 1e-3, 16, 0.4);
    IntegrateOptions o;
    o.dt = 0.02;
    o.T = 40.0;
    o.stride = 100;
    const auto base = integrate(s, o);
    const auto g = integrate(gauged(s, 1.234), o);
    const auto t = integrate(translated(s, 1), o);
    REQUIRE(g.samples.size() == base.samples.size());
    REQUIRE(t.samples.size() == base.samples.size());
    double dg = 0, dt = 0;
    for (std::size_t i = 0; i < base.samples.size(); ++i)
        for (int j : {-2, -1, 1, 2}) {
            dg = std::max(dg, std::abs(g.f(i, j) - base.f(i, j)));
            dt = std::max(dt, std::abs(t.f(i, j - 1) - base.f(i, j)));
        }
    CHECK(dg < 1e-12);
    // the shifted window loses one edge mode, which carries amplitude ~1e-6 here
    CHECK(dt < 1e-8);
    CHECK_THROWS_AS(integrate(s, IntegrateOptions{-1.0}), InvalidInput);
}

TEST_CASE("small eps beating shadows the reduced pendulum") {
    // the shadowing error scales like eps: 0.29 at 1e-4, 0.028 at 1e-5
    const double eps = 1e-5;
    const auto xi = near_separatrix();
    const auto aa = action_angle_data(xi);
    const auto s = initial_data(xi, eps, 16, 0.0);
    IntegrateOptions o;
    o.dt = 0.05;
    o.T = 1.2 * aa.period / eps;
    o.stride = 40;
    const auto tr = integrate(s, o);
    const auto r = diagnostics(tr);
    CHECK(r.f2_low);
    CHECK(r.f2_high);
    CHECK(r.mirrored);
    CHECK(r.beating());
    for (double d : r.combo_dev) CHECK(d < 2e-3);
    double dev = 0;
    for (std::size_t i = 0; i < tr.samples.size(); i += 10)
        dev = std::max(dev, std::abs(tr.f(i, 2) - reduced_p(xi, eps * tr.samples[i].t)));
    CHECK(dev < 0.05);

    std::ostringstream os;
    write_csv(os, tr);
    const std::string csv = os.str();
    CHECK(csv.rfind("t,re_u-2,im_u-2,re_u-1,im_u-1,re_u1,im_u1,re_u2,im_u2,f-2,f-1,f1,f2,L,M,H\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(tr.samples.size()) + 1);
    CHECK(r.to_json().find("\"beating\": true") != std::string::npos);
}

TEST_CASE("large step is rejected") {
    GalerkinState s;
    s.J = 4;
    s.eps = 1.0;
    s.u.assign(9, cplx{});
    s.at(1) = 3.0;
    s.at(-2) = 2.0;
    IntegrateOptions o;
    o.dt = 0.5;
    o.T = 5.0;
    CHECK_THROWS_AS(integrate(s, o), ConvergenceError);
}

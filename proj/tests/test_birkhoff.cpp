#include <chrono>
#include <map>

#include "beatnls/birkhoff.hpp"
#include "beatnls/errors.hpp"
#include "doctest.h"

using namespace beat;

namespace {

MonomialKey mono(std::initializer_list<std::pair<int, int>> a, std::initializer_list<std::pair<int, int>> b) {
    MonomialKey k;
    for (auto [m, e] : a) k.set_alpha(m, k.alpha_at(m) + e);
    for (auto [m, e] : b) k.set_beta(m, k.beta_at(m) + e);
    return k;
}

PolyHamiltonian mass(int B) {
    PolyHamiltonian L;
    for (int j = -B; j <= B; ++j) L += PolyHamiltonian::mode_action(j);
    return L;
}

PolyHamiltonian momentum(int B) {
    PolyHamiltonian M;
    for (int j = -B; j <= B; ++j) M += PolyHamiltonian::mode_action(j, static_cast<double>(j));
    return M;
}

}  // namespace

TEST_CASE("H6 equals the ordered sextuple sum") {
    const int B = 2;
    auto H = TruncatedNlsHamiltonian::build(B, 1e-3);
    PolyHamiltonian oracle;
    std::array<int, 6> j{};
    const int n = 2 * B + 1;
    for (int code = 0; code < n * n * n * n * n * n; ++code) {
        int c = code;
        for (auto& v : j) {
            v = c % n - B;
            c /= n;
        }
        if (j[0] + j[1] + j[2] != j[3] + j[4] + j[5]) continue;
        MonomialKey k;
        for (int i = 0; i < 3; ++i) k.set_alpha(j[i], k.alpha_at(j[i]) + 1);
        for (int i = 3; i < 6; ++i) k.set_beta(j[i], k.beta_at(j[i]) + 1);
        oracle.add(k, 1.0);
    }
    CHECK(H.H6 == oracle);
    CHECK(H.H6.is_real());
    CHECK(poisson_bracket(H.H6, mass(B)).empty());
    CHECK(poisson_bracket(H.H6, momentum(B)).empty());
}

TEST_CASE("generating function support and divisors") {
    auto H = TruncatedNlsHamiltonian::build(3, 1e-3);
    auto F = build_generating_function(H);
    CHECK(F.coeff(mono({{1, 2}, {-2, 1}}, {{-1, 2}, {2, 1}})) == cplx{});
    CHECK(F.coeff(mono({{1, 3}}, {{1, 3}})) == cplx{});
    CHECK(birkhoff_divisor(mono({{2, 1}, {1, 1}, {0, 1}}, {{1, 3}})) == 2);
    const MonomialKey k = mono({{2, 1}, {1, 1}, {0, 1}}, {{1, 3}});
    CHECK(F.coeff(k) == cplx(0.0, 1e-3 * 6.0 * 1.0 / 2.0));
    CHECK(F.is_real(1e-18));

    // {F, H2} cancels the non-resonant part of eps*H6
    auto FH2 = poisson_bracket(F, H.H2);
    PolyHamiltonian nonres;
    for (const auto& [kk, c] : H.H6.terms())
        if (birkhoff_divisor(kk) != 0) nonres.add(kk, c);
    CHECK((FH2 + H.eps * nonres).cleaned(1e-15).empty());
}

TEST_CASE("normal form step at mode cut 8") {
    auto t0 = std::chrono::steady_clock::now();
    auto H = TruncatedNlsHamiltonian::build(8, 1e-3);
    auto R = normal_form_step(H);
    for (const auto& [k, c] : R.resonant_sextic.terms()) CHECK(is_resonant(to_sextuple(k)));
    CHECK(R.HBirk.coeff(mono({{1, 2}, {-2, 1}}, {{-1, 2}, {2, 1}})) == cplx(9.0 * 1e-3, 0.0));

    CHECK(poisson_bracket(R.resonant_sextic, H.H2).empty());
    CHECK(poisson_bracket(R.resonant_sextic, mass(8)).empty());
    CHECK(poisson_bracket(R.resonant_sextic, momentum(8)).empty());
    CHECK(poisson_bracket(R.HBirk, H.H2).max_abs_coeff() < 1e-15);

    const auto S = TangentialSet::paper_default();
    auto h60 = extract_restricted(R, S, 0, 8);
    auto h61 = extract_restricted(R, S, 1, 8);
    auto h62 = extract_restricted(R, S, 2, 8);
    CHECK(h61.part.empty());
    for (const auto* part : {&h60, &h62})
        for (const auto& c : part->checks) CHECK_MESSAGE(c.pass, c.name);
    CHECK(h62.part.coeff(mono({{-2, 2}, {4, 1}}, {{2, 2}, {-4, 1}})) == cplx(9.0, 0.0));

    // restricted Hamiltonian commutes with the three combinations
    auto I = [](int j) { return PolyHamiltonian::mode_action(j); };
    const PolyHamiltonian combos[] = {I(1) + 2.0 * I(2), I(-1) - 2.0 * I(2), I(-2) + I(2)};
    for (const auto& c : combos) CHECK(poisson_bracket(h60.part, c).empty());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 10.0);
}

TEST_CASE("mismatched closed form is reported") {
    auto H = TruncatedNlsHamiltonian::build(4, 1e-3);
    auto R = normal_form_step(H);
    R.resonant_sextic.add(mono({{1, 2}, {-2, 1}}, {{-1, 2}, {2, 1}}), 1.0);
    CHECK_THROWS_AS(extract_restricted(R, TangentialSet::paper_default(), 0, 4), VerificationError);
    CHECK_THROWS_AS(extract_restricted(R, TangentialSet{1, 2}, 0, 4), InvalidInput);
}

TEST_CASE("remainder degree and closed expression") {
    auto H = TruncatedNlsHamiltonian::build(3, 1e-3);
    BirkhoffOptions opt;
    opt.with_remainder = true;
    opt.remainder_mode_cut = 3;
    auto R = normal_form_step(H, opt);
    REQUIRE_FALSE(R.remainder.empty());
    int mindeg = 100;
    for (const auto& [k, c] : R.remainder.terms()) mindeg = std::min(mindeg, k.poly_degree());
    CHECK(mindeg == 10);

    // eps^2 part of e^{ad F} H is {F, eps H6_res + eps/2 H6_nonres}
    auto F = build_generating_function(H);
    PolyHamiltonian res, nonres;
    for (const auto& [k, c] : H.H6.terms()) (birkhoff_divisor(k) == 0 ? res : nonres).add(k, c);
    auto oracle = poisson_bracket(F, H.eps * res + (0.5 * H.eps) * nonres);
    CHECK((R.remainder - oracle).max_abs_coeff() < 1e-12 * oracle.max_abs_coeff());
    CHECK(R.remainder.is_real(1e-15));
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(TruncatedNlsHamiltonian::build(2, 0.0), InvalidInput);
    auto H = TruncatedNlsHamiltonian::build(2, 0.5);
    CHECK_THROWS_AS(normal_form_step(H), InvalidInput);
}

#include "beatnls/birkhoff.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "beatnls/errors.hpp"

namespace beat {

namespace {

constexpr cplx I{0.0, 1.0};

long factorial(int n) {
    long f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

PolyHamiltonian power_sum(const std::vector<int>& modes, int power) {
    PolyHamiltonian p;
    for (int j : modes) {
        MonomialKey k;
        k.set_alpha(j, power);
        k.set_beta(j, power);
        p.add(k, 1.0);
    }
    return p;
}

MonomialKey mono(std::initializer_list<std::pair<int, int>> a, std::initializer_list<std::pair<int, int>> b) {
    MonomialKey k;
    for (auto [m, e] : a) k.set_alpha(m, k.alpha_at(m) + e);
    for (auto [m, e] : b) k.set_beta(m, k.beta_at(m) + e);
    return k;
}

void add_with_conjugate(PolyHamiltonian& p, const MonomialKey& k, double c) {
    p.add(k, c);
    p.add(k.conjugate(), c);
}

int normal_exponents(const MonomialKey& k, const TangentialSet& S) {
    int n = 0;
    for (int i = 0; i < kModeSlots; ++i) {
        if (S.contains(i - kModeWindow)) continue;
        n += k.alpha[i] + k.beta[i];
    }
    return n;
}

double real_coeff(const PolyHamiltonian& p, const MonomialKey& k) { return p.coeff(k).real(); }

}  // namespace

long multinomial3(const MonomialKey& k, bool creation) {
    const auto& e = creation ? k.alpha : k.beta;
    long c = factorial(3);
    int tot = 0;
    for (auto v : e) {
        c /= factorial(v);
        tot += v;
    }
    if (tot != 3) throw InvalidInput("multinomial3: exponent total must be 3");
    return c;
}

long birkhoff_divisor(const MonomialKey& k) {
    long d = 0;
    for (int i = 0; i < kModeSlots; ++i) {
        const long m = i - kModeWindow;
        d += (k.alpha[i] - k.beta[i]) * m * m;
    }
    return d;
}

Sextuple to_sextuple(const MonomialKey& k) {
    if (k.alpha_degree() != 3 || k.beta_degree() != 3) throw InvalidInput("to_sextuple: not a (3,3) monomial");
    std::array<int, 6> j{};
    int a = 0, b = 3;
    for (int i = 0; i < kModeSlots; ++i) {
        for (int e = 0; e < k.alpha[i]; ++e) j[a++] = i - kModeWindow;
        for (int e = 0; e < k.beta[i]; ++e) j[b++] = i - kModeWindow;
    }
    return Sextuple(j);
}

TruncatedNlsHamiltonian TruncatedNlsHamiltonian::build(int mode_cut, double eps) {
    if (mode_cut < 0 || mode_cut > kModeWindow) throw InvalidInput("mode cut outside supported window");
    if (!(eps > 0)) throw InvalidInput("eps must be positive");
    TruncatedNlsHamiltonian H;
    H.mode_cut = mode_cut;
    H.eps = eps;
    for (int j = -mode_cut; j <= mode_cut; ++j) H.H2.add(mono({{j, 1}}, {{j, 1}}), static_cast<double>(j) * j);

    // Sorted triples grouped by momentum; the ordered sextuple sum equals
    // sum over multi-index pairs of C(3,alpha) C(3,beta) u^alpha ubar^beta.
    std::map<int, std::vector<MonomialKey>> by_momentum;
    for (int a = -mode_cut; a <= mode_cut; ++a)
        for (int b = a; b <= mode_cut; ++b)
            for (int c = b; c <= mode_cut; ++c) {
                MonomialKey k;
                k.set_alpha(a, k.alpha_at(a) + 1);
                k.set_alpha(b, k.alpha_at(b) + 1);
                k.set_alpha(c, k.alpha_at(c) + 1);
                by_momentum[a + b + c].push_back(k);
            }
    for (const auto& [mom, keys] : by_momentum) {
        for (const auto& ka : keys) {
            const long ca = multinomial3(ka, true);
            for (const auto& kb : keys) {
                MonomialKey k = ka;
                k.beta = kb.alpha;
                H.H6.add(k, static_cast<double>(ca * multinomial3(kb, true)));
            }
        }
    }
    return H;
}

PolyHamiltonian build_generating_function(const TruncatedNlsHamiltonian& H) {
    // {H2, m} = -i D m, so F = i eps sum c m / D gives {F, H2} = -eps H6^nonres.
    PolyHamiltonian F;
    for (const auto& [k, c] : H.H6.terms()) {
        const long d = birkhoff_divisor(k);
        if (d == 0) continue;
        F.add(k, I * H.eps * c / static_cast<double>(d));
    }
    return F;
}

BirkhoffResult normal_form_step(const TruncatedNlsHamiltonian& H, const BirkhoffOptions& opt) {
    if (!(H.eps > 0) || H.eps >= opt.max_eps) throw InvalidInput("eps outside (0, max_eps)");
    for (const auto* part : {&H.H2, &H.H6})
        for (const auto& [k, c] : part->terms())
            if (!opt.caps.admits(k)) throw InvalidInput("normal_form_step: input term exceeds caps");

    BirkhoffResult out;
    out.eps = H.eps;
    for (const auto& [k, c] : H.H6.terms())
        if (birkhoff_divisor(k) == 0) out.resonant_sextic.add(k, c);
    out.HBirk = H.H2 + H.eps * out.resonant_sextic;

    if (opt.with_remainder) {
        const int b = std::min(opt.remainder_mode_cut, H.mode_cut);
        out.remainder_mode_cut = b;
        auto small = TruncatedNlsHamiltonian::build(b, H.eps);
        auto F = build_generating_function(small);
        PolyHamiltonian birk_small = small.H2;
        for (const auto& [k, c] : small.H6.terms())
            if (birkhoff_divisor(k) == 0) birk_small.add(k, H.eps * c);
        auto transformed = lie_transform(F, small.full(), 2, opt.caps);
        auto diff = transformed - birk_small;
        // Orders eps^0 and eps^1 cancel up to rounding; keep degree >= 10.
        const double scale = small.full().max_abs_coeff();
        for (const auto& [k, c] : diff.terms()) {
            if (k.poly_degree() >= 10) {
                out.remainder.add(k, c);
            } else if (std::abs(c) > 1e-13 * scale) {
                throw VerificationError("Birkhoff step left a low-degree term of size " + std::to_string(std::abs(c)));
            }
        }
    }
    return out;
}

PolyHamiltonian closed_form_h60() {
    const std::vector<int> S{-2, -1, 1, 2};
    auto p1 = power_sum(S, 1), p2 = power_sum(S, 2), p3 = power_sum(S, 3);
    PolyHamiltonian h = 6.0 * product(product(p1, p1), p1) - 9.0 * product(p1, p2) + 4.0 * p3;
    add_with_conjugate(h, mono({{1, 2}, {-2, 1}}, {{-1, 2}, {2, 1}}), 9.0);
    return h;
}

PolyHamiltonian closed_form_h62(int mode_cut) {
    const std::vector<int> S{-2, -1, 1, 2};
    std::vector<int> normal;
    for (int j = -mode_cut; j <= mode_cut; ++j)
        if (std::find(S.begin(), S.end(), j) == S.end()) normal.push_back(j);
    auto p1 = power_sum(S, 1), p2 = power_sum(S, 2);
    PolyHamiltonian h = product(18.0 * product(p1, p1) - 9.0 * p2, power_sum(normal, 1));
    if (mode_cut >= 3) add_with_conjugate(h, mono({{-1, 1}, {-2, 1}, {3, 1}}, {{1, 1}, {2, 1}, {-3, 1}}), 36.0);
    if (mode_cut >= 4) add_with_conjugate(h, mono({{-2, 2}, {4, 1}}, {{2, 2}, {-4, 1}}), 9.0);
    return h;
}

RestrictedPart extract_restricted(const BirkhoffResult& birk, const TangentialSet& S, int normal_degree,
                                  int mode_cut) {
    if (S != TangentialSet::paper_default()) throw InvalidInput("extract_restricted: closed forms need S={-2,-1,1,2}");
    if (normal_degree < 0 || normal_degree > 2) throw InvalidInput("normal degree must be 0, 1 or 2");
    RestrictedPart out;
    for (const auto& [k, c] : birk.resonant_sextic.terms())
        if (normal_exponents(k, S) == normal_degree) out.part.add(k, c);

    auto check = [&](std::string name, double expected, double measured) {
        out.checks.push_back({std::move(name), expected, measured, expected == measured});
    };

    if (normal_degree == 1) {
        check("H61 term count", 0, static_cast<double>(out.part.size()));
    } else if (normal_degree == 0) {
        const auto& P = out.part;
        // Symmetric cubic in I_j = |u_j|^2: x p1^3 + y p1 p2 + z p3.
        const double c111 = real_coeff(P, mono({{-2, 1}, {-1, 1}, {1, 1}}, {{-2, 1}, {-1, 1}, {1, 1}}));
        const double c21 = real_coeff(P, mono({{-2, 2}, {1, 1}}, {{-2, 2}, {1, 1}}));
        const double c3 = real_coeff(P, mono({{2, 3}}, {{2, 3}}));
        const double x = c111 / 6.0, y = c21 - 3.0 * x, z = c3 - x - y;
        check("H60ap (sum I)^3", 6, x);
        check("H60ap (sum I)(sum I^2)", -9, y);
        check("H60ap sum I^3", 4, z);
        check("H60eff u1^2 u-2 ubar-1^2 ubar2", 9, real_coeff(P, mono({{1, 2}, {-2, 1}}, {{-1, 2}, {2, 1}})));
        const auto diff = P - closed_form_h60();
        check("H60 residual terms", 0, static_cast<double>(diff.size()));
    } else {
        const auto& P = out.part;
        const int zn = mode_cut >= 3 ? 3 : -1;
        double x = 0, y = 0;
        if (zn > 0) {
            const double cab = real_coeff(P, mono({{-2, 1}, {1, 1}, {zn, 1}}, {{-2, 1}, {1, 1}, {zn, 1}}));
            const double caa = real_coeff(P, mono({{1, 2}, {zn, 1}}, {{1, 2}, {zn, 1}}));
            x = cab / 2.0;
            y = caa - x;
        }
        check("H62ap (sum I)^2 |z|^2", 18, x);
        check("H62ap (sum I^2) |z|^2", -9, y);
        check("H62eff u-1 u-2 ubar1 ubar2 z3 zbar-3", 36,
              real_coeff(P, mono({{-1, 1}, {-2, 1}, {3, 1}}, {{1, 1}, {2, 1}, {-3, 1}})));
        check("H62eff u-2^2 ubar2^2 z4 zbar-4", 9, real_coeff(P, mono({{-2, 2}, {4, 1}}, {{2, 2}, {-4, 1}})));
        const auto diff = P - closed_form_h62(mode_cut);
        check("H62 residual terms", 0, static_cast<double>(diff.size()));
    }
    for (const auto& c : out.checks)
        if (!c.pass)
            throw VerificationError("closed form mismatch: " + c.name + " expected " + std::to_string(c.expected) +
                                    " got " + std::to_string(c.measured));
    return out;
}

}  // namespace beat

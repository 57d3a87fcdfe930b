#include "beatnls/melnikov.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

#include "beatnls/errors.hpp"
#include "beatnls/floquet.hpp"

namespace beat {

namespace {

using ordered_json = nlohmann::ordered_json;

int theta_slot(int j) {
    switch (j) {
        case 3: return 0;
        case -3: return 1;
        case 4: return 2;
        case -4: return 3;
        default: return 4;
    }
}

// floor(sqrt(n)) for n >= 0
long isqrt(long n) {
    long r = static_cast<long>(std::sqrt(static_cast<double>(n)));
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

bool is_square(long n) { return n >= 0 && isqrt(n) * isqrt(n) == n; }

Rational exact_sqrt(const Rational& x) {
    if (x.num() < 0 || !is_square(x.num()) || !is_square(x.den()))
        throw VerificationError("exact data: expected a perfect square, got " + x.str());
    return Rational(isqrt(x.num()), isqrt(x.den()));
}

long floor_div(long a, long b) {
    long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

long ceil_div(long a, long b) { return -floor_div(-a, b); }

Rational mod3(const Rational& v) {
    const long n = v.num() % 3;
    return Rational(n < 0 ? n + 3 : n);
}

LinearCase solve_case(std::string label, Rational rhs, Rational sum) {
    LinearCase c;
    c.label = std::move(label);
    c.rhs = rhs;
    c.sum = sum;
    c.x = (rhs - Rational(498) * sum) / Rational(426 - 498);
    c.y = sum - c.x;
    c.integer_solution = c.x.is_integer() && c.y.is_integer();
    // 426 = 3*142, 498 = 3*166 and 142 = 166 = 1 mod 3, so rhs/3 = x + y mod 3
    if (!rhs.is_integer() || rhs.num() % 3 != 0)
        c.mod3_obstruction = true;
    else
        c.mod3_obstruction = mod3(Rational(rhs.num() / 3)) != mod3(sum);
    return c;
}

}  // namespace

bool is_normal_mode(int j) { return !(j == 1 || j == -1 || j == 2 || j == -2); }

int mode_r(int j) {
    if (!is_normal_mode(j)) throw InvalidInput("mode_r: tangential mode " + std::to_string(j));
    return (j == 3 || j == -3 || j == 4 || j == -4) ? std::abs(j) : j;
}

int MelnikovIndex::l1norm() const {
    int s = 0;
    for (int x : ell) s += std::abs(x);
    return s;
}

long MelnikovIndex::integer_part() const {
    return pi2() + static_cast<long>(sigma) * h * h + static_cast<long>(sigma_prime) * k * k;
}

bool MelnikovIndex::satisfies_constraints() const {
    if (sigma < -1 || sigma > 1 || sigma_prime < -1 || sigma_prime > 1) return false;
    if (sigma != 0 && !is_normal_mode(h)) return false;
    if (sigma_prime != 0 && !is_normal_mode(k)) return false;
    const int rh = sigma ? mode_r(h) : 0, rk = sigma_prime ? mode_r(k) : 0;
    return eta() + sigma + sigma_prime == 0 && pi() + sigma * rh + sigma_prime * rk == 0;
}

bool MelnikovIndex::is_trivial() const {
    if (l1norm() != 0 || sigma + sigma_prime != 0) return false;
    return sigma == 0 || h == k;
}

bool MelnikovIndex::is_canonical() const {
    if (sigma == 0 && sigma_prime != 0) return false;
    if (sigma == 0 && h != 0) return false;
    if (sigma_prime == 0) return k == 0;
    return sigma > sigma_prime || (sigma == sigma_prime && h <= k);
}

std::string MelnikovIndex::str() const {
    std::ostringstream os;
    os << "ell=(" << ell[0] << ',' << ell[1] << ',' << ell[2] << ',' << ell[3] << ") sigma=" << sigma;
    if (sigma) os << " h=" << h;
    os << " sigma'=" << sigma_prime;
    if (sigma_prime) os << " k=" << k;
    return os.str();
}

std::vector<MelnikovIndex> admissible_indices(int ell_bound, int mode_bound) {
    if (ell_bound < 0 || mode_bound < 0 || ell_bound > 200 || mode_bound > 1000)
        throw InvalidInput("admissible_indices: bounds outside the safety limits");
    std::vector<int> modes;
    for (int j = -mode_bound; j <= mode_bound; ++j)
        if (is_normal_mode(j)) modes.push_back(j);
    std::vector<MelnikovIndex> out;
    auto emit = [&](int s, int h, int sp, int k) {
        const int a = -s - sp;
        const int b = -(s ? s * mode_r(h) : 0) - (sp ? sp * mode_r(k) : 0);
        for (int t = -ell_bound; t <= ell_bound; ++t) {
            if ((a + b + t) % 2 != 0) continue;
            MelnikovIndex idx{{0, (a + b + t) / 2, (a - b - 3 * t) / 2, t}, s, sp, h, k};
            const int used = idx.l1norm();
            if (used > ell_bound) continue;
            for (int l0 = -(ell_bound - used); l0 <= ell_bound - used; ++l0) {
                idx.ell[0] = l0;
                if (!idx.is_trivial()) out.push_back(idx);
            }
        }
    };
    emit(0, 0, 0, 0);
    for (int s : {-1, 1})
        for (int h : modes) emit(s, h, 0, 0);
    for (int s : {-1, 1})
        for (int sp : {-1, 1})
            for (int h : modes)
                for (int k : modes) {
                    MelnikovIndex probe{{}, s, sp, h, k};
                    if (probe.is_canonical()) emit(s, h, sp, k);
                }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------- exact

Rational StarData::theta(int j) const {
    switch (j) {
        case 3: return f0 + U3;
        case -3: return f0 - U3;
        case 4: return f0 + U4;
        case -4: return f0 - U4;
        default: return f0;
    }
}

StarData star_data() {
    // K* = (4,0,2), p = 1: actions (p, K1-2p, K2+2p, K3-p) and their p-slopes
    const std::array<Rational, 3> K{4, 0, 2};
    const Rational p(1);
    const std::array<Rational, 4> I{p, K[0] - Rational(2) * p, K[1] + Rational(2) * p, K[2] - p};
    const std::array<Rational, 4> dI{1, -2, 2, -1};
    const Rational S = K[0] + K[1] + K[2];
    Rational Q, dQ, ddQ, dC, ddC;
    for (int i = 0; i < 4; ++i) {
        Q += I[i] * I[i];
        dQ += Rational(2) * I[i] * dI[i];
        ddQ += Rational(2) * dI[i] * dI[i];
        dC += Rational(3) * I[i] * I[i] * dI[i];
        ddC += Rational(6) * I[i] * dI[i] * dI[i];
    }
    const Rational dA = Rational(-9) * S * dQ + Rational(4) * dC;
    const Rational ddA = Rational(-9) * S * ddQ + Rational(4) * ddC;
    // B = 18 I1 I-1 s, s = sqrt(u), u = I2 I-2
    const Rational u = I[0] * I[3];
    const Rational du = dI[0] * I[3] + I[0] * dI[3];
    const Rational ddu = Rational(2) * dI[0] * dI[3];
    const Rational s = exact_sqrt(u);
    const Rational ds = du / (Rational(2) * s);
    const Rational dds = ddu / (Rational(2) * s) - du * du / (Rational(4) * s * s * s);
    const Rational m = I[1] * I[2], dm = dI[1] * I[2] + I[1] * dI[2], ddm = Rational(2) * dI[1] * dI[2];
    const Rational B = Rational(18) * m * s;
    const Rational dB = Rational(18) * (dm * s + m * ds);
    const Rational ddB = Rational(18) * (ddm * s + Rational(2) * dm * ds + m * dds);
    if (dA + dB != Rational(0)) throw VerificationError("star_data: p = 1 is not critical");

    StarData d;
    d.lambda0_squared = -B * (ddA + ddB);
    d.lambda0_irrational = !(is_square(d.lambda0_squared.num()) && is_square(d.lambda0_squared.den()));
    // envelope: d_K alpha0 = d_K (A + B) at the fixed point
    for (int i = 0; i < 3; ++i) {
        const Rational Ii = I[i + 1];
        d.lambdaK[i] = Rational(18) * S * S - Rational(9) * Q - Rational(18) * S * Ii + Rational(12) * Ii * Ii;
    }
    d.lambdaK[0] += Rational(18) * I[2] * s;
    d.lambdaK[1] += Rational(18) * I[1] * s;
    d.lambdaK[2] += Rational(18) * I[1] * I[2] * p / (Rational(2) * s);
    d.f0 = Rational(18) * S * S - Rational(9) * Q;
    d.U3 = Rational(72) * exact_sqrt(I[0] * I[1] * I[2] * I[3]);
    d.U4 = Rational(18) * I[0] * I[3];
    // V_j = l_j (d_K1 - d_K2) H + n_j d_p H, and d_p H = 0 here
    d.V3 = Rational(3) * (d.lambdaK[0] - d.lambdaK[1]);
    d.V4 = Rational(4) * (d.lambdaK[0] - d.lambdaK[1]);
    return d;
}

StarReport verify_star_nonresonance(int brute_ell_bound, int brute_mode_bound) {
    StarReport r;
    r.data = star_data();
    const auto& d = r.data;
    const bool integer_data = d.lambdaK[0] == Rational(426) && d.lambdaK[1] == Rational(426) &&
                              d.lambdaK[2] == Rational(498) && d.V3 == Rational(0) && d.V4 == Rational(0);
    if (!integer_data) throw VerificationError("verify_star: unexpected frequency data at xi*");

    const std::array<int, 4> small{3, -3, 4, -4};
    // Case 1, sigma + sigma' = 2, |h|,|k| > 4
    r.systems.push_back(solve_case("case1 sigma+sigma'=2", -(d.f0 + d.f0), Rational(-2)));
    // Case 2, sigma + sigma' = 2, |h| = |k| in {3,4}
    std::set<std::pair<int, int>> seen;
    for (int h : small)
        for (int k : small) {
            if (std::abs(h) != std::abs(k) || h > k) continue;
            const Rational rhs = -(d.theta(h) + d.theta(k));
            r.systems.push_back(solve_case("case2 h=" + std::to_string(h) + " k=" + std::to_string(k), rhs, Rational(-2)));
        }
    // Case 2, |h| != |k|: l1+l2+l3 = -2 and l1+l2+4l3 + r^2(h) + r^2(k) = 0
    r.case2_mixed_3l3 = Rational(2) - Rational(9) - Rational(16);
    // Case 3, |h| in {3,4}, |k| > 4
    for (int h : small)
        r.systems.push_back(
            solve_case("case3 sigma+sigma'=2 h=" + std::to_string(h), -(d.theta(h) + d.f0), Rational(-2)));
    for (int h : small) {
        for (int s : {1, -1}) {
            // l1+l2 = -l3 turns lambda.l + s(Theta_h - f0) = 0 into 72 l3 = -s(Theta_h - f0)
            const Rational v = -Rational(s) * (d.theta(h) - d.f0);
            r.case3_72l3.push_back(v);
            const Rational l3 = v / Rational(72);
            if (!l3.is_integer()) continue;
            r.case3_l3.push_back(l3);
            // l1+l2+4l3 + s r^2(h) - s r^2(k) = 0 with l1+l2 = -l3
            r.case3_k_squared.push_back(Rational(h * h) + Rational(3) * l3 / Rational(s));
        }
    }
    // first Melnikov, single normal mode
    for (int h : {3, -3, 4, -4, 5}) {
        const std::string tag = h == 5 ? std::string("|h|>4") : std::to_string(h);
        r.systems.push_back(solve_case("first sigma=-1 h=" + tag, d.theta(h), Rational(1)));
        r.systems.push_back(solve_case("first sigma=+1 h=" + tag, -d.theta(h), Rational(-1)));
    }

    // brute force: lambda0 irrational forces l0 = 0, the rest is integer arithmetic
    const long l1 = d.lambdaK[0].num(), l2 = d.lambdaK[1].num(), l3 = d.lambdaK[2].num();
    for (const auto& idx : admissible_indices(brute_ell_bound, brute_mode_bound)) {
        if (idx.ell[0] != 0) continue;
        ++r.brute_checked;
        if (idx.integer_part() != 0) continue;
        Rational v = Rational(l1 * idx.ell[1] + l2 * idx.ell[2] + l3 * idx.ell[3]);
        if (idx.sigma) v += Rational(idx.sigma) * d.theta(idx.h);
        if (idx.sigma_prime) v += Rational(idx.sigma_prime) * d.theta(idx.k);
        if (v != Rational(0)) continue;
        const bool family = idx.ell[3] == 0 && idx.ell[1] == -idx.ell[2] && idx.sigma == -idx.sigma_prime &&
                            idx.sigma != 0 && std::abs(idx.h) >= 5 && idx.k == -idx.h;
        if (family)
            ++r.brute_family_zeros;
        else
            r.brute_other_zeros.push_back(idx);
    }

    bool ok = d.lambda0_irrational && !(r.case2_mixed_3l3 / Rational(3)).is_integer() && r.brute_other_zeros.empty();
    for (const auto& c : r.systems) ok = ok && !c.integer_solution && c.mod3_obstruction;
    for (const auto& v : r.case3_72l3) ok = ok && (!(v / Rational(72)).is_integer() || v.num() % 144 == 0);
    for (const auto& k2 : r.case3_k_squared) {
        const bool square = k2.is_integer() && is_square(k2.num());
        ok = ok && !(square && isqrt(k2.num()) >= 5);
    }
    r.all_pass = ok;
    return r;
}

std::string StarReport::to_json() const {
    ordered_json j;
    j["lambda0_squared"] = data.lambda0_squared.str();
    j["lambda0_irrational"] = data.lambda0_irrational;
    j["lambdaK"] = {data.lambdaK[0].str(), data.lambdaK[1].str(), data.lambdaK[2].str()};
    j["f0"] = data.f0.str();
    j["theta"] = {{"3", data.theta(3).str()},
                  {"-3", data.theta(-3).str()},
                  {"4", data.theta(4).str()},
                  {"-4", data.theta(-4).str()}};
    auto& sys = j["systems"] = ordered_json::array();
    for (const auto& c : systems)
        sys.push_back({{"label", c.label},
                       {"rhs", c.rhs.str()},
                       {"sum", c.sum.str()},
                       {"x", c.x.str()},
                       {"y", c.y.str()},
                       {"integer_solution", c.integer_solution},
                       {"mod3_obstruction", c.mod3_obstruction}});
    j["case2_mixed_3l3"] = case2_mixed_3l3.str();
    auto strs = [](const std::vector<Rational>& v) {
        std::vector<std::string> s;
        for (const auto& x : v) s.push_back(x.str());
        return s;
    };
    j["case3_72l3"] = strs(case3_72l3);
    j["case3_l3"] = strs(case3_l3);
    j["case3_k_squared"] = strs(case3_k_squared);
    j["brute_checked"] = brute_checked;
    j["brute_family_zeros"] = brute_family_zeros;
    std::vector<std::string> other;
    for (const auto& idx : brute_other_zeros) other.push_back(idx.str());
    j["brute_other_zeros"] = other;
    j["all_pass"] = all_pass;
    return j.dump(2);
}

// ---------------------------------------------------------------- spectra

double Spectra::theta(int j) const {
    switch (j) {
        case 3: return theta3p;
        case -3: return theta3m;
        case 4: return theta4p;
        case -4: return theta4m;
        default: return f0;
    }
}

Spectra compute_spectra(const ParameterPoint& xi, const SpectraOptions& opt) {
    const auto fm = frequency_map(xi, opt.freq);
    const auto setup = FloquetSetup::from_map(xi, fm);
    const auto f3 = floquet_exponents(3, setup);
    const auto f4 = floquet_exponents(4, setup);
    Spectra s;
    s.lambda = fm.lambda;
    s.f0 = fm.f0;
    s.theta3p = f3.theta_plus;
    s.theta3m = f3.theta_minus;
    s.theta4p = f4.theta_plus;
    s.theta4m = f4.theta_minus;
    return s;
}

Box4 Box4::default_domain() { return {{0.004, 3.9, -0.1, 1.9}, {0.012, 4.1, 0.1, 2.1}}; }

bool Box4::contains(const std::array<double, 4>& x) const {
    for (int i = 0; i < 4; ++i)
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
}

namespace {

std::array<double, 9> flatten(const Spectra& s) {
    return {s.lambda[0], s.lambda[1], s.lambda[2], s.lambda[3], s.theta3p, s.theta3m, s.theta4p, s.theta4m, s.f0};
}

Spectra unflatten(const std::array<double, 9>& v) {
    Spectra s;
    for (int i = 0; i < 4; ++i) s.lambda[i] = v[i];
    s.theta3p = v[4];
    s.theta3m = v[5];
    s.theta4p = v[6];
    s.theta4m = v[7];
    s.f0 = v[8];
    return s;
}

std::array<int, 4> unravel(int flat, int n) {
    std::array<int, 4> ix{};
    for (int a = 0; a < 4; ++a) {
        ix[a] = flat % n;
        flat /= n;
    }
    return ix;
}

int ravel(const std::array<int, 4>& ix, int n) { return ix[0] + n * (ix[1] + n * (ix[2] + n * ix[3])); }

}  // namespace

SpectraGrid SpectraGrid::build(const Box4& box, int n, const SpectraOptions& opt) {
    if (n < 2) throw InvalidInput("SpectraGrid: need at least 2 points per axis");
    SpectraGrid g;
    g.box = box;
    g.n = n;
    const int total = n * n * n * n;
    g.values.resize(total);
    for (int f = 0; f < total; ++f) {
        const auto ix = unravel(f, n);
        std::array<double, 4> x{};
        for (int a = 0; a < 4; ++a) x[a] = box.lo[a] + (box.hi[a] - box.lo[a]) * ix[a] / (n - 1);
        g.values[f] = compute_spectra(ParameterPoint::from_xi(x), opt);
    }
    g.compute_bounds();
    return g;
}

Spectra SpectraGrid::at(const std::array<double, 4>& xi) const {
    std::array<int, 4> base{};
    std::array<double, 4> frac{};
    for (int a = 0; a < 4; ++a) {
        const double u = (xi[a] - box.lo[a]) / (box.hi[a] - box.lo[a]) * (n - 1);
        if (u < -1e-9 || u > n - 1 + 1e-9) throw DomainError("SpectraGrid: point outside the cached box");
        base[a] = std::clamp(static_cast<int>(std::floor(u)), 0, n - 2);
        frac[a] = std::clamp(u - base[a], 0.0, 1.0);
    }
    std::array<double, 9> acc{};
    for (int corner = 0; corner < 16; ++corner) {
        double w = 1;
        std::array<int, 4> ix = base;
        for (int a = 0; a < 4; ++a) {
            const int bit = (corner >> a) & 1;
            ix[a] += bit;
            w *= bit ? frac[a] : 1 - frac[a];
        }
        if (w == 0) continue;
        const auto v = flatten(values[ravel(ix, n)]);
        for (int c = 0; c < 9; ++c) acc[c] += w * v[c];
    }
    return unflatten(acc);
}

double SpectraGrid::lambda_sup() const {
    double m = 0;
    for (const auto& s : values)
        for (double x : s.lambda) m = std::max(m, std::abs(x));
    return m;
}

double SpectraGrid::theta_sup() const {
    double m = 0;
    for (const auto& s : values)
        for (double x : {s.theta3p, s.theta3m, s.theta4p, s.theta4m, s.f0}) m = std::max(m, std::abs(x));
    return m;
}

void SpectraGrid::compute_bounds() {
    // sup norms plus max difference quotients between axis neighbours
    std::array<double, 9> sup{}, lip{};
    const int total = static_cast<int>(values.size());
    std::array<double, 4> hstep{};
    for (int a = 0; a < 4; ++a) hstep[a] = (box.hi[a] - box.lo[a]) / (n - 1);
    L0 = 0;
    for (int f = 0; f < total; ++f) {
        const auto v = flatten(values[f]);
        for (int c = 0; c < 9; ++c) sup[c] = std::max(sup[c], std::abs(v[c]));
        const auto ix = unravel(f, n);
        Eigen::Matrix4d J;
        for (int a = 0; a < 4; ++a) {
            auto nb = ix;
            int dir = 1;
            if (ix[a] + 1 < n)
                nb[a] += 1;
            else {
                nb[a] -= 1;
                dir = -1;
            }
            const auto w = flatten(values[ravel(nb, n)]);
            for (int c = 0; c < 9; ++c) lip[c] = std::max(lip[c], std::abs(w[c] - v[c]) / hstep[a]);
            for (int c = 0; c < 4; ++c) J(c, a) = dir * (w[c] - v[c]) / hstep[a];
        }
        const double inv = J.fullPivLu().isInvertible() ? J.inverse().cwiseAbs().rowwise().sum().maxCoeff() : 1e300;
        L0 = std::max(L0, inv);
    }
    double lam = 0, lam_lip = 0;
    for (int c = 0; c < 4; ++c) {
        lam = std::max(lam, sup[c]);
        lam_lip = std::max(lam_lip, lip[c]);
    }
    M0 = std::max(lam + lam_lip, sup[8] + lip[8]);
    for (int c = 4; c < 8; ++c) M0 = std::max(M0, sup[c] + lip[c]);

    // alpha0: smallest eps-free divisor over short indices on the grid
    const int lcap = std::clamp(static_cast<int>(std::ceil(4 * M0 * L0)), 1, 6);
    std::vector<MelnikovIndex> idx;
    for (const auto& i : admissible_indices(lcap, lcap + 6))
        if (i.integer_part() == 0) idx.push_back(i);
    alpha0 = 1e300;
    for (const auto& s : values)
        for (const auto& i : idx) {
            double v = 0;
            for (int a = 0; a < 4; ++a) v += s.lambda[a] * i.ell[a];
            if (i.sigma) v += i.sigma * s.theta(i.h);
            if (i.sigma_prime) v += i.sigma_prime * s.theta(i.k);
            alpha0 = std::min(alpha0, std::abs(v));
        }
}

std::string SpectraGrid::to_json() const {
    ordered_json j;
    j["format"] = "beatnls-spectra-grid";
    j["version"] = 1;
    j["n"] = n;
    j["lo"] = box.lo;
    j["hi"] = box.hi;
    auto& vals = j["values"] = ordered_json::array();
    for (const auto& s : values) vals.push_back(flatten(s));
    j["M0"] = M0;
    j["L0"] = L0;
    j["alpha0"] = alpha0;
    return j.dump();
}

SpectraGrid SpectraGrid::from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw FormatError(std::string("SpectraGrid: ") + e.what());
    }
    if (j.value("format", "") != "beatnls-spectra-grid" || j.value("version", 0) != 1)
        throw FormatError("SpectraGrid: not a spectra grid file");
    SpectraGrid g;
    g.n = j.at("n").get<int>();
    g.box.lo = j.at("lo").get<std::array<double, 4>>();
    g.box.hi = j.at("hi").get<std::array<double, 4>>();
    for (const auto& v : j.at("values")) g.values.push_back(unflatten(v.get<std::array<double, 9>>()));
    if (g.n < 2 || static_cast<int>(g.values.size()) != g.n * g.n * g.n * g.n)
        throw FormatError("SpectraGrid: value count does not match the grid size");
    g.M0 = j.at("M0").get<double>();
    g.L0 = j.at("L0").get<double>();
    g.alpha0 = j.at("alpha0").get<double>();
    return g;
}

void SpectraGrid::save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw InvalidInput("SpectraGrid: cannot write " + path);
    f << to_json() << '\n';
}

SpectraGrid SpectraGrid::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InvalidInput("SpectraGrid: cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_json(ss.str());
}

// ---------------------------------------------------------------- excision

double melnikov_divisor(const MelnikovIndex& idx, const Spectra& s, double eps) {
    const std::array<double, 4> v{0, 1, 1, 4};
    long double d = 0;
    for (int a = 0; a < 4; ++a) d += (v[a] + static_cast<long double>(eps) * s.lambda[a]) * idx.ell[a];
    if (idx.sigma) d += idx.sigma * (static_cast<long double>(idx.h) * idx.h + static_cast<long double>(eps) * s.theta(idx.h));
    if (idx.sigma_prime)
        d += idx.sigma_prime * (static_cast<long double>(idx.k) * idx.k + static_cast<long double>(eps) * s.theta(idx.k));
    return static_cast<double>(d);
}

long ExcisionParams::K(int m) const {
    if (m < 0 || m > 6) throw InvalidInput("ExcisionParams: step out of range");
    return static_cast<long>(K0) << (2 * m);
}

MelnikovIndex DivisorClass::representative(int ell0) const {
    return {{ell0, ell[0], ell[1], ell[2]}, sigma, sigma_prime, h, k};
}

ExcisionContext::ExcisionContext(const ExcisionParams& p, int steps, double lambda_sup, double theta_sup) : p_(p) {
    if (steps < 1 || steps > 4) throw InvalidInput("ExcisionContext: steps must be in 1..4");
    if (!(p.eps > 0) || !(p.tau > 0) || p.K0 < 1) throw InvalidInput("ExcisionContext: bad parameters");
    for (int m = 0; m < steps; ++m) {
        const long K = p.K(m);
        // |divisor| >= |I| - eps (|lambda| |ell| + 2 |Theta|); gamma <= 1 bounds the threshold
        const double R = p.eps * (lambda_sup * K + 2 * theta_sup) + p.eps * std::pow(double(K), -p.tau) + 1e-9;
        const long Rl = static_cast<long>(std::floor(R));
        std::map<std::tuple<int, int, int, int, std::array<std::int8_t, 5>>, DivisorClass> found;
        auto add = [&](int s, int h, int sp, int k) {
            const long a = -s - sp;
            const long b = -(s ? s * mode_r(h) : 0) - (sp ? sp * mode_r(k) : 0);
            const long Q = static_cast<long>(s) * h * h + static_cast<long>(sp) * k * k;
            // I = a + 3t + Q within [-R, R]
            const long tlo = std::max(-K, ceil_div(-Rl - a - Q, 3));
            const long thi = std::min(K, floor_div(Rl - a - Q, 3));
            for (long t = tlo; t <= thi; ++t) {
                if (((a + b + t) % 2 + 2) % 2 != 0) continue;
                const long l1 = (a + b + t) / 2, l2 = (a - b - 3 * t) / 2;
                const long used = std::abs(l1) + std::abs(l2) + std::abs(t);
                if (used > K) continue;
                DivisorClass c;
                c.I = static_cast<std::int32_t>(a + 3 * t + Q);
                c.ell = {static_cast<std::int16_t>(l1), static_cast<std::int16_t>(l2), static_cast<std::int16_t>(t)};
                if (s) c.w[theta_slot(h)] += s;
                if (sp) c.w[theta_slot(k)] += sp;
                c.budget = static_cast<std::int16_t>(K - used);
                const bool zero_w = std::all_of(c.w.begin(), c.w.end(), [](int x) { return x == 0; });
                c.nonzero_ell0 = used == 0 && c.I == 0 && zero_w;
                if (c.nonzero_ell0 && c.budget == 0) continue;
                c.sigma = static_cast<std::int8_t>(s);
                c.sigma_prime = static_cast<std::int8_t>(sp);
                c.h = static_cast<std::int16_t>(h);
                c.k = static_cast<std::int16_t>(k);
                found.emplace(std::make_tuple(c.I, c.ell[0], c.ell[1], c.ell[2], c.w), c);
            }
        };
        add(0, 0, 0, 0);
        const long single = isqrt(Rl + 1 + 3 * K) + 1;
        for (int s : {-1, 1})
            for (long h = -single; h <= single; ++h)
                if (is_normal_mode(static_cast<int>(h))) add(s, static_cast<int>(h), 0, 0);
        const long hcut = std::max<long>(Rl + 3 * K + 4, 2 * K + 2);
        for (int s : {-1, 1})
            for (int sp : {-1, 1}) {
                if (s < sp) continue;
                for (long h = -hcut; h <= hcut; ++h) {
                    if (!is_normal_mode(static_cast<int>(h))) continue;
                    for (long k = (s == sp ? h : -hcut); k <= hcut; ++k) {
                        if (!is_normal_mode(static_cast<int>(k))) continue;
                        const long Q = s * h * h + sp * k * k;
                        if (std::abs(Q) > Rl + 3 * K + 2) continue;
                        add(s, static_cast<int>(h), sp, static_cast<int>(k));
                    }
                }
            }
        std::vector<DivisorClass> list;
        list.reserve(found.size());
        for (auto& [key, c] : found) list.push_back(c);
        classes_.push_back(std::move(list));
    }
}

double ExcisionContext::min_ratio(int m, const Spectra& s, MelnikovIndex* worst) const {
    const auto& list = classes_.at(m);
    const long double eps = p_.eps;
    const long double unit = eps * std::pow(static_cast<long double>(p_.K(m)), -static_cast<long double>(p_.tau));
    const std::array<long double, 5> th{s.theta3p, s.theta3m, s.theta4p, s.theta4m, s.f0};
    const long double lam0 = s.lambda[0];
    if (lam0 == 0) throw DomainError("excision: lambda0 vanishes");
    long double best = 1e300L;
    const DivisorClass* arg = nullptr;
    long best_l0 = 0;
    for (const auto& c : list) {
        long double v = static_cast<long double>(s.lambda[1]) * c.ell[0] + static_cast<long double>(s.lambda[2]) * c.ell[1] +
                        static_cast<long double>(s.lambda[3]) * c.ell[2];
        for (int i = 0; i < 5; ++i)
            if (c.w[i]) v += c.w[i] * th[i];
        const long double base = c.I + eps * v;
        long l0 = std::lround(static_cast<double>(-base / (eps * lam0)));
        l0 = std::clamp<long>(l0, -c.budget, c.budget);
        long double D = std::abs(base + eps * lam0 * l0);
        if (c.nonzero_ell0 && l0 == 0) {
            const long double plus = std::abs(base + eps * lam0), minus = std::abs(base - eps * lam0);
            D = std::min(plus, minus);
            l0 = plus <= minus ? 1 : -1;
        }
        if (D < best) {
            best = D;
            arg = &c;
            best_l0 = l0;
        }
    }
    if (worst && arg) *worst = arg->representative(static_cast<int>(best_l0));
    return static_cast<double>(best / unit);
}

bool excision_test(const ExcisionContext& ctx, int m, const Spectra& s) {
    return ctx.min_ratio(m, s) >= ctx.params().gamma;
}

MeasureResult measure_monte_carlo(const SpectraGrid& grid, const std::vector<double>& gammas, const MeasureOptions& opt) {
    if (gammas.empty()) throw InvalidInput("measure: no gamma values");
    if (opt.samples < 1) throw InvalidInput("measure: need at least one sample");
    ExcisionParams p;
    p.eps = opt.eps;
    p.tau = opt.tau;
    p.K0 = opt.K0;
    p.gamma = *std::max_element(gammas.begin(), gammas.end());
    const ExcisionContext ctx(p, opt.steps, grid.lambda_sup(), grid.theta_sup());

    MeasureResult out;
    out.gammas = gammas;
    out.samples = opt.samples;
    for (int m = 0; m < opt.steps; ++m) out.classes_per_step.push_back(ctx.classes(m).size());
    const std::size_t G = gammas.size();
    std::vector<std::vector<long>> count(G, std::vector<long>(opt.steps, 0));

    std::mt19937_64 rng(opt.seed);
    std::array<std::uniform_real_distribution<double>, 4> dist;
    for (int a = 0; a < 4; ++a) dist[a] = std::uniform_real_distribution<double>(grid.box.lo[a], grid.box.hi[a]);
    std::vector<double> ratio(opt.steps);
    for (long n = 0; n < opt.samples; ++n) {
        std::array<double, 4> x{};
        for (int a = 0; a < 4; ++a) x[a] = dist[a](rng);
        const Spectra s = grid.at(x);
        for (int m = 0; m < opt.steps; ++m) ratio[m] = ctx.min_ratio(m, s);
        for (std::size_t g = 0; g < G; ++g)
            for (int m = 0; m < opt.steps; ++m)
                if (ratio[m] < gammas[g]) {
                    ++count[g][m];  // first step at which the sample leaves
                    break;
                }
    }
    for (std::size_t g = 0; g < G; ++g) {
        std::vector<double> per;
        double tot = 0;
        for (int m = 0; m < opt.steps; ++m) {
            per.push_back(static_cast<double>(count[g][m]) / opt.samples);
            tot += per.back();
        }
        out.per_step.push_back(per);
        out.excised.push_back(tot);
    }
    return out;
}

}  // namespace beat

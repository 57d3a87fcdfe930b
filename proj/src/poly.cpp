#include "beatnls/poly.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "beatnls/errors.hpp"

namespace beat {

namespace {

constexpr cplx I{0.0, 1.0};

template <class A>
int abs_sum(const A& a) {
    int s = 0;
    for (auto v : a) s += std::abs(static_cast<int>(v));
    return s;
}

// Modes carrying a nonzero z or zbar exponent.
std::vector<int> active_slots(const MonomialKey& k) {
    std::vector<int> s;
    for (int i = 0; i < kModeSlots; ++i)
        if (k.alpha[i] != 0 || k.beta[i] != 0) s.push_back(i);
    return s;
}

MonomialKey combine(const MonomialKey& a, const MonomialKey& b) {
    MonomialKey k;
    for (int h = 0; h < kAngles; ++h) {
        k.ell[h] = a.ell[h] + b.ell[h];
        k.y[h] = a.y[h] + b.y[h];
    }
    for (int i = 0; i < kModeSlots; ++i) {
        k.alpha[i] = MonomialKey::narrow(a.alpha[i] + b.alpha[i]);
        k.beta[i] = MonomialKey::narrow(a.beta[i] + b.beta[i]);
    }
    return k;
}

// sup of prod x_k^{e_k} over sum x_k <= R with e_k the given exponents: R^{|e|} prod (e_k/|e|)^{e_k}.
double simplex_sup(const std::vector<int>& e, double R) {
    int tot = 0;
    for (int v : e) tot += v;
    if (tot == 0) return 1.0;
    double out = std::pow(R, tot);
    for (int v : e)
        if (v > 0) out *= std::pow(static_cast<double>(v) / tot, v);
    return out;
}

double y_sup(const std::array<int, kAngles>& y, double r) {
    return simplex_sup(std::vector<int>(y.begin(), y.end()), r * r);
}

// sup |z^e| over sum_k w_k^2 |z_k|^2 <= r^2.
double z_sup(const std::array<std::int8_t, kModeSlots>& e, const NormParams& np) {
    int tot = 0;
    for (auto v : e) tot += v;
    if (tot == 0) return 1.0;
    double out = std::pow(np.r, tot);
    for (int i = 0; i < kModeSlots; ++i) {
        if (e[i] == 0) continue;
        const double frac = static_cast<double>(e[i]) / tot;
        out *= std::pow(frac, 0.5 * e[i]) / std::pow(mode_weight(i - kModeWindow, np), e[i]);
    }
    return out;
}

void put_double(std::ostream& os, double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    os.write(buf, res.ptr - buf);
}

double parse_double(const std::string& s) {
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw FormatError("bad number '" + s + "'");
    return v;
}

int parse_int(const std::string& s) {
    int v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw FormatError("bad integer '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    return out;
}

void put_modes(std::ostream& os, const std::array<std::int8_t, kModeSlots>& e) {
    bool first = true;
    for (int i = 0; i < kModeSlots; ++i) {
        if (e[i] == 0) continue;
        if (!first) os << ',';
        os << (i - kModeWindow) << ':' << static_cast<int>(e[i]);
        first = false;
    }
    if (first) os << '-';
}

void get_modes(const std::string& s, MonomialKey& k, bool alpha) {
    if (s == "-") return;
    for (const auto& item : split(s, ',')) {
        auto c = item.find(':');
        if (c == std::string::npos) throw FormatError("bad mode exponent '" + item + "'");
        const int mode = parse_int(item.substr(0, c));
        const int e = parse_int(item.substr(c + 1));
        if (e <= 0) throw FormatError("mode exponents must be positive");
        if (alpha)
            k.set_alpha(mode, e);
        else
            k.set_beta(mode, e);
    }
}

}  // namespace

int MonomialKey::slot(int mode) {
    if (mode < -kModeWindow || mode > kModeWindow)
        throw InvalidInput("mode index " + std::to_string(mode) + " outside supported window");
    return mode + kModeWindow;
}

std::int8_t MonomialKey::narrow(int e) {
    if (e < 0 || e > 127) throw InvalidInput("mode exponent out of range");
    return static_cast<std::int8_t>(e);
}

int MonomialKey::y_degree() const { return abs_sum(y); }
int MonomialKey::alpha_degree() const { return abs_sum(alpha); }
int MonomialKey::beta_degree() const { return abs_sum(beta); }
int MonomialKey::fourier() const { return abs_sum(ell); }

int MonomialKey::max_mode() const {
    int m = -1;
    for (int i = 0; i < kModeSlots; ++i)
        if (alpha[i] != 0 || beta[i] != 0) m = std::max(m, std::abs(i - kModeWindow));
    return m;
}

long MonomialKey::momentum() const {
    long s = 0;
    for (int i = 0; i < kModeSlots; ++i) s += static_cast<long>(i - kModeWindow) * (alpha[i] - beta[i]);
    return s;
}

long MonomialKey::mass() const { return static_cast<long>(alpha_degree()) - beta_degree(); }

MonomialKey MonomialKey::conjugate() const {
    MonomialKey k = *this;
    for (auto& l : k.ell) l = -l;
    std::swap(k.alpha, k.beta);
    return k;
}

bool Caps::admits(const MonomialKey& k) const {
    if (max_degree && k.degree() > *max_degree) return false;
    if (max_fourier && k.fourier() > *max_fourier) return false;
    if (max_mode && k.max_mode() > *max_mode) return false;
    return true;
}

PolyHamiltonian PolyHamiltonian::constant(cplx c) { return monomial(MonomialKey{}, c); }

PolyHamiltonian PolyHamiltonian::monomial(const MonomialKey& k, cplx c) {
    PolyHamiltonian p;
    p.add(k, c);
    return p;
}

PolyHamiltonian PolyHamiltonian::action(int h, cplx c) {
    MonomialKey k;
    k.y.at(h) = 1;
    return monomial(k, c);
}

PolyHamiltonian PolyHamiltonian::angle(const std::array<int, kAngles>& ell, cplx c) {
    MonomialKey k;
    k.ell = ell;
    return monomial(k, c);
}

PolyHamiltonian PolyHamiltonian::z(int mode, cplx c) {
    MonomialKey k;
    k.set_alpha(mode, 1);
    return monomial(k, c);
}

PolyHamiltonian PolyHamiltonian::zbar(int mode, cplx c) {
    MonomialKey k;
    k.set_beta(mode, 1);
    return monomial(k, c);
}

PolyHamiltonian PolyHamiltonian::mode_action(int mode, cplx c) {
    MonomialKey k;
    k.set_alpha(mode, 1);
    k.set_beta(mode, 1);
    return monomial(k, c);
}

void PolyHamiltonian::add(const MonomialKey& k, cplx c) {
    if (c == cplx{}) return;
    auto [it, inserted] = terms_.try_emplace(k, c);
    if (!inserted) {
        it->second += c;
        if (it->second == cplx{}) terms_.erase(it);
    }
}

cplx PolyHamiltonian::coeff(const MonomialKey& k) const {
    auto it = terms_.find(k);
    return it == terms_.end() ? cplx{} : it->second;
}

PolyHamiltonian& PolyHamiltonian::operator+=(const PolyHamiltonian& o) {
    for (const auto& [k, c] : o.terms_) add(k, c);
    return *this;
}

PolyHamiltonian& PolyHamiltonian::operator-=(const PolyHamiltonian& o) {
    for (const auto& [k, c] : o.terms_) add(k, -c);
    return *this;
}

PolyHamiltonian& PolyHamiltonian::operator*=(cplx s) {
    if (s == cplx{}) {
        terms_.clear();
        return *this;
    }
    for (auto it = terms_.begin(); it != terms_.end();) {
        it->second *= s;
        it = it->second == cplx{} ? terms_.erase(it) : std::next(it);
    }
    return *this;
}

PolyHamiltonian PolyHamiltonian::cleaned(double tol) const {
    PolyHamiltonian out;
    for (const auto& [k, c] : terms_)
        if (std::abs(c) > tol) out.terms_.emplace_hint(out.terms_.end(), k, c);
    return out;
}

PolyHamiltonian PolyHamiltonian::truncated(const Caps& caps) const {
    PolyHamiltonian out;
    for (const auto& [k, c] : terms_)
        if (caps.admits(k)) out.terms_.emplace_hint(out.terms_.end(), k, c);
    return out;
}

double PolyHamiltonian::max_abs_coeff() const {
    double m = 0;
    for (const auto& [k, c] : terms_) m = std::max(m, std::abs(c));
    return m;
}

double PolyHamiltonian::reality_defect() const {
    double d = 0;
    for (const auto& [k, c] : terms_) d = std::max(d, std::abs(c - std::conj(coeff(k.conjugate()))));
    return d;
}

bool PolyHamiltonian::is_real(double tol) const { return reality_defect() <= tol; }

cplx PolyHamiltonian::evaluate(const std::array<cplx, kAngles>& phi, const std::array<cplx, kAngles>& y,
                               const std::map<int, cplx>& z, const std::map<int, cplx>& zbar) const {
    auto lookup = [](const std::map<int, cplx>& m, int mode) {
        auto it = m.find(mode);
        return it == m.end() ? cplx{} : it->second;
    };
    cplx total{};
    for (const auto& [k, c] : terms_) {
        cplx phase{};
        for (int h = 0; h < kAngles; ++h) phase += static_cast<double>(k.ell[h]) * phi[h];
        cplx v = c * std::exp(I * phase);
        for (int h = 0; h < kAngles; ++h)
            if (k.y[h]) v *= std::pow(y[h], k.y[h]);
        for (int i = 0; i < kModeSlots; ++i) {
            if (k.alpha[i]) v *= std::pow(lookup(z, i - kModeWindow), static_cast<int>(k.alpha[i]));
            if (k.beta[i]) v *= std::pow(lookup(zbar, i - kModeWindow), static_cast<int>(k.beta[i]));
        }
        total += v;
    }
    return total;
}

PolyHamiltonian product(const PolyHamiltonian& f, const PolyHamiltonian& g, const Caps& caps) {
    PolyHamiltonian out;
    for (const auto& [kf, cf] : f.terms())
        for (const auto& [kg, cg] : g.terms()) {
            MonomialKey k = combine(kf, kg);
            if (caps.admits(k)) out.add(k, cf * cg);
        }
    return out;
}

PolyHamiltonian poisson_bracket(const PolyHamiltonian& f, const PolyHamiltonian& g, const Caps& caps) {
    struct Term {
        const MonomialKey* key;
        cplx c;
        std::vector<int> slots;
    };
    auto prepare = [](const PolyHamiltonian& p) {
        std::vector<Term> v;
        v.reserve(p.size());
        for (const auto& [k, c] : p.terms()) v.push_back({&k, c, active_slots(k)});
        return v;
    };
    const auto tf = prepare(f);
    const auto tg = prepare(g);

    PolyHamiltonian out;
    for (const auto& a : tf) {
        for (const auto& b : tg) {
            const MonomialKey& ka = *a.key;
            const MonomialKey& kb = *b.key;
            bool have_base = false;
            MonomialKey base;
            const cplx cc = a.c * b.c;
            for (int h = 0; h < kAngles; ++h) {
                const long n = static_cast<long>(ka.y[h]) * kb.ell[h] - static_cast<long>(ka.ell[h]) * kb.y[h];
                if (n == 0) continue;
                if (!have_base) {
                    base = combine(ka, kb);
                    have_base = true;
                }
                MonomialKey k = base;
                k.y[h] -= 1;
                if (caps.admits(k)) out.add(k, I * cc * static_cast<double>(n));
            }
            for (int s : a.slots) {
                const int n = ka.alpha[s] * kb.beta[s] - ka.beta[s] * kb.alpha[s];
                if (n == 0) continue;
                if (!have_base) {
                    base = combine(ka, kb);
                    have_base = true;
                }
                MonomialKey k = base;
                k.alpha[s] = static_cast<std::int8_t>(k.alpha[s] - 1);
                k.beta[s] = static_cast<std::int8_t>(k.beta[s] - 1);
                if (caps.admits(k)) out.add(k, I * cc * static_cast<double>(n));
            }
        }
    }
    return out;
}

void NormParams::validate() const {
    if (!(s > 0) || !(r > 0 && r < 1) || !(a > 0) || !(p > 0.5) || !(gamma >= 0))
        throw InvalidInput("NormParams out of range (need s>0, 0<r<1, a>0, p>1/2, gamma>=0)");
}

double mode_weight(int k, const NormParams& np) {
    const double ak = std::abs(k);
    return std::exp(np.a * ak) * std::pow(std::max(1.0, ak), np.p);
}

double majorant_norm(const PolyHamiltonian& f, const NormParams& np) {
    np.validate();
    double total = 0;
    for (const auto& [k, c] : f.terms()) {
        const double base = std::abs(c) * std::exp(np.s * k.fourier());
        const double zs = z_sup(k.alpha, np);
        const double zbs = z_sup(k.beta, np);
        const double ys = y_sup(k.y, np.r);

        double phi_part = 0;
        for (int h = 0; h < kAngles; ++h) {
            if (k.y[h] == 0) continue;
            auto yy = k.y;
            yy[h] -= 1;
            phi_part = std::max(phi_part, k.y[h] * y_sup(yy, np.r));
        }
        phi_part *= base * zs * zbs / np.s;

        double y_part = 0;
        for (int h = 0; h < kAngles; ++h) y_part += std::abs(k.ell[h]);
        y_part *= base * ys * zs * zbs / (np.r * np.r);

        // dz/dt ~ d/dzbar, dzbar/dt ~ d/dz, each measured in the weighted l2 norm.
        double z_sq = 0, zb_sq = 0;
        for (int i = 0; i < kModeSlots; ++i) {
            const double w = mode_weight(i - kModeWindow, np);
            if (k.beta[i] > 0) {
                auto e = k.beta;
                e[i] = static_cast<std::int8_t>(e[i] - 1);
                const double v = w * k.beta[i] * z_sup(e, np);
                z_sq += v * v;
            }
            if (k.alpha[i] > 0) {
                auto e = k.alpha;
                e[i] = static_cast<std::int8_t>(e[i] - 1);
                const double v = w * k.alpha[i] * z_sup(e, np);
                zb_sq += v * v;
            }
        }
        const double z_part = base * ys * (std::sqrt(z_sq) * zs + std::sqrt(zb_sq) * zbs) / np.r;
        total += phi_part + y_part + z_part;
    }
    return total;
}

double weighted_norm(const ParametricPoly& f, const NormParams& np) {
    if (f.xi.size() != f.samples.size() || f.samples.empty())
        throw InvalidInput("weighted_norm: need matching, nonempty samples");
    double sup = 0, lip = 0;
    for (std::size_t i = 0; i < f.samples.size(); ++i) {
        sup = std::max(sup, majorant_norm(f.samples[i], np));
        for (std::size_t j = i + 1; j < f.samples.size(); ++j) {
            double d = 0;
            for (int c = 0; c < 4; ++c) d += (f.xi[i][c] - f.xi[j][c]) * (f.xi[i][c] - f.xi[j][c]);
            d = std::sqrt(d);
            if (d == 0) continue;
            lip = std::max(lip, majorant_norm(f.samples[i] - f.samples[j], np) / d);
        }
    }
    return sup + np.gamma * lip;
}

bool is_ker_monomial(const MonomialKey& k) {
    for (int l : k.ell)
        if (l != 0) return false;
    const int yd = k.y_degree(), ad = k.alpha_degree(), bd = k.beta_degree();
    if (yd == 1 && ad == 0 && bd == 0) return true;
    if (yd == 0 && ad == 1 && bd == 1) return k.alpha == k.beta;
    return false;
}

bool Projection::keeps(const MonomialKey& k) const {
    switch (kind) {
        case Kind::DegreeEq: return k.degree() == n;
        case Kind::DegreeLe: return k.degree() <= n;
        case Kind::DegreeGt: return k.degree() > n;
        case Kind::FourierLe: return k.fourier() <= n;
        case Kind::FourierGt: return k.fourier() > n;
        case Kind::Ker: return is_ker_monomial(k);
        case Kind::Rg: return k.degree() <= 0 && !is_ker_monomial(k);
    }
    return false;
}

PolyHamiltonian project(const PolyHamiltonian& f, Projection which) {
    PolyHamiltonian out;
    for (const auto& [k, c] : f.terms())
        if (which.keeps(k)) out.add(k, c);
    return out;
}

PolyHamiltonian lie_transform(const PolyHamiltonian& F, const PolyHamiltonian& H, int order, const Caps& caps) {
    if (order < 0) throw InvalidInput("lie_transform: negative order");
    PolyHamiltonian term = H.truncated(caps);
    PolyHamiltonian sum = term;
    for (int l = 1; l <= order && !term.empty(); ++l) {
        term = poisson_bracket(F, term, caps);
        term *= 1.0 / l;
        sum += term;
    }
    return sum;
}

void write_text(std::ostream& os, const PolyHamiltonian& f) {
    os << "# ell i alpha beta re im\n";
    for (const auto& [k, c] : f.terms()) {
        os << k.ell[0] << ',' << k.ell[1] << ',' << k.ell[2] << ',' << k.ell[3] << ' ';
        os << k.y[0] << ',' << k.y[1] << ',' << k.y[2] << ',' << k.y[3] << ' ';
        put_modes(os, k.alpha);
        os << ' ';
        put_modes(os, k.beta);
        os << ' ';
        put_double(os, c.real());
        os << ' ';
        put_double(os, c.imag());
        os << '\n';
    }
}

PolyHamiltonian read_text(std::istream& is) {
    PolyHamiltonian out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string ell, y, al, be, re, im, extra;
        if (!(ls >> ell >> y >> al >> be >> re >> im) || (ls >> extra))
            throw FormatError("line " + std::to_string(lineno) + ": expected 6 fields");
        MonomialKey k;
        auto e = split(ell, ','), yy = split(y, ',');
        if (e.size() != kAngles || yy.size() != kAngles)
            throw FormatError("line " + std::to_string(lineno) + ": ell and i need 4 entries");
        for (int h = 0; h < kAngles; ++h) {
            k.ell[h] = parse_int(e[h]);
            k.y[h] = parse_int(yy[h]);
            if (k.y[h] < 0) throw FormatError("negative action exponent");
        }
        get_modes(al, k, true);
        get_modes(be, k, false);
        if (out.coeff(k) != cplx{}) throw FormatError("line " + std::to_string(lineno) + ": duplicate term");
        out.add(k, cplx(parse_double(re), parse_double(im)));
    }
    return out;
}

std::string to_text(const PolyHamiltonian& f) {
    std::ostringstream os;
    write_text(os, f);
    return os.str();
}

PolyHamiltonian from_text(const std::string& text) {
    std::istringstream is(text);
    return read_text(is);
}

}  // namespace beat

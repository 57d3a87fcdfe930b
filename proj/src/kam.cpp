#include "beatnls/kam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

#include "beatnls/errors.hpp"

namespace beat {

namespace {

constexpr std::array<int, 4> kTangential{1, -1, 2, -2};
constexpr std::array<double, 4> kIntegerOmega{0, 1, 1, 4};

// d I_j / d y_h for I = (I_1, I_-1, I_2, I_-2) = (K1 - 2p, K2 + 2p, p, K3 - p)
constexpr std::array<std::array<double, 4>, 4> kActionJacobian{{
    {-2, 1, 0, 0},
    {2, 0, 1, 0},
    {1, 0, 0, 0},
    {-1, 0, 0, 1},
}};

bool is_constant(const MonomialKey& k) { return k == MonomialKey{}; }

PolyHamiltonian without_constant(PolyHamiltonian f) {
    const cplx c = f.coeff(MonomialKey{});
    if (c != cplx{}) f.add(MonomialKey{}, -c);
    return f;
}

double min_divisor_of(const PolyHamiltonian& f, const Frequencies& fr) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& [k, c] : f.terms()) m = std::min(m, std::abs(divisor(k, fr)));
    return m;
}

NormParams norm_at(const KamParams& p, double s, double r) {
    NormParams np = p.norm;
    np.s = s;
    np.r = r;
    return np;
}

double alpha_schedule(const KamParams& p, int m) {
    double a = p.gamma;
    for (int k = 0; k < m; ++k) a *= 1 - std::ldexp(1.0, -k - 3);
    return a;
}

KamBounds compute_bounds(const KamState& st, const KamParams& p) {
    const auto f = read_frequencies(st.N, p.mode_cut);
    KamBounds b;
    for (int h = 0; h < 4; ++h) b.M = std::max(b.M, std::abs(f.omega[h] - kIntegerOmega[h]) / p.eps);
    for (int j = -p.mode_cut; j <= p.mode_cut; ++j) {
        const double O = f.Omega[j + p.mode_cut];
        if (!std::isnan(O)) b.M = std::max(b.M, std::abs(O - double(j) * j) / p.eps);
    }
    b.L = p.eps / std::abs(f.omega[0]);
    b.alpha = alpha_schedule(p, st.m);
    b.R = majorant_norm(st.Ppos, p.norm);
    return b;
}

}  // namespace

long KamParams::K(int m) const {
    if (m < 0 || m > 8) throw InvalidInput("kam: step out of range");
    return static_cast<long>(K0) << (2 * m);
}

Caps KamParams::caps(int m) const {
    Caps c;
    c.max_degree = max_degree;
    c.max_fourier = static_cast<int>(K(m + 1));
    c.max_mode = mode_cut;
    return c;
}

double Frequencies::Omega_at(int j) const {
    if (j < -mode_cut || j > mode_cut) throw InvalidInput("kam: mode outside the cut");
    const double v = Omega[j + mode_cut];
    if (std::isnan(v)) throw InvalidInput("kam: no normal frequency for mode " + std::to_string(j));
    return v;
}

Frequencies read_frequencies(const PolyHamiltonian& N, int mode_cut) {
    Frequencies f;
    f.mode_cut = mode_cut;
    f.Omega.assign(2 * mode_cut + 1, std::numeric_limits<double>::quiet_NaN());
    for (const auto& [k, c] : N.terms()) {
        if (!is_ker_monomial(k)) throw InvalidInput("kam: N has a term outside the kernel");
        if (k.y_degree() == 1) {
            for (int h = 0; h < 4; ++h)
                if (k.y[h]) f.omega[h] = c.real();
        } else {
            const int j = k.max_mode();
            int mode = j;
            if (k.alpha_at(j) == 0) mode = -j;
            if (std::abs(mode) > mode_cut) throw InvalidInput("kam: N mode outside the cut");
            f.Omega[mode + mode_cut] = c.real();
        }
    }
    return f;
}

double divisor(const MonomialKey& k, const Frequencies& f) {
    double d = 0;
    for (int h = 0; h < 4; ++h) d += f.omega[h] * k.ell[h];
    for (int j = -kModeWindow; j <= kModeWindow; ++j) {
        const int e = k.beta_at(j) - k.alpha_at(j);
        if (e) d += e * f.Omega_at(j);
    }
    return d;
}

long reduced_mass(const MonomialKey& k) { return k.ell[1] + k.ell[2] + k.ell[3] - k.mass(); }

long reduced_momentum(const MonomialKey& k) { return k.ell[1] - k.ell[2] - 2 * k.ell[3] - k.momentum(); }

KamState KamState::from_hamiltonian(const PolyHamiltonian& H, const KamParams& p) {
    KamState st;
    st.N = project(H, Projection::ker());
    st.Prg = without_constant(project(H, Projection::rg()));
    st.Ppos = project(H, Projection::degree_gt(0));
    st.s = p.norm.s;
    st.r = p.norm.r;
    st.K = p.K(0);
    st.bounds = compute_bounds(st, p);
    return st;
}

HomologicalResult solve_homological(const KamState& st, const KamParams& p) {
    const auto fr = read_frequencies(st.N, p.mode_cut);
    const Caps caps = p.caps(st.m);
    const double floor = p.eps * alpha_schedule(p, st.m) * std::pow(double(p.K(st.m)), -p.tau);
    HomologicalResult out;
    out.min_divisor = std::numeric_limits<double>::infinity();

    auto dinv = [&](const PolyHamiltonian& X) {
        PolyHamiltonian Y;
        for (const auto& [k, c] : X.terms()) {
            if (is_constant(k) || is_ker_monomial(k)) throw InvalidInput("kam: range term expected");
            const double D = divisor(k, fr);
            out.min_divisor = std::min(out.min_divisor, std::abs(D));
            if (std::abs(D) < floor)
                throw DivisorError("kam: divisor " + std::to_string(D) + " below threshold " + std::to_string(floor));
            Y.add(k, c / cplx(0, D));
        }
        return Y;
    };
    auto A = [&](const PolyHamiltonian& X) {
        return dinv(project(poisson_bracket(st.Ppos, X, caps), Projection::rg()));
    };

    const PolyHamiltonian P = st.Prg.truncated(caps);
    // A raises the degree by at least one on degrees -2..0, so the series stops after three terms
    PolyHamiltonian term = dinv(P);
    out.F = term;
    for (int n = 1; n <= 3 && !term.empty(); ++n) {
        term = A(term) * cplx(-1);
        out.F += term;
    }
    if (project(out.F, Projection::rg()).truncated(caps).size() != out.F.size())
        throw VerificationError("kam: generator left the range space");

    const auto R = poisson_bracket(st.N, out.F, caps) +
                   project(poisson_bracket(st.Ppos, out.F, caps), Projection::rg()) - P;
    const double scale = P.max_abs_coeff();
    out.residual = scale > 0 ? R.max_abs_coeff() / scale : R.max_abs_coeff();
    return out;
}

namespace {

// One step: H+ = exp(-ad F) H with {N,F} replaced by its homological value.
KamState kam_step(const KamState& st, const HomologicalResult& hr, const KamParams& p) {
    const Caps caps = p.caps(st.m);
    const PolyHamiltonian& F = hr.F;
    const PolyHamiltonian P = st.Prg.truncated(caps);
    const PolyHamiltonian B = poisson_bracket(st.Ppos, F, caps);
    const PolyHamiltonian NF = P - project(B, Projection::rg());
    PolyHamiltonian T = (NF + poisson_bracket(st.Prg, F, caps) + B) * cplx(-1);
    PolyHamiltonian H = st.hamiltonian().truncated(caps) + T;
    // terms below series_tol |Prg|^2 are far under the next range part
    const double pmax = P.max_abs_coeff();
    const double drop = p.series_tol * pmax * pmax;
    for (int l = 2; l <= p.lie_order; ++l) {
        T = poisson_bracket(T, F, caps).cleaned(drop) * cplx(-1.0 / l);
        if (T.empty()) break;
        H += T;
    }
    KamState next = KamState::from_hamiltonian(H.cleaned(drop), p);
    next.m = st.m + 1;
    next.s = st.s * (1 - std::ldexp(1.0, -st.m - 3));
    next.r = st.r * (1 - std::ldexp(1.0, -st.m - 3));
    next.K = p.K(next.m);
    next.bounds = compute_bounds(next, p);
    return next;
}

double max_freq_change(const Frequencies& a, const Frequencies& b) {
    double d = 0;
    for (int h = 0; h < 4; ++h) d = std::max(d, std::abs(a.omega[h] - b.omega[h]));
    for (std::size_t i = 0; i < a.Omega.size(); ++i)
        if (!std::isnan(a.Omega[i]) && !std::isnan(b.Omega[i])) d = std::max(d, std::abs(a.Omega[i] - b.Omega[i]));
    return d;
}

}  // namespace

KamRun kam_iterate(const KamState& st0, int steps, const KamParams& p) {
    if (steps < 0 || steps > 6) throw InvalidInput("kam: steps must be in 0..6");
    KamRun run;
    run.states.push_back(st0);
    if (!st0.Prg.empty()) {
        const auto fr = read_frequencies(st0.N, p.mode_cut);
        const double size = majorant_norm(st0.Prg, norm_at(p, st0.s, st0.r)) / min_divisor_of(st0.Prg, fr);
        if (size > p.gate)
            throw DomainError("kam: smallness gate violated (" + std::to_string(size) + " > " + std::to_string(p.gate) + ")");
    }
    for (int i = 0; i < steps; ++i) {
        const KamState& st = run.states.back();
        const auto hr = solve_homological(st, p);
        KamStepReport rep;
        rep.m = st.m;
        rep.K = st.K;
        const NormParams np = norm_at(p, st.s, st.r);
        rep.prg_norm = majorant_norm(st.Prg, np);
        rep.ppos_norm = majorant_norm(st.Ppos, np);
        rep.F_norm = majorant_norm(hr.F, np);
        rep.min_divisor = hr.min_divisor;
        rep.residual = hr.residual;
        rep.terms = st.Prg.size() + st.Ppos.size();
        rep.bounds = st.bounds;
        KamState next = st.Prg.empty() ? st : kam_step(st, hr, p);
        if (st.Prg.empty()) {
            next.m = st.m + 1;
        }
        rep.freq_shift = max_freq_change(read_frequencies(st.N, p.mode_cut), read_frequencies(next.N, p.mode_cut));
        run.steps.push_back(rep);
        run.states.push_back(std::move(next));
    }
    auto& norms = run.prg_norms;
    for (const auto& st : run.states) norms.push_back(majorant_norm(st.Prg, norm_at(p, st.s, st.r)));
    for (std::size_t i = 0; i + 1 < norms.size(); ++i) {
        const double a = norms[i], b = norms[i + 1];
        const double inf = std::numeric_limits<double>::infinity();
        run.log_ratios.push_back(a > 0 && a < 1 ? (b > 0 ? std::log(b) / std::log(a) : inf)
                                                : std::numeric_limits<double>::quiet_NaN());
        const double amp = std::pow(double(p.K(static_cast<int>(i))), p.tau) / (p.eps * alpha_schedule(p, static_cast<int>(i)));
        run.fitted_C.push_back(a > 0 ? b / (a * a * amp) : 0.0);
    }
    const auto& b0 = run.states.front().bounds;
    auto within = [](double b, double ref) { return ref == 0 ? b == 0 : (b >= ref / 2 && b <= 1.5 * ref); };
    for (const auto& st : run.states) {
        const auto& b = st.bounds;
        run.telescopic = run.telescopic && within(b.M, b0.M) && within(b.L, b0.L) && within(b.alpha, b0.alpha) &&
                         (b0.R == 0 || within(b.R, b0.R));
    }
    return run;
}

std::string KamRun::to_json() const {
    using ordered_json = nlohmann::ordered_json;
    auto num = [](double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); };
    ordered_json j;
    auto& arr = j["steps"] = ordered_json::array();
    for (const auto& s : steps)
        arr.push_back({{"m", s.m},
                       {"K", s.K},
                       {"prg_norm", s.prg_norm},
                       {"ppos_norm", s.ppos_norm},
                       {"F_norm", s.F_norm},
                       {"min_divisor", num(s.min_divisor)},
                       {"residual", s.residual},
                       {"freq_shift", s.freq_shift},
                       {"terms", s.terms},
                       {"bounds", {{"M", s.bounds.M}, {"L", s.bounds.L}, {"alpha", s.bounds.alpha}, {"R", s.bounds.R}}}});
    std::vector<ordered_json> norms, lr, fc;
    for (double v : prg_norms) norms.push_back(num(v));
    for (double v : log_ratios) lr.push_back(num(v));
    for (double v : fitted_C) fc.push_back(num(v));
    j["prg_norms"] = norms;
    j["log_ratios"] = lr;
    j["fitted_C"] = fc;
    j["telescopic"] = telescopic;
    return j.dump(2);
}

KamState birkhoff_initial_state(const PolyHamiltonian& h60, const PolyHamiltonian& h62, const ParameterPoint& xi,
                                const Spectra& spectra, const KamParams& p, const InitialStateOptions& opt) {
    const KVector& K = xi.K;
    const double pf = fixed_points(K).p_stable;
    const std::array<double, 4> I{K[0] - 2 * pf, K[1] + 2 * pf, pf, K[2] - pf};
    for (double v : I)
        if (!(v > 0)) throw DomainError("kam: torus actions must be positive");
    const Caps caps = p.caps(0);

    PolyHamiltonian N;
    for (int h = 0; h < 4; ++h) N += PolyHamiltonian::action(h, kIntegerOmega[h] + p.eps * spectra.lambda[h]);
    for (int j = -p.mode_cut; j <= p.mode_cut; ++j) {
        if (std::abs(j) == 1 || std::abs(j) == 2) continue;
        N += PolyHamiltonian::mode_action(j, double(j) * j + p.eps * spectra.theta(j));
    }

    PolyHamiltonian P;
    for (const auto* part : {&h60, &h62})
        for (const auto& [key, c] : part->terms()) {
            MonomialKey k = key;
            std::array<int, 4> cexp{}, nexp{};
            double base = c.real();
            if (c.imag() != 0) throw InvalidInput("kam: expected real sextic coefficients");
            for (int t = 0; t < 4; ++t) {
                const int j = kTangential[t], a = k.alpha_at(j), b = k.beta_at(j);
                // u_j = sqrt(I_j + y'_j) e^{-i theta_j}
                cexp[t] = b - a;
                nexp[t] = a + b;
                base *= std::pow(I[t], 0.5 * (a + b));
                k.set_alpha(j, 0);
                k.set_beta(j, 0);
            }
            if (k.max_mode() > p.mode_cut) continue;
            // theta_1 = phi1, theta_-1 = phi2, theta_-2 = phi3, theta_2 = phi0 + 2 phi1 - 2 phi2 + phi3
            k.ell = {cexp[2], cexp[0] + 2 * cexp[2], cexp[1] - 2 * cexp[2], cexp[3] + cexp[2]};
            // prod (1 + x_t)^{n_t/2} to second order, x_t = y'_t / I_t
            std::array<double, 4> g{};
            std::array<std::array<double, 4>, 4> Q{};
            for (int t = 0; t < 4; ++t)
                for (int h = 0; h < 4; ++h) g[h] += 0.5 * nexp[t] * kActionJacobian[t][h] / I[t];
            for (int h = 0; h < 4; ++h)
                for (int h2 = 0; h2 < 4; ++h2) {
                    Q[h][h2] = 0.5 * g[h] * g[h2];
                    for (int t = 0; t < 4; ++t)
                        Q[h][h2] -= 0.25 * nexp[t] * kActionJacobian[t][h] * kActionJacobian[t][h2] / (I[t] * I[t]);
                }
            auto emit = [&](const std::array<int, 4>& y, double v) {
                MonomialKey m = k;
                for (int h = 0; h < 4; ++h) m.y[h] += y[h];
                if (caps.admits(m)) P.add(m, p.eps * base * v);
            };
            emit({0, 0, 0, 0}, 1.0);
            for (int h = 0; h < 4; ++h) {
                std::array<int, 4> y{};
                y[h] = 1;
                emit(y, g[h]);
            }
            for (int h = 0; h < 4; ++h)
                for (int h2 = 0; h2 < 4; ++h2) {
                    std::array<int, 4> y{};
                    y[h] += 1;
                    y[h2] += 1;
                    emit(y, Q[h][h2]);
                }
        }
    P = without_constant(P - project(P, Projection::ker())).cleaned(0.0);
    return KamState::from_hamiltonian(N + P * cplx(opt.scale), p);
}

}  // namespace beat

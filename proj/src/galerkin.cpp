#include "beatnls/galerkin.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <fftw3.h>
#include "json.hpp"

#include "beatnls/errors.hpp"
#include "beatnls/ode.hpp"

namespace beat {

namespace {

constexpr double kPi = std::numbers::pi;

// Pseudo-spectral products on N >= 6J + 1 points are alias free for degree six.
class Grid {
public:
    explicit Grid(int J) : J_(J) {
        n_ = 8;
        while (n_ < 6 * J + 1) n_ *= 2;
        buf_ = fftw_alloc_complex(n_);
        fwd_ = fftw_plan_dft_1d(n_, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_1d(n_, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
        if (!buf_ || !fwd_ || !bwd_) throw ConvergenceError("galerkin: FFT setup failed");
    }
    ~Grid() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(buf_);
    }
    Grid(const Grid&) = delete;
    Grid& operator=(const Grid&) = delete;

    int size() const { return n_; }

    // values v(x_n) = sum_j u_j e^{i j x_n}
    void to_space(const std::vector<cplx>& u, std::vector<cplx>& v) {
        for (int i = 0; i < n_; ++i) buf_[i][0] = buf_[i][1] = 0;
        for (int j = -J_; j <= J_; ++j) {
            const int i = (j + n_) % n_;
            buf_[i][0] = u[j + J_].real();
            buf_[i][1] = u[j + J_].imag();
        }
        fftw_execute(bwd_);
        v.resize(n_);
        for (int i = 0; i < n_; ++i) v[i] = cplx(buf_[i][0], buf_[i][1]);
    }

    // Fourier coefficients |j| <= J of g
    void to_modes(const std::vector<cplx>& g, std::vector<cplx>& out) {
        for (int i = 0; i < n_; ++i) {
            buf_[i][0] = g[i].real();
            buf_[i][1] = g[i].imag();
        }
        fftw_execute(fwd_);
        out.resize(2 * J_ + 1);
        for (int j = -J_; j <= J_; ++j) {
            const int i = (j + n_) % n_;
            out[j + J_] = cplx(buf_[i][0], buf_[i][1]) / double(n_);
        }
    }

    // -3 i [u^3 ubar^2]_j
    void nonlinear(const std::vector<cplx>& u, std::vector<cplx>& out) {
        to_space(u, v_);
        for (auto& x : v_) x = x * x * x * std::conj(x) * std::conj(x);
        to_modes(v_, out);
        for (auto& x : out) x *= cplx(0, -3);
    }

    double sextic(const std::vector<cplx>& u) {
        to_space(u, v_);
        double s = 0;
        for (const auto& x : v_) s += std::pow(std::norm(x), 3);
        return s / n_;
    }

private:
    int J_, n_;
    fftw_complex* buf_ = nullptr;
    fftw_plan fwd_ = nullptr, bwd_ = nullptr;
    std::vector<cplx> v_;
};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

double GalerkinState::mass() const {
    double s = 0;
    for (const auto& x : u) s += std::norm(x);
    return s;
}

double GalerkinState::momentum() const {
    double s = 0;
    for (int j = -J; j <= J; ++j) s += j * std::norm(at(j));
    return s;
}

double GalerkinState::hamiltonian() const {
    Grid g(J);
    double s = 0;
    for (int j = -J; j <= J; ++j) s += double(j) * j * std::norm(at(j));
    return s + g.sextic(u);
}

GalerkinState initial_data(const ParameterPoint& xi, double eps, int J, double phi0) {
    if (!(eps > 0)) throw InvalidInput("galerkin: eps must be positive");
    if (J < 2 || J > 256) throw InvalidInput("galerkin: J must be in 2..256");
    const KVector& K = xi.K;
    double p = 0, q = 0;
    if (xi.E == 0) {
        p = fixed_points(K).p_stable;
    } else {
        const auto aa = action_angle_data(xi);
        const double t = std::fmod(std::fmod(phi0, 2 * kPi) + 2 * kPi, 2 * kPi) / (2 * kPi) * aa.period;
        Eigen::Vector2d y(aa.p_hi, 0.0);
        auto rhs = [&](double, const Eigen::Vector2d& z) -> Eigen::Vector2d {
            const auto v = reduced_vector_field(K, z[0], z[1]);
            return {v.p, v.q};
        };
        auto nrm = [](const Eigen::Vector2d& e, const Eigen::Vector2d& a, const Eigen::Vector2d& b, double rtol,
                      double atol) {
            return (e.array().abs() / (atol + rtol * a.array().abs().max(b.array().abs()))).maxCoeff();
        };
        y = dopri5(rhs, 0.0, t, y, nrm);
        p = y[0];
        q = y[1];
    }
    const double I1 = K[0] - 2 * p, Im1 = K[1] + 2 * p, I2 = p, Im2 = K[2] - p;
    if (I1 < 0 || Im1 < 0 || I2 < 0 || Im2 < 0) throw DomainError("galerkin: negative tangential action");
    GalerkinState s;
    s.J = J;
    s.eps = eps;
    s.u.assign(2 * J + 1, cplx{});
    const double a = std::pow(eps, 0.25);
    s.at(1) = a * std::sqrt(I1);
    s.at(-1) = a * std::sqrt(Im1);
    s.at(-2) = a * std::sqrt(Im2);
    s.at(2) = a * std::sqrt(I2) * std::polar(1.0, -q);
    return s;
}

GalerkinState translated(const GalerkinState& s, int k) {
    GalerkinState v = s;
    v.J = s.J + std::abs(k);
    v.u.assign(2 * v.J + 1, cplx{});
    for (int j = -s.J; j <= s.J; ++j) v.at(j - k) = s.at(j);
    return v;
}

GalerkinState gauged(const GalerkinState& s, double phase) {
    GalerkinState v = s;
    for (auto& x : v.u) x *= std::polar(1.0, phase);
    return v;
}

Trajectory integrate(const GalerkinState& s0, const IntegrateOptions& opt) {
    if (!(opt.dt > 0) || !(opt.T >= 0) || opt.stride < 1) throw InvalidInput("galerkin: bad integration options");
    const int J = s0.J;
    if (static_cast<int>(s0.u.size()) != 2 * J + 1) throw InvalidInput("galerkin: state size does not match J");
    Grid grid(J);
    const long nsteps = std::lround(opt.T / opt.dt);
    const double dt = nsteps > 0 ? opt.T / nsteps : opt.dt;

    std::vector<cplx> u = s0.u, mid, nl, next, rot_half(2 * J + 1), cay(2 * J + 1), cay_in(2 * J + 1);
    for (int j = -J; j <= J; ++j) {
        const double w = double(j) * j;
        rot_half[j + J] = std::polar(1.0, -w * dt / 2);
        cay_in[j + J] = 1.0 / cplx(1, w * dt / 2);
        cay[j + J] = cplx(1, -w * dt / 2) * cay_in[j + J];
    }

    auto sample = [&](double t) {
        GalerkinState st = s0;
        st.u = u;
        Sample sm;
        sm.t = t;
        sm.u = u;
        sm.L = st.mass();
        sm.M = st.momentum();
        double h2 = 0;
        for (int j = -J; j <= J; ++j) h2 += double(j) * j * std::norm(u[j + J]);
        sm.H = h2 + grid.sextic(u);
        return sm;
    };

    // u+ = A u + dt B N((u + u+)/2), fixed point
    auto implicit = [&](const std::vector<cplx>& A, const std::vector<cplx>* B) {
        next = u;
        for (std::size_t i = 0; i < u.size(); ++i) next[i] = A.empty() ? u[i] : A[i] * u[i];
        const std::vector<cplx> base = next;
        double scale = 0;
        for (const auto& x : u) scale = std::max(scale, std::abs(x));
        for (int it = 0; it < opt.max_iter; ++it) {
            mid.resize(u.size());
            for (std::size_t i = 0; i < u.size(); ++i) mid[i] = 0.5 * (u[i] + next[i]);
            grid.nonlinear(mid, nl);
            double change = 0;
            for (std::size_t i = 0; i < u.size(); ++i) {
                const cplx v = base[i] + dt * (B ? (*B)[i] : 1.0) * nl[i];
                change = std::max(change, std::abs(v - next[i]));
                next[i] = v;
            }
            if (change <= opt.tol * scale) {
                u.swap(next);
                return;
            }
        }
        throw ConvergenceError("galerkin: implicit substep did not converge; reduce dt");
    };

    Trajectory tr;
    tr.J = J;
    tr.eps = s0.eps;
    tr.samples.push_back(sample(s0.t));
    const double L0 = tr.samples[0].L;
    const std::vector<cplx> none;
    for (long n = 1; n <= nsteps; ++n) {
        if (opt.scheme == Scheme::SplitStep) {
            for (std::size_t i = 0; i < u.size(); ++i) u[i] *= rot_half[i];
            implicit(none, nullptr);
            for (std::size_t i = 0; i < u.size(); ++i) u[i] *= rot_half[i];
        } else {
            implicit(cay, &cay_in);
        }
        ++tr.steps;
        if (n % opt.stride == 0 || n == nsteps) {
            tr.samples.push_back(sample(s0.t + n * dt));
            if (!(tr.samples.back().L <= 2 * L0)) throw ConvergenceError("galerkin: norm growth, step size unstable");
        }
    }
    const auto& f = tr.samples.front();
    for (const auto& sm : tr.samples) {
        tr.L_drift = std::max(tr.L_drift, rel(sm.L, f.L));
        tr.M_drift = std::max(tr.M_drift, std::abs(sm.M - f.M) / std::max(f.L, 1e-300));
        tr.H_drift = std::max(tr.H_drift, rel(sm.H, f.H));
    }
    return tr;
}

GalerkinState final_state(const GalerkinState& s, const Trajectory& tr) {
    GalerkinState out = s;
    out.u = tr.samples.back().u;
    out.t = tr.samples.back().t;
    return out;
}

BeatingReport diagnostics(const Trajectory& tr) {
    if (tr.samples.empty()) throw InvalidInput("diagnostics: empty trajectory");
    BeatingReport r;
    const int modes[4] = {-2, -1, 1, 2};
    for (int m = 0; m < 4; ++m) {
        r.fmin[m] = 1e300;
        r.fmax[m] = -1e300;
    }
    auto combos = [&](std::size_t i, double c[3]) {
        const double f1 = tr.f(i, 1), f2 = tr.f(i, 2), fm1 = tr.f(i, -1), fm2 = tr.f(i, -2);
        c[0] = f1 + 2 * f2;
        c[1] = fm1 - 2 * f2;
        c[2] = fm2 + f2;
    };
    combos(0, r.combo_start);
    // the second combination vanishes near K2 = 0, so all three use the mass scale
    const double scale = std::abs(r.combo_start[0]) + std::abs(r.combo_start[1]) + std::abs(r.combo_start[2]);
    for (std::size_t i = 0; i < tr.samples.size(); ++i) {
        for (int m = 0; m < 4; ++m) {
            const double v = tr.f(i, modes[m]);
            r.fmin[m] = std::min(r.fmin[m], v);
            r.fmax[m] = std::max(r.fmax[m], v);
        }
        double c[3];
        combos(i, c);
        for (int a = 0; a < 3; ++a)
            r.combo_dev[a] = std::max(r.combo_dev[a], std::abs(c[a] - r.combo_start[a]) / scale);
    }
    r.f2_low = r.fmin[3] < 0.5;
    r.f2_high = r.fmax[3] > 1.5;
    r.mirrored = r.fmin[0] < 0.5 && r.fmax[0] > 1.5 && r.fmin[2] < 1 && r.fmax[2] > 3 && r.fmin[1] < 1 && r.fmax[1] > 3;
    r.L_drift = tr.L_drift;
    r.M_drift = tr.M_drift;
    r.H_drift = tr.H_drift;
    return r;
}

std::string BeatingReport::to_json() const {
    nlohmann::ordered_json j;
    const char* names[4] = {"-2", "-1", "1", "2"};
    for (int m = 0; m < 4; ++m) j["f"][names[m]] = {{"min", fmin[m]}, {"max", fmax[m]}};
    j["combo_start"] = {combo_start[0], combo_start[1], combo_start[2]};
    j["combo_dev"] = {combo_dev[0], combo_dev[1], combo_dev[2]};
    j["f2_low"] = f2_low;
    j["f2_high"] = f2_high;
    j["mirrored"] = mirrored;
    j["beating"] = beating();
    j["L_drift"] = L_drift;
    j["M_drift"] = M_drift;
    j["H_drift"] = H_drift;
    return j.dump(2);
}

void write_csv(std::ostream& os, const Trajectory& tr) {
    const int modes[4] = {-2, -1, 1, 2};
    os << "t";
    for (int j : modes) os << ",re_u" << j << ",im_u" << j;
    for (int j : modes) os << ",f" << j;
    os << ",L,M,H\n";
    os.precision(17);
    for (std::size_t i = 0; i < tr.samples.size(); ++i) {
        const auto& s = tr.samples[i];
        os << s.t;
        for (int j : modes) os << ',' << s.u[j + tr.J].real() << ',' << s.u[j + tr.J].imag();
        for (int j : modes) os << ',' << tr.f(i, j);
        os << ',' << s.L << ',' << s.M << ',' << s.H << '\n';
    }
}

}  // namespace beat

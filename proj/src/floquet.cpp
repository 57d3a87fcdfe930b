#include "beatnls/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "beatnls/errors.hpp"
#include "beatnls/ode.hpp"

namespace beat {

namespace {

constexpr double kPi = std::numbers::pi;
using cd = std::complex<double>;
using State = Eigen::Matrix<double, 10, 1>;  // p, q, then Re/Im of W column-major

int slot(int j) {
    if (j != 3 && j != 4) throw InvalidInput("floquet: block index must be 3 or 4");
    return j - 3;
}

Eigen::Matrix2cd unpack(const State& y) {
    Eigen::Matrix2cd W;
    for (int k = 0; k < 4; ++k) W(k % 2, k / 2) = cd(y[2 + 2 * k], y[3 + 2 * k]);
    return W;
}

void pack(const Eigen::Matrix2cd& W, State& y) {
    for (int k = 0; k < 4; ++k) {
        y[2 + 2 * k] = W(k % 2, k / 2).real();
        y[3 + 2 * k] = W(k % 2, k / 2).imag();
    }
}

double err_norm(const State& e, const State& a, const State& b, double rtol, double atol) {
    double m = 0;
    for (int i = 0; i < 10; ++i) {
        const double sc = atol + rtol * std::max(std::abs(a[i]), std::abs(b[i]));
        m = std::max(m, std::abs(e[i]) / sc);
    }
    return m;
}

Eigen::Matrix2cd nearest_unitary(const Eigen::Matrix2cd& W) {
    Eigen::JacobiSVD<Eigen::Matrix2cd> svd(W, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

}  // namespace

FloquetSetup FloquetSetup::at(const ParameterPoint& xi, const FrequencyOptions& opt) {
    return from_map(xi, frequency_map(xi, opt));
}

FloquetSetup FloquetSetup::from_map(const ParameterPoint& xi, const FrequencyMap& fm) {
    FloquetSetup s;
    s.xi = xi;
    s.f0 = fm.f0;
    s.period = fm.period;
    s.p0 = fm.orbit.p.front();
    s.Ubar[0] = fm.Ubar3;
    s.Ubar[1] = fm.Ubar4;
    s.Vbar[0] = fm.Vbar3;
    s.Vbar[1] = fm.Vbar4;
    return s;
}

FloquetSetup FloquetSetup::limit(const KVector& K) {
    const auto e = elliptic_expansion(K);
    FloquetSetup s;
    s.xi = {0.0, K};
    s.p0 = e.p_fixed;
    s.f0 = f_coefficient(K, s.p0);
    s.period = 2 * kPi / e.alpha2;
    for (int j : {3, 4}) {
        s.Ubar[j - 3] = coupling_U(j, K, s.p0);
        s.Vbar[j - 3] = coupling_V(j, K, s.p0, 0.0);
    }
    return s;
}

Block2 block_matrix(int j, const KVector& K, double f0, double p, double q) {
    slot(j);
    const double U = coupling_U(j, K, p);
    const double V = coupling_V(j, K, p, q);
    Block2 b;
    b.m << cd(0, f0), cd(0, U), cd(0, U), cd(0, f0 + V);
    b.structure = BlockStructure::SkewHermitian;
    return b;
}

Block2 block_matrix(int j, const FloquetSetup& s, double phi) {
    Eigen::Vector2d y(s.p0, 0.0);
    const double t = phi / (2 * kPi) * s.period;
    auto rhs = [&](double, const Eigen::Vector2d& z) -> Eigen::Vector2d {
        const auto v = reduced_vector_field(s.xi.K, z[0], z[1]);
        return {v.p, v.q};
    };
    auto nrm = [](const Eigen::Vector2d& e, const Eigen::Vector2d& a, const Eigen::Vector2d& b, double rtol,
                  double atol) {
        return (e.array().abs() / (atol + rtol * a.array().abs().max(b.array().abs()))).maxCoeff();
    };
    y = dopri5(rhs, 0.0, t, y, nrm);
    return block_matrix(j, s.xi.K, s.f0, y[0], y[1]);
}

MonodromyResult monodromy(int j, const FloquetSetup& s, const MonodromyOptions& opt) {
    slot(j);
    if (!(opt.tol > 0) || opt.macro_steps < 1) throw InvalidInput("monodromy: bad options");
    const KVector K = s.xi.K;
    auto rhs = [&](double, const State& y) {
        State d;
        const auto v = reduced_vector_field(K, y[0], y[1]);
        d[0] = v.p;
        d[1] = v.q;
        const Eigen::Matrix2cd A = block_matrix(j, K, s.f0, y[0], y[1]).m;
        pack(A * unpack(y), d);
        return d;
    };
    State y = State::Zero();
    y[0] = s.p0;
    pack(Eigen::Matrix2cd::Identity(), y);
    OdeOptions ode;
    ode.rtol = opt.tol;
    ode.atol = opt.tol * 1e-2;
    MonodromyResult out;
    const double dt = s.period / opt.macro_steps;
    for (int k = 0; k < opt.macro_steps; ++k) {
        y = dopri5(rhs, k * dt, (k + 1) * dt, y, err_norm, ode);
        Eigen::Matrix2cd W = unpack(y);
        const double drift = (W * W.adjoint() - Eigen::Matrix2cd::Identity()).norm();
        out.max_drift = std::max(out.max_drift, drift);
        if (drift > opt.unitarity_limit) throw VerificationError("monodromy: unitarity lost during integration");
        pack(nearest_unitary(W), y);
    }
    out.W.m = unpack(y);
    out.W.structure = BlockStructure::Unitary;
    out.det_defect = std::abs(std::abs(out.W.m.determinant()) - 1.0);
    return out;
}

FloquetResult floquet_exponents(int j, const FloquetSetup& s, const MonodromyOptions& opt) {
    const int i = slot(j);
    const auto mono = monodromy(j, s, opt);
    const Eigen::Matrix2cd W = mono.W.m;
    const double T = s.period;
    FloquetResult out;
    out.W = mono.W;

    // U(1) x SU(2) split and the principal axis-angle of the SU(2) factor
    out.phase = std::arg(W.determinant()) / 2;
    const Eigen::Matrix2cd W0 = std::exp(cd(0, -out.phase)) * W;
    const double c = std::clamp(0.5 * W0.trace().real(), -1.0, 1.0);
    out.su2_angle = std::acos(c);
    out.branch_point = out.su2_angle > kPi - 1e-6;

    // Branch: Theta = (arg mu + 2 pi n)/T, n and the +/- labelling chosen
    // nearest to the spectrum of the orbit-averaged block.
    const double f = s.f0, U = s.Ubar[i], V = s.Vbar[i];
    const double mid = f + V / 2, rad = std::sqrt(U * U + V * V / 4);
    const double ref[2] = {mid + rad, mid - rad};

    Eigen::ComplexEigenSolver<Eigen::Matrix2cd> es(W);
    const auto mu = es.eigenvalues();
    auto nearest = [&](double arg, double target) {
        const double n = std::round((target * T - arg) / (2 * kPi));
        return (arg + 2 * kPi * n) / T;
    };
    double best = 1e300;
    int order = 0;
    double th[2] = {0, 0};
    for (int perm = 0; perm < 2; ++perm) {
        const double a = nearest(std::arg(mu[perm]), ref[0]);
        const double b = nearest(std::arg(mu[1 - perm]), ref[1]);
        const double cost = std::abs(a - ref[0]) + std::abs(b - ref[1]);
        if (cost < best) {
            best = cost;
            order = perm;
            th[0] = a;
            th[1] = b;
        }
    }
    out.theta_plus = th[0];
    out.theta_minus = th[1];

    const Eigen::Matrix2cd P = es.eigenvectors();
    Eigen::Matrix2cd D = Eigen::Matrix2cd::Zero();
    D(order, order) = cd(0, th[0]);
    D(1 - order, 1 - order) = cd(0, th[1]);
    out.B.m = P * D * P.inverse();
    out.B.structure = BlockStructure::SkewHermitian;

    Eigen::Matrix2cd E = Eigen::Matrix2cd::Zero();
    E(order, order) = std::exp(cd(0, T * th[0]));
    E(1 - order, 1 - order) = std::exp(cd(0, T * th[1]));
    out.periodicity_residual = (W * (P * E * P.inverse()).inverse() - Eigen::Matrix2cd::Identity()).norm();
    return out;
}

}  // namespace beat

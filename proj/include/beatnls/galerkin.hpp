#pragma once

// Galerkin truncation |j| <= J of the quintic NLS
//   i du_j/dt = j^2 u_j + 3 [u^3 ubar^2]_j,
// the flow of H = sum j^2 |u_j|^2 + sum_{j1+j2+j3=j4+j5+j6} u u u ubar ubar ubar,
// with amplitudes of size eps^{1/4}.

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

#include "beatnls/pendulum.hpp"

namespace beat {

using cplx = std::complex<double>;

struct GalerkinState {
    int J = 16;
    double eps = 1e-3;
    double t = 0.0;
    std::vector<cplx> u;  // u[j + J]

    cplx& at(int j) { return u.at(j + J); }
    cplx at(int j) const { return u.at(j + J); }
    double mass() const;      // L = sum |u_j|^2
    double momentum() const;  // M = sum j |u_j|^2
    double hamiltonian() const;
    // eps^{-1/2} |u_j|^2
    double f(int j) const { return std::norm(at(j)) / std::sqrt(eps); }
};

// Tangential modes from the reduced orbit at angle phi0:
// |u_2|^2 = p, |u_1|^2 = K1 - 2p, |u_-1|^2 = K2 + 2p, |u_-2|^2 = K3 - p (times eps^{1/2}),
// phases with q = 2 psi_1 - 2 psi_-1 + psi_-2 - psi_2.
GalerkinState initial_data(const ParameterPoint& xi, double eps, int J, double phi0 = 0.0);

// v_j = u_{j+k} (at t = 0 the extra phase is trivial); the mode window grows by |k|.
GalerkinState translated(const GalerkinState& s, int k);
GalerkinState gauged(const GalerkinState& s, double phase);

enum class Scheme { SplitStep, SymplecticImplicit };

struct IntegrateOptions {
    double dt = 1e-3;
    double T = 1.0;
    Scheme scheme = Scheme::SplitStep;
    int stride = 100;         // sample every stride steps
    double tol = 1e-15;       // fixed-point tolerance for the implicit substep
    int max_iter = 60;
};

struct Sample {
    double t = 0;
    std::vector<cplx> u;
    double L = 0, M = 0, H = 0;
};

struct Trajectory {
    int J = 0;
    double eps = 0;
    std::vector<Sample> samples;
    long steps = 0;
    double L_drift = 0, M_drift = 0, H_drift = 0;  // max relative deviation from the start
    double f(std::size_t i, int j) const { return std::norm(samples[i].u.at(j + J)) / std::sqrt(eps); }
};

Trajectory integrate(const GalerkinState& s, const IntegrateOptions& opt);
GalerkinState final_state(const GalerkinState& s, const Trajectory& tr);

struct BeatingReport {
    // min and max of the normalized f_j over the run for j = -2, -1, 1, 2
    double fmin[4] = {0, 0, 0, 0}, fmax[4] = {0, 0, 0, 0};
    // max relative deviation of f1 + 2 f2, f-1 - 2 f2, f-2 + f2 from their start values
    double combo_dev[3] = {0, 0, 0};
    double combo_start[3] = {0, 0, 0};
    bool f2_low = false, f2_high = false;   // f2 < 1/2 and f2 > 3/2 somewhere
    bool mirrored = false;                  // f-2 < 1/2, f-2 > 3/2, f1 < 1, f1 > 3, f-1 < 1, f-1 > 3
    double L_drift = 0, M_drift = 0, H_drift = 0;
    bool beating() const { return f2_low && f2_high && mirrored; }
    std::string to_json() const;
};

BeatingReport diagnostics(const Trajectory& tr);

// t, Re/Im u_j and f_j for j in {-2,-1,1,2}, L, M, H
void write_csv(std::ostream& os, const Trajectory& tr);

}  // namespace beat

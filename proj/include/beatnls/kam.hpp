#pragma once

// Truncated KAM iteration: N = omega.y + sum Omega_j |z_j|^2 plus a perturbation
// split into its range part (degree <= 0, off the kernel) and positive degree part.

#include <array>
#include <string>
#include <vector>

#include "beatnls/melnikov.hpp"
#include "beatnls/poly.hpp"

namespace beat {

struct KamParams {
    double gamma = 0.05;
    double eps = 1e-3;
    double tau = 5.0;
    int K0 = 8;
    int mode_cut = 8;   // normal modes |j| <= mode_cut
    int max_degree = 2; // graded degree cap
    int lie_order = 4;
    double series_tol = 1e-6;  // relative to |Prg|^2, for dropping Lie series terms
    double gate = 0.1;  // smallness gate on |Prg| / min |divisor|
    NormParams norm{0.5, 0.5, 0.1, 1.0, 0.0};
    long K(int m) const;
    Caps caps(int m) const;  // Fourier cap K_{m+1}
};

struct KamBounds {
    double M = 0;      // largest eps-part of a frequency, divided by eps
    double L = 0;      // 1 / |lambda0|
    double alpha = 0;  // excision weight at this step
    double R = 0;      // norm of the positive degree part at the initial (s, r)
};

struct KamState {
    PolyHamiltonian N, Prg, Ppos;
    int m = 0;
    double s = 0, r = 0;
    long K = 0;
    KamBounds bounds;

    // Splits H into kernel, range and positive degree parts; constants are dropped.
    static KamState from_hamiltonian(const PolyHamiltonian& H, const KamParams& p);
    PolyHamiltonian hamiltonian() const { return N + Prg + Ppos; }
};

// omega_h from the y_h coefficients and Omega_j from the |z_j|^2 coefficients of N.
struct Frequencies {
    std::array<double, 4> omega{};
    std::vector<double> Omega;  // index j + mode_cut
    int mode_cut = 0;
    double Omega_at(int j) const;
};
Frequencies read_frequencies(const PolyHamiltonian& N, int mode_cut);
double divisor(const MonomialKey& k, const Frequencies& f);  // {N, m} = i D m

// Reduced mass and momentum of a monomial in the (phi, y, z) chart; both vanish on admissible terms.
long reduced_mass(const MonomialKey& k);
long reduced_momentum(const MonomialKey& k);

struct HomologicalResult {
    PolyHamiltonian F;
    double min_divisor = 0;
    double residual = 0;  // max coefficient of {N,F} + Pi_rg{Ppos,F} - Prg, relative to max |Prg|
};

// Solves {N,F} + Pi_{<=K} Pi_rg {Ppos, F} = Pi_{<=K} Prg with K = K_{m+1}.
// Throws DivisorError when a divisor drops below eps alpha K_m^-tau.
HomologicalResult solve_homological(const KamState& st, const KamParams& p);

struct KamStepReport {
    int m = 0;
    long K = 0;
    double prg_norm = 0;
    double ppos_norm = 0;
    double F_norm = 0;
    double min_divisor = 0;
    double residual = 0;
    double freq_shift = 0;   // max change of omega, Omega over the step
    std::size_t terms = 0;
    KamBounds bounds;
};

struct KamRun {
    std::vector<KamState> states;
    std::vector<KamStepReport> steps;
    std::vector<double> prg_norms;   // |Prg_m| at the step's (s_m, r_m)
    std::vector<double> log_ratios;  // log|Prg_{m+1}| / log|Prg_m|
    std::vector<double> fitted_C;    // |Prg_{m+1}| eps alpha / (|Prg_m|^2 K_m^tau)
    bool telescopic = true;          // every bound stays within [b0/2, 3 b0/2]
    std::string to_json() const;
};

KamRun kam_iterate(const KamState& st0, int steps, const KamParams& p);

// Initial state at xi: N from the spectra, perturbation scale * eps * (tangential sextic
// pieces h60 and h62 evaluated on the torus through the action-angle chart, minus their kernel part).
struct InitialStateOptions {
    double scale = 1e-3;
};
KamState birkhoff_initial_state(const PolyHamiltonian& h60, const PolyHamiltonian& h62, const ParameterPoint& xi,
                                const Spectra& spectra, const KamParams& p, const InitialStateOptions& opt = {});

}  // namespace beat

#pragma once

#include <string>
#include <vector>

#include "beatnls/poly.hpp"
#include "beatnls/resonances.hpp"

namespace beat {

// H = H2 + eps*H6 on modes |j| <= B, u_j stored as z_j and conj(u_j) as zbar_j.
// H6 is kept eps-free with integer coefficients C(3,alpha) C(3,beta).
struct TruncatedNlsHamiltonian {
    int mode_cut = 8;
    double eps = 1e-3;
    PolyHamiltonian H2;
    PolyHamiltonian H6;

    static TruncatedNlsHamiltonian build(int mode_cut, double eps);
    PolyHamiltonian full() const { return H2 + eps * H6; }
};

long multinomial3(const MonomialKey& k, bool creation);  // 3!/prod alpha_k! (or beta)
long birkhoff_divisor(const MonomialKey& k);             // sum_k (alpha_k - beta_k) k^2
Sextuple to_sextuple(const MonomialKey& k);               // requires |alpha| = |beta| = 3

PolyHamiltonian build_generating_function(const TruncatedNlsHamiltonian& H);

struct BirkhoffOptions {
    double max_eps = 0.1;
    bool with_remainder = false;
    int remainder_mode_cut = 4;  // remainder is computed on this smaller mode window
    Caps caps = [] {
        Caps c;
        c.max_degree = 8;  // polynomial degree 10
        return c;
    }();
};

struct BirkhoffResult {
    PolyHamiltonian HBirk;           // H2 + eps * resonant_sextic
    PolyHamiltonian resonant_sextic;  // eps-free
    PolyHamiltonian remainder;        // eps^2 terms, only when requested
    int remainder_mode_cut = 0;
    double eps = 0;
};

BirkhoffResult normal_form_step(const TruncatedNlsHamiltonian& H, const BirkhoffOptions& opt = {});

struct CoefficientCheck {
    std::string name;
    double expected;
    double measured;
    bool pass;
};

struct RestrictedPart {
    PolyHamiltonian part;  // eps-free
    std::vector<CoefficientCheck> checks;
};

// Part of the resonant sextic with all tangential exponents on S and exactly
// normal_degree exponents on modes outside S, verified against the closed forms.
// Throws VerificationError on any mismatch.
RestrictedPart extract_restricted(const BirkhoffResult& birk, const TangentialSet& S, int normal_degree,
                                  int mode_cut);

// Closed forms on S = {-2,-1,1,2} (eps-free).
PolyHamiltonian closed_form_h60();
PolyHamiltonian closed_form_h62(int mode_cut);

}  // namespace beat

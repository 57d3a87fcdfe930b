#pragma once

// Reduced one-degree-of-freedom system on the tangential modes {-2,-1,1,2}.
// Everything here is eps-free: the full reduced Hamiltonian is
//   lin(K) + eps * (A(K,p) + B(K,p) cos q).

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "beatnls/ode.hpp"

namespace beat {

using KVector = std::array<double, 3>;
inline constexpr KVector kKStar{4.0, 0.0, 2.0};

struct ReducedPoint {
    double p = 0.0;
    double q = 0.0;
};

struct ParameterPoint {
    double E = 0.0;
    KVector K = kKStar;

    static ParameterPoint from_xi(const std::array<double, 4>& xi) { return {xi[0], {xi[1], xi[2], xi[3]}}; }
    std::array<double, 4> xi() const { return {E, K[0], K[1], K[2]}; }
};

// Actions (I_2, I_1, I_-1, I_-2) = (p, K1-2p, K2+2p, K3-p) on z = 0.
std::array<double, 4> tangential_actions(const KVector& K, double p);

struct PRange {
    double lo, hi;
};
// p-interval on which all four actions are non-negative.
PRange admissible_p_range(const KVector& K);

struct ABValues {
    double lin = 0.0;           // K1 + K2 + 4 K3
    std::array<double, 5> A{};  // d^k A / dp^k, k = 0..4
    std::array<double, 5> B{};  // d^k B / dp^k
    std::array<double, 3> A_K{};
    std::array<double, 3> B_K{};
};

ABValues hamiltonian_AB(const KVector& K, double p);

double reduced_energy(const KVector& K, double p, double q);  // A + B cos q
double reduced_hamiltonian(const KVector& K, double p, double q, double eps);

// (dp/dtau, dq/dtau) with tau = eps t: pdot = -dH/dq, qdot = dH/dp.
ReducedPoint reduced_vector_field(const KVector& K, double p, double q);

// Sextic diagonal coefficient f and the block couplings on the orbit.
double f_coefficient(const KVector& K, double p);
double coupling_U(int j, const KVector& K, double p);
double coupling_V(int j, const KVector& K, double p, double q);

struct FixedPoints {
    double p_stable;    // q = 0
    double p_unstable;  // q = pi
};
FixedPoints fixed_points(const KVector& K);

struct SeparatrixCrossings {
    double p1, p2;
    double level;  // energy of the hyperbolic point
};
SeparatrixCrossings separatrix_crossings(const KVector& K);

struct ActionAngleOptions {
    int rays = 128;
    int samples = 256;
    double guard = 1e-3;
    OdeOptions ode{};
};

// Action of the orbit at energy level h (h between separatrix and maximum).
double action_of_level(const KVector& K, double h, int rays = 128);
// Inverse map E -> h, and dh/dE = -2 pi / T.
double level_of_action(const KVector& K, double E, int rays = 128);
double action_at_separatrix(const KVector& K, int rays = 128);

struct ActionAngleData {
    ParameterPoint xi;
    double energy = 0.0;     // eps-free H(E, K)
    double period = 0.0;     // from the area derivative
    double period_vf = 0.0;  // from integrating dtheta / thetadot
    double dHdE = 0.0;       // -2 pi / period
    double p_hi = 0.0, p_lo = 0.0;
    std::vector<double> phi, p, q;  // orbit at uniform angle, phi = 0 at (p_hi, 0)
};

ActionAngleData action_angle_data(const ParameterPoint& xi, const ActionAngleOptions& opt = {});

struct OrbitData {
    std::vector<double> phi, p, q, f, U3, U4, V3, V4;
};

struct FrequencyOptions {
    int grid = 256;
    double fd_step = 1e-4;
    ActionAngleOptions aa{};
};

struct FrequencyMap {
    std::array<double, 4> lambda{};
    double f0 = 0.0;
    double period = 0.0;
    double Ubar3 = 0.0, Ubar4 = 0.0, Vbar3 = 0.0, Vbar4 = 0.0;
    OrbitData orbit;
};

FrequencyMap frequency_map(const ParameterPoint& xi, const FrequencyOptions& opt = {});

// E -> 0 values by quadratic extrapolation from E in {1e-2, 5e-3, 2.5e-3}.
inline constexpr std::array<double, 3> kExtrapolationEnergies{1e-2, 5e-3, 2.5e-3};
struct FrequencyLimit {
    std::array<double, 4> lambda{};
    double f0 = 0.0;
};
FrequencyLimit frequency_limit(const KVector& K, const FrequencyOptions& opt = {});

// Order-4 Birkhoff data at the elliptic point.
struct EllipticExpansion {
    double p_fixed, alpha0, alpha2, lambda4;
    double G[5];  // d^k (A + B) / dp^k at the fixed point
    double B[5];  // d^k B / dp^k
    double alpha(int i, int j) const;  // coefficient of P^i Q^{2j}, P = lambda dp, Q = q / lambda
    double beta(int l, int m) const;   // coefficient of z^l zbar^m, z = (P + iQ)/sqrt 2
    double beta22_literal() const;     // same cascade with the (+) sign pattern, for comparison
    double gamma22() const;            // quartic coefficient after removing cubic terms
};
EllipticExpansion elliptic_expansion(const KVector& K);

struct TwistResult {
    Eigen::Matrix4d M;
    double det = 0.0;
    std::array<double, 3> dalpha0{};
    std::array<double, 3> dalpha2{};
    double gamma22 = 0.0;
    double beta22 = 0.0;
    double beta22_literal = 0.0;
    std::array<double, 4> beta3{};  // beta_{3,0}, beta_{2,1}, beta_{1,2}, beta_{0,3}
};
TwistResult twist_matrix(const KVector& K, double step = 1e-3);

// Grid of H values on [p range] x [0, 2pi) for plotting, CSV with header.
std::string phase_portrait_csv(const KVector& K, int n);

}  // namespace beat

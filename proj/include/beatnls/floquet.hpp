#pragma once

// Time-periodic 2x2 blocks for the normal modes +-3, +-4 along a reduced orbit.

#include <complex>

#include <Eigen/Dense>

#include "beatnls/pendulum.hpp"

namespace beat {

enum class BlockStructure { SkewHermitian, Unitary, General };

struct Block2 {
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
    BlockStructure structure = BlockStructure::General;

    double skew_defect() const { return (m + m.adjoint()).norm(); }
    double unitary_defect() const { return (m * m.adjoint() - Eigen::Matrix2cd::Identity()).norm(); }
};

// Orbit data the blocks need: K, the averaged diagonal f0, the period and
// the starting point (p_hi, 0). E = 0 means the elliptic fixed point.
struct FloquetSetup {
    ParameterPoint xi;
    double f0 = 0.0;
    double period = 0.0;
    double p0 = 0.0;
    double Ubar[2] = {0, 0};  // orbit averages for j = 3, 4
    double Vbar[2] = {0, 0};

    static FloquetSetup at(const ParameterPoint& xi, const FrequencyOptions& opt = {});
    static FloquetSetup from_map(const ParameterPoint& xi, const FrequencyMap& fm);
    // Constant-coefficient limit E -> 0: the orbit collapses to the fixed point.
    static FloquetSetup limit(const KVector& K);
};

Block2 block_matrix(int j, const KVector& K, double f0, double p, double q);
Block2 block_matrix(int j, const FloquetSetup& s, double phi);

struct MonodromyOptions {
    double tol = 1e-10;
    int macro_steps = 64;           // polar re-projection after each
    double unitarity_limit = 1e-6;  // before re-projection
};

struct MonodromyResult {
    Block2 W;
    double max_drift = 0.0;  // largest unitarity defect seen before re-projection
    double det_defect = 0.0;
};

MonodromyResult monodromy(int j, const FloquetSetup& s, const MonodromyOptions& opt = {});

struct FloquetResult {
    double theta_plus = 0.0;   // Theta_j
    double theta_minus = 0.0;  // Theta_{-j}
    Block2 B;                  // exp(T B) = W(T)
    Block2 W;
    double phase = 0.0;        // theta with W = e^{i theta} W0
    double su2_angle = 0.0;    // axis-angle of W0 in [0, pi]
    bool branch_point = false; // W0 near -I
    double periodicity_residual = 0.0;
};

FloquetResult floquet_exponents(int j, const FloquetSetup& s, const MonodromyOptions& opt = {});

}  // namespace beat

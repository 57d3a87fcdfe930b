#pragma once

// Melnikov non-resonance: exact replay at xi* = (0,4,0,2), excision sets and
// a Monte-Carlo estimate of the excised measure.

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "beatnls/pendulum.hpp"
#include "beatnls/rational.hpp"

namespace beat {

bool is_normal_mode(int j);  // j not in {-2,-1,1,2}
int mode_r(int j);           // |j| for |j| in {3,4}, j otherwise

struct MelnikovIndex {
    std::array<int, 4> ell{};
    int sigma = 0;
    int sigma_prime = 0;
    int h = 0;  // ignored when sigma == 0
    int k = 0;  // ignored when sigma_prime == 0

    int eta() const { return ell[1] + ell[2] + ell[3]; }
    int pi() const { return ell[1] - ell[2] - 2 * ell[3]; }
    int pi2() const { return ell[1] + ell[2] + 4 * ell[3]; }
    int l1norm() const;
    // integer part of omega.ell + sigma Omega_h + sigma' Omega_k
    long integer_part() const;
    bool satisfies_constraints() const;
    bool is_trivial() const;
    // one representative per unordered pair of normal-mode factors
    bool is_canonical() const;
    std::string str() const;
    friend auto operator<=>(const MelnikovIndex&, const MelnikovIndex&) = default;
};

// All canonical non-trivial indices with |ell|_1 <= ell_bound and modes |h|,|k| <= mode_bound.
std::vector<MelnikovIndex> admissible_indices(int ell_bound, int mode_bound);

// ---- exact replay at xi* ----

struct StarData {
    std::array<Rational, 3> lambdaK;  // d_K alpha0
    Rational lambda0_squared;         // lambda0 = -sqrt(lambda0_squared)
    bool lambda0_irrational = false;
    Rational f0;
    Rational U3, U4, V3, V4;
    Rational theta(int j) const;  // Theta_j: f0 +- U for |j| in {3,4}, f0 otherwise
};
StarData star_data();

struct LinearCase {
    std::string label;
    Rational rhs;     // 426 x + 498 y = rhs
    Rational sum;     // x + y = sum
    Rational x, y;    // exact solution
    bool integer_solution = false;
    bool mod3_obstruction = false;
};

struct StarReport {
    StarData data;
    std::vector<LinearCase> systems;
    Rational case2_mixed_3l3;              // |h| != |k| branch: 3 l3 = this
    std::vector<Rational> case3_72l3;      // 72 l3 = varrho values
    std::vector<Rational> case3_l3;        // integer l3 from the varrho = +-144 branch
    std::vector<Rational> case3_k_squared; // forced r^2(k) values
    // brute force over admissible indices: exact zeros other than the
    // lambda1 = lambda2 family (ell = (0,-s h, s h, 0), k = -h, |h| >= 5)
    long brute_checked = 0;
    long brute_family_zeros = 0;
    std::vector<MelnikovIndex> brute_other_zeros;
    bool all_pass = false;
    std::string to_json() const;
};

StarReport verify_star_nonresonance(int brute_ell_bound = 24, int brute_mode_bound = 40);

// ---- spectra and excision ----

struct Spectra {
    std::array<double, 4> lambda{};
    double theta3p = 0, theta3m = 0, theta4p = 0, theta4m = 0, f0 = 0;
    double theta(int j) const;
};

struct SpectraOptions {
    FrequencyOptions freq{64};
};
Spectra compute_spectra(const ParameterPoint& xi, const SpectraOptions& opt = {});

struct Box4 {
    std::array<double, 4> lo{}, hi{};
    static Box4 default_domain();  // E in [0.004, 0.012], K within 0.1 of K*
    bool contains(const std::array<double, 4>& x) const;
};

class SpectraGrid {
public:
    Box4 box;
    int n = 3;  // points per axis
    std::vector<Spectra> values;
    double M0 = 0, L0 = 0, alpha0 = 0;

    static SpectraGrid build(const Box4& box, int n, const SpectraOptions& opt = {});
    Spectra at(const std::array<double, 4>& xi) const;  // multilinear interpolation
    double lambda_sup() const;
    double theta_sup() const;

    std::string to_json() const;
    static SpectraGrid from_json(const std::string& text);
    void save(const std::string& path) const;
    static SpectraGrid load(const std::string& path);

private:
    void compute_bounds();
};

// omega.ell + sigma Omega_h + sigma' Omega_k with omega = (0,1,1,4) + eps lambda, Omega_j = j^2 + eps Theta_j.
double melnikov_divisor(const MelnikovIndex& idx, const Spectra& s, double eps);

struct ExcisionParams {
    double gamma = 0.05;
    double eps = 1e-3;
    double tau = 5.0;
    int K0 = 8;
    long K(int m) const;
    double threshold(int m) const { return eps * gamma * std::pow(static_cast<double>(K(m)), -tau); }
};

// Reduced divisor data. ell0 is free, so per (ell1..3, sigma, h, sigma', k) only the
// best ell0 within the |ell|_1 budget matters; entries with identical data are merged.
struct DivisorClass {
    std::int32_t I = 0;
    std::array<std::int16_t, 3> ell{};
    std::array<std::int8_t, 5> w{};  // weights on Theta_3, Theta_-3, Theta_4, Theta_-4, f0
    std::int16_t budget = 0;         // max |ell0|
    bool nonzero_ell0 = false;       // ell0 = 0 would be the trivial index
    std::int8_t sigma = 0, sigma_prime = 0;
    std::int16_t h = 0, k = 0;       // first index seen with this data
    MelnikovIndex representative(int ell0) const;
};

class ExcisionContext {
public:
    // lambda_sup, theta_sup bound the spectra on the domain and decide which
    // classes can come within the threshold at all.
    ExcisionContext(const ExcisionParams& p, int steps, double lambda_sup, double theta_sup);
    const std::vector<DivisorClass>& classes(int m) const { return classes_.at(m); }
    const ExcisionParams& params() const { return p_; }
    int steps() const { return static_cast<int>(classes_.size()); }
    // min over classes at step m of |divisor| / (eps K_m^-tau); excised iff < gamma
    double min_ratio(int m, const Spectra& s, MelnikovIndex* worst = nullptr) const;

private:
    ExcisionParams p_;
    std::vector<std::vector<DivisorClass>> classes_;
};

bool excision_test(const ExcisionContext& ctx, int m, const Spectra& s);

struct MeasureResult {
    std::vector<double> gammas;
    // per gamma: fraction excised at step m (of all samples) and cumulative
    std::vector<std::vector<double>> per_step;
    std::vector<double> excised;
    long samples = 0;
    std::vector<std::size_t> classes_per_step;
};

struct MeasureOptions {
    double eps = 1e-3;
    double tau = 5.0;
    int K0 = 8;
    int steps = 3;
    long samples = 10000;
    std::uint64_t seed = 20240611;
};

MeasureResult measure_monte_carlo(const SpectraGrid& grid, const std::vector<double>& gammas,
                                  const MeasureOptions& opt = {});

}  // namespace beat

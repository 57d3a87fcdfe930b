#pragma once

// Sparse Taylor-Fourier polynomials
//   f = sum c * e^{i ell.phi} y^i z^alpha zbar^beta
// in four angle/action pairs (phi_h, y_h) and complex mode variables z_k, zbar_k.
//
// Poisson bracket:
//   {f,g} = sum_h (f_y g_phi - f_phi g_y) + i sum_k (f_z g_zbar - f_zbar g_z)

#include <array>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace beat {

using cplx = std::complex<double>;

inline constexpr int kAngles = 4;
inline constexpr int kModeWindow = 31;  // mode indices |k| <= 31
inline constexpr int kModeSlots = 2 * kModeWindow + 1;

struct MonomialKey {
    std::array<int, kAngles> ell{};
    std::array<int, kAngles> y{};
    std::array<std::int8_t, kModeSlots> alpha{};
    std::array<std::int8_t, kModeSlots> beta{};

    int alpha_at(int mode) const { return alpha[slot(mode)]; }
    int beta_at(int mode) const { return beta[slot(mode)]; }
    void set_alpha(int mode, int e) { alpha[slot(mode)] = narrow(e); }
    void set_beta(int mode, int e) { beta[slot(mode)] = narrow(e); }

    int y_degree() const;
    int alpha_degree() const;
    int beta_degree() const;
    // Graded degree 2|i| + |alpha| + |beta| - 2.
    int degree() const { return 2 * y_degree() + alpha_degree() + beta_degree() - 2; }
    // Polynomial degree with y counted as quadratic.
    int poly_degree() const { return degree() + 2; }
    int fourier() const;  // |ell|_1
    int max_mode() const;  // largest |k| with nonzero exponent, -1 if none
    // alpha - beta momentum sum_k k (alpha_k - beta_k) and mass |alpha| - |beta|.
    long momentum() const;
    long mass() const;

    MonomialKey conjugate() const;  // (-ell, i, beta, alpha)

    static int slot(int mode);
    static std::int8_t narrow(int e);

    friend auto operator<=>(const MonomialKey&, const MonomialKey&) = default;
    friend bool operator==(const MonomialKey&, const MonomialKey&) = default;
};

struct Caps {
    std::optional<int> max_degree;   // graded degree
    std::optional<int> max_fourier;  // |ell|_1
    std::optional<int> max_mode;     // |k| of z variables
    bool admits(const MonomialKey& k) const;
};

class PolyHamiltonian {
public:
    using TermMap = std::map<MonomialKey, cplx>;

    PolyHamiltonian() = default;

    static PolyHamiltonian constant(cplx c);
    static PolyHamiltonian monomial(const MonomialKey& k, cplx c);
    static PolyHamiltonian action(int h, cplx c = 1.0);                      // c*y_h
    static PolyHamiltonian angle(const std::array<int, kAngles>& ell, cplx c = 1.0);  // c*e^{i ell.phi}
    static PolyHamiltonian z(int k, cplx c = 1.0);
    static PolyHamiltonian zbar(int k, cplx c = 1.0);
    static PolyHamiltonian mode_action(int k, cplx c = 1.0);  // c*|z_k|^2

    void add(const MonomialKey& k, cplx c);
    cplx coeff(const MonomialKey& k) const;
    const TermMap& terms() const { return terms_; }
    std::size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }

    PolyHamiltonian& operator+=(const PolyHamiltonian& o);
    PolyHamiltonian& operator-=(const PolyHamiltonian& o);
    PolyHamiltonian& operator*=(cplx s);
    friend PolyHamiltonian operator+(PolyHamiltonian a, const PolyHamiltonian& b) { return a += b; }
    friend PolyHamiltonian operator-(PolyHamiltonian a, const PolyHamiltonian& b) { return a -= b; }
    friend PolyHamiltonian operator*(PolyHamiltonian a, cplx s) { return a *= s; }
    friend PolyHamiltonian operator*(cplx s, PolyHamiltonian a) { return a *= s; }
    friend bool operator==(const PolyHamiltonian& a, const PolyHamiltonian& b) { return a.terms_ == b.terms_; }

    // Drop terms with |c| <= tol.
    PolyHamiltonian cleaned(double tol) const;
    PolyHamiltonian truncated(const Caps& caps) const;
    double max_abs_coeff() const;
    bool is_real(double tol = 0.0) const;
    // Largest |c(key) - conj(c(conjugate key))|.
    double reality_defect() const;

    // Evaluation at a point (angles may be complex for strip tests).
    cplx evaluate(const std::array<cplx, kAngles>& phi, const std::array<cplx, kAngles>& y,
                  const std::map<int, cplx>& z, const std::map<int, cplx>& zbar) const;

private:
    TermMap terms_;
};

PolyHamiltonian product(const PolyHamiltonian& f, const PolyHamiltonian& g, const Caps& caps = {});
PolyHamiltonian poisson_bracket(const PolyHamiltonian& f, const PolyHamiltonian& g, const Caps& caps = {});

struct NormParams {
    double s = 0.5;
    double r = 0.5;
    double a = 0.1;
    double p = 1.0;
    double gamma = 0.0;
    void validate() const;
};

double mode_weight(int k, const NormParams& np);
double majorant_norm(const PolyHamiltonian& f, const NormParams& np);

// Coefficients sampled at parameter points; Lipschitz part estimated from sample pairs.
struct ParametricPoly {
    std::vector<std::array<double, 4>> xi;
    std::vector<PolyHamiltonian> samples;
};
double weighted_norm(const ParametricPoly& f, const NormParams& np);

struct Projection {
    enum class Kind { DegreeEq, DegreeLe, DegreeGt, FourierLe, FourierGt, Ker, Rg };
    Kind kind;
    int n = 0;

    static Projection degree_eq(int d) { return {Kind::DegreeEq, d}; }
    static Projection degree_le(int d) { return {Kind::DegreeLe, d}; }
    static Projection degree_gt(int d) { return {Kind::DegreeGt, d}; }
    static Projection fourier_le(int n) { return {Kind::FourierLe, n}; }
    static Projection fourier_gt(int n) { return {Kind::FourierGt, n}; }
    static Projection ker() { return {Kind::Ker, 0}; }
    static Projection rg() { return {Kind::Rg, 0}; }

    bool keeps(const MonomialKey& k) const;
};

bool is_ker_monomial(const MonomialKey& k);
PolyHamiltonian project(const PolyHamiltonian& f, Projection which);

// sum_{l=0}^{order} (-ad F)^l H / l!, ad(F)h = {h,F}; each iterate truncated to caps.
PolyHamiltonian lie_transform(const PolyHamiltonian& F, const PolyHamiltonian& H, int order, const Caps& caps = {});

// Text form: one term per line "ell i alpha beta re im".
std::string to_text(const PolyHamiltonian& f);
PolyHamiltonian from_text(const std::string& text);
void write_text(std::ostream& os, const PolyHamiltonian& f);
PolyHamiltonian read_text(std::istream& is);

}  // namespace beat

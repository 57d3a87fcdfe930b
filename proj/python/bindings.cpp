#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "beatnls/birkhoff.hpp"
#include "beatnls/errors.hpp"
#include "beatnls/floquet.hpp"
#include "beatnls/galerkin.hpp"
#include "beatnls/kam.hpp"
#include "beatnls/melnikov.hpp"
#include "beatnls/pendulum.hpp"
#include "beatnls/resonances.hpp"

namespace py = pybind11;
using namespace beat;

namespace {

py::object loads(const std::string& s) { return py::module_::import("json").attr("loads")(s); }

KVector kvec(const std::array<double, 3>& K) { return {K[0], K[1], K[2]}; }

std::vector<std::array<int, 6>> resonances(int box, std::optional<std::vector<int>> set, std::optional<int> inside,
                                           bool nontrivial) {
    ResonanceFilter f;
    if (set) f.set = TangentialSet(*set);
    f.inside = inside;
    f.nontrivial_only = nontrivial;
    std::vector<std::array<int, 6>> out;
    for (const auto& s : enumerate_resonances(box, f)) out.push_back(s.indices());
    return out;
}

py::dict birkhoff_checks(int mode_cut) {
    const auto R = normal_form_step(TruncatedNlsHamiltonian::build(mode_cut, 1e-3));
    py::dict d;
    const auto S = TangentialSet::paper_default();
    for (int deg : {0, 2}) {
        py::list checks;
        for (const auto& c : extract_restricted(R, S, deg, mode_cut).checks)
            checks.append(py::make_tuple(c.name, c.expected, c.measured, c.pass));
        d[("h6" + std::to_string(deg)).c_str()] = checks;
    }
    d["resonant_terms"] = R.resonant_sextic.size();
    return d;
}

py::dict action_angle(double E, const std::array<double, 3>& K) {
    const auto aa = action_angle_data(ParameterPoint{E, kvec(K)});
    py::dict d;
    d["energy"] = aa.energy;
    d["period"] = aa.period;
    d["period_vf"] = aa.period_vf;
    d["p_hi"] = aa.p_hi;
    d["p_lo"] = aa.p_lo;
    d["phi"] = aa.phi;
    d["p"] = aa.p;
    d["q"] = aa.q;
    return d;
}

py::array_t<std::complex<double>> to_array(const std::vector<cplx>& u) {
    py::array_t<std::complex<double>> a(static_cast<py::ssize_t>(u.size()));
    std::copy(u.begin(), u.end(), a.mutable_data());
    return a;
}

py::dict simulate(const std::array<double, 4>& xi, double eps, int J, double T, double dt, int stride, double phi0,
                  const std::string& scheme) {
    IntegrateOptions o;
    o.T = T;
    o.dt = dt;
    o.stride = stride;
    if (scheme == "split-step")
        o.scheme = Scheme::SplitStep;
    else if (scheme == "implicit")
        o.scheme = Scheme::SymplecticImplicit;
    else
        throw InvalidInput("scheme must be split-step or implicit");
    const auto s = initial_data(ParameterPoint::from_xi(xi), eps, J, phi0);
    Trajectory tr;
    {
        py::gil_scoped_release nogil;
        tr = integrate(s, o);
    }
    const auto n = static_cast<py::ssize_t>(tr.samples.size());
    py::array_t<double> t(n), L(n), M(n), H(n), f(std::vector<py::ssize_t>{n, 4});
    auto fv = f.mutable_unchecked<2>();
    const int modes[4] = {-2, -1, 1, 2};
    for (py::ssize_t i = 0; i < n; ++i) {
        const auto& sm = tr.samples[i];
        t.mutable_data()[i] = sm.t;
        L.mutable_data()[i] = sm.L;
        M.mutable_data()[i] = sm.M;
        H.mutable_data()[i] = sm.H;
        for (int m = 0; m < 4; ++m) fv(i, m) = tr.f(i, modes[m]);
    }
    py::dict d;
    d["t"] = t;
    d["f"] = f;  // columns j = -2, -1, 1, 2
    d["L"] = L;
    d["M"] = M;
    d["H"] = H;
    d["u_final"] = to_array(tr.samples.back().u);
    d["report"] = loads(diagnostics(tr).to_json());
    return d;
}

py::object kam_run(const std::array<double, 4>& xi, int steps, double gamma, double tau, int K0, double scale) {
    KamParams p;
    p.gamma = gamma;
    p.tau = tau;
    p.K0 = K0;
    InitialStateOptions io;
    io.scale = scale;
    const auto x = ParameterPoint::from_xi(xi);
    const auto birk = normal_form_step(TruncatedNlsHamiltonian::build(p.mode_cut, p.eps));
    const auto S = TangentialSet::paper_default();
    const auto st = birkhoff_initial_state(extract_restricted(birk, S, 0, p.mode_cut).part,
                                           extract_restricted(birk, S, 2, p.mode_cut).part, x, compute_spectra(x), p, io);
    return loads(kam_iterate(st, steps, p).to_json());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Beating solutions of the quintic NLS on the circle";

    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
    py::register_exception<VerificationError>(m, "VerificationError", PyExc_RuntimeError);
    py::register_exception<DivisorError>(m, "DivisorError", PyExc_RuntimeError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

    m.attr("K_STAR") = std::array<double, 3>{kKStar[0], kKStar[1], kKStar[2]};

    m.def("enumerate_resonances", &resonances, py::arg("box"), py::arg("set") = py::none(),
          py::arg("inside") = py::none(), py::arg("nontrivial") = false,
          "Resonant sextuples (j1..j6) in canonical order with |j| <= box.");
    m.def(
        "is_complete", [](const std::vector<int>& s) { return is_complete(TangentialSet(s)); }, py::arg("set"));

    m.def("birkhoff_checks", &birkhoff_checks, py::arg("mode_cut") = 8,
          "Closed-form coefficient checks of the restricted normal form, as (name, expected, measured, pass).");

    m.def(
        "fixed_points",
        [](const std::array<double, 3>& K) {
            const auto f = fixed_points(kvec(K));
            return py::make_tuple(f.p_stable, f.p_unstable);
        },
        py::arg("K"));
    m.def(
        "separatrix_crossings",
        [](const std::array<double, 3>& K) {
            const auto s = separatrix_crossings(kvec(K));
            return py::make_tuple(s.p1, s.p2);
        },
        py::arg("K"));
    m.def(
        "action_at_separatrix", [](const std::array<double, 3>& K) { return action_at_separatrix(kvec(K)); },
        py::arg("K"));
    m.def(
        "reduced_hamiltonian",
        [](const std::array<double, 3>& K, double p, double q, double eps) {
            return reduced_hamiltonian(kvec(K), p, q, eps);
        },
        py::arg("K"), py::arg("p"), py::arg("q"), py::arg("eps"));
    m.def("action_angle", &action_angle, py::arg("E"), py::arg("K"));
    m.def(
        "frequency_map",
        [](double E, const std::array<double, 3>& K) { return frequency_map(ParameterPoint{E, kvec(K)}).lambda; },
        py::arg("E"), py::arg("K"));

    m.def(
        "floquet_exponents",
        [](const std::array<double, 4>& xi, int j) {
            const auto x = ParameterPoint::from_xi(xi);
            const auto s = x.E == 0 ? FloquetSetup::limit(x.K) : FloquetSetup::at(x);
            const auto r = floquet_exponents(j, s);
            return py::make_tuple(r.theta_plus, r.theta_minus);
        },
        py::arg("xi"), py::arg("j"), "(Theta_j, Theta_-j) for j in {3, 4}.");

    m.def(
        "verify_star", [] { return loads(verify_star_nonresonance().to_json()); },
        "Exact non-resonance verification at the anchor point, as a dict.");

    m.def("kam_run", &kam_run, py::arg("xi") = std::array<double, 4>{0.008, 4.02, 0.03, 1.99}, py::arg("steps") = 3,
          py::arg("gamma") = 0.05, py::arg("tau") = 5.0, py::arg("K0") = 8, py::arg("scale") = 1e-3);

    m.def(
        "initial_data",
        [](const std::array<double, 4>& xi, double eps, int J, double phi0) {
            return to_array(initial_data(ParameterPoint::from_xi(xi), eps, J, phi0).u);
        },
        py::arg("xi"), py::arg("eps"), py::arg("J") = 16, py::arg("phi0") = 0.0,
        "Mode amplitudes u_j, index j + J.");
    m.def("simulate", &simulate, py::arg("xi"), py::arg("eps") = 1e-3, py::arg("J") = 16, py::arg("T") = 100.0,
          py::arg("dt") = 0.02, py::arg("stride") = 50, py::arg("phi0") = 0.0, py::arg("scheme") = "split-step");
}

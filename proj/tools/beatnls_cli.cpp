// beatnls command-line front end.
// Values come from --config (key = value), then BEATNLS_<KEY> environment variables, then flags.
// Exit status: 0 all checks pass, 1 a check failed, 2 usage or config error.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "beatnls/birkhoff.hpp"
#include "beatnls/config.hpp"
#include "beatnls/errors.hpp"
#include "beatnls/floquet.hpp"
#include "beatnls/galerkin.hpp"
#include "beatnls/kam.hpp"
#include "beatnls/melnikov.hpp"
#include "beatnls/pendulum.hpp"
#include "beatnls/resonances.hpp"

using namespace beat;
using json = nlohmann::ordered_json;

namespace {

struct Checks {
    json list = json::array();
    bool ok = true;
    void add(const std::string& name, bool pass, double measured, double limit) {
        list.push_back({{"name", name}, {"pass", pass}, {"measured", measured}, {"limit", limit}});
        ok = ok && pass;
    }
};

struct Flags {
    std::map<std::string, std::string> given;
    std::vector<std::string> keys;
};

// registers --key as a string flag that lands in the config map
void flag(CLI::App* app, Flags& f, const std::string& key, const std::string& help) {
    f.keys.push_back(key);
    app->add_option_function<std::string>("--" + key, [&f, key](const std::string& v) { f.given[key] = v; }, help)
        ->allow_extra_args(false);
}

std::array<double, 4> xi_of(const RunConfig& cfg, const std::array<double, 4>& def) {
    const auto v = cfg.get_doubles("xi", {def.begin(), def.end()});
    if (v.size() != 4) throw InvalidInput("xi needs four values E,K1,K2,K3");
    return {v[0], v[1], v[2], v[3]};
}

KVector K_of(const RunConfig& cfg) {
    const auto v = cfg.get_doubles("K", {kKStar[0], kKStar[1], kKStar[2]});
    if (v.size() != 3) throw InvalidInput("K needs three values");
    return {v[0], v[1], v[2]};
}

void emit(const RunConfig& cfg, const std::string& key, const std::string& text, std::ostream& fallback) {
    const std::string path = cfg.get_string(key, "");
    if (path.empty()) {
        fallback << text;
        return;
    }
    std::ofstream f(path);
    if (!f) throw InvalidInput("cannot write " + path);
    f << text;
}

int finish(const RunConfig& cfg, const std::string& command, json result, const Checks& c) {
    json rep;
    rep["command"] = command;
    rep["result"] = std::move(result);
    rep["checks"] = c.list;
    rep["pass"] = c.ok;
    emit(cfg, "report", rep.dump(2) + "\n", std::cout);
    return c.ok ? 0 : 1;
}

std::string orbit_csv_row(const char* kind, const Sextuple& s) {
    std::ostringstream os;
    os << kind;
    for (int j : s.indices()) os << ',' << j;
    os << '\n';
    return os.str();
}

int cmd_resonances(const RunConfig& cfg) {
    const int box = static_cast<int>(cfg.get_int("box", 4, 1, kDefaultBoxLimit));
    const TangentialSet S(cfg.get_ints("set", {-2, -1, 1, 2}));
    const bool nontrivial = cfg.get_bool("nontrivial", true);
    std::vector<int> counts;
    if (cfg.has("inside"))
        counts.push_back(static_cast<int>(cfg.get_int("inside", 6, 0, 6)));
    else
        counts = {6, 4};

    std::string csv = "kind,j1,j2,j3,j4,j5,j6\n";
    json res;
    std::map<int, std::vector<Sextuple>> found;
    for (int n : counts) {
        ResonanceFilter f;
        f.set = S;
        f.inside = n;
        f.nontrivial_only = nontrivial;
        std::set<Sextuple> orbits;
        for (const auto& s : enumerate_resonances(box, f)) orbits.insert(std::min(s, conjugate(s)));
        const char* kind = n == 6 ? "interior" : (n == 4 ? "boundary" : "inside");
        for (const auto& s : orbits) {
            csv += orbit_csv_row(kind, s);
            found[n].push_back(s);
        }
        json arr = json::array();
        for (const auto& s : orbits) arr.push_back(s.str());
        res[std::string(kind) + "_" + std::to_string(n)] = arr;
    }
    const bool complete = is_complete(S);
    res["complete"] = complete;
    if (complete) res["action_preserving"] = is_action_preserving(S);

    Checks c;
    c.add("set is complete", complete, complete, 1);
    if (S == TangentialSet::paper_default() && !cfg.has("inside") && nontrivial && box >= 4) {
        const std::vector<Sextuple> interior{Sextuple{1, 1, -2, -1, -1, 2}};
        const std::vector<Sextuple> boundary{Sextuple{1, 2, -3, -1, -2, 3}, Sextuple{2, 2, -4, -2, -2, 4}};
        auto canon = [](std::vector<Sextuple> v) {
            for (auto& s : v) s = std::min(s, conjugate(s));
            std::sort(v.begin(), v.end());
            return v;
        };
        c.add("single interior orbit", canon(interior) == found[6], found[6].size(), 1);
        c.add("boundary orbits", canon(boundary) == found[4], found[4].size(), 2);
    }
    emit(cfg, "out", csv, std::cout);
    if (!cfg.has("report")) return c.ok ? 0 : 1;
    return finish(cfg, "resonances", res, c);
}

int cmd_birkhoff(const RunConfig& cfg) {
    const int cut = static_cast<int>(cfg.get_int("mode-cut", 8, 3, 12));
    const double eps = cfg.get_double("eps", 1e-3, 1e-12, 0.1);
    const auto H = TruncatedNlsHamiltonian::build(cut, eps);
    const auto R = normal_form_step(H);
    PolyHamiltonian L, M;
    for (int j = -cut; j <= cut; ++j) {
        L += PolyHamiltonian::mode_action(j);
        M += PolyHamiltonian::mode_action(j, static_cast<double>(j));
    }
    Checks c;
    c.add("{resonant sextic, H2} = 0", poisson_bracket(R.resonant_sextic, H.H2).empty(), 0, 0);
    c.add("{resonant sextic, L} = 0", poisson_bracket(R.resonant_sextic, L).empty(), 0, 0);
    c.add("{resonant sextic, M} = 0", poisson_bracket(R.resonant_sextic, M).empty(), 0, 0);
    json res;
    res["mode_cut"] = cut;
    res["eps"] = eps;
    res["resonant_terms"] = R.resonant_sextic.size();
    const auto S = TangentialSet::paper_default();
    for (int d : {0, 2}) {
        try {
            const auto part = extract_restricted(R, S, d, cut);
            for (const auto& k : part.checks) c.add("h6" + std::to_string(d) + " " + k.name, k.pass, k.measured, k.expected);
            res["h6" + std::to_string(d)] = to_text(part.part);
        } catch (const VerificationError& e) {
            c.add("h6" + std::to_string(d) + " closed form", false, 0, 0);
            res["h6" + std::to_string(d) + "_error"] = e.what();
        }
    }
    if (cfg.has("out")) emit(cfg, "out", to_text(R.HBirk), std::cout);
    return finish(cfg, "birkhoff", res, c);
}

int cmd_pendulum(const RunConfig& cfg) {
    const KVector K = K_of(cfg);
    const double E = cfg.get_double("E", 0.0, 0.0, 1e3);
    json res;
    Checks c;
    res["K"] = {K[0], K[1], K[2]};
    const auto fp = fixed_points(K);
    res["p_stable"] = fp.p_stable;
    res["p_unstable"] = fp.p_unstable;
    const auto sc = separatrix_crossings(K);
    res["separatrix"] = {{"p1", sc.p1}, {"p2", sc.p2}, {"level", sc.level}};
    const double Es = action_at_separatrix(K);
    res["E_separatrix"] = Es;
    if (E > 0) {
        if (E >= Es) throw DomainError("pendulum: E must lie below the separatrix action");
        const ParameterPoint xi{E, K};
        const auto aa = action_angle_data(xi);
        res["orbit"] = {{"E", E}, {"energy", aa.energy}, {"period", aa.period}, {"period_vf", aa.period_vf},
                        {"p_hi", aa.p_hi}, {"p_lo", aa.p_lo}};
        const auto fm = frequency_map(xi);
        res["lambda"] = fm.lambda;
        res["f0"] = fm.f0;
        const double rel = std::abs(aa.period - aa.period_vf) / aa.period;
        c.add("period quadrature vs flow", rel < 1e-8, rel, 1e-8);
    }
    c.add("crossings bracket the elliptic point", sc.p1 < fp.p_stable && fp.p_stable < sc.p2, fp.p_stable, 0);
    const long n = cfg.get_int("phase-portrait", 0, 0, 2000);
    if (n > 0) emit(cfg, "out", phase_portrait_csv(K, static_cast<int>(n)), std::cerr);
    return finish(cfg, "pendulum", res, c);
}

int cmd_floquet(const RunConfig& cfg) {
    const auto xi = ParameterPoint::from_xi(xi_of(cfg, {0.008, kKStar[0], kKStar[1], kKStar[2]}));
    const auto js = cfg.get_ints("j", {3, 4});
    const auto setup = xi.E == 0 ? FloquetSetup::limit(xi.K) : FloquetSetup::at(xi);
    json res;
    Checks c;
    res["xi"] = {xi.E, xi.K[0], xi.K[1], xi.K[2]};
    res["period"] = setup.period;
    res["f0"] = setup.f0;
    for (int j : js) {
        const auto r = floquet_exponents(j, setup);
        res["j" + std::to_string(j)] = {{"theta_plus", r.theta_plus},   {"theta_minus", r.theta_minus},
                                        {"phase", r.phase},             {"su2_angle", r.su2_angle},
                                        {"branch_point", r.branch_point}, {"periodicity_residual", r.periodicity_residual}};
        c.add("periodicity j=" + std::to_string(j), r.periodicity_residual < 1e-8, r.periodicity_residual, 1e-8);
    }
    return finish(cfg, "floquet", res, c);
}

int cmd_melnikov(const RunConfig& cfg, const std::string& action) {
    Checks c;
    if (action == "verify-star") {
        const auto rep = verify_star_nonresonance(static_cast<int>(cfg.get_int("brute-ell", 24, 1, 64)),
                                                  static_cast<int>(cfg.get_int("brute-modes", 40, 5, 200)));
        c.add("all cases pass", rep.all_pass, static_cast<double>(rep.brute_other_zeros.size()), 0);
        return finish(cfg, "melnikov verify-star", json::parse(rep.to_json()), c);
    }
    MeasureOptions mo;
    mo.eps = cfg.get_double("eps", mo.eps, 1e-12, 0.1);
    mo.tau = cfg.get_double("tau", mo.tau, 1, 20);
    mo.K0 = static_cast<int>(cfg.get_int("k0", mo.K0, 1, 64));
    mo.steps = static_cast<int>(cfg.get_int("steps", mo.steps, 1, 4));
    mo.samples = cfg.get_int("samples", mo.samples, 1, 10'000'000);
    mo.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long>(mo.seed), 0, 1L << 62));
    const auto gammas = cfg.get_doubles("gammas", {0.02, 0.05, 0.1});
    const std::string cache = cfg.get_string("spectra-cache", "");
    SpectraGrid grid;
    if (!cache.empty() && std::filesystem::exists(cache)) {
        grid = SpectraGrid::load(cache);
    } else {
        grid = SpectraGrid::build(Box4::default_domain(), static_cast<int>(cfg.get_int("grid", 3, 2, 9)));
        if (!cache.empty()) grid.save(cache);
    }
    const auto mr = measure_monte_carlo(grid, gammas, mo);
    json res;
    res["samples"] = mr.samples;
    res["gammas"] = mr.gammas;
    res["excised"] = mr.excised;
    res["per_step"] = mr.per_step;
    res["classes_per_step"] = mr.classes_per_step;
    // excised / gamma within a factor 3 across gammas
    double lo = INFINITY, hi = 0;
    for (std::size_t g = 0; g < gammas.size(); ++g) {
        const double r = mr.excised[g] / gammas[g];
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    const bool linear = lo > 0 && hi / lo <= 3;
    c.add("excised fraction linear in gamma", linear, lo > 0 ? hi / lo : INFINITY, 3);
    bool decay = true;
    for (const auto& ps : mr.per_step)
        for (std::size_t m = 1; m < ps.size(); ++m) decay = decay && ps[m] <= ps[m - 1];
    c.add("per-step excisions decay", decay, decay, 1);
    return finish(cfg, "melnikov measure", res, c);
}

int cmd_kam(const RunConfig& cfg) {
    KamParams p;
    p.gamma = cfg.get_double("gamma", p.gamma, 1e-6, 1);
    p.tau = cfg.get_double("tau", p.tau, 1, 20);
    p.K0 = static_cast<int>(cfg.get_int("k0", p.K0, 1, 64));
    p.eps = cfg.get_double("eps", p.eps, 1e-12, 0.1);
    const int steps = static_cast<int>(cfg.get_int("steps", 3, 1, 4));
    InitialStateOptions io;
    io.scale = cfg.get_double("scale", io.scale, 1e-12, 10);
    const auto xi = ParameterPoint::from_xi(xi_of(cfg, {0.008, 4.02, 0.03, 1.99}));
    const auto birk = normal_form_step(TruncatedNlsHamiltonian::build(p.mode_cut, p.eps));
    const auto S = TangentialSet::paper_default();
    const auto h60 = extract_restricted(birk, S, 0, p.mode_cut).part;
    const auto h62 = extract_restricted(birk, S, 2, p.mode_cut).part;
    const auto st = birkhoff_initial_state(h60, h62, xi, compute_spectra(xi), p, io);
    const auto run = kam_iterate(st, steps, p);
    Checks c;
    double worst = 0;
    for (const auto& s : run.steps) worst = std::max(worst, s.residual);
    c.add("homological residual", worst < 1e-12, worst, 1e-12);
    double minlr = INFINITY;
    for (double r : run.log_ratios) minlr = std::min(minlr, r);
    c.add("superlinear decay", minlr > 1.4, minlr, 1.4);
    c.add("telescopic bounds", run.telescopic, run.telescopic, 1);
    return finish(cfg, "kam", json::parse(run.to_json()), c);
}

int cmd_simulate(const RunConfig& cfg) {
    const double eps = cfg.get_double("eps", 1e-3, 1e-12, 1);
    const int J = static_cast<int>(cfg.get_int("J", 16, 2, 256));
    ParameterPoint xi;
    if (cfg.has("xi")) {
        xi = ParameterPoint::from_xi(xi_of(cfg, {}));
    } else {
        xi.E = 0.9 * action_at_separatrix(xi.K);
    }
    IntegrateOptions o;
    o.dt = cfg.get_double("dt", 0.02, 1e-9, 1);
    o.T = cfg.get_double("T", 100, 0, 1e9);
    o.stride = static_cast<int>(cfg.get_int("stride", 50, 1, 1L << 30));
    const std::string scheme = cfg.get_string("scheme", "split-step");
    if (scheme == "split-step")
        o.scheme = Scheme::SplitStep;
    else if (scheme == "implicit")
        o.scheme = Scheme::SymplecticImplicit;
    else
        throw InvalidInput("scheme must be split-step or implicit");
    const auto s = initial_data(xi, eps, J, cfg.get_double("phi0", 0, -1e6, 1e6));
    const auto tr = integrate(s, o);
    const auto r = diagnostics(tr);
    if (cfg.has("out")) {
        std::ostringstream os;
        write_csv(os, tr);
        emit(cfg, "out", os.str(), std::cout);
    }
    Checks c;
    c.add("mass drift", r.L_drift < 1e-8, r.L_drift, 1e-8);
    c.add("momentum drift", r.M_drift < 1e-8, r.M_drift, 1e-8);
    json res = json::parse(r.to_json());
    res["steps"] = tr.steps;
    res["samples"] = tr.samples.size();
    return finish(cfg, "simulate", res, c);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"beatnls: beating solutions of the quintic NLS on the circle"};
    app.require_subcommand(0, 1);
    std::string config_path;
    app.add_option("--config", config_path, "key = value configuration file");

    std::map<CLI::App*, Flags> flags;
    auto sub = [&](const std::string& name, const std::string& help) {
        auto* s = app.add_subcommand(name, help);
        flag(s, flags[s], "report", "write the JSON report here instead of stdout");
        return s;
    };

    auto* res = sub("resonances", "enumerate resonant sextuples, CSV of conjugate-orbit representatives");
    flag(res, flags[res], "box", "max |j|");
    flag(res, flags[res], "set", "tangential set, comma separated");
    flag(res, flags[res], "inside", "exact number of slots in the set");
    flag(res, flags[res], "nontrivial", "drop trivial resonances (true/false)");
    flag(res, flags[res], "out", "CSV path");

    auto* bk = sub("birkhoff", "one-step Birkhoff normal form and closed-form checks");
    flag(bk, flags[bk], "mode-cut", "mode window |j| <= cut");
    flag(bk, flags[bk], "eps", "small parameter");
    flag(bk, flags[bk], "out", "write HBirk as text");

    auto* pd = sub("pendulum", "reduced pendulum data at K");
    flag(pd, flags[pd], "K", "K1,K2,K3");
    flag(pd, flags[pd], "E", "action E (0: elliptic point only)");
    flag(pd, flags[pd], "phase-portrait", "grid size for the phase portrait CSV");
    flag(pd, flags[pd], "out", "phase portrait CSV path");

    auto* fl = sub("floquet", "Floquet exponents of the near-tangential blocks");
    flag(fl, flags[fl], "xi", "E,K1,K2,K3");
    flag(fl, flags[fl], "j", "block indices, comma separated");

    auto* me = sub("melnikov", "non-resonance verification and measure estimate");
    std::string me_action;
    me->add_option("action", me_action, "verify-star | measure")->required()->check(CLI::IsMember({"verify-star", "measure"}));
    for (const char* k : {"brute-ell", "brute-modes", "gammas", "samples", "seed", "eps", "tau", "k0", "steps", "grid",
                          "spectra-cache"})
        flag(me, flags[me], k, k);

    auto* km = sub("kam", "truncated KAM iteration from the Birkhoff-derived state");
    for (const char* k : {"xi", "steps", "gamma", "tau", "k0", "eps", "scale"}) flag(km, flags[km], k, k);

    auto* sm = sub("simulate", "Galerkin simulation of the quintic NLS");
    for (const char* k : {"xi", "eps", "J", "T", "dt", "phi0", "stride", "scheme", "out"}) flag(sm, flags[sm], k, k);

    if (argc <= 1) {
        std::cerr << app.help();
        return 2;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    CLI::App* chosen = nullptr;
    for (auto* s : app.get_subcommands()) chosen = s;
    if (!chosen) {
        std::cerr << app.help();
        return 2;
    }

    RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = RunConfig::load(config_path);
        // a shared file may carry keys of other commands, but not unknown ones
        std::set<std::string> known;
        for (const auto& [a, f] : flags) known.insert(f.keys.begin(), f.keys.end());
        for (const auto& [k, v] : cfg.values())
            if (!known.count(k)) throw InvalidInput("unknown key '" + k + "'");
        const Flags& f = flags[chosen];
        cfg.apply_env(f.keys);
        for (const auto& [k, v] : f.given) cfg.set(k, v);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        const std::string name = chosen->get_name();
        if (name == "resonances") return cmd_resonances(cfg);
        if (name == "birkhoff") return cmd_birkhoff(cfg);
        if (name == "pendulum") return cmd_pendulum(cfg);
        if (name == "floquet") return cmd_floquet(cfg);
        if (name == "melnikov") return cmd_melnikov(cfg, me_action);
        if (name == "kam") return cmd_kam(cfg);
        if (name == "simulate") return cmd_simulate(cfg);
    } catch (const InvalidInput& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

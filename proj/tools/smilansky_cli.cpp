// Command-line front end. Every artifact carries the FNV-1a hash of the
// resolved configuration; manifest.json records the configuration and status.

#include <CLI11.hpp>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "smilansky/band.hpp"
#include "smilansky/dynamics.hpp"
#include "smilansky/errors.hpp"
#include "smilansky/kernels.hpp"
#include "smilansky/recursion.hpp"
#include "smilansky/spectral.hpp"

using namespace smilansky;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Setting {
    std::string key;
    json fallback;
};

// Known settings per command. Shared model parameters are listed for all.
const std::map<std::string, std::vector<Setting>>& schema() {
    static const std::map<std::string, std::vector<Setting>> s = {
        {"bands",
         {{"q_min", -10.0}, {"q_max", 2.0}, {"q_points", 241}, {"n_bands", 3}, {"with_gamma", false}, {"l_max", 200}}},
        {"bands2d", {{"q_min", -10.0}, {"q_max", 10.0}, {"q_points", 81}, {"n", 0}}},
        {"recursion", {{"e", 2.0}, {"n_max", 100000}, {"precision_bits", 256}, {"stride", 100}}},
        {"spectral-check", {{"e", 2.0}, {"e2", 2.1}, {"n_max", 1000}}},
        {"evolve",
         {{"n_max", 400}, {"grid_points", 600}, {"dt", 0.01}, {"t_end", 5.0}, {"initial", "reference"},
          {"width", 0.3}, {"sample_every", 0.1}, {"eta", 0.5}, {"min_samples", 2}, {"n_bands", 0}}},
        {"band-evolve",
         {{"q_min", -60.0}, {"q_max", 60.0}, {"q_points", 6001}, {"dt", 0.001}, {"t_end", 3.0}, {"q0", 0.0},
          {"width", 1.0}, {"with_gamma", false}, {"harmonic_only", false}}},
        {"transition-scan", {{"n", 0}, {"oscillators", 1}, {"alpha_min", 0.5}, {"alpha_max", 2.0}}},
    };
    return s;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct Run {
    std::string command;
    json config;  // flat, resolved
    std::string hash;
    fs::path out;
    std::string format;
    std::vector<std::string> artifacts;

    double d(const std::string& k) const { return config.at(k).get<double>(); }
    int i(const std::string& k) const { return static_cast<int>(std::lround(config.at(k).get<double>())); }
    bool b(const std::string& k) const { return config.at(k).get<bool>(); }
    std::string s(const std::string& k) const { return config.at(k).get<std::string>(); }
    ModelParams params() const { return make_params(d("alpha"), d("omega")); }

    std::ofstream open(const std::string& name) {
        artifacts.push_back(name);
        std::ofstream f(out / name, std::ios::binary);
        if (!f) fail(ErrorKind::ConfigInvalid, "cannot write " + (out / name).string());
        return f;
    }
    void header(std::ofstream& f) const {
        f << "# config_hash: " << hash << "\n# command: " << command << "\n";
    }
    // CSV with '#' header lines, or a JSON object of columns
    void emit(const std::string& stem, const Table& t) {
        if (format == "json") {
            json cols = json::object();
            for (size_t c = 0; c < t.columns.size(); ++c) {
                json v = json::array();
                for (const auto& row : t.rows) v.push_back(row[c]);
                cols[t.columns[c]] = v;
            }
            write_json(stem + ".json", {{"columns", t.columns}, {"data", cols}});
            return;
        }
        auto f = open(stem + ".csv");
        header(f);
        for (size_t c = 0; c < t.columns.size(); ++c) f << (c ? "," : "") << t.columns[c];
        f << "\n";
        for (const auto& row : t.rows) {
            for (size_t c = 0; c < row.size(); ++c) f << (c ? "," : "") << num(row[c]);
            f << "\n";
        }
    }
    void write_json(const std::string& name, json body) {
        body["config_hash"] = hash;
        auto f = open(name);
        f << body.dump(1) << "\n";
    }
};

void cmd_bands(Run& r) {
    const auto p = r.params();
    const int m = r.i("q_points"), nb = r.i("n_bands");
    if (m < 2 || nb < 1) fail(ErrorKind::ConfigInvalid, "q_points >= 2 and n_bands >= 1 required");
    Table t;
    t.columns.push_back("q");
    for (int n = 0; n < nb; ++n) t.columns.push_back("W_" + std::to_string(n));
    for (const char* c : {"harmonic", "W0", "gamma_term", "V"}) t.columns.push_back(c);
    for (int k = 0; k < m; ++k) {
        const double q = r.d("q_min") + (r.d("q_max") - r.d("q_min")) * k / (m - 1);
        std::vector<double> row{q};
        for (int n = 0; n < nb; ++n) row.push_back(solve_xi(q, n, p).W);
        const auto v = band_potential(q, p, r.i("l_max"), r.b("with_gamma"));
        for (double x : {v.harmonic, v.W0, v.gamma_term, v.V}) row.push_back(x);
        t.rows.push_back(row);
    }
    r.emit("bands", t);
    const auto c = classify_band_curve(p);
    r.write_json("bands_summary.json", {{"shape", to_string(c.shape)}, {"quadratic_coefficient", c.quadratic_coefficient}});
}

void cmd_bands2d(Run& r) {
    const auto p = r.params();
    const int m = r.i("q_points");
    if (m < 2) fail(ErrorKind::ConfigInvalid, "q_points >= 2 required");
    std::vector<double> g(m);
    for (int k = 0; k < m; ++k) g[k] = r.d("q_min") + (r.d("q_max") - r.d("q_min")) * k / (m - 1);
    const auto s = band_surface(g, g, r.i("n"), p);
    json E = json::array(), R = json::array(), I = json::array();
    for (int a = 0; a < m; ++a) {
        json e = json::array(), rr = json::array(), ii = json::array();
        for (int b = 0; b < m; ++b) {
            e.push_back(s.E[a][b]);
            rr.push_back(bool(s.region[a][b]));
            ii.push_back(bool(s.imaginary[a][b]));
        }
        E.push_back(e);
        R.push_back(rr);
        I.push_back(ii);
    }
    json body = {{"alpha", p.alpha}, {"omega", p.omega}, {"n", s.n}, {"q1", g}, {"q2", g},
                 {"E", E}, {"region", R}, {"xi0_imaginary", I}, {"shape", to_string(s.shape)}};
    if (s.n == 0 && s.shape == SurfaceShape::valleys_and_crest) body["crest_half_width"] = crest_half_width(p);
    r.write_json("bands2d.json", body);
}

void cmd_recursion(Run& r) {
    const auto p = r.params();
    const int n_max = r.i("n_max"), stride = std::max(1, r.i("stride"));
    const auto sol = solve_recursion(r.d("e"), n_max, p, r.i("precision_bits"));
    json fit_json;
    if (n_max >= 10000) {
        const auto fit = fit_asymptotics(sol, n_max / 10, n_max);
        fit_json = {{"theta_fit", fit.theta_fit}, {"lambda_fit", fit.lambda_fit}, {"zeta_fit", fit.zeta_fit},
                    {"amplitude_fit", fit.amplitude_fit}, {"residual_rms", fit.residual_rms},
                    {"theta_closed", theta_closed(p)}, {"lambda_closed", lambda_closed(p)}};
    }
    Table t{{"n", "C"}, {}};
    for (int n = 0; n <= n_max; n += stride) t.rows.push_back({double(n), sol.C[n]});
    r.emit("recursion", t);
    r.write_json("recursion_fit.json", {{"E", sol.E}, {"precision_bits", sol.precision_bits}, {"fit", fit_json}});
}

void cmd_spectral_check(Run& r) {
    const auto p = r.params();
    const double e1 = r.d("e"), e2 = r.d("e2");
    const int n_max = r.i("n_max");
    const auto tab = build_table({e1, e2}, n_max + 1, p);
    Table t{{"N", "lhs", "rhs", "gap"}, {}};
    for (int N = 1; N <= n_max; N = N < 10 ? N + 1 : N * 2) {
        const auto c = telescoping_check(e1, e2, N, tab);
        t.rows.push_back({double(N), c.lhs, c.rhs, c.gap});
    }
    r.emit("telescoping", t);
}

void write_trace(Run& r, const ObservableTrace& tr) {
    Table t{{"t", "norm2", "E_osc", "E_osc_avg", "tail_prob", "q_mean", "coherence", "offdiag_mass"}, {}};
    for (size_t k = 0; k < tr.times.size(); ++k)
        t.rows.push_back({tr.times[k], tr.norm2[k], tr.E_osc[k], tr.E_osc_time_avg[k], tr.tail_prob[k], tr.q_mean[k],
                          tr.coherence[k], tr.offdiag_mass[k]});
    r.emit("trace", t);
    if (tr.band_pops.empty()) return;
    Table b{{"t"}, {}};
    for (size_t n = 0; n < tr.band_pops.front().size(); ++n) b.columns.push_back("pop_" + std::to_string(n));
    for (size_t k = 0; k < tr.band_pops.size(); ++k) {
        std::vector<double> row{tr.band_pops_times[k]};
        row.insert(row.end(), tr.band_pops[k].begin(), tr.band_pops[k].end());
        b.rows.push_back(row);
    }
    r.emit("band_pops", b);
}

int cmd_evolve(Run& r) {
    const auto p = r.params();
    const int N = r.i("n_max") + 1, M = r.i("grid_points");
    HalfGrid grid(M);
    ChannelState psi;
    if (r.s("initial") == "reference") {
        const auto prof = reference_profile();
        const auto tab = build_table(prof.rule.x, N - 1, p);
        psi = synthesize(prof, tab, grid, 1e-6);
    } else if (r.s("initial") == "gaussian") {
        psi = gaussian_product_state(grid, N, r.d("width"));
    } else {
        fail(ErrorKind::ConfigInvalid, "initial must be reference or gaussian");
    }
    PropagatorConfig cfg;
    cfg.dt = r.d("dt");
    Propagator prop(p, grid, N, cfg);
    TraceOptions opt;
    opt.sample_every = r.d("sample_every");
    opt.eta = r.d("eta");
    opt.observables = {Observable::E_osc, Observable::tail_prob, Observable::q_mean, Observable::coherence};
    opt.n_bands = r.i("n_bands");
    if (opt.n_bands > 0) opt.observables.push_back(Observable::band_pops);
    const auto tr = evolve_and_trace(psi, prop, r.d("t_end"), opt);
    write_trace(r, tr);
    r.write_json("evolve_summary.json", {{"truncation_leak", tr.truncation_leak}, {"leak_time", tr.leak_time},
                                         {"samples", tr.times.size()}});
    if (tr.truncation_leak && static_cast<int>(tr.times.size()) < r.i("min_samples")) return 1;
    return 0;
}

void cmd_band_evolve(Run& r) {
    const auto p = r.params();
    const int m = r.i("q_points");
    if (m < 3) fail(ErrorKind::ConfigInvalid, "q_points >= 3 required");
    std::vector<double> q(m);
    for (int k = 0; k < m; ++k) q[k] = r.d("q_min") + (r.d("q_max") - r.d("q_min")) * k / (m - 1);
    std::vector<double> V;
    if (r.b("harmonic_only")) {
        for (double x : q) V.push_back(0.5 * p.omega * p.omega * x * x);
    } else {
        V = band_potential_samples(q, p, r.b("with_gamma"));
    }
    auto s = make_band_state(q, V, r.d("q0"), r.d("width"));
    const auto tr = band_reduced_evolve(s, r.d("dt"), r.d("t_end"));
    Table t{{"t", "norm2", "q_mean", "q2_mean", "energy"}, {}};
    for (size_t k = 0; k < tr.times.size(); ++k)
        t.rows.push_back({tr.times[k], tr.norm2[k], tr.q_mean[k], tr.q2_mean[k], tr.energy[k]});
    r.emit("band_trace", t);
}

void cmd_transition(Run& r) {
    const double a = detect_band_transition(r.i("n"), r.i("oscillators"), r.d("omega"), r.d("alpha_min"), r.d("alpha_max"));
    r.write_json("transition.json", {{"n", r.i("n")}, {"oscillators", r.i("oscillators")}, {"critical_alpha", a}});
}

void check_numeric(const Run& r) {
    for (const auto& [k, v] : r.config.items()) {
        if (v.is_number() && !std::isfinite(v.get<double>())) fail(ErrorKind::ConfigInvalid, k + " is not finite");
    }
    validate(r.params());
    for (const char* k : {"dt", "t_end", "width", "sample_every"})
        if (r.config.contains(k) && !(r.d(k) > 0.0)) fail(ErrorKind::ConfigInvalid, std::string(k) + " must be positive");
    for (const char* k : {"n_max", "grid_points"})
        if (r.config.contains(k) && r.i(k) < 2) fail(ErrorKind::ConfigInvalid, std::string(k) + " must be at least 2");
    if (r.config.contains("q_min") && !(r.d("q_max") > r.d("q_min")))
        fail(ErrorKind::ConfigInvalid, "q_max must exceed q_min");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite-box Smilansky model laboratory"};
    app.require_subcommand(0, 1);
    std::string config_path, out_dir = ".", format = "csv";
    app.add_option("--config", config_path, "flat JSON document with dotted keys");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    // flag name -> setting key
    const std::vector<std::pair<std::string, std::string>> flags = {
        {"--alpha", "alpha"},       {"--omega", "omega"},       {"--n-max", "n_max"},
        {"--e", "e"},               {"--e2", "e2"},             {"--e-min", "e_min"},
        {"--e-max", "e_max"},       {"--q-min", "q_min"},       {"--q-max", "q_max"},
        {"--q-grid", "q_points"},   {"--dt", "dt"},             {"--t-end", "t_end"},
        {"--precision-bits", "precision_bits"}, {"--n-bands", "n_bands"}, {"--l-max", "l_max"},
        {"--n", "n"},               {"--oscillators", "oscillators"}, {"--grid-points", "grid_points"},
        {"--stride", "stride"},     {"--q0", "q0"},             {"--width", "width"},
        {"--sample-every", "sample_every"}, {"--eta", "eta"},   {"--min-samples", "min_samples"},
        {"--alpha-min", "alpha_min"}, {"--alpha-max", "alpha_max"},
    };
    std::map<std::string, std::optional<double>> numeric;
    std::optional<std::string> initial;
    bool with_gamma = false, harmonic_only = false;

    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, settings] : schema()) {
        auto* sc = app.add_subcommand(name);
        subs[name] = sc;
        sc->fallthrough();
        for (const auto& [flag, key] : flags) {
            bool known = key == "alpha" || key == "omega";
            for (const auto& s : settings) known = known || s.key == key;
            if (known) sc->add_option(flag, numeric[name + "." + key]);
        }
        if (name == "evolve") sc->add_option("--initial", initial);
        if (name == "bands" || name == "band-evolve") sc->add_flag("--with-gamma", with_gamma);
        if (name == "band-evolve") sc->add_flag("--harmonic-only", harmonic_only);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    Run run;
    fs::path manifest_dir = out_dir;
    try {
        json file = json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) fail(ErrorKind::ConfigInvalid, "cannot read " + config_path);
            std::stringstream ss;
            ss << in.rdbuf();
            if (ss.str().find_first_not_of(" \t\r\n") == std::string::npos)
                fail(ErrorKind::ConfigInvalid, "empty config");
            try {
                file = json::parse(ss.str());
            } catch (const json::exception& e) {
                fail(ErrorKind::ConfigInvalid, e.what());
            }
            if (!file.is_object()) fail(ErrorKind::ConfigInvalid, "config must be a flat object");
        }
        std::string command;
        for (const auto& [name, sc] : subs)
            if (sc->parsed()) command = name;
        if (command.empty() && file.contains("command")) command = file["command"].get<std::string>();
        if (command.empty()) fail(ErrorKind::ConfigInvalid, "no command given");
        if (!schema().count(command)) fail(ErrorKind::ConfigInvalid, "unknown command " + command);

        // defaults < file < flags
        // the transition scan sweeps alpha itself
        json cfg = {{"alpha", command == "transition-scan" ? json(1.0) : json(nullptr)}, {"omega", 1.0}};
        for (const auto& s : schema().at(command)) cfg[s.key] = s.fallback;
        for (const auto& [k, v] : file.items()) {
            if (k == "command") continue;
            std::string key = k;
            if (key.rfind("params.", 0) == 0) key = key.substr(7);
            if (key.rfind(command + ".", 0) == 0) key = key.substr(command.size() + 1);
            if (!cfg.contains(key)) fail(ErrorKind::ConfigInvalid, "unknown key " + k);
            if (v.is_object() || v.is_array()) fail(ErrorKind::ConfigInvalid, "config must be flat: " + k);
            cfg[key] = v;
        }
        for (const auto& [k, v] : numeric) {
            const auto dot = k.find('.');
            if (v && k.substr(0, dot) == command) cfg[k.substr(dot + 1)] = *v;
        }
        if (initial) cfg["initial"] = *initial;
        if (with_gamma) cfg["with_gamma"] = true;
        if (harmonic_only) cfg["harmonic_only"] = true;
        if (cfg["alpha"].is_null()) fail(ErrorKind::ConfigInvalid, "alpha is required");
        for (auto& [k, v] : cfg.items()) {
            if (v.is_null()) fail(ErrorKind::ConfigInvalid, k + " has no value");
            if (v.is_number()) v = v.get<double>();
        }

        run.command = command;
        run.config = cfg;
        run.format = format;
        run.out = out_dir;
        json canon = {{"command", command}, {"config", cfg}};
        char hb[32];
        std::snprintf(hb, sizeof hb, "%016" PRIx64, fnv1a(canon.dump()));
        run.hash = hb;
        try {
            check_numeric(run);
        } catch (const Error& e) {
            fail(ErrorKind::ConfigInvalid, e.what());
        }
        fs::create_directories(run.out);
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "ConfigInvalid: " << e.what() << "\n";
        return 2;
    }

    json manifest = {{"version", kVersion}, {"command", run.command}, {"config", run.config},
                     {"config_hash", run.hash}, {"simd", kernels().name}};
    int code = 0;
    try {
        if (run.command == "bands") cmd_bands(run);
        else if (run.command == "bands2d") cmd_bands2d(run);
        else if (run.command == "recursion") cmd_recursion(run);
        else if (run.command == "spectral-check") cmd_spectral_check(run);
        else if (run.command == "evolve") code = cmd_evolve(run);
        else if (run.command == "band-evolve") cmd_band_evolve(run);
        else if (run.command == "transition-scan") cmd_transition(run);
        manifest["status"] = code == 0 ? "ok" : "truncation_leak";
    } catch (const Error& e) {
        manifest["status"] = "error";
        manifest["error"] = {{"kind", to_string(e.kind())}, {"message", e.what()}};
        std::cerr << "ComputeFailed: " << e.what() << "\n";
        code = 1;
    }
    manifest["artifacts"] = run.artifacts;
    std::ofstream m(run.out / "manifest.json", std::ios::binary);
    m << manifest.dump(1) << "\n";
    return code;
}

// implab: command-line front end over the regimes / profile / simulator
// modules.  Exit codes: 0 pass, 1 property or condition failure, 2 usage or
// parse error.  All numeric output is 17-significant-digit text.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "implab/phase_portrait.hpp"
#include "implab/profile.hpp"
#include "implab/regimes.hpp"
#include "implab/simulator.hpp"
#include "implab/sweep.hpp"
#include "implab/transforms.hpp"

using namespace implab;

namespace {

constexpr const char* kVersion = "implab 1.0";

std::string num17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Tiny JSON emitter: insertion-ordered keys, doubles at 17 significant digits.
class Json {
  public:
    void add(const std::string& key, double v) {
        entries_.push_back({key, std::isfinite(v) ? num17(v) : "null"});
    }
    void add(const std::string& key, int v) { entries_.push_back({key, std::to_string(v)}); }
    void add(const std::string& key, bool v) { entries_.push_back({key, v ? "true" : "false"}); }
    void add(const std::string& key, const char* v) { add(key, std::string(v)); }
    void add(const std::string& key, const std::string& v) {
        std::string quoted = "\"";
        for (char c : v) {
            if (c == '"' || c == '\\') quoted += '\\';
            if (c == '\n') {
                quoted += "\\n";
                continue;
            }
            quoted += c;
        }
        quoted += '"';
        entries_.push_back({key, quoted});
    }
    void add_null(const std::string& key) { entries_.push_back({key, "null"}); }

    std::string str() const {
        std::string out = "{\n";
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            out += "  \"" + entries_[i].first + "\": " + entries_[i].second;
            if (i + 1 < entries_.size()) out += ',';
            out += '\n';
        }
        out += "}\n";
        return out;
    }

  private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat key=value config with [section] headers; '#' starts a comment.
struct ConfigSection {
    std::string name;
    std::map<std::string, std::string> values;
    int line = 0;
};

std::vector<ConfigSection> parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::vector<ConfigSection> sections;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        std::size_t a = s.find_first_not_of(" \t\r");
        std::size_t b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": malformed section header");
            sections.push_back({trim(line.substr(1, line.size() - 2)), {}, lineno});
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) +
                              ": expected key=value");
        if (sections.empty())
            throw ConfigError("line " + std::to_string(lineno) +
                              ": key before any [section]");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (!sections.back().values.emplace(key, val).second)
            throw ConfigError("line " + std::to_string(lineno) +
                              ": duplicate key '" + key + "'");
    }
    return sections;
}

// Schema-checked accessors.
class Section {
  public:
    Section(const ConfigSection& raw, std::vector<std::string> allowed)
        : raw_(raw) {
        for (const auto& kv : raw.values) {
            bool ok = false;
            for (const auto& k : allowed)
                if (k == kv.first) ok = true;
            if (!ok)
                throw ConfigError("unknown key '" + kv.first + "' in section [" +
                                  raw.name + "]");
        }
    }
    std::optional<std::string> get(const std::string& key) const {
        auto it = raw_.values.find(key);
        if (it == raw_.values.end()) return std::nullopt;
        return it->second;
    }
    std::string require(const std::string& key) const {
        auto v = get(key);
        if (!v)
            throw ConfigError("missing required key '" + key + "' in section [" +
                              raw_.name + "]");
        return *v;
    }
    double number(const std::string& key) const { return to_num(key, require(key)); }
    double number(const std::string& key, double fallback) const {
        auto v = get(key);
        return v ? to_num(key, *v) : fallback;
    }
    std::optional<double> number_opt(const std::string& key) const {
        auto v = get(key);
        if (!v) return std::nullopt;
        return to_num(key, *v);
    }
    bool flag(const std::string& key, bool fallback) const {
        auto v = get(key);
        if (!v) return fallback;
        if (*v == "true" || *v == "1") return true;
        if (*v == "false" || *v == "0") return false;
        throw ConfigError("key '" + key + "': expected true/false, got '" + *v + "'");
    }

  private:
    double to_num(const std::string& key, const std::string& s) const {
        try {
            std::size_t pos = 0;
            double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("key '" + key + "': not a number: '" + s + "'");
        }
    }
    const ConfigSection& raw_;
};

Json regime_json(const RegimeReport& rep) {
    Json j;
    j.add("tool", kVersion);
    j.add("gamma", rep.gamma);
    if (rep.delta) j.add("delta", *rep.delta); else j.add_null("delta");
    if (rep.lambda) j.add("lambda", *rep.lambda); else j.add_null("lambda");
    j.add("lambda_star", rep.lambda_star);
    j.add("delta_star", rep.delta_star);
    if (rep.delta_dis) j.add("delta_dis", *rep.delta_dis); else j.add_null("delta_dis");
    j.add("condition_p1", rep.condition_p1);
    j.add("condition_p2", rep.condition_p2);
    j.add("exceptional_set", rep.exceptional_set);
    j.add("notes", rep.notes);
    return j;
}

int cmd_regime(double gamma, std::optional<double> delta,
               std::optional<double> lambda) {
    RegimeReport rep;
    try {
        rep = check_regime(gamma, delta, lambda);
    } catch (const DomainError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }
    std::cout << regime_json(rep).str();
    if (!delta) return 0;
    return (rep.condition_p1 || rep.condition_p2) ? 0 : 1;
}

int cmd_profile(double gamma, std::optional<std::pair<double, double>> bracket,
                int order, double tol, const std::string& out_path) {
    if (!(gamma > 1.0) || !(gamma < gamma_upper())) {
        std::cerr << "usage error: gamma must lie in (1, 1 + 2/sqrt(3))\n";
        return 2;
    }
    try {
        ShootResult shot = bracket ? shoot_lambda(gamma, *bracket, order, tol)
                                   : shoot_lambda(gamma, order, tol);
        auto model = GasModel::make(gamma, 0.0, shot.lambda);
        auto table = reconstruct(shot, model);
        auto rep = verify_properties(table);
        auto res = steady_residual(table);
        save_profile(table, out_path);
        Json j;
        j.add("tool", kVersion);
        j.add("gamma", gamma);
        j.add("lambda", shot.lambda);
        j.add("mismatch", shot.mismatch);
        j.add("match_order", shot.achieved_match_order);
        j.add("r_sonic", table.r_sonic);
        j.add("eta_tilde", rep.eta_tilde);
        j.add("decay_exp_q", rep.decay_exp_q);
        j.add("res_q", res.res_q);
        j.add("res_u", res.res_u);
        j.add("path", out_path);
        std::cout << j.str();
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_verify(const std::string& path) {
    ProfileTable table;
    try {
        table = load_profile(path);
    } catch (const std::exception& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    }
    const double residual_limit = 1e-6;
    try {
        auto rep = verify_properties(table);
        auto res = steady_residual(table);
        Json j;
        j.add("tool", kVersion);
        j.add("gamma", table.model.gamma);
        j.add("lambda", table.model.lambda);
        j.add("min_q_bar", rep.min_q_bar);
        j.add("radial_margin", rep.radial_margin);
        j.add("angular_margin", rep.angular_margin);
        j.add("farfield_margin", rep.farfield_margin);
        j.add("eta_tilde", rep.eta_tilde);
        j.add("decay_exp_q", rep.decay_exp_q);
        j.add("res_q", res.res_q);
        j.add("res_u", res.res_u);
        bool pass = res.res_q <= residual_limit && res.res_u <= residual_limit;
        j.add("residual_limit", residual_limit);
        j.add("pass", pass);
        std::cout << j.str();
        if (!pass) {
            std::cerr << "fail: steady residual above " << num17(residual_limit)
                      << "\n";
            return 1;
        }
        return 0;
    } catch (const ProfileError& e) {
        std::cerr << "fail: " << e.what() << "\n";
        return 1;
    }
}

struct ResolvedSim {
    GasModel model;
    ProfileTable table;
    SimConfig cfg;
    RadialState initial;
    std::string csv_path;
    std::string json_path;  // empty = stdout
    std::optional<double> drift_threshold;
};

ResolvedSim resolve_sim(const std::string& config_path) {
    auto sections = parse_config(config_path);
    const ConfigSection* model_raw = nullptr;
    const ConfigSection* run_raw = nullptr;
    const ConfigSection* init_raw = nullptr;
    const ConfigSection* out_raw = nullptr;
    for (const auto& s : sections) {
        if (s.name == "model") model_raw = &s;
        else if (s.name == "run") run_raw = &s;
        else if (s.name == "init") init_raw = &s;
        else if (s.name == "output") out_raw = &s;
        else throw ConfigError("unknown section [" + s.name + "]");
    }
    if (!model_raw || !run_raw || !init_raw || !out_raw)
        throw ConfigError("config needs sections [model], [run], [init], [output]");

    Section model_s(*model_raw, {"gamma", "delta", "a1", "a2", "lambda"});
    Section run_s(*run_raw,
                  {"frame", "n_cells", "r_max", "cfl", "viscous", "time_end",
                   "max_density", "min_dt", "output_cadence", "k_surrogate",
                   "farfield_cbar", "farfield_relax", "r0", "c0", "eta",
                   "drift_threshold"});
    Section init_s(*init_raw, {"kind", "time0", "T", "nu1", "x_max", "n"});
    Section out_s(*out_raw, {"csv", "json"});

    ResolvedSim rs;
    double gamma = model_s.number("gamma");
    double delta = model_s.number("delta");
    auto lambda_in = model_s.number_opt("lambda");

    ShootResult shot = shoot_lambda(gamma, 3, 1e-10);
    double lambda = lambda_in ? *lambda_in : shot.lambda;
    rs.model = GasModel::make(gamma, delta, lambda, model_s.number("a1"),
                              model_s.number("a2", 0.0));
    rs.table = reconstruct(shot, GasModel::make(gamma, 0.0, shot.lambda));

    std::string frame_name = run_s.require("frame");
    if (frame_name == "eulerian") rs.cfg.frame = Frame::eulerian;
    else if (frame_name == "selfsim") rs.cfg.frame = Frame::selfsim;
    else throw ConfigError("key 'frame': expected eulerian or selfsim");

    rs.cfg.model = rs.model;
    rs.cfg.n_cells = (std::size_t)run_s.number("n_cells");
    rs.cfg.r_max = run_s.number("r_max");
    rs.cfg.cfl = run_s.number("cfl", 0.4);
    rs.cfg.viscous = run_s.flag("viscous", true);
    rs.cfg.time_end = run_s.number("time_end");
    rs.cfg.max_density = run_s.number("max_density", rs.cfg.max_density);
    rs.cfg.min_dt = run_s.number("min_dt", rs.cfg.min_dt);
    rs.cfg.output_cadence = run_s.number("output_cadence", 0.05);
    rs.cfg.k_surrogate = (int)run_s.number("k_surrogate", 1);
    if (auto v = run_s.number_opt("farfield_cbar")) rs.cfg.farfield_cbar = *v;
    rs.cfg.farfield_relax = run_s.flag("farfield_relax", true);
    rs.cfg.cutoffs.r0 = run_s.number("r0", 5.0);
    rs.cfg.cutoffs.c0 = run_s.number("c0", 10.0);
    rs.cfg.cutoffs.eta = run_s.number("eta", 0.5);
    rs.drift_threshold = run_s.number_opt("drift_threshold");
    if (!rs.cfg.valid()) throw ConfigError("run parameters fail validation");

    std::string kind = init_s.require("kind");
    if (kind == "profile") {
        double time0 = init_s.number("time0", 0.0);
        rs.initial = state_from_profile(rs.table, rs.cfg.frame, time0,
                                        rs.cfg.n_cells + 1, rs.cfg.r_max);
    } else if (kind == "initial-data") {
        if (rs.cfg.frame != Frame::eulerian)
            throw ConfigError("init kind 'initial-data' requires frame=eulerian");
        double T = init_s.number("T");
        auto frame = SelfSimFrame::make(T, rs.model.lambda);
        auto data = build_initial_data(
            rs.table, rs.model, frame, rs.cfg.cutoffs, init_s.number("nu1"),
            (std::size_t)init_s.number("n", (double)(rs.cfg.n_cells + 1)),
            init_s.number("x_max", rs.cfg.r_max));
        rs.initial = state_from_initial_data(data, rs.model.alpha);
    } else {
        throw ConfigError("key 'kind': expected profile or initial-data");
    }

    rs.csv_path = out_s.require("csv");
    if (auto v = out_s.get("json")) rs.json_path = *v;
    return rs;
}

int cmd_simulate(const std::string& config_path) {
    ResolvedSim rs;
    try {
        rs = resolve_sim(config_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    try {
        auto series = run(rs.cfg, std::move(rs.initial), &rs.table);
        save_diagnostics(series, rs.csv_path);

        Json j;
        j.add("tool", kVersion);
        j.add("gamma", rs.model.gamma);
        j.add("delta", rs.model.delta);
        j.add("lambda", rs.model.lambda);
        j.add("a1", rs.model.a1);
        j.add("a2", rs.model.a2);
        j.add("c_dis", rs.model.c_dis);
        j.add("delta_dis", rs.model.delta_dis);
        j.add("frame", to_string(series.frame));
        j.add("n_cells", (int)series.n_cells);
        j.add("k_surrogate", rs.cfg.k_surrogate);
        j.add("termination", series.termination);
        j.add("records", (int)series.records.size());
        try {
            auto fit = fit_exponents(series, rs.model, series.frame);
            if (series.frame == Frame::eulerian) {
                j.add("rho_slope", fit.rho_slope);
                j.add("rho_slope_target", fit.rho_slope_target);
                j.add("t_eff", fit.t_eff);
                j.add("decades", fit.decades);
            } else {
                j.add("fdis_rate", fit.fdis_rate);
                j.add("fdis_rate_target", fit.fdis_rate_target);
                j.add("ptb_rate", fit.ptb_rate);
            }
        } catch (const SimError& e) {
            j.add("fit_error", std::string(e.what()));
        }
        double drift = series.records.back().sup_ptb_q;
        j.add("final_sup_ptb_q", drift);
        j.add("csv", rs.csv_path);
        std::string text = j.str();
        if (rs.json_path.empty()) {
            std::cout << text;
        } else {
            std::ofstream out(rs.json_path);
            out << text;
        }
        if (rs.drift_threshold && drift > *rs.drift_threshold) {
            std::cerr << "fail: drift " << num17(drift) << " above threshold "
                      << num17(*rs.drift_threshold) << "\n";
            return 1;
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_sweep(const std::string& config_path, unsigned jobs,
              const std::string& out_path) {
    std::vector<SweepCase> cases;
    try {
        auto sections = parse_config(config_path);
        SweepCase defaults;
        for (const auto& raw : sections) {
            if (raw.name == "sweep") {
                Section s(raw, {"n_cells", "tau_end", "a1", "a2", "r_max"});
                defaults.n_cells = (std::size_t)s.number("n_cells", 512.0);
                defaults.tau_end = s.number("tau_end", 0.5);
                defaults.a1 = s.number("a1", 1e-8);
                defaults.a2 = s.number("a2", 0.0);
                defaults.r_max = s.number("r_max", 10.0);
            } else if (raw.name == "case") {
                Section s(raw, {"gamma", "delta", "lambda"});
                SweepCase k = defaults;
                k.index = cases.size();
                k.gamma = s.number("gamma");
                k.delta = s.number("delta");
                k.lambda = s.number_opt("lambda");
                cases.push_back(k);
            } else {
                throw ConfigError("unknown section [" + raw.name + "]");
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    auto csv = sweep_csv(run_sweep(cases, jobs));
    if (out_path.empty()) {
        std::cout << csv;
    } else {
        std::ofstream out(out_path);
        if (!out) {
            std::cerr << "error: cannot write " << out_path << "\n";
            return 1;
        }
        out << csv;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"self-similar implosion laboratory"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    double gamma = 0.0;
    std::optional<double> delta, lambda;
    auto* regime = app.add_subcommand("regime", "admissibility report for (gamma, delta, lambda)");
    regime->add_option("--gamma", gamma, "adiabatic exponent")->required();
    regime->add_option("--delta", delta, "viscosity exponent");
    regime->add_option("--lambda", lambda, "self-similar exponent");

    double p_gamma = 0.0, p_tol = 1e-10;
    int p_order = 3;
    std::vector<double> p_bracket;
    std::string p_out;
    auto* profile = app.add_subcommand("profile", "shoot, reconstruct, verify and save a profile");
    profile->add_option("--gamma", p_gamma, "adiabatic exponent")->required();
    profile->add_option("--bracket", p_bracket, "lambda search bracket (two values)")
        ->expected(2);
    profile->add_option("--order", p_order, "requested Taylor match order");
    profile->add_option("--tol", p_tol, "shooting tolerance");
    profile->add_option("--out", p_out, "output profile path")->required();

    std::string v_path;
    auto* verify = app.add_subcommand("verify", "re-verify a saved profile file");
    verify->add_option("--profile", v_path, "profile file path")->required();

    std::string s_config;
    auto* simulate = app.add_subcommand("simulate", "run a configured simulation");
    simulate->add_option("--config", s_config, "key=value config path")->required();

    std::string w_config, w_out;
    unsigned w_jobs = 1;
    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep");
    sweep->add_option("--config", w_config, "sweep config path")->required();
    sweep->add_option("--jobs", w_jobs, "worker count")->check(CLI::PositiveNumber);
    sweep->add_option("--out", w_out, "output CSV path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (regime->parsed()) return cmd_regime(gamma, delta, lambda);
    if (profile->parsed()) {
        std::optional<std::pair<double, double>> bracket;
        if (!p_bracket.empty()) bracket = {p_bracket[0], p_bracket[1]};
        return cmd_profile(p_gamma, bracket, p_order, p_tol, p_out);
    }
    if (verify->parsed()) return cmd_verify(v_path);
    if (simulate->parsed()) return cmd_simulate(s_config);
    if (sweep->parsed()) return cmd_sweep(w_config, w_jobs, w_out);
    return 2;
}

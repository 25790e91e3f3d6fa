#include "uma/config.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "uma/result_cache.hpp"

namespace uma {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

struct KvView {
    std::map<std::string, std::string> kv;
    std::vector<std::string>* errors;
    std::vector<std::string> seen;

    bool has(const std::string& k) const { return kv.count(k) > 0; }

    template <typename F>
    void with(const std::string& key, F&& f) {
        auto it = kv.find(key);
        if (it == kv.end()) return;
        seen.push_back(key);
        f(it->second);
    }

    void number(const std::string& key, double* out, double lo, double hi) {
        with(key, [&](const std::string& v) {
            if (v == "inf" || v == "infinity") {
                *out = std::numeric_limits<double>::infinity();
                if (!(hi == std::numeric_limits<double>::infinity()))
                    errors->push_back(key + ": must be finite");
                return;
            }
            try {
                std::size_t pos = 0;
                double x = std::stod(v, &pos);
                if (pos != v.size()) throw std::invalid_argument("trailing");
                if (x < lo || x > hi) {
                    errors->push_back(key + ": value " + v + " outside [" +
                                      canonic(lo) + ", " + canonic(hi) + "]");
                    return;
                }
                *out = x;
            } catch (...) {
                errors->push_back(key + ": not a number: " + v);
            }
        });
    }

    void integer(const std::string& key, long long* out, long long lo, long long hi) {
        double tmp = static_cast<double>(*out);
        bool had = has(key);
        number(key, &tmp, static_cast<double>(lo), static_cast<double>(hi));
        if (had && tmp != std::floor(tmp)) {
            errors->push_back(key + ": must be an integer");
            return;
        }
        *out = static_cast<long long>(tmp);
    }

    static std::string canonic(double v) {
        if (v == std::numeric_limits<double>::infinity()) return "inf";
        if (v == -std::numeric_limits<double>::infinity()) return "-inf";
        std::ostringstream ss;
        ss << v;
        return ss.str();
    }
};

}  // namespace

const char* figure_name(FigurePreset p) {
    switch (p) {
        case FigurePreset::fig3: return "fig3";
        case FigurePreset::fig4: return "fig4";
        case FigurePreset::fig5: return "fig5";
        case FigurePreset::fig6: return "fig6";
        case FigurePreset::fig7: return "fig7";
        case FigurePreset::fig8: return "fig8";
        default: return "custom";
    }
}

ConfigParseResult validate_config(const std::string& raw) {
    ConfigParseResult res;
    KvView view;
    view.errors = &res.errors;

    std::istringstream in(raw);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos) {
            res.errors.push_back("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        std::string key = trim(t.substr(0, eq));
        std::string val = trim(t.substr(eq + 1));
        if (key.empty()) {
            res.errors.push_back("line " + std::to_string(lineno) + ": empty key");
            continue;
        }
        if (view.kv.count(key))
            res.errors.push_back(key + ": duplicate key");
        view.kv[key] = val;
    }

    ExperimentSpec& s = res.spec;
    view.integer("system.K", &s.system.K, 1, 100000000LL);
    long long n_ll = s.system.n;
    view.integer("system.n", &n_ll, 2, 10000000LL);
    s.system.n = static_cast<int>(n_ll);
    view.integer("system.M_a", &s.system.M_a, 2, 1LL << 40);
    view.number("system.b_s", &s.system.b_s, 1.0, 4096.0);
    view.number("system.rho_s", &s.system.rho_s, 0.0, 1.0);
    view.number("system.rho_d_max", &s.system.rho_d_max, 0.0, 1.0);
    view.number("system.P", &s.system.P, 1e-300, 1e12);
    view.number("system.eps_amd_target", &s.system.eps_amd_target, 0.0, 1.0);
    view.number("system.eps_afp_target", &s.system.eps_afp_target, 0.0, 1.0);
    view.number("system.eps_smd_target", &s.system.eps_smd_target, 0.0, 1.0);
    view.number("system.eps_sfp_target", &s.system.eps_sfp_target, 0.0, 1.0);
    if (s.system.b_s <= std::log2(static_cast<double>(s.system.M_a)))
        res.errors.push_back("system.b_s: standard message set must exceed the alarm set");

    view.number("scenario.delta_backoff_db", &s.scenario.delta_backoff_db, 0.0, 100.0);
    view.number("scenario.psi_dynamic_range_db", &s.scenario.psi_dynamic_range_db, -100.0,
                std::numeric_limits<double>::infinity());
    view.number("scenario.rho_d_max", &s.scenario.rho_d_max, 0.0, 1.0);
    view.with("scenario.slicing", [&](const std::string& v) {
        if (v == "homa")
            s.scenario.slicing = Slicing::homa;
        else if (v == "hnoma")
            s.scenario.slicing = Slicing::hnoma;
        else
            res.errors.push_back("scenario.slicing: expected homa or hnoma, got " + v);
    });
    view.with("scenario.hnoma_mode", [&](const std::string& v) {
        if (v == "rho_d_one")
            s.scenario.hnoma_mode = HnomaMode::rho_d_one;
        else if (v == "equal_power")
            s.scenario.hnoma_mode = HnomaMode::equal_power;
        else if (v == "free")
            s.scenario.hnoma_mode = HnomaMode::free_mode;
        else
            res.errors.push_back("scenario.hnoma_mode: expected rho_d_one, equal_power or free");
    });
    view.with("scenario.sweep_K", [&](const std::string& v) {
        s.scenario.sweep_K.clear();
        std::istringstream ks(v);
        std::string tok;
        while (std::getline(ks, tok, ',')) {
            tok = trim(tok);
            if (tok.empty()) continue;
            try {
                s.scenario.sweep_K.push_back(std::stoll(tok));
            } catch (...) {
                res.errors.push_back("scenario.sweep_K: bad entry " + tok);
            }
        }
    });

    double samples = static_cast<double>(s.mc.samples);
    view.number("mc.samples", &samples, 100.0, 1e12);
    s.mc.samples = static_cast<std::uint64_t>(samples);
    view.number("mc.confidence", &s.mc.confidence, 0.5, 0.999999);
    double seed = static_cast<double>(s.mc.seed);
    view.number("mc.seed", &seed, 0.0, 1e18);
    s.mc.seed = static_cast<std::uint64_t>(seed);
    long long workers = s.mc.workers;
    view.integer("mc.workers", &workers, 1, 256);
    s.mc.workers = static_cast<int>(workers);

    view.with("output_dir", [&](const std::string& v) { s.output_dir = v; });
    view.with("cache_dir", [&](const std::string& v) { s.cache_dir = v; });
    view.with("figure", [&](const std::string& v) {
        bool found = false;
        for (FigurePreset p : {FigurePreset::fig3, FigurePreset::fig4, FigurePreset::fig5,
                               FigurePreset::fig6, FigurePreset::fig7, FigurePreset::fig8,
                               FigurePreset::custom}) {
            if (v == figure_name(p)) {
                s.figure = p;
                found = true;
            }
        }
        if (!found) res.errors.push_back("figure: unknown preset " + v);
    });

    for (const auto& [k, v] : view.kv) {
        if (std::find(view.seen.begin(), view.seen.end(), k) == view.seen.end())
            res.errors.push_back(k + ": unknown key");
    }

    // cross-field invariants
    if (s.scenario.sweep_K.empty() && s.figure != FigurePreset::custom)
        s.scenario.sweep_K = {1000, 2500, 5000, 10000, 15000, 20000, 25000, 30000};
    for (long long k : s.scenario.sweep_K)
        if (k < 1) res.errors.push_back("scenario.sweep_K: entries must be positive");
    if (!(s.scenario.psi_dynamic_range_db > -100.0))
        res.errors.push_back("scenario.psi_dynamic_range_db: must exceed -100 dB");
    return res;
}

std::string serialize_config(const ExperimentSpec& s) {
    std::ostringstream out;
    auto num = [](double v) {
        if (std::isinf(v)) return std::string("inf");
        return canon_double(v);
    };
    out << "system.K = " << s.system.K << "\n";
    out << "system.n = " << s.system.n << "\n";
    out << "system.M_a = " << s.system.M_a << "\n";
    out << "system.b_s = " << num(s.system.b_s) << "\n";
    out << "system.rho_s = " << num(s.system.rho_s) << "\n";
    out << "system.rho_d_max = " << num(s.system.rho_d_max) << "\n";
    out << "system.P = " << num(s.system.P) << "\n";
    out << "system.eps_amd_target = " << num(s.system.eps_amd_target) << "\n";
    out << "system.eps_afp_target = " << num(s.system.eps_afp_target) << "\n";
    out << "system.eps_smd_target = " << num(s.system.eps_smd_target) << "\n";
    out << "system.eps_sfp_target = " << num(s.system.eps_sfp_target) << "\n";
    out << "scenario.delta_backoff_db = " << num(s.scenario.delta_backoff_db) << "\n";
    out << "scenario.psi_dynamic_range_db = " << num(s.scenario.psi_dynamic_range_db) << "\n";
    out << "scenario.rho_d_max = " << num(s.scenario.rho_d_max) << "\n";
    out << "scenario.slicing = " << (s.scenario.slicing == Slicing::homa ? "homa" : "hnoma")
        << "\n";
    out << "scenario.hnoma_mode = "
        << (s.scenario.hnoma_mode == HnomaMode::rho_d_one
                ? "rho_d_one"
                : s.scenario.hnoma_mode == HnomaMode::equal_power ? "equal_power" : "free")
        << "\n";
    out << "scenario.sweep_K = ";
    for (std::size_t i = 0; i < s.scenario.sweep_K.size(); ++i)
        out << (i ? "," : "") << s.scenario.sweep_K[i];
    out << "\n";
    out << "mc.samples = " << s.mc.samples << "\n";
    out << "mc.confidence = " << num(s.mc.confidence) << "\n";
    out << "mc.seed = " << s.mc.seed << "\n";
    out << "mc.workers = " << s.mc.workers << "\n";
    out << "output_dir = " << s.output_dir << "\n";
    if (!s.cache_dir.empty()) out << "cache_dir = " << s.cache_dir << "\n";
    out << "figure = " << figure_name(s.figure) << "\n";
    return out.str();
}

std::string preset_config_text(FigurePreset preset) {
    std::ostringstream out;
    out << "system.n = 30000\nsystem.M_a = 8\nsystem.b_s = 100\nsystem.rho_s = 0.01\n";
    out << "figure = " << figure_name(preset) << "\n";
    switch (preset) {
        case FigurePreset::fig3:
            out << "scenario.slicing = homa\n";
            break;
        case FigurePreset::fig4:
        case FigurePreset::fig5:
            out << "scenario.slicing = homa\nscenario.delta_backoff_db = 0.1\n";
            break;
        case FigurePreset::fig6:
        case FigurePreset::fig7:
            out << "scenario.slicing = homa\nscenario.delta_backoff_db = 0.1\n"
                << "scenario.rho_d_max = 1\n";
            break;
        case FigurePreset::fig8:
            out << "scenario.slicing = hnoma\nscenario.delta_backoff_db = 0.1\n"
                << "scenario.rho_d_max = 1\n";
            break;
        default:
            break;
    }
    return out.str();
}

}  // namespace uma

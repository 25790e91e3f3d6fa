#include "uma/runner.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "uma/simulator.hpp"

namespace uma {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

json result_to_json(const OptimizationResult& r) {
    json j;
    j["ebno_s_star_db"] = r.ebno_s_star_db;
    j["n_s_min"] = r.n_s_min;
    j["n_a_max"] = r.n_a_max;
    j["n_a_opt"] = r.n_a_opt;
    j["P_a_opt"] = r.P_a_opt;
    j["P_a_prime_opt"] = r.P_a_prime_opt;
    j["P_s"] = r.P_s;
    j["rho_d_opt"] = r.rho_d_opt;
    j["ebno_a_db"] = r.ebno_a_db;
    j["feasibility"] = r.feasibility;
    j["binding_constraint"] = r.binding_constraint;
    j["eps_amd"] = r.eps_amd;
    j["eps_afp"] = r.eps_afp;
    j["eps_smd"] = r.eps_smd;
    j["eps_sfp"] = r.eps_sfp;
    return j;
}

OptimizationResult result_from_json(const json& j) {
    OptimizationResult r;
    r.ebno_s_star_db = j.at("ebno_s_star_db").get<double>();
    r.n_s_min = j.at("n_s_min").get<int>();
    r.n_a_max = j.at("n_a_max").get<int>();
    r.n_a_opt = j.at("n_a_opt").get<int>();
    r.P_a_opt = j.at("P_a_opt").get<double>();
    r.P_a_prime_opt = j.at("P_a_prime_opt").get<double>();
    r.P_s = j.at("P_s").get<double>();
    r.rho_d_opt = j.at("rho_d_opt").get<double>();
    r.ebno_a_db = j.at("ebno_a_db").get<double>();
    r.feasibility = j.at("feasibility").get<bool>();
    r.binding_constraint = j.at("binding_constraint").get<std::string>();
    r.eps_amd = j.at("eps_amd").get<double>();
    r.eps_afp = j.at("eps_afp").get<double>();
    r.eps_smd = j.at("eps_smd").get<double>();
    r.eps_sfp = j.at("eps_sfp").get<double>();
    return r;
}

std::string science_key(const ExperimentSpec& spec) {
    // everything that affects numeric outputs; output/cache paths excluded
    ExperimentSpec s = spec;
    s.output_dir = "";
    s.cache_dir = "";
    return serialize_config(s);
}

struct SeriesDef {
    std::string name;
    ScenarioConfig scenario;
    bool ns_min_only = false;     // fig3-style rows
    bool analytic_floor = false;  // fig8 lower-bound curve
};

std::vector<SeriesDef> series_for(const ExperimentSpec& spec) {
    std::vector<SeriesDef> out;
    ScenarioConfig base = spec.scenario;
    switch (spec.figure) {
        case FigurePreset::fig3:
            for (double delta : {0.0, 0.1, 0.2}) {
                SeriesDef s{"delta" + fmt(delta), base, true, false};
                s.scenario.delta_backoff_db = delta;
                out.push_back(s);
            }
            break;
        case FigurePreset::fig4:
        case FigurePreset::fig5:
            for (double rho : {1.0, 0.5, 0.1, 0.01}) {
                SeriesDef s{"rhodmax" + fmt(rho), base, false, false};
                s.scenario.slicing = Slicing::homa;
                s.scenario.rho_d_max = rho;
                out.push_back(s);
            }
            break;
        case FigurePreset::fig6:
        case FigurePreset::fig7:
            for (double psi : {0.0, 10.0, 30.0, 50.0,
                               std::numeric_limits<double>::infinity()}) {
                SeriesDef s{std::isinf(psi) ? std::string("psiinf") : "psi" + fmt(psi), base,
                            false, false};
                s.scenario.slicing = Slicing::homa;
                s.scenario.psi_dynamic_range_db = psi;
                out.push_back(s);
            }
            break;
        case FigurePreset::fig8: {
            SeriesDef a{"hnoma_rhod1", base, false, false};
            a.scenario.slicing = Slicing::hnoma;
            a.scenario.hnoma_mode = HnomaMode::rho_d_one;
            out.push_back(a);
            SeriesDef b{"hnoma_equalpower", base, false, false};
            b.scenario.slicing = Slicing::hnoma;
            b.scenario.hnoma_mode = HnomaMode::equal_power;
            out.push_back(b);
            SeriesDef c{"equalpower_floor", base, false, true};
            out.push_back(c);
            break;
        }
        default:
            out.push_back({"custom", base, false, false});
            break;
    }
    return out;
}

}  // namespace

SweepReport run_experiment(const ExperimentSpec& spec, const RunnerOptions& opts) {
    SweepReport report;
    auto t0 = Clock::now();
    std::filesystem::create_directories(spec.output_dir);
    ResultCache cache(spec.cache_dir);
    std::string base_key = science_key(spec);

    std::vector<long long> sweep =
        spec.scenario.sweep_K.empty() ? std::vector<long long>{spec.system.K}
                                      : spec.scenario.sweep_K;
    std::map<long long, EbnoStarResult> star_cache;
    auto star_for = [&](long long K) {
        auto it = star_cache.find(K);
        if (it != star_cache.end()) return it->second;
        std::string key = base_key + "|ebno_s_star|K=" + std::to_string(K);
        if (auto hit = cache.get(key)) {
            json j = json::parse(*hit, nullptr, false);
            if (!j.is_discarded() && j.contains("ebno_db")) {
                EbnoStarResult r{j["ebno_db"].get<double>(), j["P_s"].get<double>(),
                                 j["k_s_lower"].get<int>(), j["k_s_upper"].get<int>()};
                star_cache[K] = r;
                ++report.points_from_cache;
                return r;
            }
        }
        SystemConfig sys = spec.system;
        sys.K = K;
        EbnoStarResult r = ebno_s_star(K, sys, spec.mc);
        json j;
        j["cache_key"] = key;
        j["ebno_db"] = r.ebno_db;
        j["P_s"] = r.P_s;
        j["k_s_lower"] = r.k_s_lower;
        j["k_s_upper"] = r.k_s_upper;
        cache.put(key, j.dump(2));
        star_cache[K] = r;
        return r;
    };

    auto budget_left = [&]() {
        if (opts.budget_seconds <= 0.0) return true;
        double el = std::chrono::duration<double>(Clock::now() - t0).count();
        return el < opts.budget_seconds;
    };

    for (const SeriesDef& series : series_for(spec)) {
        std::string path = spec.output_dir + "/" + figure_name(spec.figure) + "_" +
                           series.name + ".csv";
        std::ofstream csv(path, std::ios::trunc);
        if (series.ns_min_only) {
            csv << "K,delta_db,ebno_s_star_db,n_s_min,n_a_max\n";
        } else if (series.analytic_floor) {
            csv << "K,ebno_a_floor_db\n";
        } else {
            csv << "K,feasible,ebno_a_db,n_a_opt,P_a_opt,P_a_prime_opt,rho_d_opt,P_s,"
                   "ps_over_pa_db,ebno_s_star_db,n_s_min,n_a_max,eps_amd,eps_afp,eps_smd,"
                   "eps_sfp,binding_constraint\n";
        }
        int rows = 0;
        for (long long K : sweep) {
            if (!budget_left()) {
                ++report.points_skipped_budget;
                continue;
            }
            SystemConfig sys = spec.system;
            sys.K = K;
            if (series.analytic_floor) {
                EbnoStarResult star = star_for(K);
                double P_s = 2.0 * sys.b_s *
                             db_to_lin(star.ebno_db + series.scenario.delta_backoff_db) / sys.n;
                double floor_lin = sys.n * P_s * rho_d_floor(K, sys.eps_amd_target) * K /
                                   (2.0 * log2_message_count(sys.M_a));
                csv << K << "," << fmt(lin_to_db(floor_lin)) << "\n";
                ++rows;
                continue;
            }
            if (series.ns_min_only) {
                std::string key = base_key + "|nsmin|" + series.name + "|K=" + std::to_string(K);
                NsMinResult r;
                bool cached = false;
                if (auto hit = cache.get(key)) {
                    json j = json::parse(*hit, nullptr, false);
                    if (!j.is_discarded() && j.contains("n_s_min")) {
                        r.n_s_min = j["n_s_min"].get<int>();
                        r.n_a_max = j["n_a_max"].get<int>();
                        r.ebno_s_star_db = j["ebno_s_star_db"].get<double>();
                        cached = true;
                        ++report.points_from_cache;
                    }
                }
                if (!cached) {
                    r = find_ns_min(series.scenario.delta_backoff_db, K, sys, spec.mc,
                                    star_for(K));
                    json j;
                    j["cache_key"] = key;
                    j["n_s_min"] = r.n_s_min;
                    j["n_a_max"] = r.n_a_max;
                    j["ebno_s_star_db"] = r.ebno_s_star_db;
                    cache.put(key, j.dump(2));
                    ++report.points_computed;
                }
                csv << K << "," << fmt(series.scenario.delta_backoff_db) << ","
                    << fmt(r.ebno_s_star_db) << "," << r.n_s_min << "," << r.n_a_max << "\n";
                ++rows;
                continue;
            }

            std::string key = base_key + "|opt|" + series.name + "|K=" + std::to_string(K);
            OptimizationResult r;
            bool cached = false;
            if (auto hit = cache.get(key)) {
                json j = json::parse(*hit, nullptr, false);
                if (!j.is_discarded() && j.contains("ebno_a_db")) {
                    r = result_from_json(j);
                    cached = true;
                    ++report.points_from_cache;
                }
            }
            if (!cached) {
                EbnoStarResult star = star_for(K);
                if (series.scenario.slicing == Slicing::hnoma) {
                    r = min_alarm_ebno_hnoma(K, series.scenario, sys, spec.mc, star);
                } else {
                    NsMinResult ns =
                        find_ns_min(series.scenario.delta_backoff_db, K, sys, spec.mc, star);
                    r = min_alarm_ebno_homa(K, ns.n_a_max, series.scenario, sys, spec.mc, star,
                                            &cache);
                    r.n_s_min = ns.n_s_min;
                    r.n_a_max = ns.n_a_max;
                }
                json j = result_to_json(r);
                j["cache_key"] = key;
                cache.put(key, j.dump(2));
                ++report.points_computed;
            }
            double ratio_db = (r.P_a_opt > 0.0 && r.P_s > 0.0)
                                  ? lin_to_db(r.P_s / r.P_a_opt)
                                  : std::numeric_limits<double>::quiet_NaN();
            csv << K << "," << (r.feasibility ? 1 : 0) << "," << fmt(r.ebno_a_db) << ","
                << r.n_a_opt << "," << fmt(r.P_a_opt) << "," << fmt(r.P_a_prime_opt) << ","
                << fmt(r.rho_d_opt) << "," << fmt(r.P_s) << "," << fmt(ratio_db) << ","
                << fmt(r.ebno_s_star_db) << "," << r.n_s_min << "," << r.n_a_max << ","
                << fmt(r.eps_amd) << "," << fmt(r.eps_afp) << "," << fmt(r.eps_smd) << ","
                << fmt(r.eps_sfp) << "," << r.binding_constraint << "\n";
            ++rows;
        }
        csv.close();
        report.files.push_back({path, rows});
    }

    // manifest: every input that affects outputs, plus provenance
    json manifest;
    manifest["figure"] = figure_name(spec.figure);
    manifest["config"] = base_key;
    manifest["config_hash"] =
        static_cast<std::uint64_t>(fnv1a64(base_key));
    manifest["seed"] = spec.mc.seed;
    manifest["version"] = "1.0.0";
    manifest["wall_time_s"] = std::chrono::duration<double>(Clock::now() - t0).count();
    manifest["points_computed"] = report.points_computed;
    manifest["points_from_cache"] = report.points_from_cache;
    report.manifest_path = spec.output_dir + "/manifest.json";
    std::ofstream mf(report.manifest_path, std::ios::trunc);
    mf << manifest.dump(2) << "\n";
    return report;
}

std::string evaluate_point_json(const ExperimentSpec& spec, long long K) {
    SystemConfig sys = spec.system;
    sys.K = K;
    // Evaluate the standard-slice bound at the configured backoff and the
    // alarm-side penalties at the scenario defaults: a single BoundReport.
    EbnoStarResult star = ebno_s_star(K, sys, spec.mc);
    double P_s =
        2.0 * sys.b_s * db_to_lin(star.ebno_db + spec.scenario.delta_backoff_db) / sys.n;
    double pp = select_pprime(sys.n, P_s, standard_leak_target(K, sys.rho_s,
                                                               sys.eps_amd_target, false));
    StandardBlockParams sp;
    sp.n_s = sys.n;
    sp.P_s = P_s;
    sp.P_s_prime = pp;
    auto [kl, ku] = select_k_limits(K, sys.rho_s, 1e-10, 0);
    sp.k_s_lower = kl;
    sp.k_s_upper = std::max(ku, kl + 1);
    sp.r_s = 0;
    StdBlockEval ev(sp, sys.b_s, K, sys.rho_s, spec.mc);
    json j;
    j["K"] = K;
    j["ebno_s_star_db"] = star.ebno_db;
    j["P_s"] = P_s;
    j["P_s_prime"] = pp;
    j["eps_smd"] = ev.eps_smd();
    j["eps_sfp"] = ev.eps_sfp();
    j["nu1"] = ev.nu1_value();
    j["k_s_lower"] = sp.k_s_lower;
    j["k_s_upper"] = sp.k_s_upper;
    return j.dump(2);
}

std::string optimize_point_json(const ExperimentSpec& spec, long long K,
                                const RunnerOptions& opts) {
    (void)opts;
    SystemConfig sys = spec.system;
    sys.K = K;
    OptimizationResult r;
    if (spec.scenario.slicing == Slicing::hnoma) {
        r = min_alarm_ebno_hnoma(K, spec.scenario, sys, spec.mc);
    } else {
        NsMinResult ns = find_ns_min(spec.scenario.delta_backoff_db, K, sys, spec.mc);
        r = min_alarm_ebno_homa(K, ns.n_a_max, spec.scenario, sys, spec.mc);
        r.n_s_min = ns.n_s_min;
        r.n_a_max = ns.n_a_max;
    }
    json j = result_to_json(r);
    return j.dump(2);
}

}  // namespace uma

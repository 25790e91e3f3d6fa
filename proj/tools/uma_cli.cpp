#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "uma/runner.hpp"
#include "uma/simulator.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

uma::ExperimentSpec load_spec(const std::string& config_path, const std::string& preset) {
    std::string text;
    if (!config_path.empty())
        text = read_file(config_path);
    else if (!preset.empty()) {
        for (auto p : {uma::FigurePreset::fig3, uma::FigurePreset::fig4, uma::FigurePreset::fig5,
                       uma::FigurePreset::fig6, uma::FigurePreset::fig7, uma::FigurePreset::fig8})
            if (preset == uma::figure_name(p)) text = uma::preset_config_text(p);
        if (text.empty()) throw CLI::ValidationError("--preset", "unknown preset " + preset);
    }
    uma::ConfigParseResult parsed = uma::validate_config(text);
    if (!parsed.ok()) {
        std::cerr << "configuration errors:\n";
        for (const auto& e : parsed.errors) std::cerr << "  " << e << "\n";
        std::exit(2);
    }
    return parsed.spec;
}

void apply_overrides(uma::ExperimentSpec& spec, std::uint64_t seed, bool seed_set, int workers,
                     const std::string& cache, const std::string& out) {
    if (seed_set) spec.mc.seed = seed;
    if (workers > 0) spec.mc.workers = workers;
    if (const char* env = std::getenv("UMA_WORKERS")) spec.mc.workers = std::atoi(env);
    if (!cache.empty()) spec.cache_dir = cache;
    if (const char* env = std::getenv("UMA_CACHE_DIR")) spec.cache_dir = env;
    if (!out.empty()) spec.output_dir = out;
}

int run_simulate(const uma::ExperimentSpec& spec, bool dump_trials) {
    using namespace uma;
    // Tiny-instance validation suite: empirical rates next to the bound
    // values they must stay under; full assertions live in the test suite.
    McSettings mc = spec.mc;
    std::uint64_t trials = std::min<std::uint64_t>(mc.samples, 20000);
    std::filesystem::create_directories(spec.output_dir);
    std::ofstream csv(spec.output_dir + "/simulate.csv", std::ios::trunc);
    csv << "instance,trials,exact_trials,amd,afp,smd,sfp\n";
    std::ofstream dump;
    if (dump_trials) dump.open(spec.output_dir + "/simulate_trials.jsonl", std::ios::trunc);
    auto dump_trial = [&](const char* instance, std::uint64_t idx, const uma::TrialOutcome& o) {
        if (!dump_trials) return;
        dump << "{\"instance\":\"" << instance << "\",\"trial\":" << idx
             << ",\"alarm_present\":" << (o.alarm_present ? 1 : 0) << ",\"k_a\":" << o.k_a
             << ",\"k_s\":" << o.k_s << ",\"decoded_k_a\":" << o.decoded_k_a
             << ",\"list_size\":" << o.list_size << ",\"md\":" << o.md_count
             << ",\"fp\":" << o.fp_count << ",\"amd\":" << (o.amd ? 1 : 0)
             << ",\"afp\":" << (o.afp ? 1 : 0)
             << ",\"heuristic\":" << (o.heuristic_decode ? 1 : 0) << "}\n";
    };

    AlarmBlockParams ap;
    ap.n_a = 64;
    ap.P_a = 0.06;
    ap.P_a_prime = 0.05;
    ap.rho_d = 0.8;
    ap.k_a_lower = 2;
    ap.k_a_upper = 10;
    SimAggregate alarm_on, alarm_off;
    for (std::uint64_t t = 0; t < trials; ++t) {
        Rng rng(mc.seed, mc.stream(0xa1u, t));
        TrialOutcome o1 = run_alarm_block_trial(ap, 4, 10, true, rng);
        alarm_on.add(o1);
        dump_trial("alarm_on", t, o1);
        Rng rng2(mc.seed, mc.stream(0xa2u, t));
        TrialOutcome o2 = run_alarm_block_trial(ap, 4, 10, false, rng2);
        alarm_off.add(o2);
        dump_trial("alarm_off", t, o2);
    }
    std::cout << "alarm block: amd=" << alarm_on.amd_rate() << " afp=" << alarm_off.afp_rate()
              << " (" << trials << " trials)\n";
    csv << "alarm_on," << alarm_on.trials << "," << alarm_on.exact_trials << ","
        << alarm_on.amd_rate() << ",0,0,0\n";
    csv << "alarm_off," << alarm_off.trials << "," << alarm_off.exact_trials << ",0,"
        << alarm_off.afp_rate() << ",0,0\n";

    StandardBlockParams sp;
    sp.n_s = 128;
    sp.P_s = 0.055;
    sp.P_s_prime = 0.05;
    sp.k_s_lower = 0;
    sp.k_s_upper = 8;
    sp.r_s = 0;
    SimAggregate stdagg;
    for (std::uint64_t t = 0; t < trials; ++t) {
        Rng rng(mc.seed, mc.stream(0xa3u, t));
        TrialOutcome o = run_standard_block_trial(sp, 256, 8, 0.5, rng);
        stdagg.add(o);
        dump_trial("standard", t, o);
    }
    std::cout << "standard block: smd=" << stdagg.smd_rate() << " sfp=" << stdagg.sfp_rate()
              << " exact=" << stdagg.exact_trials << "/" << stdagg.trials << "\n";
    csv << "standard," << stdagg.trials << "," << stdagg.exact_trials << ",0,0,"
        << stdagg.smd_rate() << "," << stdagg.sfp_rate() << "\n";
    std::cout << spec.output_dir << "/simulate.csv\n";
    return 0;
}

int run_selftest() {
    using namespace uma;
    int fails = 0;
    auto check = [&](bool ok, const char* what) {
        std::cout << (ok ? "ok   " : "FAIL ") << what << "\n";
        if (!ok) ++fails;
    };
    check(std::abs(log_gamma(5.0) - std::log(24.0)) < 1e-12, "log_gamma(5) = ln 24");
    check(std::abs(upper_incomplete_gamma_reg(1.0, std::log(2.0)) - 0.5) < 1e-12,
          "Q(1, ln 2) = 1/2");
    check(upper_incomplete_gamma_reg(3.0, -1.0) == 1.0, "Q clamps negative thresholds");
    check(std::abs(binomial_pmf(2, 4, 0.5) - 0.375) < 1e-14, "binomial pmf 2 of 4");
    check(std::abs(gaussian_quadratic_mgf(2, 0.0, 0.5, 1.0) - 0.5) < 1e-14,
          "quadratic mgf closed form");
    check(std::abs(chi_square_tail(2, 2.0 * std::log(2.0)) - 0.5) < 1e-12,
          "chi-square tail n=2");
    ScalarSearchSpec spec{0.0, 5.0, 1e-8, 200};
    auto r = golden_section_min([](double x) { return (x - 2.0) * (x - 2.0); }, spec);
    check(std::abs(r.argmin - 2.0) < 1e-6, "golden section quadratic");
    check(std::abs(rho_d_floor(1, 1e-5) - 0.99999) < 1e-12, "rho_d floor K=1");
    check(std::abs(ebno_alarm_homa(100, 0.006, 0.5, 200, 8) - 10.0) < 1e-12,
          "alarm energy per bit");
    auto [kl, ku] = select_k_limits(10, 0.5, 1e-3, 0);
    check(kl < ku && kl >= 0, "k-limit window sane");
    std::cout << (fails ? "SELFTEST FAILED\n" : "selftest passed\n");
    return fails ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"random-coding achievability bounds for unsourced multiple access with a "
                 "common alarm message"};
    app.require_subcommand(1);

    std::string config_path, preset, cache_dir, out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int workers = 0;
    double budget_seconds = 0.0;
    long long K_point = 0;

    app.add_option("--config", config_path, "configuration file (flat key = value)");
    app.add_option("--preset", preset, "figure preset name (fig3..fig8)");
    app.add_option("--seed", seed, "override mc.seed")->each([&](std::string) { seed_set = true; });
    app.add_option("--workers", workers, "worker thread count");
    app.add_option("--budget-seconds", budget_seconds, "wall-clock budget for sweeps");
    app.add_option("--cache", cache_dir, "result cache directory");
    app.add_option("--out", out_dir, "output directory");

    auto* sweep = app.add_subcommand("sweep", "run a figure-preset sweep and emit CSVs");
    auto* evaluate = app.add_subcommand("evaluate", "evaluate the bound report at one K");
    evaluate->add_option("--K", K_point, "number of users")->required();
    auto* optimize = app.add_subcommand("optimize", "optimize the alarm energy at one K");
    optimize->add_option("--K", K_point, "number of users")->required();
    auto* simulate = app.add_subcommand("simulate", "tiny-instance simulator suite");
    bool dump_trials = false;
    simulate->add_flag("--dump-trials", dump_trials,
                       "write per-trial records (line-delimited) next to the CSV");
    auto* selftest = app.add_subcommand("selftest", "kernel invariant battery");

    CLI11_PARSE(app, argc, argv);

    try {
        if (selftest->parsed()) return run_selftest();
        uma::ExperimentSpec spec = load_spec(config_path, preset);
        apply_overrides(spec, seed, seed_set, workers, cache_dir, out_dir);
        if (simulate->parsed()) return run_simulate(spec, dump_trials);
        if (evaluate->parsed()) {
            std::cout << uma::evaluate_point_json(spec, K_point ? K_point : spec.system.K)
                      << "\n";
            return 0;
        }
        if (optimize->parsed()) {
            std::cout << uma::optimize_point_json(spec, K_point ? K_point : spec.system.K)
                      << "\n";
            return 0;
        }
        if (sweep->parsed()) {
            uma::RunnerOptions opts;
            opts.budget_seconds = budget_seconds;
            uma::SweepReport rep = uma::run_experiment(spec, opts);
            for (const auto& f : rep.files)
                std::cout << f.path << " (" << f.rows << " rows)\n";
            std::cout << rep.manifest_path << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

// Command line front end.
//
//   hottbandit gen     --config FILE [--seed S] --out instance.txt
//   hottbandit run     --config FILE [--seed S] [--policy a,b] [--threads N] [--out DIR]
//   hottbandit compare FILE.csv... [--out summary.tsv]
//   hottbandit plot    FILE.csv [--metric simple|general] --out plot.svg
//   hottbandit accept  [--only 1,8] [--threads N] [--out DIR]
//
// Exit codes: 0 success, 1 runtime failure, 2 config error, 3 acceptance failure.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "hottbandit/acceptance.hpp"
#include "hottbandit/errors.hpp"
#include "hottbandit/harness.hpp"

namespace hb = hottbandit;

namespace {

constexpr int kRuntimeError = 1;
constexpr int kConfigError = 2;
constexpr int kAcceptanceFailure = 3;

hb::RegretMode parse_metric(const std::string& s) {
    if (s == "simple") return hb::RegretMode::simple;
    if (s == "general") return hb::RegretMode::general;
    throw hb::ConfigError("metric must be simple or general");
}

int cmd_gen(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out) {
    const auto cfg = hb::load_config(config_path);
    const auto s = seed.value_or(cfg.seeds.front());
    const auto model = hb::make_instance(cfg.instance, s);
    hb::save_instance(out, model);
    const auto gaps = hb::compute_gaps(model, cfg.enumeration_cap);
    std::cout << "wrote " << out << ": M=" << model.users() << " N=" << model.items()
              << " r=" << model.rank() << " sigma2=" << model.sigma2() << " delta=" << gaps.delta
              << " delta_hott=" << gaps.delta_hott << " delta_det=" << gaps.delta_det << '\n';
    return 0;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            const std::vector<std::string>& policies, int threads, const std::string& out) {
    auto cfg = hb::load_config(config_path);
    if (seed) cfg.seeds = {*seed};
    if (!out.empty()) cfg.out_dir = out;
    if (!policies.empty()) {
        std::vector<hb::PolicySpec> keep;
        for (const auto& name : policies) {
            auto it = std::find_if(cfg.policies.begin(), cfg.policies.end(),
                                   [&](const hb::PolicySpec& p) { return p.name == name; });
            if (it == cfg.policies.end()) throw hb::ConfigError("no policy named '" + name + "'");
            keep.push_back(*it);
        }
        cfg.policies = std::move(keep);
    }
    hb::validate(cfg);
    const auto result = hb::run_experiment(cfg, threads);
    const std::string base = cfg.out_dir + "/" + cfg.run_id;
    hb::emit_csv(result, base + ".csv");
    hb::emit_plot(result, base + ".svg", cfg.plot_metric);
    hb::write_phase_logs(result, cfg.out_dir + "/phases");
    hb::print_summary(std::cout, result.curves);
    int failures = 0;
    for (const auto& c : result.cells)
        if (!c.ok()) {
            ++failures;
            std::cerr << "failed: " << c.policy << " seed " << c.seed << ": " << c.error << '\n';
        }
    std::cout << "wrote " << base << ".csv and " << base << ".svg in " << result.seconds << " s\n";
    return failures ? kRuntimeError : 0;
}

int cmd_compare(const std::vector<std::string>& files, const std::string& out) {
    std::vector<hb::Cell> cells;
    for (const auto& f : files) {
        auto more = hb::load_csv(f);
        cells.insert(cells.end(), std::make_move_iterator(more.begin()),
                     std::make_move_iterator(more.end()));
    }
    const auto curves = hb::aggregate(cells);
    hb::print_summary(std::cout, curves);
    if (!out.empty()) {
        std::ofstream o(out);
        if (!o) throw std::runtime_error("cannot write '" + out + "'");
        hb::print_summary(o, curves);
    }
    return 0;
}

int cmd_plot(const std::string& file, const std::string& metric, const std::string& out) {
    std::string run_id;
    const auto cells = hb::load_csv(file, &run_id);
    std::ofstream o(out);
    if (!o) throw std::runtime_error("cannot write '" + out + "'");
    hb::write_svg(o, hb::aggregate(cells), parse_metric(metric), run_id);
    return 0;
}

int cmd_accept(const std::vector<int>& only, int threads, const std::string& out) {
    hb::AcceptanceOptions opt;
    opt.only.insert(only.begin(), only.end());
    opt.threads = threads;
    opt.out_dir = out;
    int failed = 0;
    hb::run_acceptance(opt, [&](const hb::CriterionResult& r) {
        std::cout << hb::format_result(r) << std::endl;
        failed += !r.pass;
    });
    return failed ? kAcceptanceFailure : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Collaborative bandit simulations with hott items"};
    app.require_subcommand(1);

    std::string config, out, metric = "simple";
    std::optional<std::uint64_t> seed;
    std::vector<std::string> policies, files;
    std::vector<int> only;
    int threads = 0;

    auto* gen = app.add_subcommand("gen", "Generate an instance file");
    gen->add_option("--config", config, "Experiment config")->required()->check(CLI::ExistingFile);
    gen->add_option("--seed", seed, "Instance seed (default: first configured seed)");
    gen->add_option("--out", out, "Instance file to write")->required();

    auto* run = app.add_subcommand("run", "Run every (policy, seed) pair of a config");
    run->add_option("--config", config, "Experiment config")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "Run this seed only");
    run->add_option("--policy", policies, "Restrict to these policies")->delimiter(',');
    run->add_option("--threads", threads, "Concurrent replicates (default: config)");
    run->add_option("--out", out, "Output directory (default: config)");

    auto* compare = app.add_subcommand("compare", "Summarize one or more CSV files");
    compare->add_option("files", files, "Regret CSVs")->required()->check(CLI::ExistingFile);
    compare->add_option("--out", out, "Also write the summary here");

    auto* plot = app.add_subcommand("plot", "Render a CSV as SVG");
    plot->add_option("files", files, "Regret CSV")->required()->expected(1)->check(CLI::ExistingFile);
    plot->add_option("--metric", metric, "simple or general");
    plot->add_option("--out", out, "SVG to write")->required();

    auto* accept = app.add_subcommand("accept", "Run the acceptance suite");
    accept->add_option("--only", only, "Criteria to run")->delimiter(',');
    accept->add_option("--threads", threads, "Concurrent replicates")->default_val(1);
    accept->add_option("--out", out, "Leave suite CSV and SVG files here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    try {
        if (*gen) return cmd_gen(config, seed, out);
        if (*run) return cmd_run(config, seed, policies, threads, out);
        if (*compare) return cmd_compare(files, out);
        if (*plot) return cmd_plot(files.front(), metric, out);
        if (*accept) return cmd_accept(only, threads, out);
    } catch (const hb::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const hb::ParameterError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return 0;
}

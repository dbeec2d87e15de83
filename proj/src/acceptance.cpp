#include "hottbandit/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hottbandit/combinatorics.hpp"

namespace hottbandit {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<int> iota_vec(int n) {
    std::vector<int> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double x, int precision = 4) {
    std::ostringstream s;
    s.precision(precision);
    s << x;
    return s.str();
}

// Shared across suites: the Hadamard guard must stay silent everywhere.
struct Context {
    HadamardGuard guard;
    std::vector<std::string> guard_sources;
};

// ---------------------------------------------------------------------------
// 1 and 2: random hull-verified instances.

struct HullCase {
    RewardModel model;
    bool hull_ok;
};

HullCase hull_case(int i) {
    Rng rng = make_rng(static_cast<std::uint64_t>(i), "accept/hull");
    // r = 1 has no proper far face, so the argmin claim needs r >= 2.
    const int r = 2 + i % 2;
    const int M = std::uniform_int_distribution<int>(std::max(r, 5), 50)(rng);
    const int N = std::uniform_int_distribution<int>(r + 1, 20)(rng);
    RewardModel m = generate_simplex_instance(M, N, r, derive_seed(i, "accept/hull/instance"), 0.2);
    const bool ok = verify_hott(m).ok;
    return {std::move(m), ok};
}

constexpr int kHullCases = 200;

CriterionResult lemma1(Context&) {
    CriterionResult res{1, "lemma1-best-worst-in-hott", false, {}, 0.0};
    int good = 0, unverified = 0;
    for (int i = 0; i < kHullCases; ++i) {
        const auto c = hull_case(i);
        if (!c.hull_ok) {
            ++unverified;
            continue;
        }
        const auto& A = c.model.hott();
        bool all = true;
        for (const auto& bw : best_worst_items(c.model))
            all = all && std::binary_search(A.begin(), A.end(), bw.best) &&
                  std::binary_search(A.begin(), A.end(), bw.worst);
        good += all;
    }
    res.pass = good == kHullCases;
    res.detail = std::to_string(good) + "/" + std::to_string(kHullCases) +
                 " instances with every argmax and argmin in A (" + std::to_string(unverified) +
                 " failed hull verification)";
    return res;
}

CriterionResult determinant_dominance(Context&) {
    CriterionResult res{2, "determinant-dominance", false, {}, 0.0};
    int good = 0;
    std::int64_t subsets = 0;
    for (int i = 0; i < kHullCases; ++i) {
        const auto c = hull_case(i);
        if (!c.hull_ok) continue;
        const auto& V = c.model.V();
        const auto& A = c.model.hott();
        const double top = det2_rows(V, A);
        bool strict = true;
        subsets += for_each_combination(c.model.items(), c.model.rank(), [&](std::span<const int> J) {
            if (std::equal(J.begin(), J.end(), A.begin(), A.end())) return true;
            if (det2_rows(V, J) >= top) strict = false;
            return strict;
        });
        good += strict;
    }
    res.pass = good == kHullCases;
    res.detail = std::to_string(good) + "/" + std::to_string(kHullCases) +
                 " instances with det^2(V_A) strictly maximal over " + std::to_string(subsets) +
                 " enumerated subsets";
    return res;
}

// ---------------------------------------------------------------------------
// 3: the three-user example matrix.

CriterionResult eq7_fixture(Context&) {
    CriterionResult res{3, "eq7-fixture", false, {}, 0.0};
    const double p = 0.5, eps = 0.2;
    const RewardModel m = eq7_instance(p, eps);
    const GapReport g = compute_gaps(m);
    const double want = 2.0 * eps / 3.0;
    const bool hott_ok = g.delta_hott == 1.0;
    const bool delta_ok = std::abs(g.delta - want) <= 1e-15;

    // Stage 1 at k = 1/20 with a noiseless oracle keeps items within 3k.
    const double c = PceConfig{}.c_mult / 20.0;
    const ItemSets all(3, iota_vec(3));
    const ItemSets T = prune_items(all, m.rewards(), c);
    auto meets = [](const std::vector<int>& a, const std::vector<int>& b) {
        return std::find_first_of(a.begin(), a.end(), b.begin(), b.end()) != a.end();
    };
    const bool u3_meets_u1 = meets(T[2], T[0]);
    const auto bw = best_worst_items(m);

    // Same threshold at eps = 0.1: u3 keeps all three items and so meets u2,
    // whose best item differs from u3's.
    const RewardModel m2 = eq7_instance(p, 0.1);
    const ItemSets T2 = prune_items(all, m2.rewards(), c);
    const auto bw2 = best_worst_items(m2);
    const bool refuted = meets(T2[2], T2[1]) && bw2[2].best != bw2[1].best;

    res.pass = hott_ok && delta_ok && u3_meets_u1 && T[0] == std::vector<int>{0} &&
               T[1] == std::vector<int>{1};
    auto set_str = [](const std::vector<int>& s) {
        std::string out = "{";
        for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i] + 1);
        return out + "}";
    };
    std::ostringstream d;
    d.precision(17);
    d << "delta_hott=" << g.delta_hott << " delta=" << g.delta << " (2eps/3=" << want << ")"
      << "; T_u1=" << set_str(T[0]) << " T_u2=" << set_str(T[1]) << " T_u3=" << set_str(T[2])
      << " intersect(u3,u1)=" << (u3_meets_u1 ? "yes" : "no")
      << "; best(u1)=" << bw[0].best + 1 << " best(u3)=" << bw[2].best + 1
      << "; eps=0.1: T_u3=" << set_str(T2[2]) << " meets T_u2 with different best items: "
      << (refuted ? "yes" : "no");
    res.detail = d.str();
    return res;
}

// ---------------------------------------------------------------------------
// 4: completion sanity.

struct McRun {
    Eigen::MatrixXd truth;
    AveragedObservations z;
};

McRun mc_sample(std::uint64_t seed, double sigma2, int s) {
    const RewardModel m =
        generate_simplex_instance(20, 20, 2, derive_seed(seed, "accept/mc/instance"), 0.2, sigma2);
    Rng rng = make_rng(seed, "accept/mc/mask");
    const auto all = iota_vec(20);
    const SampleMask mask = plan_mask(all, all, 0.5, rng, s);
    Environment env(m, seed, 20 * s + 20, "accept-mc");
    Collected got = collect(env, mask, s, [](int) { return 0; }, rng);
    return {m.rewards(), std::move(got.z)};
}

CriterionResult completion_sanity(Context&) {
    CriterionResult res{4, "completion-sanity", false, {}, 0.0};
    constexpr int kSeeds = 20;
    std::vector<double> alt, nuc, low_s, high_s;
    const double sigma = 0.5;
    const int s1 = 4, s2 = 16;
    for (int seed = 0; seed < kSeeds; ++seed) {
        const McRun clean = mc_sample(seed, 0.0, 1);
        const Completion a = complete_altmin(clean.z, 2, OracleConfig{});
        alt.push_back((a.Q - clean.truth).cwiseAbs().maxCoeff());

        OracleConfig nc;
        nc.solver = Solver::nuclear;
        nc.max_iterations = 5000;
        nc.tolerance = 1e-12;
        Rng rng = make_rng(seed, "accept/mc/nuclear");
        const Completion n = complete_nuclear(clean.z, 1e-4, nc, rng);
        nuc.push_back((n.Q - clean.truth).cwiseAbs().maxCoeff());

        for (int s : {s1, s2}) {
            const McRun noisy = mc_sample(seed, sigma * sigma, s);
            OracleConfig oc;
            oc.ridge = oc.ridge_for(sigma / std::sqrt(static_cast<double>(s)));
            const Completion q = complete_altmin(noisy.z, 2, oc);
            const Eigen::MatrixXd err = (q.Q - noisy.truth).cwiseAbs();
            const double med = median(std::vector<double>(err.data(), err.data() + err.size()));
            (s == s1 ? low_s : high_s).push_back(med);
        }
    }
    const double a = median(alt), n = median(nuc);
    const auto recovered = std::count_if(nuc.begin(), nuc.end(), [](double e) { return e <= 1e-2; });
    const double ratio = median(low_s) / median(high_s);
    res.pass = a <= 1e-4 && n <= 1e-2 && ratio >= 1.0 && ratio <= 4.0;
    res.detail = "altmin median max-error " + fmt(a) + " (<= 1e-4), nuclear " + fmt(n) +
                 " (<= 1e-2, lambda 1e-4, " +
                 std::to_string(recovered) + "/20 seeds recovered), error(s=" + std::to_string(s1) + ")/error(s=" +
                 std::to_string(s2) + ") = " + fmt(ratio) + " (target 2, allowed [1, 4])";
    return res;
}

// ---------------------------------------------------------------------------
// 5: coverage of every pair by enough sampled users.

CriterionResult coverage(Context&) {
    CriterionResult res{5, "coverage-monte-carlo", false, {}, 0.0};
    const int M = 1000, N = 20, r = 2, n = 10, trials = 200;
    const double delta = 0.1;
    const RequiredD need = required_d(n, delta, N, M, r);
    const ColumnFamily family = ColumnFamily::all(N, r);
    int full = 0;
    for (int t = 0; t < trials; ++t) {
        Rng rng = make_rng(static_cast<std::uint64_t>(t), "accept/coverage");
        const SampledItems s = sample_items(family, M, need.d, rng);
        bool ok = true;
        for (const auto& h : s.coverage) ok = ok && static_cast<int>(h.size()) >= n;
        full += ok;
    }
    const double rate = static_cast<double>(full) / trials;
    res.pass = need.feasible && rate >= 0.9;
    res.detail = "d=" + std::to_string(need.d) + ", full coverage in " + std::to_string(full) + "/" +
                 std::to_string(trials) + " trials (" + fmt(100 * rate, 3) + "%, need >= 90%)";
    return res;
}

// ---------------------------------------------------------------------------
// Trace suites.

std::string csv_of(const RunResult& r, const std::vector<Cell>* cells = nullptr) {
    std::ostringstream s;
    write_csv(s, r.run_id, cells ? *cells : r.cells);
    return s.str();
}

void maybe_emit(const RunResult& r, const AcceptanceOptions& opt, RegretMode metric) {
    if (opt.out_dir.empty()) return;
    emit_csv(r, opt.out_dir + "/" + r.run_id + ".csv");
    emit_plot(r, opt.out_dir + "/" + r.run_id + ".svg", metric);
    write_phase_logs(r, opt.out_dir + "/phases");
}

std::string failed_cells(const RunResult& r) {
    std::string out;
    for (const auto& c : r.cells)
        if (!c.ok()) out += "; " + c.policy + " seed " + std::to_string(c.seed) + ": " + c.error;
    return out;
}

CriterionResult detelim_correctness(Context& ctx, const AcceptanceOptions& opt) {
    CriterionResult res{6, "detelim-correctness", false, {}, 0.0};
    const auto cfg = detelim_suite_config();
    const RunResult run = run_experiment(cfg, opt.threads);
    maybe_emit(run, opt, RegretMode::simple);
    int unique = 0, argmax = 0, n = 0;
    std::int64_t checks = 0, violations = 0;
    for (const auto& c : run.cells) {
        const auto* d = std::get_if<DetElimResult>(&c.detail);
        if (!d) continue;
        ++n;
        const RewardModel m = make_instance(cfg.instance, c.seed);
        unique += d->hott_survived && d->final_family.size() == 1 &&
                  d->final_family.columns[0] == m.hott();
        argmax += d->argmax_survived;
        checks += d->instant_checks;
        violations += d->instant_violations;
        ctx.guard.merge(d->guard);
    }
    ctx.guard_sources.push_back("detelim");
    const int S = static_cast<int>(cfg.seeds.size());
    res.pass = n == S && unique >= static_cast<int>(std::ceil(0.95 * S)) && argmax == S &&
               violations == 0;
    res.detail = "A unique survivor in " + std::to_string(unique) + "/" + std::to_string(S) +
                 " seeds, argmax survived in " + std::to_string(argmax) + "/" + std::to_string(S) +
                 ", instant-bound violations " + std::to_string(violations) + "/" +
                 std::to_string(checks) + ", T=" + std::to_string(cfg.horizon) + failed_cells(run);
    return res;
}

struct PceTally {
    int seeds_ok = 0;
    int survived = 0;
    int flat_tail = 0;
    int runs = 0;
    int ell0_bound = 0;
    std::string failures;
};

PceTally tally_pce(const ExperimentConfig& cfg, const RunResult& run) {
    PceTally t;
    for (const auto& c : run.cells) {
        const auto* p = std::get_if<PceResult>(&c.detail);
        if (!p) continue;
        ++t.runs;
        const RewardModel m = make_instance(cfg.instance, c.seed);
        const GapReport g = compute_gaps(m, 0);
        t.ell0_bound = static_cast<int>(std::ceil(std::log2(40.0 / g.delta_hott)));
        const auto bw = best_worst_items(m);
        std::vector<int> bests;
        for (int u : p->seeds) bests.push_back(bw[u].best);
        std::sort(bests.begin(), bests.end());
        const bool distinct = static_cast<int>(p->seeds.size()) == m.rank() &&
                              std::adjacent_find(bests.begin(), bests.end()) == bests.end();
        t.seeds_ok += distinct && p->ell0 >= 1 && p->ell0 <= t.ell0_bound;
        t.survived += p->best_survived;
        const auto& g_cum = c.trace.general;
        const int T = static_cast<int>(g_cum.size());
        const double q1 = g_cum[T / 4 - 1];
        const double q4 = g_cum[T - 1] - g_cum[3 * T / 4 - 1];
        t.flat_tail += q4 <= 0.1 * q1;
    }
    return t;
}

CriterionResult pce_correctness(Context&, const AcceptanceOptions& opt) {
    CriterionResult res{7, "pce-correctness", false, {}, 0.0};
    bool pass = true;
    std::string detail;
    for (const auto& cfg : {pce_eq7_suite_config(), pce_block_suite_config()}) {
        const RunResult run = run_experiment(cfg, opt.threads);
        maybe_emit(run, opt, RegretMode::general);
        const PceTally t = tally_pce(cfg, run);
        const int S = static_cast<int>(cfg.seeds.size());
        const int need = static_cast<int>(std::ceil(0.95 * S));
        pass = pass && t.runs == S && t.seeds_ok >= need && t.survived >= need && t.flat_tail >= need;
        if (!detail.empty()) detail += "; ";
        detail += cfg.run_id + ": distinct seeds with ell0<=" + std::to_string(t.ell0_bound) + " " +
                  std::to_string(t.seeds_ok) + "/" + std::to_string(S) + ", best survived " +
                  std::to_string(t.survived) + "/" + std::to_string(S) + ", last-quartile <= 10% " +
                  std::to_string(t.flat_tail) + "/" + std::to_string(S) + failed_cells(run);
    }
    res.pass = pass;
    res.detail = detail;
    return res;
}

CriterionResult figure1(Context&, const AcceptanceOptions& opt) {
    CriterionResult res{8, "figure1-reproduction", false, {}, 0.0};
    const RunResult run = run_experiment(figure1_suite_config(), opt.threads);
    maybe_emit(run, opt, RegretMode::general);
    double pes = std::nan("");
    bool all_present = true;
    for (const auto& c : run.curves) {
        if (c.rounds.empty() || c.replicates != 5) all_present = false;
        if (c.policy == "pes" && !c.rounds.empty()) pes = c.mean_general.back();
    }
    bool below = all_present && !std::isnan(pes);
    std::string detail = "mean regret at T=300:";
    for (const auto& c : run.curves) {
        if (c.rounds.empty()) continue;
        const double v = c.mean_general.back();
        detail += " " + c.policy + "=" + fmt(v, 5) + "+-" + fmt(c.se_general.back(), 3);
        if (c.policy != "pes") below = below && pes < v;
    }
    res.pass = below;
    res.detail = detail + failed_cells(run);
    return res;
}

CriterionResult unbiasedness(Context& ctx) {
    CriterionResult res{9, "mu-hat-unbiased", false, {}, 0.0};
    const RewardModel m = generate_simplex_instance(10, 6, 2, derive_seed(9, "accept/mu"), 0.2);
    const auto& A = m.hott();
    const MuValue exact = mu_exact(m.rewards(), A);
    const double sigma = 0.5;
    const int redraws = 500;
    Rng rng = make_rng(9, "accept/mu/noise");
    std::normal_distribution<double> gauss;
    const auto users = iota_vec(m.users());
    HadamardGuard guard;
    std::vector<double> values;
    for (int t = 0; t < redraws; ++t) {
        SplitEstimates split{m.rewards(), m.rewards()};
        for (auto* half : {&split.first, &split.second})
            for (Eigen::Index k = 0; k < half->size(); ++k) half->data()[k] += sigma * gauss(rng);
        values.push_back(mu_hat(split, users, A, 1e5, rng, &guard).value);
    }
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / redraws;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double se = std::sqrt(ss / (redraws - 1) / redraws);
    ctx.guard.merge(guard);
    ctx.guard_sources.push_back("mu-fixture");
    const double z = std::abs(mean - exact.value) / se;
    res.pass = exact.exact && z <= 3.0 && ctx.guard.trips == 0;
    std::string sources;
    for (const auto& s : ctx.guard_sources) sources += (sources.empty() ? "" : "+") + s;
    res.detail = "mean " + fmt(mean, 6) + " vs exact " + fmt(exact.value, 6) + " (" + fmt(z, 3) +
                 " SE); Hadamard guard " + std::to_string(ctx.guard.trips) + " trips in " +
                 std::to_string(ctx.guard.checks) + " checks [" + sources + "]";
    return res;
}

ExperimentConfig with_seeds(ExperimentConfig c, std::vector<std::uint64_t> seeds) {
    c.seeds = std::move(seeds);
    return c;
}

CriterionResult determinism(Context&, const AcceptanceOptions& opt) {
    CriterionResult res{10, "determinism", false, {}, 0.0};
    const int parallel = std::max(2, opt.threads);
    const std::vector<ExperimentConfig> suites = {
        figure1_suite_config(),
        with_seeds(pce_eq7_suite_config(), {0, 1, 2}),
        with_seeds(pce_block_suite_config(), {0, 1, 2}),
        with_seeds(detelim_suite_config(), {0, 3}),
    };
    bool same = true;
    std::string detail;
    for (const auto& cfg : suites) {
        const std::string a = csv_of(run_experiment(cfg, 1));
        const std::string b = csv_of(run_experiment(cfg, parallel));
        const bool eq = a == b && a.size() > 100;
        same = same && eq;
        if (!detail.empty()) detail += ", ";
        detail += cfg.run_id + " " + std::to_string(cfg.seeds.size()) + " seeds " +
                  std::to_string(a.size()) + " bytes " + (eq ? "identical" : "DIFFER");
    }
    res.pass = same;
    res.detail = "serial vs " + std::to_string(parallel) + " threads: " + detail;
    return res;
}

}  // namespace

ExperimentConfig detelim_suite_config() {
    ExperimentConfig c;
    c.run_id = "detelim";
    c.instance.kind = "simplex";
    c.instance.users = 60;
    c.instance.items = 8;
    c.instance.rank = 2;
    c.instance.sigma2 = 0.01;
    c.instance.margin = 0.2;
    c.instance.fill = SimplexFill::interior;
    c.horizon = 3'000'000;
    c.seeds.clear();
    for (std::uint64_t s = 0; s < 20; ++s) c.seeds.push_back(s);
    c.policies.push_back(make_policy("detelim", "detelim", {{"check_instant", "true"}}));
    c.stride = 1000;
    return c;
}

ExperimentConfig pce_eq7_suite_config() {
    ExperimentConfig c;
    c.run_id = "pce-eq7";
    c.instance.kind = "eq7";
    c.instance.p = 0.5;
    c.instance.eps = 0.2;
    c.instance.replicas = 10;
    c.instance.sigma2 = 0.0025;
    c.horizon = 20000;
    c.seeds.clear();
    for (std::uint64_t s = 0; s < 20; ++s) c.seeds.push_back(s);
    c.policies.push_back(make_policy("pce", "pce"));
    return c;
}

ExperimentConfig pce_block_suite_config() {
    ExperimentConfig c = pce_eq7_suite_config();
    c.run_id = "pce-block";
    c.instance = InstanceSpec{};
    c.instance.kind = "block";
    c.instance.users = 60;
    c.instance.items = 60;
    c.instance.rank = 2;
    c.instance.sigma2 = 0.0025;
    c.instance.rescale = true;
    return c;
}

ExperimentConfig figure1_suite_config() {
    ExperimentConfig c;
    c.run_id = "figure1";
    c.instance.kind = "block";
    c.instance.users = 200;
    c.instance.items = 200;
    c.instance.rank = 4;
    c.instance.sigma2 = 0.25;
    c.horizon = 300;
    c.seeds = {0, 1, 2, 3, 4};
    c.policies.push_back(make_policy("pes", "pes", {{"B", "25"}}));
    for (const char* m : {"25", "50", "75"})
        c.policies.push_back(make_policy(std::string("etc") + m, "etc", {{"explore", m}}));
    c.policies.push_back(make_policy("am", "am"));
    c.plot_metric = RegretMode::general;
    return c;
}

std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& opt, const std::function<void(const CriterionResult&)>& report) {
    struct Limit {
        int id;
        double seconds;
    };
    // Runtime budgets; criteria without one are unbounded.
    const Limit limits[] = {{1, 10}, {2, 30}, {5, 20}, {6, 300}, {7, 600}, {8, 1800}};
    Context ctx;
    std::vector<CriterionResult> out;
    for (int id = 1; id <= 10; ++id) {
        if (!opt.only.empty() && !opt.only.count(id)) continue;
        const auto t0 = Clock::now();
        CriterionResult r;
        try {
            switch (id) {
                case 1: r = lemma1(ctx); break;
                case 2: r = determinant_dominance(ctx); break;
                case 3: r = eq7_fixture(ctx); break;
                case 4: r = completion_sanity(ctx); break;
                case 5: r = coverage(ctx); break;
                case 6: r = detelim_correctness(ctx, opt); break;
                case 7: r = pce_correctness(ctx, opt); break;
                case 8: r = figure1(ctx, opt); break;
                case 9: r = unbiasedness(ctx); break;
                case 10: r = determinism(ctx, opt); break;
            }
        } catch (const std::exception& e) {
            r.id = id;
            r.name = "criterion-" + std::to_string(id);
            r.pass = false;
            r.detail = std::string("threw: ") + e.what();
        }
        r.seconds = since(t0);
        for (const auto& l : limits)
            if (l.id == id && r.seconds > l.seconds) {
                r.pass = false;
                r.detail += "; runtime " + fmt(r.seconds, 3) + " s over the " + fmt(l.seconds) + " s budget";
            }
        if (report) report(r);
        out.push_back(std::move(r));
    }
    return out;
}

std::string format_result(const CriterionResult& r) {
    std::ostringstream s;
    s << (r.pass ? "PASS" : "FAIL") << ' ' << (r.id < 10 ? " " : "") << r.id << ' ' << r.name << ": "
      << r.detail << " (" << fmt(r.seconds, 3) << " s)";
    return s.str();
}

}  // namespace hottbandit

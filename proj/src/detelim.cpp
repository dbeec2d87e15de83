#include "hottbandit/detelim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "hottbandit/errors.hpp"

namespace hottbandit {

double c_of_r(int r) {
    return std::pow(2.0, r + 1) * std::pow(static_cast<double>(r), 1.0 + r / 2.0);
}

RequiredD required_d(double n_target, double delta, int N, int M, int r) {
    if (!(n_target >= 1.0)) throw ParameterError("required_d: n_target must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("required_d: delta must lie in (0, 1)");
    if (N < 2 || M < 1 || r < 1) throw ParameterError("required_d: need N >= 2, M >= 1, r >= 1");
    const double rhs = std::pow(
        (12.0 * std::log(1.0 / delta) + r * std::log(static_cast<double>(N)) + 2.0 * n_target) / M,
        1.0 / r);
    for (int d = 1; d < N; ++d)
        if (static_cast<double>(d) / (N - d) >= rhs) return {d, true};
    return {N - 1, false};
}

std::vector<int> ColumnFamily::items() const {
    std::vector<int> out;
    for (const auto& c : columns) out.insert(out.end(), c.begin(), c.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

ColumnFamily ColumnFamily::all(int N, int r) {
    ColumnFamily f;
    f.r = r;
    for_each_combination(N, r, [&](std::span<const int> J) {
        f.columns.emplace_back(J.begin(), J.end());
        return true;
    });
    return f;
}

SampledItems sample_items(const ColumnFamily& family, int M, int d, Rng& rng) {
    const auto pool = family.items();
    const int Y = static_cast<int>(pool.size());
    SampledItems out;
    if (d > Y) {
        d = Y;
        out.clamped = true;
    }
    if (d < 1) throw ParameterError("sample_items: d must be >= 1");
    out.sets.resize(M);
    for (int u = 0; u < M; ++u) {
        for (int k : sample_combination(Y, d, rng)) out.sets[u].push_back(pool[k]);
    }
    // Bitmap lookup for coverage: J is covered by u iff J is inside T_u.
    const int N = pool.empty() ? 0 : pool.back() + 1;
    std::vector<char> has(static_cast<std::size_t>(M) * N, 0);
    for (int u = 0; u < M; ++u)
        for (int z : out.sets[u]) has[static_cast<std::size_t>(u) * N + z] = 1;
    out.coverage.resize(family.size());
    for (std::size_t j = 0; j < family.size(); ++j) {
        const auto& J = family.columns[j];
        for (int u = 0; u < M; ++u) {
            bool all = true;
            for (int z : J)
                if (!has[static_cast<std::size_t>(u) * N + z]) {
                    all = false;
                    break;
                }
            if (all) out.coverage[j].push_back(u);
        }
    }
    return out;
}

namespace {

using ItemIndex = std::vector<std::vector<int>>;

ItemIndex index_by_item(const ColumnFamily& family) {
    int N = 0;
    for (const auto& c : family.columns) N = std::max(N, c.back() + 1);
    ItemIndex idx(N);
    for (std::size_t j = 0; j < family.size(); ++j)
        for (int z : family.columns[j]) idx[z].push_back(static_cast<int>(j));
    return idx;
}

std::vector<int> cover_with(const ColumnFamily& family, const ItemIndex& idx,
                            const std::vector<int>& items) {
    std::vector<int> pending = items;
    std::vector<int> cycle;
    auto is_pending = [&](int z) { return std::binary_search(pending.begin(), pending.end(), z); };
    while (!pending.empty()) {
        const int z = pending.front();
        if (z >= static_cast<int>(idx.size()) || idx[z].empty())
            throw ContractViolation("cover: item not in any surviving column");
        int pick = -1, gain = -1;
        for (int j : idx[z]) {
            int g = 0;
            for (int x : family.columns[j]) g += is_pending(x) ? 1 : 0;
            if (g > gain) {
                gain = g;
                pick = j;
            }
        }
        cycle.push_back(pick);
        std::vector<int> rest;
        for (int x : pending)
            if (!std::binary_search(family.columns[pick].begin(), family.columns[pick].end(), x))
                rest.push_back(x);
        pending = std::move(rest);
    }
    return cycle;
}

std::int64_t rounds_for(const std::vector<std::vector<int>>& cycles, std::int64_t reps) {
    std::int64_t longest = 0;
    for (const auto& c : cycles) longest = std::max<std::int64_t>(longest, c.size());
    return longest * 2 * reps;
}

PhaseRun play_cycles(Environment& env, const ColumnFamily& family, const SampledItems& sampled,
                     const std::vector<std::vector<int>>& cycles, int reps, int filler) {
    const int M = env.users();
    const int N = env.items();
    PhaseRun run;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    run.split.first = Eigen::MatrixXd::Constant(M, N, nan);
    run.split.second = Eigen::MatrixXd::Constant(M, N, nan);
    Eigen::MatrixXd sum1 = Eigen::MatrixXd::Zero(M, N), sum2 = Eigen::MatrixXd::Zero(M, N);
    std::vector<int> count(static_cast<std::size_t>(M) * N, 0);
    std::vector<char> sampled_bit(static_cast<std::size_t>(M) * N, 0);
    for (int u = 0; u < M; ++u)
        for (int z : sampled.sets[u]) sampled_bit[static_cast<std::size_t>(u) * N + z] = 1;

    const std::int64_t total = rounds_for(cycles, reps);
    std::vector<Slate> slates(M);
    std::vector<double> obs;
    for (std::int64_t t = 0; t < total; ++t) {
        if (env.exhausted()) break;
        for (int u = 0; u < M; ++u) {
            const auto& c = cycles[u];
            const std::int64_t len = static_cast<std::int64_t>(c.size()) * 2 * reps;
            const int j = t < len ? c[t % c.size()] : filler;
            slates[u] = family.columns[j];
        }
        env.play(slates, obs);
        ++run.rounds_used;
        std::size_t k = 0;
        for (int u = 0; u < M; ++u)
            for (int z : slates[u]) {
                const double y = obs[k++];
                const std::size_t id = static_cast<std::size_t>(u) * N + z;
                if (!sampled_bit[id]) continue;
                const int n = ++count[id];
                if (n <= reps)
                    sum1(u, z) += y;
                else if (n <= 2 * reps)
                    sum2(u, z) += y;
            }
    }
    for (int u = 0; u < M; ++u)
        for (int z : sampled.sets[u]) {
            const int n = count[static_cast<std::size_t>(u) * N + z];
            if (n >= reps) run.split.first(u, z) = sum1(u, z) / reps;
            if (n >= 2 * reps) run.split.second(u, z) = sum2(u, z) / reps;
        }
    return run;
}

}  // namespace

std::vector<int> cover_cycle(const ColumnFamily& family, const std::vector<int>& items) {
    return cover_with(family, index_by_item(family), items);
}

PhaseRun run_phase_recommendations(Environment& env, const ColumnFamily& family,
                                   const SampledItems& sampled, int reps, int filler) {
    if (reps < 1) throw ParameterError("run_phase_recommendations: reps must be >= 1");
    const auto idx = index_by_item(family);
    std::vector<std::vector<int>> cycles;
    for (const auto& s : sampled.sets) cycles.push_back(cover_with(family, idx, s));
    return play_cycles(env, family, sampled, cycles, reps, filler);
}

MuValue mu_exact(const Eigen::MatrixXd& R, std::span<const int> J, double subset_cap,
                 std::uint64_t seed) {
    const int M = static_cast<int>(R.rows());
    const int r = static_cast<int>(J.size());
    if (r < 1 || M < r) throw ParameterError("mu_exact: need 1 <= r <= M");
    Eigen::MatrixXd sub(r, r);
    auto det2 = [&](std::span<const int> I) {
        for (int a = 0; a < r; ++a)
            for (int b = 0; b < r; ++b) sub(a, b) = R(I[a], J[b]);
        const double d = small_determinant(sub);
        return d * d;
    };
    MuValue out;
    if (binomial(M, r) <= subset_cap) {
        double sum = 0.0;
        const auto n = for_each_combination(M, r, [&](std::span<const int> I) {
            sum += det2(I);
            return true;
        });
        out.value = sum / static_cast<double>(n);
        return out;
    }
    Rng rng = make_rng(seed, "mu/exact");
    const auto draws = static_cast<std::int64_t>(subset_cap);
    double mean = 0.0, m2 = 0.0;
    for (std::int64_t k = 0; k < draws; ++k) {
        const double x = det2(sample_combination(M, r, rng));
        const double dlt = x - mean;
        mean += dlt / static_cast<double>(k + 1);
        m2 += dlt * (x - mean);
    }
    out.value = mean;
    out.exact = false;
    out.se = draws > 1 ? std::sqrt(m2 / static_cast<double>(draws - 1) / draws) : 0.0;
    return out;
}

MuValue mu_hat(const SplitEstimates& split, std::span<const int> users, std::span<const int> J,
               double subset_cap, Rng& rng, HadamardGuard* guard) {
    const int n = static_cast<int>(users.size());
    const int r = static_cast<int>(J.size());
    if (n < r) throw ContractViolation("mu_hat: fewer covering users than r");
    Eigen::MatrixXd a(r, r), b(r, r);
    auto term = [&](std::span<const int> I) {
        for (int x = 0; x < r; ++x)
            for (int y = 0; y < r; ++y) {
                a(x, y) = split.first(users[I[x]], J[y]);
                b(x, y) = split.second(users[I[x]], J[y]);
            }
        const double da = small_determinant(a);
        const double db = small_determinant(b);
        if (guard) {
            guard->check(a, da);
            guard->check(b, db);
        }
        return da * db;
    };
    MuValue out;
    if (binomial(n, r) <= subset_cap) {
        double sum = 0.0;
        const auto count = for_each_combination(n, r, [&](std::span<const int> I) {
            sum += term(I);
            return true;
        });
        out.value = sum / static_cast<double>(count);
        return out;
    }
    const auto draws = static_cast<std::int64_t>(subset_cap);
    double mean = 0.0, m2 = 0.0;
    for (std::int64_t k = 0; k < draws; ++k) {
        const double x = term(sample_combination(n, r, rng));
        const double dlt = x - mean;
        mean += dlt / static_cast<double>(k + 1);
        m2 += dlt * (x - mean);
    }
    out.value = mean;
    out.exact = false;
    out.se = draws > 1 ? std::sqrt(m2 / static_cast<double>(draws - 1) / draws) : 0.0;
    return out;
}

std::vector<int> eliminate(const std::vector<double>& estimates, double eps) {
    double best = -std::numeric_limits<double>::infinity();
    for (double m : estimates)
        if (!std::isnan(m)) best = std::max(best, m);
    std::vector<int> keep;
    for (std::size_t j = 0; j < estimates.size(); ++j)
        if (std::isnan(estimates[j]) || estimates[j] >= best - 2.0 * eps)
            keep.push_back(static_cast<int>(j));
    return keep;
}

double instant_bound(const Eigen::MatrixXd& V, std::span<const int> A, std::span<const int> J) {
    const double top = det2_rows(V, A);
    if (top == 0.0) throw ParameterError("instant_bound: V_A is singular");
    const double r = static_cast<double>(A.size());
    return 6.0 * std::pow(r, 2.5) * (top - det2_rows(V, J)) / top;
}

DetElimResult run_detelim(Environment& env, const DetElimConfig& cfg, Rng& rng) {
    const RewardModel& model = env.model();
    const int M = env.users(), N = env.items(), r = model.rank();
    if (binomial(N, r) > cfg.enumeration_cap)
        throw ParameterError("run_detelim: C(N, r) exceeds the enumeration cap");
    if (N < r) throw ParameterError("run_detelim: need N >= r");

    DetElimResult res;
    ColumnFamily family = ColumnFamily::all(N, r);
    const std::vector<int>& A = model.hott();
    const double T = static_cast<double>(env.horizon());
    const std::int64_t reps_base =
        cfg.reps > 0 ? cfg.reps
                     : std::max<std::int64_t>(
                           1, static_cast<std::int64_t>(std::ceil(
                                  model.sigma2() * std::log(static_cast<double>(M) * N * T))));
    const double Cr = c_of_r(r);
    const double log_term = r * std::log(static_cast<double>(N)) + std::log(std::max(T, 1.0));
    auto n_target = [&](int ell) {
        return std::ceil(cfg.n_mult * Cr * std::pow(4.0, ell) * log_term);
    };

    int best_col = 0;
    auto contains_A = [&](const ColumnFamily& f) {
        return std::any_of(f.columns.begin(), f.columns.end(),
                           [&](const auto& c) { return std::equal(c.begin(), c.end(), A.begin()); });
    };

    // Instantaneous-bound diagnostics, one check per (user, column) per phase.
    std::vector<char> checked;
    auto check_pair = [&](int u, int j) {
        auto& seen = checked[static_cast<std::size_t>(u) * family.size() + j];
        if (seen) return;
        seen = 1;
        const auto& J = family.columns[j];
        double got = -std::numeric_limits<double>::infinity();
        for (int z : J) got = std::max(got, model.reward(u, z));
        ++res.instant_checks;
        if (model.best_reward(u) - got > instant_bound(model.V(), A, J) + 1e-12)
            ++res.instant_violations;
    };

    double d_nominal = 0.0;
    for (int ell = 1; family.size() > 1 && !env.exhausted(); ++ell) {
        const auto pool = family.items();
        const int Y = static_cast<int>(pool.size());
        DetPhaseRecord rec;
        rec.ell = ell;
        rec.eps = std::ldexp(1.0, -ell);
        rec.n_target = n_target(ell);
        if (ell == 1) {
            const double base =
                std::ceil(cfg.d_mult * N * std::pow(static_cast<double>(M), -1.0 / r) * Cr);
            d_nominal = std::max(base, static_cast<double>(required_d(rec.n_target, cfg.delta,
                                                                      Y, M, r).d));
            d_nominal = std::max(d_nominal, 1.0);
        } else {
            d_nominal *= 4.0;
        }
        rec.d_nominal = static_cast<std::int64_t>(std::min(d_nominal, 1e15));
        rec.d = static_cast<int>(std::min<double>(d_nominal, Y));
        // Growth beyond the item pool turns into repeats.
        const double extra = d_nominal > Y ? std::ceil(d_nominal / Y) : 1.0;
        if (d_nominal > Y) res.d_clamped = true;
        if (reps_base * extra > 1e12) break;
        const auto reps = static_cast<std::int64_t>(reps_base * extra);

        const auto sampled = sample_items(family, M, rec.d, rng);
        const auto idx = index_by_item(family);
        std::vector<std::vector<int>> cycles;
        for (const auto& s : sampled.sets) cycles.push_back(cover_with(family, idx, s));
        if (rounds_for(cycles, reps) > env.remaining() || reps > std::numeric_limits<int>::max())
            break;

        rec.reps = static_cast<int>(reps);
        rec.family_size = static_cast<int>(family.size());
        rec.start_round = env.round();
        rec.min_coverage = M;
        for (const auto& h : sampled.coverage) {
            rec.min_coverage = std::min(rec.min_coverage, static_cast<int>(h.size()));
            rec.mean_coverage += static_cast<double>(h.size());
        }
        rec.mean_coverage /= static_cast<double>(family.size());

        env.set_phase(ell);
        if (cfg.check_instant) {
            checked.assign(static_cast<std::size_t>(M) * family.size(), 0);
            for (int u = 0; u < M; ++u) {
                check_pair(u, best_col);
                for (int j : cycles[u]) check_pair(u, j);
            }
        }
        const auto run = play_cycles(env, family, sampled, cycles, rec.reps, best_col);
        rec.rounds = run.rounds_used;

        std::vector<double> mu(family.size(), std::numeric_limits<double>::quiet_NaN());
        for (std::size_t j = 0; j < family.size(); ++j) {
            if (static_cast<int>(sampled.coverage[j].size()) < r) continue;
            mu[j] = mu_hat(run.split, sampled.coverage[j], family.columns[j], cfg.subset_cap, rng,
                           &res.guard)
                        .value;
        }
        int top = -1;
        for (std::size_t j = 0; j < mu.size(); ++j)
            if (!std::isnan(mu[j]) && (top < 0 || mu[j] > mu[top])) top = static_cast<int>(j);
        const auto keep = eliminate(mu, rec.eps);

        ColumnFamily next;
        next.r = r;
        int next_best = 0;
        rec.argmax_survived = top < 0;
        for (int j : keep) {
            if (j == top) {
                rec.argmax_survived = true;
                next_best = static_cast<int>(next.columns.size());
            }
            next.columns.push_back(family.columns[j]);
        }
        if (top < 0) next_best = std::min(best_col, static_cast<int>(keep.size()) - 1);
        family = std::move(next);
        best_col = next_best;
        rec.hott_survived = contains_A(family);
        res.hott_survived = res.hott_survived && rec.hott_survived;
        res.argmax_survived = res.argmax_survived && rec.argmax_survived;
        res.phases.push_back(rec);
    }

    // Commit to the best surviving column for the rest of the horizon.
    res.exploit_start = env.round();
    res.exploit_slate = family.columns[best_col];
    if (!env.exhausted()) {
        env.set_phase(static_cast<int>(res.phases.size()) + 1);
        if (cfg.check_instant) {
            checked.assign(static_cast<std::size_t>(M) * family.size(), 0);
            for (int u = 0; u < M; ++u) check_pair(u, best_col);
        }
        env.finish(std::vector<Slate>(M, res.exploit_slate));
    }
    res.final_family = std::move(family);
    res.trace = env.take_trace();
    return res;
}

void write_phase_log(std::ostream& out, const std::vector<DetPhaseRecord>& phases) {
    out << "ell\td\td_nominal\treps\tn_target\teps\tfamily\tmin_cov\tmean_cov\tstart\trounds\t"
           "hott_survived\n";
    for (const auto& p : phases)
        out << p.ell << '\t' << p.d << '\t' << p.d_nominal << '\t' << p.reps << '\t' << p.n_target
            << '\t' << p.eps << '\t' << p.family_size << '\t' << p.min_coverage << '\t'
            << p.mean_coverage << '\t' << p.start_round << '\t' << p.rounds << '\t'
            << (p.hott_survived ? 1 : 0) << '\n';
}

}  // namespace hottbandit

#include "hottbandit/pce.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "hottbandit/errors.hpp"

namespace hottbandit {

UserGraph::UserGraph(int n, bool complete)
    : n_(n), adj_(static_cast<std::size_t>(n) * n, complete ? 1 : 0) {
    for (int u = 0; u < n; ++u) adj_[static_cast<std::size_t>(u) * n + u] = 0;
}

void UserGraph::connect(int u, int v) {
    if (u == v) return;
    adj_[static_cast<std::size_t>(u) * n_ + v] = 1;
    adj_[static_cast<std::size_t>(v) * n_ + u] = 1;
}

std::vector<int> UserGraph::neighbors(int u) const {
    std::vector<int> out;
    for (int v = 0; v < n_; ++v)
        if (adjacent(u, v)) out.push_back(v);
    return out;
}

UserGraph UserGraph::from_sets(const ItemSets& sets, int n_items) {
    const int n = static_cast<int>(sets.size());
    const std::size_t words = (static_cast<std::size_t>(n_items) + 63) / 64;
    std::vector<std::uint64_t> bits(words * n, 0);
    for (int u = 0; u < n; ++u)
        for (int x : sets[u]) bits[u * words + x / 64] |= std::uint64_t{1} << (x % 64);
    UserGraph g(n);
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
            for (std::size_t w = 0; w < words; ++w)
                if (bits[u * words + w] & bits[v * words + w]) {
                    g.connect(u, v);
                    break;
                }
    return g;
}

namespace {

bool extend(const UserGraph& g, int d, int from, std::vector<int>& chosen) {
    if (static_cast<int>(chosen.size()) == d) return true;
    const int need = d - static_cast<int>(chosen.size());
    for (int v = from; v + need <= g.size(); ++v) {
        bool ok = true;
        for (int c : chosen)
            if (g.adjacent(c, v)) {
                ok = false;
                break;
            }
        if (!ok) continue;
        chosen.push_back(v);
        if (extend(g, d, v + 1, chosen)) return true;
        chosen.pop_back();
    }
    return false;
}

bool sets_meet(const std::vector<int>& a, const std::vector<int>& b) {
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i == *j) return true;
        if (*i < *j)
            ++i;
        else
            ++j;
    }
    return false;
}

std::vector<int> intersect(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

}  // namespace

std::optional<std::vector<int>> check_independent_set(const UserGraph& g, int d) {
    if (d < 1) throw ParameterError("check_independent_set: d must be >= 1");
    std::vector<int> chosen;
    if (extend(g, d, 0, chosen)) return chosen;
    return std::nullopt;
}

std::vector<int> prune_items(const std::vector<int>& set, const double* row, double c) {
    if (set.empty()) return {};
    double best = row[set.front()];
    for (int x : set) best = std::max(best, row[x]);
    std::vector<int> out;
    for (int x : set)
        if (best - row[x] <= c) out.push_back(x);
    return out;
}

ItemSets prune_items(const ItemSets& sets, const Eigen::MatrixXd& estimates, double c) {
    // Row-major copy so each user's row is contiguous.
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = estimates;
    ItemSets out(sets.size());
    for (std::size_t u = 0; u < sets.size(); ++u)
        out[u] = prune_items(sets[u], rows.row(static_cast<Eigen::Index>(u)).data(), c);
    return out;
}

ExpandResult expand_item_sets(const UserGraph& g, const std::vector<int>& seeds, double k_prev,
                              const Eigen::MatrixXd& estimates, const ItemSets& group_sets,
                              const ItemSets& sets, double mult) {
    ExpandResult res;
    res.sets = sets;
    const double threshold = mult * k_prev;
    for (int u = 0; u < g.size(); ++u) {
        std::vector<int> pool;
        int linked = 0;
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            if (!g.adjacent(u, seeds[i])) continue;
            ++linked;
            pool.insert(pool.end(), group_sets[i].begin(), group_sets[i].end());
        }
        if (linked < 2) continue;
        std::sort(pool.begin(), pool.end());
        pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
        double best = estimates(u, sets[u].front());
        for (int x : sets[u]) best = std::max(best, estimates(u, x));
        std::vector<int> grown;
        for (int x : pool)
            if (best - estimates(u, x) <= threshold) grown.push_back(x);
        if (grown.empty()) {
            ++res.empty_fallbacks;
            continue;
        }
        res.sets[u] = std::move(grown);
        ++res.expanded;
    }
    return res;
}

Groups form_groups(const UserGraph& g, const std::vector<int>& seeds, const ItemSets& sets) {
    Groups out;
    for (int seed : seeds) {
        std::vector<int> common = sets[seed];
        for (int v = 0; v < g.size() && !common.empty(); ++v)
            if (g.adjacent(seed, v)) common = intersect(common, sets[v]);
        if (common.empty()) {
            common = sets[seed];
            ++out.empty_fallbacks;
        }
        std::vector<int> users;
        for (int u = 0; u < static_cast<int>(sets.size()); ++u)
            if (sets_meet(sets[u], common)) users.push_back(u);
        out.items.push_back(std::move(common));
        out.users.push_back(std::move(users));
    }
    return out;
}

namespace {

class PceRun {
public:
    PceRun(Environment& env, const PceConfig& config, Rng& rng)
        : env_(env),
          model_(env.model()),
          cfg_(config),
          rng_(rng),
          M_(env.users()),
          N_(env.items()),
          sets_(M_),
          est_(Eigen::MatrixXd::Zero(M_, N_)),
          fresh_(static_cast<std::size_t>(M_) * N_, 0) {
        for (auto& s : sets_) {
            s.resize(N_);
            std::iota(s.begin(), s.end(), 0);
        }
        all_users_.resize(M_);
        std::iota(all_users_.begin(), all_users_.end(), 0);
        all_items_ = sets_.front();
        rank_ = cfg_.oracle.rank > 0 ? cfg_.oracle.rank : model_.rank();
        best_ = best_worst_items(model_);
    }

    PceResult run();

private:
    bool estimate(const std::vector<int>& users, const std::vector<int>& items, double k,
                  PhaseRecord& rec);
    void exploit();
    void survey(PhaseRecord& rec, bool after_prune);
    void close(PhaseRecord& rec);
    ItemSets prune_fresh(double c) const;

    Environment& env_;
    const RewardModel& model_;
    const PceConfig& cfg_;
    Rng& rng_;
    int M_, N_;
    int rank_ = 1;
    ItemSets sets_;
    Eigen::MatrixXd est_;
    std::vector<char> fresh_;
    std::vector<int> all_users_, all_items_;
    std::vector<BestWorst> best_;
    PceResult res_;
};

bool PceRun::estimate(const std::vector<int>& users, const std::vector<int>& items, double k,
                      PhaseRecord& rec) {
    const double eta = std::max(k, cfg_.min_k);
    const auto plan = plan_estimate(users, items, eta, model_.sigma(), rank_, cfg_.oracle, rng_);
    if (plan.mask.m > env_.remaining()) return false;
    const OffPolicy off = [this](int u) {
        const auto& s = sets_[u];
        return s[uniform_index(rng_, static_cast<int>(s.size()))];
    };
    const auto got = run_estimate(env_, plan, cfg_.oracle, off, rng_);
    for (std::size_t a = 0; a < users.size(); ++a)
        for (std::size_t b = 0; b < items.size(); ++b) {
            const int u = users[a];
            const int x = items[b];
            const double q = got.Q(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            est_(u, x) = q;
            fresh_[static_cast<std::size_t>(u) * N_ + x] = 1;
            rec.oracle_error = std::max(rec.oracle_error, std::abs(q - model_.reward(u, x)));
        }
    return true;
}

void PceRun::exploit() {
    res_.exploit_start = env_.round();
    std::vector<int> play(M_);
    for (int u = 0; u < M_; ++u) {
        int pick = sets_[u].front();
        for (int x : sets_[u])
            if (est_(u, x) > est_(u, pick)) pick = x;
        play[u] = pick;
    }
    env_.finish(play);
}

void PceRun::survey(PhaseRecord& rec, bool after_prune) {
    double worst = 0.0;
    for (int u = 0; u < M_; ++u) {
        const int b = best_[u].best;
        if (!std::binary_search(sets_[u].begin(), sets_[u].end(), b)) rec.best_survived = false;
        for (int x : sets_[u]) worst = std::max(worst, model_.best_reward(u) - model_.reward(u, x));
    }
    (after_prune ? rec.worst_gap_pruned : rec.worst_gap) = worst;
}

void PceRun::close(PhaseRecord& rec) {
    rec.rounds = env_.round() - rec.start_round;
    rec.set_sizes.clear();
    for (const auto& s : sets_) rec.set_sizes.push_back(static_cast<int>(s.size()));
    res_.best_survived = res_.best_survived && rec.best_survived;
    res_.phases.push_back(rec);
}

ItemSets PceRun::prune_fresh(double c) const {
    ItemSets out(M_);
    std::vector<double> row(N_);
    for (int u = 0; u < M_; ++u) {
        std::vector<int> seen;
        for (int x : sets_[u])
            if (fresh_[static_cast<std::size_t>(u) * N_ + x]) seen.push_back(x);
        if (seen.empty()) {
            out[u] = sets_[u];
            continue;
        }
        for (int x : seen) row[x] = est_(u, x);
        out[u] = prune_items(seen, row.data(), c);
    }
    return out;
}

PceResult PceRun::run() {
    const int d = cfg_.seeds > 0 ? cfg_.seeds : model_.rank();
    UserGraph graph(M_, true);
    int ell = 0;
    double k = cfg_.k0;
    double k_last = cfg_.k0;

    // Stage 1: shrink candidate sets until r users share nothing.
    std::optional<std::vector<int>> found;
    while (!(found = check_independent_set(graph, d))) {
        if (ell >= cfg_.max_stage1_phases) {
            res_.stage1_incomplete = true;
            exploit();
            res_.final_sets = sets_;
            res_.trace = env_.take_trace();
            return std::move(res_);
        }
        PhaseRecord rec;
        rec.ell = ell;
        rec.stage = 1;
        rec.k = k;
        rec.start_round = env_.round();
        env_.set_phase(ell);
        if (!estimate(all_users_, all_items_, k, rec)) {
            res_.stage1_incomplete = true;
            exploit();
            close(rec);
            res_.final_sets = sets_;
            res_.trace = env_.take_trace();
            return std::move(res_);
        }
        sets_ = prune_items(sets_, est_, cfg_.c_mult * k);
        survey(rec, true);
        rec.worst_gap = rec.worst_gap_pruned;
        graph = UserGraph::from_sets(sets_, N_);
        close(rec);
        k_last = k;
        ++ell;
        k /= 2.0;
    }
    res_.seeds = *found;
    res_.ell0 = ell;
    const auto& seeds = res_.seeds;

    // Tighten accuracy tenfold for the first joint estimate.
    k = k_last / 10.0;
    {
        PhaseRecord rec;
        rec.ell = ell;
        rec.stage = 2;
        rec.k = k;
        rec.seeds = seeds;
        rec.start_round = env_.round();
        env_.set_phase(ell);
        std::fill(fresh_.begin(), fresh_.end(), 0);
        if (!estimate(all_users_, all_items_, k, rec)) {
            exploit();
            close(rec);
            res_.final_sets = sets_;
            res_.trace = env_.take_trace();
            return std::move(res_);
        }
        survey(rec, true);
        survey(rec, false);
        close(rec);
    }

    // Stage 2: joint elimination via expansion and intersection.
    while (!env_.exhausted()) {
        sets_ = prune_fresh(cfg_.c_mult * k);
        graph = UserGraph::from_sets(sets_, N_);
        ++ell;
        const double k_prev = k;
        k /= 2.0;

        PhaseRecord rec;
        rec.ell = ell;
        rec.stage = 2;
        rec.k = k;
        rec.seeds = seeds;
        rec.start_round = env_.round();
        env_.set_phase(ell);
        survey(rec, true);

        const Groups before = form_groups(graph, seeds, sets_);
        auto grown = expand_item_sets(graph, seeds, k_prev, est_, before.items, sets_,
                                      cfg_.expand_mult);
        res_.empty_expansions += grown.empty_fallbacks;
        sets_ = std::move(grown.sets);
        const Groups groups = form_groups(graph, seeds, sets_);
        res_.empty_intersections += groups.empty_fallbacks;
        for (const auto& g : groups.items) rec.group_sizes.push_back(static_cast<int>(g.size()));
        survey(rec, false);

        std::fill(fresh_.begin(), fresh_.end(), 0);
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            if (!estimate(groups.users[i], groups.items[i], k, rec)) {
                exploit();
                break;
            }
        }
        close(rec);
    }
    res_.final_sets = sets_;
    res_.trace = env_.take_trace();
    return std::move(res_);
}

}  // namespace

PceResult run_pce(Environment& env, const PceConfig& config, Rng& rng) {
    return PceRun(env, config, rng).run();
}

void write_phase_log(std::ostream& out, const std::vector<PhaseRecord>& phases) {
    out << "ell\tstage\tk\tstart\trounds\tseeds\tmax_set\tmean_set\tgroups\toracle_error\t"
           "worst_gap_pruned\tworst_gap\tbest_survived\n";
    for (const auto& p : phases) {
        int mx = 0;
        double mean = 0.0;
        for (int s : p.set_sizes) {
            mx = std::max(mx, s);
            mean += s;
        }
        if (!p.set_sizes.empty()) mean /= static_cast<double>(p.set_sizes.size());
        out << p.ell << '\t' << p.stage << '\t' << p.k << '\t' << p.start_round << '\t'
            << p.rounds << '\t';
        for (std::size_t i = 0; i < p.seeds.size(); ++i) out << (i ? "," : "") << p.seeds[i];
        if (p.seeds.empty()) out << '-';
        out << '\t' << mx << '\t' << mean << '\t';
        for (std::size_t i = 0; i < p.group_sizes.size(); ++i)
            out << (i ? "," : "") << p.group_sizes[i];
        if (p.group_sizes.empty()) out << '-';
        out << '\t' << p.oracle_error << '\t' << p.worst_gap_pruned << '\t' << p.worst_gap << '\t'
            << (p.best_survived ? 1 : 0) << '\n';
    }
}

}  // namespace hottbandit
